//! Reference-triangle and reference-edge quadrature, and integration over
//! curved elements and faces.
//!
//! Low degrees use tabulated symmetric positive-weight rules; everything
//! else is synthesized by the collapsed-coordinate (conical) product of
//! Gauss-Legendre rules, which keeps one code path up to degree 20.

use crate::error::{Error, Result};
use crate::geometry::CurvedMap;
use crate::linalg::Vec2;
use crate::mesh::Face;

/// Quadrature rule with reference-measure weights. `P` is `[f64; 2]` for
/// triangle rules and `f64` for edge rules.
#[derive(Debug, Clone)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadRule<[f64; 2]>;
pub type EdgeRule = QuadRule<f64>;

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on [0, 1] exact to the requested degree.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    let degree = degree.max(1);
    if degree > 63 {
        return Err(Error::UnsupportedDegree(degree));
    }
    let n = degree / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    Ok(EdgeRule {
        points: xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: ws.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

/// Tabulated symmetric rules (points in reference coordinates, weights
/// summing to 1/2).
fn tabulated_triangle(degree: usize) -> Option<TriangleRule> {
    match degree {
        1 => Some(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            degree: 1,
        }),
        2 => Some(TriangleRule {
            points: vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            weights: vec![1.0 / 6.0; 3],
            degree: 2,
        }),
        3..=5 => {
            // Classic 7-point degree-5 rule.
            let s15 = 15.0f64.sqrt();
            let a = (6.0 - s15) / 21.0;
            let b = (6.0 + s15) / 21.0;
            let wa = (155.0 - s15) / 1200.0 * 0.5;
            let wb = (155.0 + s15) / 1200.0 * 0.5;
            let mut points = vec![[1.0 / 3.0, 1.0 / 3.0]];
            let mut weights = vec![9.0 / 40.0 * 0.5];
            for (c, w) in [(a, wa), (b, wb)] {
                points.push([c, c]);
                points.push([1.0 - 2.0 * c, c]);
                points.push([c, 1.0 - 2.0 * c]);
                weights.extend_from_slice(&[w, w, w]);
            }
            Some(TriangleRule { points, weights, degree: 5 })
        }
        _ => None,
    }
}

/// Positive-weight rule on the reference triangle exact to the requested
/// degree (max 20).
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    let degree = degree.max(1);
    if degree > 20 {
        return Err(Error::UnsupportedDegree(degree));
    }
    if let Some(rule) = tabulated_triangle(degree) {
        return Ok(rule);
    }
    // Conical product: x = u (1 - v), y = v with Jacobian (1 - v). A degree-d
    // polynomial becomes degree d in u and degree d+1 in v (weight included).
    let nu = degree / 2 + 1;
    let nv = (degree + 1) / 2 + 1;
    let (us, wu) = gauss_legendre(nu);
    let (vs, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (v, wvj) in vs.iter().zip(&wv) {
        let v01 = 0.5 * (v + 1.0);
        for (u, wui) in us.iter().zip(&wu) {
            let u01 = 0.5 * (u + 1.0);
            points.push([u01 * (1.0 - v01), v01]);
            weights.push(0.25 * wui * wvj * (1.0 - v01));
        }
    }
    Ok(TriangleRule { points, weights, degree })
}

/// Integrate a physical-space integrand over a curved element:
/// sum of w_i f(F_K(p_i)) det DF_K(p_i).
pub fn integrate_element<F>(integrand: F, map: &CurvedMap, rule: &TriangleRule) -> f64
where
    F: Fn(Vec2) -> f64,
{
    let mut acc = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let x = map.map_point(*p);
        let det = crate::linalg::det2(&map.jacobian(*p));
        acc += w * integrand(x) * det;
    }
    acc
}

/// Integrate along a reference edge of an element: sum of
/// w_i g(gamma(t_i)) |gamma'(t_i)|.
pub fn integrate_edge<G>(integrand: G, map: &CurvedMap, edge: usize, rule: &EdgeRule) -> f64
where
    G: Fn(Vec2) -> f64,
{
    let mut acc = 0.0;
    for (t, w) in rule.points.iter().zip(&rule.weights) {
        let (pos, d1, _) = map.edge_curve(edge, *t);
        acc += w * integrand(pos) * crate::linalg::norm(d1);
    }
    acc
}

/// Integrate over a face using the left element's parameterization.
pub fn integrate_face<G>(integrand: G, face: &Face, maps: &[CurvedMap], rule: &EdgeRule) -> f64
where
    G: Fn(Vec2) -> f64,
{
    integrate_edge(integrand, &maps[face.left], face.left_edge, rule)
}

/// Exact integral of `x^a y^b` over the reference triangle: a! b! / (a+b+2)!.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    fn fact(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }
    fact(a) * fact(b) / fact(a + b + 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvedMap;
    use crate::mesh;

    #[test]
    fn triangle_rules_integrate_monomials() {
        for degree in 1..=20 {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-14, "degree {degree} weight sum {wsum}");
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let num: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        (num - exact).abs() <= 1e-13 * exact,
                        "degree {degree} monomial x^{a} y^{b}: {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_rule_rejects_high_degree() {
        assert!(matches!(triangle_rule(21), Err(Error::UnsupportedDegree(21))));
    }

    #[test]
    fn specific_monomial_values() {
        assert!((monomial_integral(0, 0) - 0.5).abs() < 1e-16);
        assert!((monomial_integral(1, 0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((monomial_integral(1, 1) - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn random_polynomial_vs_monomial_expansion() {
        // Deterministic pseudo-random coefficients.
        let degree = 9usize;
        let rule = triangle_rule(degree).unwrap();
        let mut coeffs = Vec::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        for a in 0..=degree as u32 {
            for b in 0..=(degree as u32 - a) {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let c = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                coeffs.push((a, b, c));
            }
        }
        let num: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| {
                let val: f64 = coeffs
                    .iter()
                    .map(|(a, b, c)| c * p[0].powi(*a as i32) * p[1].powi(*b as i32))
                    .sum();
                w * val
            })
            .sum();
        let exact: f64 = coeffs
            .iter()
            .map(|(a, b, c)| c * monomial_integral(*a, *b))
            .sum();
        assert!((num - exact).abs() <= 1e-13 * exact.abs().max(1.0));
    }

    #[test]
    fn edge_rule_basics() {
        let r1 = edge_rule(1).unwrap();
        let s0: f64 = r1.weights.iter().sum();
        assert!((s0 - 1.0).abs() < 1e-15);
        let st: f64 = r1.points.iter().zip(&r1.weights).map(|(t, w)| w * t).sum();
        assert!((st - 0.5).abs() < 1e-15);

        // 2-point rule integrates t^2 exactly.
        let r3 = edge_rule(3).unwrap();
        assert_eq!(r3.points.len(), 2);
        let s2: f64 = r3.points.iter().zip(&r3.weights).map(|(t, w)| w * t * t).sum();
        assert!((s2 - 1.0 / 3.0).abs() < 1e-15);

        // 5-point rule integrates t^9 exactly.
        let r9 = edge_rule(9).unwrap();
        assert_eq!(r9.points.len(), 5);
        let s9: f64 = r9
            .points
            .iter()
            .zip(&r9.weights)
            .map(|(t, w)| w * t.powi(9))
            .sum();
        assert!((s9 - 0.1).abs() < 1e-14);
    }

    #[test]
    fn element_integral_of_one_is_area() {
        let map = CurvedMap::affine([0.0, 0.0], [2.0, 0.0], [0.0, 3.0]);
        let rule = triangle_rule(2).unwrap();
        let area = integrate_element(|_| 1.0, &map, &rule);
        assert!((area - 3.0).abs() < 1e-13);
    }

    #[test]
    fn straight_face_length_and_linearity() {
        let map = CurvedMap::affine([0.0, 0.0], [3.0, 4.0], [0.0, 8.0]);
        let rule = edge_rule(4).unwrap();
        let len = integrate_edge(|_| 1.0, &map, 0, &rule);
        assert!((len - 5.0).abs() < 1e-13);
        let twice = integrate_edge(|_| 2.0, &map, 0, &rule);
        assert!((twice - 10.0).abs() < 1e-13);
    }

    #[test]
    fn polygon_disk_area_below_pi() {
        // Fully affine polygon mesh inscribed in the disk.
        let m = mesh::generate_disk_mesh(0.25).unwrap();
        let maps: Vec<CurvedMap> = m
            .triangles
            .iter()
            .map(|t| CurvedMap::affine(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]))
            .collect();
        let rule = triangle_rule(2).unwrap();
        let area: f64 = maps.iter().map(|mp| integrate_element(|_| 1.0, mp, &rule)).sum();
        assert!(area < std::f64::consts::PI);
        assert!(area > std::f64::consts::PI - 0.1);
    }

    #[test]
    fn curved_disk_area_and_circumference() {
        let m = mesh::generate_disk_mesh(0.05).unwrap();
        let faces = mesh::build_connectivity(&m).unwrap();
        let maps = mesh::curve_boundary(&m, mesh::disk_chart).unwrap();
        let trule = triangle_rule(6).unwrap();
        let erule = edge_rule(8).unwrap();
        let area: f64 = maps.iter().map(|mp| integrate_element(|_| 1.0, mp, &trule)).sum();
        assert!(
            (area - std::f64::consts::PI).abs() <= 5e-4,
            "area error {}",
            (area - std::f64::consts::PI).abs()
        );
        let circ: f64 = faces
            .faces
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| integrate_face(|_| 1.0, f, &maps, &erule))
            .sum();
        assert!(
            (circ - 2.0 * std::f64::consts::PI).abs() <= 5e-4,
            "circumference error {}",
            (circ - 2.0 * std::f64::consts::PI).abs()
        );
    }

    #[test]
    fn divergence_theorem_on_straight_triangle() {
        // Volume integral of div F equals the boundary flux of F . n, for
        // polynomial fields up to the rule degree.
        let v = [[0.2, 0.1], [1.3, 0.4], [0.5, 1.1]];
        let map = CurvedMap::affine(v[0], v[1], v[2]);
        let trule = triangle_rule(4).unwrap();
        let erule = edge_rule(4).unwrap();
        type Field = (fn([f64; 2]) -> [f64; 2], fn([f64; 2]) -> f64);
        let fields: [Field; 2] = [
            (|x| x, |_| 2.0),
            (
                |x| [x[0] * x[0] * x[1], x[1] * x[1] * x[1] - x[0] * x[1] * x[1]],
                |x| 2.0 * x[0] * x[1] + 3.0 * x[1] * x[1] - 2.0 * x[0] * x[1],
            ),
        ];
        for (field, div) in fields {
            let vol = integrate_element(div, &map, &trule);
            let mut flux = 0.0;
            for edge in 0..3 {
                for (t, w) in erule.points.iter().zip(&erule.weights) {
                    let frame = crate::geometry::face_frame(&map, edge, *t).unwrap();
                    let f = field(frame.point);
                    flux += w
                        * frame.metric
                        * (f[0] * frame.normal[0] + f[1] * frame.normal[1]);
                }
            }
            assert!((vol - flux).abs() < 1e-12, "vol {vol} flux {flux}");
        }
    }
}
