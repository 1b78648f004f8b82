//! Error norms, convergence rates, the local L2-projection interpolant, and
//! empirical verification of the trace/inverse/Poincare-Friedrichs/coercivity
//! machinery.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{Assembly, PenaltyConfig, SparseSystem};
use crate::error::{Error, Result};
use crate::geometry::{map_derivatives, CurvedMap};
use crate::linalg::{cholesky, cholesky_solve, DenseMat, Vec2};
use crate::mesh::MeshLevel;
use crate::problems::Jet2;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::space::{physical_from_table, DGSpace, PhysDerivs};

/// Error measures of one refinement level.
#[derive(Debug, Clone)]
pub struct ErrorRecord {
    /// Max over elements of h_K.
    pub h: f64,
    pub dofs: usize,
    pub err_l2: f64,
    pub err_h1_broken: f64,
    /// Only meaningful for the fourth-order problem.
    pub err_h2_broken: Option<f64>,
    /// Stability norm sqrt(|e|_H1^2 + J_1(e,e)).
    pub err_h1_norm: f64,
    /// Stability norm sqrt(|e|_H2^2 + J_2(e,e)), fourth-order problem only.
    pub err_h2_norm: Option<f64>,
    /// Jump contribution J_k(e,e) inside the reported h,k norm.
    pub jump_term: f64,
}

/// Broken error norms of `u_h - u`. Interior jumps of the error coincide
/// with the jumps of `u_h` since the exact solution is continuous; on
/// boundary faces the homogeneous data make the error trace equal to the
/// trace of `u_h`, so the jump terms are J_k of the coefficient vector.
pub fn error_norms(
    asm: &Assembly,
    order: usize,
    coeffs: &[f64],
    exact: impl Fn(Vec2) -> Jet2,
) -> Result<ErrorRecord> {
    let space = asm.space;
    let n_loc = space.n_loc;
    let rule = triangle_rule(asm.quad_degree)?;
    let table = space.basis.tabulate(&rule.points);
    let mut phys = PhysDerivs::new(n_loc);
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for (e, map) in asm.maps.iter().enumerate() {
        let c = &coeffs[e * n_loc..(e + 1) * n_loc];
        for (pt, w) in rule.weights.iter().enumerate() {
            let md = map_derivatives(map, rule.points[pt])?;
            physical_from_table(&table, pt, &md, order, &mut phys);
            let x = map.map_point(rule.points[pt]);
            let jet = exact(x);
            let wd = w * md.det;
            let mut val = -jet.value;
            let mut grad = [-jet.grad[0], -jet.grad[1]];
            let mut hess = [-jet.hess[0], -jet.hess[1], -jet.hess[2]];
            for j in 0..n_loc {
                val += c[j] * phys.value[j];
                grad[0] += c[j] * phys.grad[j][0];
                grad[1] += c[j] * phys.grad[j][1];
                if order >= 2 {
                    hess[0] += c[j] * phys.hess[j][0];
                    hess[1] += c[j] * phys.hess[j][1];
                    hess[2] += c[j] * phys.hess[j][2];
                }
            }
            l2 += wd * val * val;
            h1 += wd * (grad[0] * grad[0] + grad[1] * grad[1]);
            if order >= 2 {
                h2 += wd * (hess[0] * hess[0] + 2.0 * hess[1] * hess[1] + hess[2] * hess[2]);
            }
        }
    }

    let jumps = asm.face_jump_integrals(coeffs)?;
    let j1 = asm.j_form_from_jumps(1, &jumps);
    let (err_h2_broken, err_h2_norm, jump_term) = if order >= 2 {
        let j2 = asm.j_form_from_jumps(2, &jumps);
        (Some(h2.sqrt()), Some((h2 + j2).sqrt()), j2)
    } else {
        (None, None, j1)
    };
    Ok(ErrorRecord {
        h: asm.metrics.h_max,
        dofs: space.n_dofs(),
        err_l2: l2.sqrt(),
        err_h1_broken: h1.sqrt(),
        err_h2_broken,
        err_h1_norm: (h1 + j1).sqrt(),
        err_h2_norm,
        jump_term,
    })
}

/// Experimental orders of convergence between consecutive levels:
/// `rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidParameter(
            "eoc needs two sequences of equal length >= 2".into(),
        ));
    }
    if errors.iter().chain(hs).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter(
            "eoc inputs must be strictly positive".into(),
        ));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of log(err) against log(h).
pub fn ls_slope(hs: &[f64], errors: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}

/// Local L2 projection onto the reference polynomial space: the unique
/// `rho_v` with `int_Khat (v o F_K - rho_v) rho = 0` for all reference
/// polynomials `rho`. The inner product lives on the reference element, so
/// one mass matrix serves every element.
pub fn l2_project(
    space: &DGSpace,
    map: &CurvedMap,
    target: impl Fn(Vec2) -> f64,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let n_loc = space.n_loc;
    let rule = triangle_rule(quad_degree)?;
    let table = space.basis.tabulate(&rule.points);
    let mut mass = DenseMat::zeros(n_loc);
    let mut rhs = vec![0.0; n_loc];
    for (pt, w) in rule.weights.iter().enumerate() {
        let vals = &table.values[pt * n_loc..(pt + 1) * n_loc];
        for i in 0..n_loc {
            for j in 0..n_loc {
                mass.a[i * n_loc + j] += w * vals[i] * vals[j];
            }
        }
        let t = target(map.map_point(rule.points[pt]));
        for i in 0..n_loc {
            rhs[i] += w * t * vals[i];
        }
    }
    let l = cholesky(&mass).ok_or_else(|| Error::Internal("singular mass matrix".into()))?;
    let mut coeffs = vec![0.0; n_loc];
    cholesky_solve(&l, &rhs, &mut coeffs);
    Ok(coeffs)
}

/// L2-project a function element by element over the whole mesh.
pub fn project_global(
    space: &DGSpace,
    maps: &[CurvedMap],
    target: impl Fn(Vec2) -> f64,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let mut coeffs = Vec::with_capacity(space.n_dofs());
    for map in maps {
        coeffs.extend(l2_project(space, map, &target, quad_degree)?);
    }
    Ok(coeffs)
}

/// Empirical constants of one refinement level.
#[derive(Debug, Clone)]
pub struct LevelRatios {
    pub h: f64,
    pub dofs: usize,
    /// sup of ||v||^2_dK / (h^-1 ||v||^2_K + h |v|^2_H1(K)).
    pub trace: f64,
    /// Inverse-estimate ratios for (s,m) = (0,1), (1,2), (0,2).
    pub inverse: [f64; 3],
    /// Discrete Poincare-Friedrichs quotient.
    pub disc_pf: f64,
    /// Gradient Poincare-Friedrichs quotient.
    pub grad_pf: f64,
    /// Minimum Rayleigh quotients A_k(v,v)/||v||_{h,k}^2, k = 1 and (for
    /// degree >= 2) k = 2.
    pub coercivity_k1: f64,
    pub coercivity_k2: Option<f64>,
}

/// Report of the inequality verification over all levels.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub degree: usize,
    pub samples: usize,
    pub seed: u64,
    pub levels: Vec<LevelRatios>,
}

impl InequalityReport {
    /// Max/min of one ratio family across levels.
    pub fn spread(&self, pick: impl Fn(&LevelRatios) -> f64) -> f64 {
        let vals: Vec<f64> = self.levels.iter().map(pick).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

/// Per-element L2/H1/H2 norms and the boundary trace norm of one local
/// function.
struct ElementNorms {
    l2: f64,
    h1: f64,
    h2: f64,
    trace: f64,
}

fn element_norms(
    space: &DGSpace,
    map: &CurvedMap,
    local: &[f64],
    tri: &(crate::quadrature::TriangleRule, crate::space::RefBasisTable),
    edges: &(crate::quadrature::EdgeRule, [crate::space::RefBasisTable; 3]),
    phys: &mut PhysDerivs,
) -> Result<ElementNorms> {
    let n_loc = space.n_loc;
    let (rule, table) = tri;
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for (pt, w) in rule.weights.iter().enumerate() {
        let md = map_derivatives(map, rule.points[pt])?;
        physical_from_table(table, pt, &md, 2, phys);
        let wd = w * md.det;
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        let mut hess = [0.0; 3];
        for j in 0..n_loc {
            val += local[j] * phys.value[j];
            grad[0] += local[j] * phys.grad[j][0];
            grad[1] += local[j] * phys.grad[j][1];
            hess[0] += local[j] * phys.hess[j][0];
            hess[1] += local[j] * phys.hess[j][1];
            hess[2] += local[j] * phys.hess[j][2];
        }
        l2 += wd * val * val;
        h1 += wd * (grad[0] * grad[0] + grad[1] * grad[1]);
        h2 += wd * (hess[0] * hess[0] + 2.0 * hess[1] * hess[1] + hess[2] * hess[2]);
    }
    let (erule, etables) = edges;
    let mut trace = 0.0;
    for edge in 0..3 {
        for (pt, w) in erule.weights.iter().enumerate() {
            let (_, d1, _) = map.edge_curve(edge, erule.points[pt]);
            let metric = crate::linalg::norm(d1);
            let vals = &etables[edge].values[pt * n_loc..(pt + 1) * n_loc];
            let v: f64 = vals.iter().zip(local).map(|(a, b)| a * b).sum();
            trace += w * metric * v * v;
        }
    }
    Ok(ElementNorms { l2, h1, h2, trace })
}

/// Verify the trace, inverse, Poincare-Friedrichs and coercivity estimates
/// empirically over a family of levels.
///
/// The trace, inverse and coercivity families are probed with coefficient
/// vectors drawn i.i.d. uniform from [-1, 1]. The two global
/// Poincare-Friedrichs quotients are probed with smooth seeded fields: white
/// coefficient noise has O(1/h) broken gradients, so its quotient decays
/// like h^2 by construction and says nothing about the h-independence of the
/// constants; projected smooth fields with vanishing boundary trace
/// (random quadratics times the disk bubble 1 - |x|^2) approach the
/// continuum quotients instead, which is the property worth testing.
pub fn verify_inequalities(
    degree: usize,
    levels: &[MeshLevel],
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let penalties = PenaltyConfig::defaults(degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_probes = (samples / 5).max(5);
    let mut out = Vec::with_capacity(levels.len());

    for level in levels {
        let space = DGSpace::new(degree, level.n_elems())?;
        let asm = Assembly::new(
            &space,
            &level.maps,
            &level.faces,
            &level.metrics,
            penalties,
            None,
        );
        let a1 = asm.assemble_poisson(|_| 0.0)?;
        let a2 = if degree >= 2 {
            Some(asm.assemble_biharmonic(|_| 0.0)?)
        } else {
            None
        };

        let tri_rule = triangle_rule(asm.quad_degree)?;
        let tri_table = space.basis.tabulate(&tri_rule.points);
        let erule = edge_rule(asm.quad_degree)?;
        let etables: [crate::space::RefBasisTable; 3] = std::array::from_fn(|edge| {
            let pts: Vec<[f64; 2]> = erule
                .points
                .iter()
                .map(|t| crate::geometry::ref_edge_point(edge, *t))
                .collect();
            space.basis.tabulate(&pts)
        });
        let tri = (tri_rule, tri_table);
        let edges = (erule, etables);
        let mut phys = PhysDerivs::new(space.n_loc);

        let mut trace_sup: f64 = 0.0;
        let mut inv_sup = [0.0f64; 3];
        let mut coerc1_min = f64::INFINITY;
        let mut coerc2_min = f64::INFINITY;
        for _ in 0..samples {
            let coeffs: Vec<f64> =
                (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            for (e, map) in level.maps.iter().enumerate() {
                let local = &coeffs[e * space.n_loc..(e + 1) * space.n_loc];
                let h_k = level.metrics.h[e];
                let n = element_norms(&space, map, local, &tri, &edges, &mut phys)?;
                trace_sup = trace_sup.max(n.trace / (n.l2 / h_k + h_k * n.h1));
                // |v|_{H^m_*} / (h^{s-m} |v|_{H^s_*}).
                inv_sup[0] = inv_sup[0].max(n.h1.sqrt() / (n.l2.sqrt() / h_k));
                inv_sup[1] = inv_sup[1].max((n.h1 + n.h2).sqrt() / (n.h1.sqrt() / h_k));
                inv_sup[2] = inv_sup[2].max((n.h1 + n.h2).sqrt() / (n.l2.sqrt() / (h_k * h_k)));
            }
            let r1 = rayleigh(&a1, &asm, 1, &coeffs)?;
            coerc1_min = coerc1_min.min(r1);
            if let Some(a2) = &a2 {
                let r2 = rayleigh(a2, &asm, 2, &coeffs)?;
                coerc2_min = coerc2_min.min(r2);
            }
        }

        let mut pf_sup: f64 = 0.0;
        let mut gpf_sup: f64 = 0.0;
        for _ in 0..n_probes {
            // Random quadratic times the disk bubble, projected locally.
            let q: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
            let smooth = |x: Vec2| {
                let bubble = 1.0 - x[0] * x[0] - x[1] * x[1];
                bubble
                    * (q[0]
                        + q[1] * x[0]
                        + q[2] * x[1]
                        + q[3] * x[0] * x[0]
                        + q[4] * x[0] * x[1]
                        + q[5] * x[1] * x[1])
            };
            let coeffs = project_global(&space, &level.maps, smooth, asm.quad_degree)?;
            let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
            for (e, map) in level.maps.iter().enumerate() {
                let local = &coeffs[e * space.n_loc..(e + 1) * space.n_loc];
                let n = element_norms(&space, map, local, &tri, &edges, &mut phys)?;
                l2 += n.l2;
                h1 += n.h1;
                h2 += n.h2;
            }
            let jumps = asm.face_jump_integrals(&coeffs)?;
            let mut bdry_val = 0.0;
            let mut int_val_weighted = 0.0;
            let mut int_dn_weighted = 0.0;
            let mut all_val_weighted = 0.0;
            for (fi, face) in level.faces.faces.iter().enumerate() {
                let hf = level.metrics.h_face[fi];
                if face.is_boundary() {
                    bdry_val += jumps[fi].val_sq;
                } else {
                    int_val_weighted += jumps[fi].val_sq / hf;
                    int_dn_weighted += jumps[fi].dn_sq / hf;
                }
                all_val_weighted += jumps[fi].val_sq / hf;
            }
            pf_sup = pf_sup.max(l2 / (h1 + bdry_val + int_val_weighted));
            gpf_sup = gpf_sup.max(h1 / (h2 + int_dn_weighted + all_val_weighted));
        }

        out.push(LevelRatios {
            h: level.metrics.h_max,
            dofs: space.n_dofs(),
            trace: trace_sup,
            inverse: inv_sup,
            disc_pf: pf_sup,
            grad_pf: gpf_sup,
            coercivity_k1: coerc1_min,
            coercivity_k2: a2.map(|_| coerc2_min),
        });
    }

    Ok(InequalityReport { degree, samples, seed, levels: out })
}

/// Rayleigh quotient A(v,v) / ||v||_{h,k}^2.
pub fn rayleigh(system: &SparseSystem, asm: &Assembly, k: usize, coeffs: &[f64]) -> Result<f64> {
    let energy = system.energy(coeffs);
    let norm = asm.norm_hk_sq(k, coeffs)?;
    Ok(energy / norm)
}
