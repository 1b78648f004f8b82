//! DG Lagrange basis on the reference triangle and the transformation of its
//! derivatives (orders 0-3) to physical coordinates through curved maps.
//!
//! Element functions are `v = rho o F_K^{-1}` with `rho` a reference
//! polynomial, so physical derivatives follow from the composite-derivative
//! rule with the inverse-map derivatives supplied by
//! [`geometry::map_derivatives`]. Writing `G = F_K^{-1}`:
//!
//! - `v_i = rho_a G_{a,i}`
//! - `v_ij = rho_ab G_{a,i} G_{b,j} + rho_a G_{a,ij}`
//! - `v_ijk = rho_abc G_{a,i} G_{b,j} G_{c,k}
//!    + rho_ab (G_{a,ij} G_{b,k} + G_{a,ik} G_{b,j} + G_{a,jk} G_{b,i})
//!    + rho_a G_{a,ijk}`
//!
//! Tangential face quantities are computed intrinsically on the face curve
//! `gamma(t)`. The trace of a basis function along its own element's edge is
//! the reference restriction `rho(edge(t))`, so its parameter derivatives
//! are pure reference computations; this route is independent of the
//! inverse-map machinery and is cross-checked against it by the
//! decomposition identity tests.

use crate::error::{Error, Result};
use crate::geometry::{
    self, map_derivatives, ref_edge_dir, ref_edge_point, CurvedMap, FaceFrame, MapDerivatives,
};
use crate::linalg::{self, DenseMat, Vec2};
use crate::mesh::Face;

/// Discontinuous Galerkin space of mapped polynomials of total degree `p`,
/// element-major dof layout.
#[derive(Debug, Clone)]
pub struct DGSpace {
    pub degree: usize,
    pub n_loc: usize,
    pub n_elems: usize,
    pub basis: RefBasis,
}

impl DGSpace {
    pub fn new(degree: usize, n_elems: usize) -> Result<Self> {
        let basis = RefBasis::new(degree)?;
        let n_loc = basis.n_loc;
        Ok(DGSpace { degree, n_loc, n_elems, basis })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_loc * self.n_elems
    }

    pub fn global_dof(&self, elem: usize, local: usize) -> usize {
        elem * self.n_loc + local
    }
}

/// Nodal Lagrange basis on the uniform barycentric lattice, stored as
/// monomial coefficients from a full-pivot Vandermonde solve.
#[derive(Debug, Clone)]
pub struct RefBasis {
    pub degree: usize,
    pub n_loc: usize,
    /// Lattice nodes, row-major over (iy, ix).
    pub nodes: Vec<[f64; 2]>,
    /// Monomial exponents (a, b) for x^a y^b.
    monos: Vec<(u32, u32)>,
    /// coeff[m * n_loc + j]: phi_j = sum_m coeff[m][j] x^a y^b.
    coeff: Vec<f64>,
}

impl RefBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree must be >= 1, got {degree}"
            )));
        }
        if degree > 10 {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree {degree} not supported (max 10)"
            )));
        }
        let p = degree;
        let mut nodes = Vec::new();
        for iy in 0..=p {
            for ix in 0..=(p - iy) {
                nodes.push([ix as f64 / p as f64, iy as f64 / p as f64]);
            }
        }
        let mut monos = Vec::new();
        for b in 0..=p as u32 {
            for a in 0..=(p as u32 - b) {
                monos.push((a, b));
            }
        }
        let n_loc = nodes.len();
        debug_assert_eq!(n_loc, (p + 1) * (p + 2) / 2);

        let mut v = DenseMat::zeros(n_loc);
        for (i, node) in nodes.iter().enumerate() {
            for (m, (a, b)) in monos.iter().enumerate() {
                v.set(i, m, node[0].powi(*a as i32) * node[1].powi(*b as i32));
            }
        }
        let rhs: Vec<Vec<f64>> = (0..n_loc)
            .map(|j| {
                let mut e = vec![0.0; n_loc];
                e[j] = 1.0;
                e
            })
            .collect();
        let cols = linalg::solve_full_pivot(&v, &rhs)
            .ok_or_else(|| Error::Internal("singular Vandermonde matrix".into()))?;
        let mut coeff = vec![0.0; n_loc * n_loc];
        for (j, col) in cols.iter().enumerate() {
            for m in 0..n_loc {
                coeff[m * n_loc + j] = col[m];
            }
        }
        Ok(RefBasis { degree, n_loc, nodes, monos, coeff })
    }

    /// Evaluate all basis functions and their reference derivatives (orders
    /// 0-3) at a set of points.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> RefBasisTable {
        let n = self.n_loc;
        let np = points.len();
        let mut table = RefBasisTable {
            n_loc: n,
            n_points: np,
            values: vec![0.0; np * n],
            grads: vec![[0.0; 2]; np * n],
            hess: vec![[0.0; 3]; np * n],
            third: vec![[0.0; 4]; np * n],
        };
        for (pi, p) in points.iter().enumerate() {
            let (x, y) = (p[0], p[1]);
            for (m, (a, b)) in self.monos.iter().enumerate() {
                let (a, b) = (*a as i32, *b as i32);
                let xa = |k: i32| if a - k < 0 { 0.0 } else { x.powi(a - k) };
                let yb = |k: i32| if b - k < 0 { 0.0 } else { y.powi(b - k) };
                let af = a as f64;
                let bf = b as f64;
                let val = xa(0) * yb(0);
                let dx = af * xa(1) * yb(0);
                let dy = bf * xa(0) * yb(1);
                let dxx = af * (af - 1.0) * xa(2) * yb(0);
                let dxy = af * bf * xa(1) * yb(1);
                let dyy = bf * (bf - 1.0) * xa(0) * yb(2);
                let dxxx = af * (af - 1.0) * (af - 2.0) * xa(3) * yb(0);
                let dxxy = af * (af - 1.0) * bf * xa(2) * yb(1);
                let dxyy = af * bf * (bf - 1.0) * xa(1) * yb(2);
                let dyyy = bf * (bf - 1.0) * (bf - 2.0) * xa(0) * yb(3);
                for j in 0..n {
                    let c = self.coeff[m * n + j];
                    if c == 0.0 {
                        continue;
                    }
                    let idx = pi * n + j;
                    table.values[idx] += c * val;
                    table.grads[idx][0] += c * dx;
                    table.grads[idx][1] += c * dy;
                    table.hess[idx][0] += c * dxx;
                    table.hess[idx][1] += c * dxy;
                    table.hess[idx][2] += c * dyy;
                    table.third[idx][0] += c * dxxx;
                    table.third[idx][1] += c * dxxy;
                    table.third[idx][2] += c * dxyy;
                    table.third[idx][3] += c * dyyy;
                }
            }
        }
        table
    }
}

/// Values and reference derivatives of the degree-`p` nodal basis at a point
/// set.
pub fn eval_ref_basis(degree: usize, points: &[[f64; 2]]) -> Result<RefBasisTable> {
    Ok(RefBasis::new(degree)?.tabulate(points))
}

/// Per-point, per-basis reference values and derivatives. Symmetric storage:
/// Hessian as (xx, xy, yy), third derivatives as (xxx, xxy, xyy, yyy).
#[derive(Debug, Clone)]
pub struct RefBasisTable {
    pub n_loc: usize,
    pub n_points: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
    pub third: Vec<[f64; 4]>,
}

/// Physical values and derivatives of all basis functions at one point.
#[derive(Debug, Clone)]
pub struct PhysDerivs {
    pub value: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// (xx, xy, yy)
    pub hess: Vec<[f64; 3]>,
    /// (xxx, xxy, xyy, yyy)
    pub third: Vec<[f64; 4]>,
}

impl PhysDerivs {
    pub fn new(n_loc: usize) -> Self {
        PhysDerivs {
            value: vec![0.0; n_loc],
            grad: vec![[0.0; 2]; n_loc],
            hess: vec![[0.0; 3]; n_loc],
            third: vec![[0.0; 4]; n_loc],
        }
    }

    pub fn laplacian(&self, j: usize) -> f64 {
        self.hess[j][0] + self.hess[j][2]
    }

    /// Gradient of the Laplacian: (v_xxx + v_xyy, v_xxy + v_yyy).
    pub fn grad_laplacian(&self, j: usize) -> Vec2 {
        [
            self.third[j][0] + self.third[j][2],
            self.third[j][1] + self.third[j][3],
        ]
    }
}

pub(crate) fn hess_full(h: &[f64; 3]) -> [[f64; 2]; 2] {
    [[h[0], h[1]], [h[1], h[2]]]
}

fn third_full(t: &[f64; 4]) -> [[[f64; 2]; 2]; 2] {
    // Fully symmetric: component (i,j,k) indexes by its y-count.
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = t[i + j + k];
            }
        }
    }
    out
}

/// Transform the reference derivatives of all basis functions at table point
/// `pt` to physical derivatives through the map derivatives `md`.
pub fn physical_from_table(
    table: &RefBasisTable,
    pt: usize,
    md: &MapDerivatives,
    max_order: usize,
    out: &mut PhysDerivs,
) {
    let n = table.n_loc;
    let g1 = &md.inv_d1;
    let curved = md.d2f != [[[0.0; 2]; 2]; 2];
    for j in 0..n {
        let idx = pt * n + j;
        out.value[j] = table.values[idx];
        if max_order < 1 {
            continue;
        }
        let rg = table.grads[idx];
        for i in 0..2 {
            out.grad[j][i] = rg[0] * g1[0][i] + rg[1] * g1[1][i];
        }
        if max_order < 2 {
            continue;
        }
        let rh = hess_full(&table.hess[idx]);
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in i..2 {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += rh[a][b] * g1[a][i] * g1[b][k];
                    }
                }
                if curved {
                    for a in 0..2 {
                        s += rg[a] * md.inv_d2[a][i][k];
                    }
                }
                hess[i][k] = s;
            }
        }
        out.hess[j] = [hess[0][0], hess[0][1], hess[1][1]];
        if max_order < 3 {
            continue;
        }
        let rt = third_full(&table.third[idx]);
        let mut third = [0.0; 4];
        for (slot, (i, jj, k)) in [
            (0usize, (0usize, 0usize, 0usize)),
            (1, (0, 0, 1)),
            (2, (0, 1, 1)),
            (3, (1, 1, 1)),
        ] {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        s += rt[a][b][c] * g1[a][i] * g1[b][jj] * g1[c][k];
                    }
                }
            }
            if curved {
                for a in 0..2 {
                    for b in 0..2 {
                        s += rh[a][b]
                            * (md.inv_d2[a][i][jj] * g1[b][k]
                                + md.inv_d2[a][i][k] * g1[b][jj]
                                + md.inv_d2[a][jj][k] * g1[b][i]);
                    }
                    s += rg[a] * md.inv_d3[a][i][jj][k];
                }
            }
            third[slot] = s;
        }
        out.third[j] = third;
    }
}

/// Physical derivatives of all basis functions at one reference point.
pub fn physical_derivatives(
    space: &DGSpace,
    map: &CurvedMap,
    ref_point: Vec2,
    max_order: usize,
) -> Result<PhysDerivs> {
    let md = map_derivatives(map, ref_point)?;
    let table = space.basis.tabulate(&[ref_point]);
    let mut out = PhysDerivs::new(space.n_loc);
    physical_from_table(&table, 0, &md, max_order, &mut out);
    Ok(out)
}

/// Face-trace quantities of all basis functions of one incident element.
#[derive(Debug, Clone)]
pub struct TraceSide {
    /// Element index this side lives on.
    pub elem: usize,
    pub value: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// Full physical Hessian (xx, xy, yy).
    pub hess: Vec<[f64; 3]>,
    /// Laplacian (trace of the Hessian).
    pub lap: Vec<f64>,
    /// Normal derivative grad . n_F.
    pub dn: Vec<f64>,
    /// Tangential gradient (g'/|gamma'|) tau.
    pub grad_t: Vec<[f64; 2]>,
    /// Tangential Laplacian (1/|gamma'|) d/dt (g'/|gamma'|).
    pub lap_t: Vec<f64>,
    /// Tangential gradient of the normal derivative.
    pub grad_t_dn: Vec<[f64; 2]>,
    /// Normal derivative of the Laplacian, from third derivatives.
    pub dlap_dn: Vec<f64>,
}

impl TraceSide {
    pub fn new(elem: usize, n_loc: usize) -> Self {
        TraceSide {
            elem,
            value: vec![0.0; n_loc],
            grad: vec![[0.0; 2]; n_loc],
            hess: vec![[0.0; 3]; n_loc],
            lap: vec![0.0; n_loc],
            dn: vec![0.0; n_loc],
            grad_t: vec![[0.0; 2]; n_loc],
            lap_t: vec![0.0; n_loc],
            grad_t_dn: vec![[0.0; 2]; n_loc],
            dlap_dn: vec![0.0; n_loc],
        }
    }
}

/// Traces of all basis functions on both sides of a face at parameter `t` of
/// the left element's face curve.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub frame: FaceFrame,
    pub left: TraceSide,
    pub right: Option<TraceSide>,
}

/// Fill one trace side. `edge_dir` is the reference direction of this
/// element's own edge and `dir_sign` relates that edge parameter to the face
/// parameter t (+1 for the left element, -1 for the right, which traverses
/// the shared edge backwards). All face-intrinsic quantities use the left
/// element's frame; `curve_d2` is the second parameter derivative of its
/// curve.
#[allow(clippy::too_many_arguments)]
pub fn fill_trace_side(
    table: &RefBasisTable,
    pt: usize,
    md: &MapDerivatives,
    frame: &FaceFrame,
    curve_d2: Vec2,
    edge_dir: Vec2,
    dir_sign: f64,
    max_order: usize,
    phys: &mut PhysDerivs,
    out: &mut TraceSide,
) {
    physical_from_table(table, pt, md, max_order.max(1), phys);
    let n = table.n_loc;
    let m = frame.metric;
    let tau = frame.tangent;
    let nrm = frame.normal;
    let d1 = [m * tau[0], m * tau[1]];
    let d1_dot_d2 = linalg::dot(d1, curve_d2);
    for j in 0..n {
        let idx = pt * n + j;
        out.value[j] = table.values[idx];
        out.grad[j] = phys.grad[j];
        // Reference-route parameter derivative of the trace.
        let rg = table.grads[idx];
        let gp = dir_sign * (rg[0] * edge_dir[0] + rg[1] * edge_dir[1]);
        let gt = gp / m;
        out.grad_t[j] = [gt * tau[0], gt * tau[1]];
        out.dn[j] = linalg::dot(phys.grad[j], nrm);
        if max_order < 2 {
            continue;
        }
        let rh = hess_full(&table.hess[idx]);
        let mut gpp = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                gpp += rh[a][b] * edge_dir[a] * edge_dir[b];
            }
        }
        out.hess[j] = phys.hess[j];
        out.lap[j] = phys.hess[j][0] + phys.hess[j][2];
        out.lap_t[j] = gpp / (m * m) - gp * d1_dot_d2 / (m * m * m * m);
        // d/dt of grad(v).n(t) = (H gamma') . n + grad . n'(t), with
        // n'(t) = H_F |gamma'| tau.
        let h = hess_full(&phys.hess[j]);
        let hn_tau = tau[0] * (h[0][0] * nrm[0] + h[0][1] * nrm[1])
            + tau[1] * (h[1][0] * nrm[0] + h[1][1] * nrm[1]);
        let qt = hn_tau + frame.curvature * linalg::dot(phys.grad[j], tau);
        out.grad_t_dn[j] = [qt * tau[0], qt * tau[1]];
        if max_order < 3 {
            continue;
        }
        let gl = phys.grad_laplacian(j);
        out.dlap_dn[j] = linalg::dot(gl, nrm);
    }
}

/// Evaluate all trace quantities on a face at parameter `t in [0,1]`.
pub fn trace_derivatives(
    space: &DGSpace,
    face: &Face,
    maps: &[CurvedMap],
    t: f64,
    max_order: usize,
) -> Result<FaceTrace> {
    let lmap = &maps[face.left];
    let (_, _, d2) = lmap.edge_curve(face.left_edge, t);
    let frame = geometry::face_frame(lmap, face.left_edge, t)?;

    let lref = ref_edge_point(face.left_edge, t);
    let lmd = map_derivatives(lmap, lref)?;
    let ltab = space.basis.tabulate(&[lref]);
    let mut phys = PhysDerivs::new(space.n_loc);
    let mut left = TraceSide::new(face.left, space.n_loc);
    fill_trace_side(
        &ltab,
        0,
        &lmd,
        &frame,
        d2,
        ref_edge_dir(face.left_edge),
        1.0,
        max_order,
        &mut phys,
        &mut left,
    );

    let right = match face.right {
        None => None,
        Some((relem, redge)) => {
            let rmap = &maps[relem];
            let rref = ref_edge_point(redge, 1.0 - t);
            debug_assert!({
                let xp = rmap.map_point(rref);
                linalg::norm(linalg::sub(xp, frame.point)) < 1e-12
            });
            let rmd = map_derivatives(rmap, rref)?;
            let rtab = space.basis.tabulate(&[rref]);
            let mut side = TraceSide::new(relem, space.n_loc);
            fill_trace_side(
                &rtab,
                0,
                &rmd,
                &frame,
                d2,
                ref_edge_dir(redge),
                -1.0,
                max_order,
                &mut phys,
                &mut side,
            );
            Some(side)
        }
    };

    Ok(FaceTrace { frame, left, right })
}

/// Coefficients that nodally interpolate `f` on one element:
/// `c_j = f(F_K(node_j))`.
pub fn nodal_coeffs<F>(basis: &RefBasis, map: &CurvedMap, f: F) -> Vec<f64>
where
    F: Fn(Vec2) -> f64,
{
    basis.nodes.iter().map(|node| f(map.map_point(*node))).collect()
}
