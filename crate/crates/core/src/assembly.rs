//! Assembly of the symmetric interior-penalty systems for the Poisson and
//! clamped-plate problems.
//!
//! Poisson:
//!   `A1(u,v) = sum_K <grad u, grad v>_K + B1(u,v) + B1(v,u) + J1(u,v)`
//! with `B1(u,v) = -sum_F <{du/dn}, [v]>_F` over all faces and
//! `J1(u,v) = sum_F (eta1/h_F) <[u],[v]>_F`.
//!
//! Plate:
//!   `A2(u,v) = sum_K <D2u, D2v>_K + C(u,v) + C(v,u) + B2(u,v) + B2(v,u)
//!              + J2(u,v)`
//! with `B2(u,v) = sum_F <{d(Lap u)/dn}, [v]>_F - <{Lap u}, [dv/dn]>_F`,
//! the jump penalties `J2 = sum_F (eta2/h_F^3)<[u],[v]> +
//! (eta3/h_F)<[du/dn],[dv/dn]> + (eta4/h_F)<[grad_T u],[grad_T v]>`, and the
//! curvature form over interior faces
//!
//!   `C(u,v) = sum_F <Lap_T{u}, [dv/dn]> + <H_F {du/dn}, [dv/dn]>
//!             - <grad_T{du/dn}, [grad_T v]>
//!             + <Q_F(grad_T{u}, [grad_T v]) + Q_F({grad u.n} n, [grad_T v])>`
//!
//! On boundary faces every jump/average is the single trace; `C` has no
//! boundary part. With straight interior faces the shape operator vanishes,
//! so only the first and third terms of `C` contribute; the second `Q_F`
//! term is identically zero in 2D regardless, since the shape operator
//! `H tau tau^T` annihilates the normal. Assembly order is elements
//! ascending then faces ascending, so results are reproducible bit for bit.

use crate::error::{Error, Result};
use crate::geometry::{self, map_derivatives, q_form, CurvedMap};
use crate::linalg::{self, Vec2};
use crate::mesh::{FaceSet, MeshMetrics};
use crate::problems::Jet2;
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule};
use crate::space::{
    fill_trace_side, hess_full, physical_from_table, DGSpace, PhysDerivs, RefBasisTable,
    TraceSide,
};

/// Face-uniform penalty parameters.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyConfig {
    /// Poisson jump penalty.
    pub eta1: f64,
    /// Plate jump penalty (weight eta2 / h^3).
    pub eta2: f64,
    /// Plate normal-derivative penalty (weight eta3 / h).
    pub eta3: f64,
    /// Plate tangential-gradient penalty (weight eta4 / h).
    pub eta4: f64,
}

impl PenaltyConfig {
    /// Shipped defaults: eta1 = 10 p^4 and eta2 = c_p p^6,
    /// eta3 = eta4 = c_p p^4 with c_p = 10 for p >= 3.
    ///
    /// The reference experiments used c_p = 0.1 for p = 2, but on the ring
    /// meshes generated here that choice yields an indefinite plate matrix
    /// at every level (certified by a nonpositive element-block pivot), so
    /// the p = 2 default is raised to c_p = 1; the scheme is stable on this
    /// family from roughly c_p = 0.4 upward.
    pub fn defaults(degree: usize) -> Self {
        let p = degree as f64;
        let c_p = if degree == 2 { 1.0 } else { 10.0 };
        PenaltyConfig {
            eta1: 10.0 * p.powi(4),
            eta2: c_p * p.powi(6),
            eta3: c_p * p.powi(4),
            eta4: c_p * p.powi(4),
        }
    }

    fn check_poisson(&self) -> Result<()> {
        if !(self.eta1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta1 must be positive, got {}",
                self.eta1
            )));
        }
        Ok(())
    }

    fn check_biharmonic(&self) -> Result<()> {
        for (name, v) in [("eta2", self.eta2), ("eta3", self.eta3), ("eta4", self.eta4)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Compressed sparse row symmetric system with right-hand side.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// max |A - A^T| / max |A|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut max_abs: f64 = 0.0;
        let mut max_defect: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.values[k];
                max_abs = max_abs.max(v.abs());
                if j > i {
                    max_defect = max_defect.max((v - self.entry(j, i)).abs());
                }
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_defect / max_abs
        }
    }

    /// Quadratic form x^T A x.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * x[self.col_idx[k]];
            }
            s += x[i] * row;
        }
        s
    }
}

/// CSR accumulator over a fixed sparsity pattern.
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    /// `neighbors[i]` lists the sorted column indices of row i.
    pub fn new(neighbors: &[Vec<usize>]) -> Self {
        let n = neighbors.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for cols in neighbors {
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrBuilder { n, row_ptr, col_idx, values }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let k = self.col_idx[lo..hi]
            .binary_search(&j)
            .expect("column outside sparsity pattern");
        self.values[lo + k] += v;
    }

    pub fn finish(self) -> SparseSystem {
        SparseSystem {
            n: self.n,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
            rhs: vec![0.0; self.n],
        }
    }
}

/// Dof-block sparsity from element/face adjacency.
fn dof_pattern(space: &DGSpace, faces: &FaceSet) -> Vec<Vec<usize>> {
    let n_loc = space.n_loc;
    let mut elem_nbrs: Vec<Vec<usize>> = (0..space.n_elems).map(|e| vec![e]).collect();
    for f in &faces.faces {
        if let Some((r, _)) = f.right {
            elem_nbrs[f.left].push(r);
            elem_nbrs[r].push(f.left);
        }
    }
    let mut rows = Vec::with_capacity(space.n_dofs());
    for e in 0..space.n_elems {
        elem_nbrs[e].sort_unstable();
        elem_nbrs[e].dedup();
        let mut cols = Vec::with_capacity(elem_nbrs[e].len() * n_loc);
        for &g in &elem_nbrs[e] {
            for j in 0..n_loc {
                cols.push(g * n_loc + j);
            }
        }
        for _ in 0..n_loc {
            rows.push(cols.clone());
        }
    }
    rows
}

/// Reference basis tables on all edges in both orientations at the face-rule
/// points ([edge][orientation], orientation 0 = t, 1 = 1 - t).
struct EdgeTables {
    tables: Vec<[RefBasisTable; 2]>,
    rule: EdgeRule,
}

impl EdgeTables {
    fn new(space: &DGSpace, rule: EdgeRule) -> Self {
        let mut tables = Vec::with_capacity(3);
        for edge in 0..3 {
            let fwd: Vec<[f64; 2]> = rule
                .points
                .iter()
                .map(|t| geometry::ref_edge_point(edge, *t))
                .collect();
            let rev: Vec<[f64; 2]> = rule
                .points
                .iter()
                .map(|t| geometry::ref_edge_point(edge, 1.0 - *t))
                .collect();
            tables.push([space.basis.tabulate(&fwd), space.basis.tabulate(&rev)]);
        }
        EdgeTables { tables, rule }
    }
}

/// Integrated squared jumps of one face (reference-measure weighted by the
/// face metric, no penalty weights).
#[derive(Debug, Clone, Copy, Default)]
pub struct FaceJumpIntegrals {
    pub val_sq: f64,
    pub dn_sq: f64,
    pub grad_t_sq: f64,
}

/// Everything the assembler needs about one discretization.
pub struct Assembly<'a> {
    pub space: &'a DGSpace,
    pub maps: &'a [CurvedMap],
    pub faces: &'a FaceSet,
    pub metrics: &'a MeshMetrics,
    pub penalties: PenaltyConfig,
    /// Quadrature degree for both element and face rules.
    pub quad_degree: usize,
}

impl<'a> Assembly<'a> {
    /// `quad_degree` defaults to 2p + 4, absorbing the Jacobian variation of
    /// the curved maps.
    pub fn new(
        space: &'a DGSpace,
        maps: &'a [CurvedMap],
        faces: &'a FaceSet,
        metrics: &'a MeshMetrics,
        penalties: PenaltyConfig,
        quad_degree: Option<usize>,
    ) -> Self {
        let quad_degree = quad_degree.unwrap_or(2 * space.degree + 4);
        Assembly { space, maps, faces, metrics, penalties, quad_degree }
    }

    /// Assemble the Poisson system for the right-hand side `f`.
    pub fn assemble_poisson<F>(&self, f: F) -> Result<SparseSystem>
    where
        F: Fn(Vec2) -> f64,
    {
        self.penalties.check_poisson()?;
        self.assemble(1, f)
    }

    /// Assemble the clamped-plate system for the right-hand side `f`.
    ///
    /// Degree 2 is accepted with a warning: the error analysis wants p >= 3
    /// but the scheme runs and converges at p = 2.
    pub fn assemble_biharmonic<F>(&self, f: F) -> Result<SparseSystem>
    where
        F: Fn(Vec2) -> f64,
    {
        self.penalties.check_biharmonic()?;
        if self.space.degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "plate problem needs degree >= 2, got {}",
                self.space.degree
            )));
        }
        if self.space.degree == 2 {
            eprintln!("warning: plate problem at p = 2 is outside the proven error analysis");
        }
        self.assemble(2, f)
    }

    fn assemble<F>(&self, order: usize, f: F) -> Result<SparseSystem>
    where
        F: Fn(Vec2) -> f64,
    {
        let space = self.space;
        let n_loc = space.n_loc;
        let mut builder = CsrBuilder::new(&dof_pattern(space, self.faces));
        let mut rhs = vec![0.0; space.n_dofs()];

        // Volume terms.
        let tri_rule = triangle_rule(self.quad_degree)?;
        let tri_table = space.basis.tabulate(&tri_rule.points);
        let mut phys = PhysDerivs::new(n_loc);
        let mut local = vec![0.0; n_loc * n_loc];
        for (e, map) in self.maps.iter().enumerate() {
            local.iter_mut().for_each(|v| *v = 0.0);
            for (pt, w) in tri_rule.weights.iter().enumerate() {
                let rp = tri_rule.points[pt];
                let md = map_derivatives(map, rp)?;
                physical_from_table(&tri_table, pt, &md, order, &mut phys);
                let wd = w * md.det;
                if order == 1 {
                    for a in 0..n_loc {
                        let ga = phys.grad[a];
                        for b in a..n_loc {
                            let gb = phys.grad[b];
                            local[a * n_loc + b] += wd * (ga[0] * gb[0] + ga[1] * gb[1]);
                        }
                    }
                } else {
                    for a in 0..n_loc {
                        let ha = phys.hess[a];
                        for b in a..n_loc {
                            let hb = phys.hess[b];
                            local[a * n_loc + b] +=
                                wd * (ha[0] * hb[0] + 2.0 * ha[1] * hb[1] + ha[2] * hb[2]);
                        }
                    }
                }
                let fx = f(map.map_point(rp));
                for a in 0..n_loc {
                    rhs[e * n_loc + a] += wd * fx * phys.value[a];
                }
            }
            for a in 0..n_loc {
                for b in a..n_loc {
                    let v = local[a * n_loc + b];
                    builder.add(e * n_loc + a, e * n_loc + b, v);
                    if b != a {
                        builder.add(e * n_loc + b, e * n_loc + a, v);
                    }
                }
            }
        }

        // Face terms.
        let tables = EdgeTables::new(space, edge_rule(self.quad_degree)?);
        let mut traces = [TraceSide::new(0, n_loc), TraceSide::new(0, n_loc)];
        let mut signs = [1.0f64, -1.0];
        let mut face_local = vec![0.0; 4 * n_loc * n_loc];
        for (fi, face) in self.faces.faces.iter().enumerate() {
            let h_f = self.metrics.h_face[fi];
            let interior = !face.is_boundary();
            let n_sides = if interior { 2 } else { 1 };
            let avg_w = if interior { 0.5 } else { 1.0 };
            face_local.iter_mut().for_each(|v| *v = 0.0);

            for (pt, w) in tables.rule.weights.iter().enumerate() {
                let t = tables.rule.points[pt];
                let lmap = &self.maps[face.left];
                let (_, _, d2) = lmap.edge_curve(face.left_edge, t);
                let frame = geometry::face_frame(lmap, face.left_edge, t)?;
                let wm = w * frame.metric;

                let lmd = map_derivatives(lmap, geometry::ref_edge_point(face.left_edge, t))?;
                traces[0].elem = face.left;
                signs[0] = 1.0;
                fill_trace_side(
                    &tables.tables[face.left_edge][0],
                    pt,
                    &lmd,
                    &frame,
                    d2,
                    geometry::ref_edge_dir(face.left_edge),
                    1.0,
                    order + 1,
                    &mut phys,
                    &mut traces[0],
                );
                if let Some((relem, redge)) = face.right {
                    let rmap = &self.maps[relem];
                    let rmd = map_derivatives(rmap, geometry::ref_edge_point(redge, 1.0 - t))?;
                    traces[1].elem = relem;
                    signs[1] = -1.0;
                    fill_trace_side(
                        &tables.tables[redge][1],
                        pt,
                        &rmd,
                        &frame,
                        d2,
                        geometry::ref_edge_dir(redge),
                        -1.0,
                        order + 1,
                        &mut phys,
                        &mut traces[1],
                    );
                }

                let eta = &self.penalties;
                let tau = frame.tangent;
                let curv = frame.curvature;
                for sa in 0..n_sides {
                    let ta = &traces[sa];
                    let ja = signs[sa];
                    for sb in 0..n_sides {
                        let tb = &traces[sb];
                        let jb = signs[sb];
                        for a in 0..n_loc {
                            let row = (sa * n_loc + a) * 2 * n_loc + sb * n_loc;
                            for b in 0..n_loc {
                                // Test function v = phi_a, trial u = phi_b.
                                let mut val;
                                if order == 1 {
                                    // B1(u,v) + B1(v,u) + J1.
                                    val = -avg_w * tb.dn[b] * ja * ta.value[a]
                                        - avg_w * ta.dn[a] * jb * tb.value[b]
                                        + eta.eta1 / h_f
                                            * (ja * ta.value[a])
                                            * (jb * tb.value[b]);
                                } else {
                                    // B2(u,v) + B2(v,u).
                                    val = avg_w * tb.dlap_dn[b] * ja * ta.value[a]
                                        - avg_w * tb.lap[b] * ja * ta.dn[a]
                                        + avg_w * ta.dlap_dn[a] * jb * tb.value[b]
                                        - avg_w * ta.lap[a] * jb * tb.dn[b];
                                    // J2.
                                    val += eta.eta2 / (h_f * h_f * h_f)
                                        * (ja * ta.value[a])
                                        * (jb * tb.value[b]);
                                    val += eta.eta3 / h_f * (ja * ta.dn[a]) * (jb * tb.dn[b]);
                                    val += eta.eta4 / h_f
                                        * (ja * jb)
                                        * (ta.grad_t[a][0] * tb.grad_t[b][0]
                                            + ta.grad_t[a][1] * tb.grad_t[b][1]);
                                    if interior {
                                        // C(u,v) + C(v,u); the second Q_F
                                        // term is zero (shape operator
                                        // annihilates the normal).
                                        val += avg_w * tb.lap_t[b] * ja * ta.dn[a]
                                            + avg_w * ta.lap_t[a] * jb * tb.dn[b];
                                        val += curv
                                            * avg_w
                                            * (tb.dn[b] * ja * ta.dn[a]
                                                + ta.dn[a] * jb * tb.dn[b]);
                                        val -= avg_w
                                            * ja
                                            * (tb.grad_t_dn[b][0] * ta.grad_t[a][0]
                                                + tb.grad_t_dn[b][1] * ta.grad_t[a][1]);
                                        val -= avg_w
                                            * jb
                                            * (ta.grad_t_dn[a][0] * tb.grad_t[b][0]
                                                + ta.grad_t_dn[a][1] * tb.grad_t[b][1]);
                                        let gt_a = ta.grad_t[a][0] * tau[0] + ta.grad_t[a][1] * tau[1];
                                        let gt_b = tb.grad_t[b][0] * tau[0] + tb.grad_t[b][1] * tau[1];
                                        val += curv * (avg_w * gt_b) * (ja * gt_a);
                                        val += curv * (avg_w * gt_a) * (jb * gt_b);
                                    }
                                }
                                face_local[row + b] += wm * val;
                            }
                        }
                    }
                }
            }

            for sa in 0..n_sides {
                let ea = traces[sa].elem;
                for sb in 0..n_sides {
                    let eb = traces[sb].elem;
                    for a in 0..n_loc {
                        let row = (sa * n_loc + a) * 2 * n_loc + sb * n_loc;
                        for b in 0..n_loc {
                            let v = face_local[row + b];
                            if v != 0.0 {
                                builder.add(ea * n_loc + a, eb * n_loc + b, v);
                            }
                        }
                    }
                }
            }
        }

        let mut system = builder.finish();
        system.rhs = rhs;
        Ok(system)
    }

    /// Integrated squared jumps of a DG vector on every face: value jump,
    /// normal-derivative jump and tangential-gradient jump (unweighted; the
    /// penalty weights are applied by the callers).
    pub fn face_jump_integrals(&self, coeffs: &[f64]) -> Result<Vec<FaceJumpIntegrals>> {
        let space = self.space;
        let n_loc = space.n_loc;
        let tables = EdgeTables::new(space, edge_rule(self.quad_degree)?);
        let mut phys = PhysDerivs::new(n_loc);
        let mut tside = TraceSide::new(0, n_loc);
        let mut out = Vec::with_capacity(self.faces.faces.len());
        for face in &self.faces.faces {
            let mut acc = FaceJumpIntegrals::default();
            for (pt, w) in tables.rule.weights.iter().enumerate() {
                let t = tables.rule.points[pt];
                let lmap = &self.maps[face.left];
                let (_, _, d2) = lmap.edge_curve(face.left_edge, t);
                let frame = geometry::face_frame(lmap, face.left_edge, t)?;
                let wm = w * frame.metric;

                let mut jump_val = 0.0;
                let mut jump_dn = 0.0;
                let mut jump_gt = [0.0; 2];
                let sides: [Option<(usize, usize, usize, f64)>; 2] = [
                    Some((face.left, face.left_edge, 0, 1.0)),
                    face.right.map(|(r, re)| (r, re, 1, -1.0)),
                ];
                for entry in sides.into_iter().flatten() {
                    let (elem, edge, orient, sign) = entry;
                    let rp = if orient == 0 {
                        geometry::ref_edge_point(edge, t)
                    } else {
                        geometry::ref_edge_point(edge, 1.0 - t)
                    };
                    let md = map_derivatives(&self.maps[elem], rp)?;
                    fill_trace_side(
                        &tables.tables[edge][orient],
                        pt,
                        &md,
                        &frame,
                        d2,
                        geometry::ref_edge_dir(edge),
                        sign,
                        2,
                        &mut phys,
                        &mut tside,
                    );
                    let c = &coeffs[elem * n_loc..(elem + 1) * n_loc];
                    for j in 0..n_loc {
                        jump_val += sign * c[j] * tside.value[j];
                        jump_dn += sign * c[j] * tside.dn[j];
                        jump_gt[0] += sign * c[j] * tside.grad_t[j][0];
                        jump_gt[1] += sign * c[j] * tside.grad_t[j][1];
                    }
                }
                acc.val_sq += wm * jump_val * jump_val;
                acc.dn_sq += wm * jump_dn * jump_dn;
                acc.grad_t_sq += wm * (jump_gt[0] * jump_gt[0] + jump_gt[1] * jump_gt[1]);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Jump penalty form J_k(v, v) of a DG coefficient vector: value jumps
    /// for k = 1; value, normal-derivative and tangential-gradient jumps
    /// with their h-weights for k = 2.
    pub fn j_form(&self, k: usize, coeffs: &[f64]) -> Result<f64> {
        let jumps = self.face_jump_integrals(coeffs)?;
        Ok(self.j_form_from_jumps(k, &jumps))
    }

    /// J_k from precomputed per-face jump integrals.
    pub fn j_form_from_jumps(&self, k: usize, jumps: &[FaceJumpIntegrals]) -> f64 {
        let eta = &self.penalties;
        let mut total = 0.0;
        for (fi, j) in jumps.iter().enumerate() {
            let h_f = self.metrics.h_face[fi];
            total += match k {
                1 => eta.eta1 / h_f * j.val_sq,
                _ => {
                    eta.eta2 / (h_f * h_f * h_f) * j.val_sq
                        + eta.eta3 / h_f * j.dn_sq
                        + eta.eta4 / h_f * j.grad_t_sq
                }
            };
        }
        total
    }

    /// Broken seminorm squared of order exactly `k` of a DG vector.
    pub fn broken_seminorm_sq(&self, k: usize, coeffs: &[f64]) -> Result<f64> {
        let space = self.space;
        let n_loc = space.n_loc;
        let tri_rule = triangle_rule(self.quad_degree)?;
        let tri_table = space.basis.tabulate(&tri_rule.points);
        let mut phys = PhysDerivs::new(n_loc);
        let mut total = 0.0;
        for (e, map) in self.maps.iter().enumerate() {
            let c = &coeffs[e * n_loc..(e + 1) * n_loc];
            for (pt, w) in tri_rule.weights.iter().enumerate() {
                let md = map_derivatives(map, tri_rule.points[pt])?;
                physical_from_table(&tri_table, pt, &md, k, &mut phys);
                let wd = w * md.det;
                if k == 1 {
                    let mut g = [0.0; 2];
                    for j in 0..n_loc {
                        g[0] += c[j] * phys.grad[j][0];
                        g[1] += c[j] * phys.grad[j][1];
                    }
                    total += wd * (g[0] * g[0] + g[1] * g[1]);
                } else {
                    let mut h = [0.0; 3];
                    for j in 0..n_loc {
                        h[0] += c[j] * phys.hess[j][0];
                        h[1] += c[j] * phys.hess[j][1];
                        h[2] += c[j] * phys.hess[j][2];
                    }
                    total += wd * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
                }
            }
        }
        Ok(total)
    }

    /// Stability norm squared: broken H^k seminorm plus J_k with unit weight
    /// on the jump part.
    pub fn norm_hk_sq(&self, k: usize, coeffs: &[f64]) -> Result<f64> {
        Ok(self.broken_seminorm_sq(k, coeffs)? + self.j_form(k, coeffs)?)
    }
}

/// A function known element-wise through value/gradient/Hessian jets. The
/// reference point accompanies the physical point so DG fields can evaluate
/// without inverting maps.
pub trait ElementField {
    fn jet(&self, elem: usize, x: Vec2, ref_point: Vec2) -> Jet2;
}

/// DG coefficient vector viewed as an element field.
pub struct DgField<'a> {
    pub space: &'a DGSpace,
    pub maps: &'a [CurvedMap],
    pub coeffs: &'a [f64],
}

impl ElementField for DgField<'_> {
    fn jet(&self, elem: usize, _x: Vec2, ref_point: Vec2) -> Jet2 {
        let pd = crate::space::physical_derivatives(self.space, &self.maps[elem], ref_point, 2)
            .expect("valid map");
        let n_loc = self.space.n_loc;
        let c = &self.coeffs[elem * n_loc..(elem + 1) * n_loc];
        let mut jet = Jet2 { value: 0.0, grad: [0.0; 2], hess: [0.0; 3] };
        for j in 0..n_loc {
            jet.value += c[j] * pd.value[j];
            jet.grad[0] += c[j] * pd.grad[j][0];
            jet.grad[1] += c[j] * pd.grad[j][1];
            jet.hess[0] += c[j] * pd.hess[j][0];
            jet.hess[1] += c[j] * pd.hess[j][1];
            jet.hess[2] += c[j] * pd.hess[j][2];
        }
        jet
    }
}

/// Globally smooth function viewed as an element field.
pub struct AnalyticField<F: Fn(Vec2) -> Jet2>(pub F);

impl<F: Fn(Vec2) -> Jet2> ElementField for AnalyticField<F> {
    fn jet(&self, _elem: usize, x: Vec2, _ref_point: Vec2) -> Jet2 {
        (self.0)(x)
    }
}

/// sum_K <Lap u, Lap v>_K by element quadrature.
pub fn sum_lap_inner<U: ElementField, V: ElementField>(
    u: &U,
    v: &V,
    maps: &[CurvedMap],
    quad_degree: usize,
) -> Result<f64> {
    let rule = triangle_rule(quad_degree)?;
    let mut total = 0.0;
    for (e, map) in maps.iter().enumerate() {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let det = linalg::det2(&map.jacobian(*p));
            let x = map.map_point(*p);
            let ju = u.jet(e, x, *p);
            let jv = v.jet(e, x, *p);
            total += w * det * (ju.hess[0] + ju.hess[2]) * (jv.hess[0] + jv.hess[2]);
        }
    }
    Ok(total)
}

/// sum_K <D2 u, D2 v>_K by element quadrature.
pub fn sum_hess_inner<U: ElementField, V: ElementField>(
    u: &U,
    v: &V,
    maps: &[CurvedMap],
    quad_degree: usize,
) -> Result<f64> {
    let rule = triangle_rule(quad_degree)?;
    let mut total = 0.0;
    for (e, map) in maps.iter().enumerate() {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let det = linalg::det2(&map.jacobian(*p));
            let x = map.map_point(*p);
            let ju = u.jet(e, x, *p);
            let jv = v.jet(e, x, *p);
            total += w
                * det
                * (ju.hess[0] * jv.hess[0]
                    + 2.0 * ju.hess[1] * jv.hess[1]
                    + ju.hess[2] * jv.hess[2]);
        }
    }
    Ok(total)
}

/// Face-intrinsic quantities of one side, derived from a jet.
struct SideQuantities {
    dn: f64,
    grad_t: Vec2,
    lap_t: f64,
    grad_t_dn: Vec2,
}

fn side_quantities(jet: &Jet2, frame: &geometry::FaceFrame, d2: Vec2) -> SideQuantities {
    let m = frame.metric;
    let tau = frame.tangent;
    let n = frame.normal;
    let d1 = [m * tau[0], m * tau[1]];
    let h = hess_full(&jet.hess);
    // g'(t) = grad . gamma', g'' = gamma'^T H gamma' + grad . gamma''.
    let gp = linalg::dot(jet.grad, d1);
    let mut gpp = linalg::dot(jet.grad, d2);
    for a in 0..2 {
        for b in 0..2 {
            gpp += d1[a] * h[a][b] * d1[b];
        }
    }
    let gt = gp / m;
    let lap_t = gpp / (m * m) - gp * linalg::dot(d1, d2) / (m * m * m * m);
    let hn_tau = tau[0] * (h[0][0] * n[0] + h[0][1] * n[1])
        + tau[1] * (h[1][0] * n[0] + h[1][1] * n[1]);
    let qt = hn_tau + frame.curvature * linalg::dot(jet.grad, tau);
    SideQuantities {
        dn: linalg::dot(jet.grad, n),
        grad_t: [gt * tau[0], gt * tau[1]],
        lap_t,
        grad_t_dn: [qt * tau[0], qt * tau[1]],
    }
}

/// Evaluate the five terms of C(u, v) over interior faces:
/// (tangential-Laplacian, curvature, tangential-gradient, first Q_F, second
/// Q_F). The form value is their sum.
pub fn eval_form_c_parts<U: ElementField, V: ElementField>(
    u: &U,
    v: &V,
    maps: &[CurvedMap],
    faces: &FaceSet,
    quad_degree: usize,
) -> Result<[f64; 5]> {
    let rule = edge_rule(quad_degree)?;
    let mut parts = [0.0; 5];
    for face in faces.faces.iter().filter(|f| !f.is_boundary()) {
        let (relem, redge) = face.right.unwrap();
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let lmap = &maps[face.left];
            let (_, _, d2) = lmap.edge_curve(face.left_edge, *t);
            let frame = geometry::face_frame(lmap, face.left_edge, *t)?;
            let wm = w * frame.metric;
            let lref = geometry::ref_edge_point(face.left_edge, *t);
            let rref = geometry::ref_edge_point(redge, 1.0 - *t);
            let x = frame.point;

            let ul = side_quantities(&u.jet(face.left, x, lref), &frame, d2);
            let ur = side_quantities(&u.jet(relem, x, rref), &frame, d2);
            let vl = side_quantities(&v.jet(face.left, x, lref), &frame, d2);
            let vr = side_quantities(&v.jet(relem, x, rref), &frame, d2);

            let avg_lap_t_u = 0.5 * (ul.lap_t + ur.lap_t);
            let avg_dn_u = 0.5 * (ul.dn + ur.dn);
            let avg_gtdn_u = [
                0.5 * (ul.grad_t_dn[0] + ur.grad_t_dn[0]),
                0.5 * (ul.grad_t_dn[1] + ur.grad_t_dn[1]),
            ];
            let avg_gt_u = [
                0.5 * (ul.grad_t[0] + ur.grad_t[0]),
                0.5 * (ul.grad_t[1] + ur.grad_t[1]),
            ];
            let jump_dn_v = vl.dn - vr.dn;
            let jump_gt_v = [vl.grad_t[0] - vr.grad_t[0], vl.grad_t[1] - vr.grad_t[1]];

            parts[0] += wm * avg_lap_t_u * jump_dn_v;
            parts[1] += wm * frame.curvature * avg_dn_u * jump_dn_v;
            parts[2] -= wm * linalg::dot(avg_gtdn_u, jump_gt_v);
            parts[3] += wm * q_form(&frame, avg_gt_u, jump_gt_v);
            let avg_dn_u_n = [avg_dn_u * frame.normal[0], avg_dn_u * frame.normal[1]];
            parts[4] += wm * q_form(&frame, avg_dn_u_n, jump_gt_v);
        }
    }
    Ok(parts)
}

/// The curvature form C(u, v).
pub fn eval_form_c<U: ElementField, V: ElementField>(
    u: &U,
    v: &V,
    maps: &[CurvedMap],
    faces: &FaceSet,
    quad_degree: usize,
) -> Result<f64> {
    Ok(eval_form_c_parts(u, v, maps, faces, quad_degree)?.iter().sum())
}
