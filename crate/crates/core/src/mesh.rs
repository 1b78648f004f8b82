//! Triangulations of curved 2D domains: generation, file I/O, face
//! connectivity, boundary curving and size metrics.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::CurvedMap;
use crate::linalg::{self, Vec2};

/// Boundary edge with an integer marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub verts: [usize; 2],
    pub marker: i32,
}

/// Straight triangulation. Triangles are stored counter-clockwise; every
/// boundary edge belongs to exactly one triangle.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// One face of the mesh. `verts` is ordered so that traversing the face from
/// `verts[0]` to `verts[1]` runs counter-clockwise around the left element;
/// the fixed face normal is the -90 degree rotation of that direction and
/// points out of the left element.
#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub verts: [usize; 2],
    /// Owning element and its local edge index (0..3).
    pub left: usize,
    pub left_edge: usize,
    /// Neighbor element and its local edge index; None on the boundary.
    pub right: Option<(usize, usize)>,
    /// Marker of the boundary edge, 0 for interior faces.
    pub marker: i32,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Face connectivity of a mesh.
#[derive(Debug, Clone)]
pub struct FaceSet {
    pub faces: Vec<Face>,
    pub n_interior: usize,
    pub n_boundary: usize,
}

/// Per-element and per-face size quantities.
#[derive(Debug, Clone)]
pub struct MeshMetrics {
    /// Diameter of the associated straight simplex (longest edge).
    pub h: Vec<f64>,
    /// Inscribed-circle diameter of the straight simplex.
    pub rho: Vec<f64>,
    /// Nonlinearity constant of the curved map, 0 for affine elements.
    pub c_k: Vec<f64>,
    /// Face size: min of the incident element diameters.
    pub h_face: Vec<f64>,
    /// Shape regularity: max over elements of h_K / rho_K.
    pub sigma: f64,
    /// Max over interior faces of max(h_K, h_K') / min(h_K, h_K').
    pub c_t: f64,
    /// Max over elements of h_K.
    pub h_max: f64,
}

fn signed_area(v0: Vec2, v1: Vec2, v2: Vec2) -> f64 {
    0.5 * linalg::cross(linalg::sub(v1, v0), linalg::sub(v2, v0))
}

impl Mesh {
    /// Check the structural invariants: index ranges, orientation, and the
    /// boundary-edge/triangle-edge correspondence.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (e, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= nv {
                    return Err(Error::InvalidParameter(format!(
                        "triangle {e} references vertex {v} of {nv}"
                    )));
                }
            }
            let a = signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            if a <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "triangle {e} has nonpositive signed area {a}"
                )));
            }
        }
        for be in &self.boundary_edges {
            for &v in &be.verts {
                if v >= nv {
                    return Err(Error::InvalidParameter(format!(
                        "boundary edge references vertex {v} of {nv}"
                    )));
                }
            }
        }
        // Edge multiplicities must match the boundary list.
        let mut mult: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *mult.entry(key).or_insert(0) += 1;
            }
        }
        for (key, m) in &mult {
            if *m > 2 {
                return Err(Error::NonManifold(format!(
                    "edge {key:?} belongs to {m} triangles"
                )));
            }
        }
        let mut marked: HashMap<(usize, usize), usize> = HashMap::new();
        for be in &self.boundary_edges {
            let key = (be.verts[0].min(be.verts[1]), be.verts[0].max(be.verts[1]));
            *marked.entry(key).or_insert(0) += 1;
        }
        for (key, c) in &marked {
            if *c > 1 {
                return Err(Error::InvalidParameter(format!(
                    "boundary edge {key:?} listed {c} times"
                )));
            }
            match mult.get(key) {
                Some(1) => {}
                Some(m) => {
                    return Err(Error::InvalidParameter(format!(
                        "boundary edge {key:?} belongs to {m} triangles"
                    )))
                }
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "boundary edge {key:?} is not a triangle edge"
                    )))
                }
            }
        }
        for (key, m) in &mult {
            if *m == 1 && !marked.contains_key(key) {
                return Err(Error::InvalidParameter(format!(
                    "edge {key:?} lies on the boundary but is not listed"
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic ring-based triangulation of the unit disk.
///
/// Concentric rings at radii i/n for n = max(2, round(1/target_h)); ring i
/// carries 6i equally spaced vertices. Each annulus is filled sector by
/// sector with a zigzag strip, giving 6n^2 triangles total.
pub fn generate_disk_mesh(target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    let n = ((1.0 / target_h).round() as i64).max(2) as usize;

    let mut vertices: Vec<Vec2> = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; n + 1]; // index of first vertex of ring i
    for i in 1..=n {
        ring_start[i] = vertices.len();
        let count = 6 * i;
        let r = i as f64 / n as f64;
        for j in 0..count {
            let th = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }

    let ring_vertex = |i: usize, j: usize| -> usize {
        if i == 0 {
            0
        } else {
            ring_start[i] + j % (6 * i)
        }
    };

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(6 * n * n);
    for i in 1..=n {
        for s in 0..6 {
            // Sector s of the annulus between ring i-1 and ring i. The inner
            // row has i vertices (inclusive), the outer row i+1.
            let inner = |k: usize| ring_vertex(i - 1, s * (i - 1) + k);
            let outer = |k: usize| ring_vertex(i, s * i + k);
            for k in 0..i {
                triangles.push([outer(k), outer(k + 1), inner(k)]);
            }
            for k in 0..i.saturating_sub(1) {
                triangles.push([inner(k), outer(k + 1), inner(k + 1)]);
            }
        }
    }

    let mut boundary_edges = Vec::with_capacity(6 * n);
    for j in 0..6 * n {
        boundary_edges.push(BoundaryEdge {
            verts: [ring_vertex(n, j), ring_vertex(n, j + 1)],
            marker: 1,
        });
    }

    let mesh = Mesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Read a mesh from the text format:
/// `nodes N` / N lines `x y` / `triangles M` / M lines `v0 v1 v2` /
/// `boundary_edges B` / B lines `v0 v1 marker`. Lines starting with `#` are
/// skipped. Clockwise triangles are reoriented.
pub fn load_mesh<R: BufRead>(reader: R) -> Result<Mesh> {
    struct Lines {
        items: Vec<(usize, String)>,
        pos: usize,
    }
    impl Lines {
        fn next(&mut self) -> Option<(usize, &str)> {
            while self.pos < self.items.len() {
                let (no, s) = &self.items[self.pos];
                self.pos += 1;
                let t = s.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                return Some((*no, t));
            }
            None
        }
    }

    let mut items = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        items.push((k + 1, line?));
    }
    let mut lines = Lines { items, pos: 0 };

    fn expect_header(lines: &mut Lines, name: &str) -> Result<usize> {
        let (no, t) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("missing `{name}` section"),
        })?;
        let mut parts = t.split_whitespace();
        let head = parts.next().unwrap_or("");
        if head != name {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected `{name}` header, found `{head}`"),
            });
        }
        let count: usize = parts
            .next()
            .ok_or(Error::Parse { line: no, msg: format!("`{name}` count missing") })?
            .parse()
            .map_err(|_| Error::Parse { line: no, msg: format!("bad `{name}` count") })?;
        if parts.next().is_some() {
            return Err(Error::Parse { line: no, msg: format!("trailing tokens after `{name}`") });
        }
        Ok(count)
    }

    fn numbers<const K: usize>(lines: &mut Lines, what: &str) -> Result<(usize, [f64; K])> {
        let (no, t) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("unexpected end of file in {what}"),
        })?;
        let mut out = [0.0; K];
        let mut parts = t.split_whitespace();
        for slot in out.iter_mut() {
            let tok = parts
                .next()
                .ok_or(Error::Parse { line: no, msg: format!("short {what} line") })?;
            *slot = tok
                .parse()
                .map_err(|_| Error::Parse { line: no, msg: format!("bad number `{tok}`") })?;
        }
        if parts.next().is_some() {
            return Err(Error::Parse { line: no, msg: format!("trailing tokens in {what}") });
        }
        Ok((no, out))
    }

    let nv = expect_header(&mut lines, "nodes")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (_, xy) = numbers::<2>(&mut lines, "nodes")?;
        vertices.push(xy);
    }

    let nt = expect_header(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, v) = numbers::<3>(&mut lines, "triangles")?;
        let mut idx = [0usize; 3];
        for (k, x) in v.iter().enumerate() {
            if *x < 0.0 || x.fract() != 0.0 || *x >= nv as f64 {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("vertex index {x} out of range 0..{nv}"),
                });
            }
            idx[k] = *x as usize;
        }
        // Normalize orientation.
        if signed_area(vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]) < 0.0 {
            idx.swap(1, 2);
        }
        triangles.push(idx);
    }

    let nb = expect_header(&mut lines, "boundary_edges")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for _ in 0..nb {
        let (no, v) = numbers::<3>(&mut lines, "boundary_edges")?;
        for x in &v[..2] {
            if *x < 0.0 || x.fract() != 0.0 || *x >= nv as f64 {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("vertex index {x} out of range 0..{nv}"),
                });
            }
        }
        let a = v[0] as usize;
        let b = v[1] as usize;
        let key = (a.min(b), a.max(b));
        if let Some(prev) = seen.insert(key, no) {
            return Err(Error::Parse {
                line: no,
                msg: format!("duplicate boundary edge (also at line {prev})"),
            });
        }
        boundary_edges.push(BoundaryEdge { verts: [a, b], marker: v[2] as i32 });
    }

    let mesh = Mesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Write a mesh in the text format read by [`load_mesh`].
pub fn write_mesh<W: Write>(mesh: &Mesh, w: &mut W) -> Result<()> {
    writeln!(w, "nodes {}", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
    }
    writeln!(w, "triangles {}", mesh.triangles.len())?;
    for t in &mesh.triangles {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "boundary_edges {}", mesh.boundary_edges.len())?;
    for be in &mesh.boundary_edges {
        writeln!(w, "{} {} {}", be.verts[0], be.verts[1], be.marker)?;
    }
    Ok(())
}

/// Classify every triangle edge as interior or boundary.
pub fn build_connectivity(mesh: &Mesh) -> Result<FaceSet> {
    mesh.validate()?;
    let marker_of: HashMap<(usize, usize), i32> = mesh
        .boundary_edges
        .iter()
        .map(|be| ((be.verts[0].min(be.verts[1]), be.verts[0].max(be.verts[1])), be.marker))
        .collect();

    let mut first: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut faces = Vec::new();
    // Deterministic order: elements ascending, local edges 0,1,2.
    for (e, t) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match first.remove(&key) {
                None => {
                    first.insert(key, (e, k));
                }
                Some((e0, k0)) => {
                    faces.push(Face {
                        verts: [mesh.triangles[e0][k0], mesh.triangles[e0][(k0 + 1) % 3]],
                        left: e0,
                        left_edge: k0,
                        right: Some((e, k)),
                        marker: 0,
                    });
                }
            }
        }
    }
    let mut boundary: Vec<Face> = first
        .into_iter()
        .map(|(key, (e, k))| {
            let verts = [mesh.triangles[e][k], mesh.triangles[e][(k + 1) % 3]];
            let marker = *marker_of.get(&key).expect("validated boundary edge");
            Face { verts, left: e, left_edge: k, right: None, marker }
        })
        .collect();
    boundary.sort_by_key(|f| (f.left, f.left_edge));
    let n_interior = faces.len();
    let n_boundary = boundary.len();
    faces.extend(boundary);

    debug_assert_eq!(3 * mesh.triangles.len(), 2 * n_interior + n_boundary);
    Ok(FaceSet { faces, n_interior, n_boundary })
}

/// Build the per-element P2 geometry maps, snapping boundary-edge midpoints
/// onto the chart. Interior geometry nodes are left untouched, so elements
/// without a boundary edge stay affine.
pub fn curve_boundary<C>(mesh: &Mesh, chart: C) -> Result<Vec<CurvedMap>>
where
    C: Fn(Vec2) -> Option<Vec2>,
{
    let boundary: std::collections::HashSet<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .map(|be| (be.verts[0].min(be.verts[1]), be.verts[0].max(be.verts[1])))
        .collect();

    let mut maps = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let vs = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let mut nodes = [[0.0; 2]; 6];
        nodes[..3].copy_from_slice(&vs);
        for (m, (i, j)) in [(3usize, (0usize, 1usize)), (4, (1, 2)), (5, (2, 0))] {
            let mid = [0.5 * (vs[i][0] + vs[j][0]), 0.5 * (vs[i][1] + vs[j][1])];
            let key = (t[i].min(t[j]), t[i].max(t[j]));
            nodes[m] = if boundary.contains(&key) {
                chart(mid).ok_or_else(|| {
                    Error::Geometry(format!("chart evaluation failed at ({}, {})", mid[0], mid[1]))
                })?
            } else {
                mid
            };
        }
        maps.push(CurvedMap::new(nodes));
    }
    Ok(maps)
}

/// Chart of the unit circle: radial projection. Fails at the origin.
pub fn disk_chart(x: Vec2) -> Option<Vec2> {
    let r = linalg::norm(x);
    if r <= 1e-14 {
        return None;
    }
    Some([x[0] / r, x[1] / r])
}

/// Sample points at which the nonlinearity constant is estimated. `D Phi_K`
/// is affine for P2 maps, so its norm is maximized at the vertices; the
/// interior points are a safety net.
const CK_SAMPLES: [[f64; 2]; 10] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
    [1.0 / 3.0, 1.0 / 3.0],
    [0.2, 0.2],
    [0.6, 0.2],
    [0.2, 0.6],
];

/// Compute element and face size metrics for a curved mesh.
pub fn mesh_metrics(mesh: &Mesh, faces: &FaceSet, maps: &[CurvedMap]) -> Result<MeshMetrics> {
    let ne = mesh.triangles.len();
    let mut h = vec![0.0; ne];
    let mut rho = vec![0.0; ne];
    let mut c_k = vec![0.0; ne];
    let mut sigma: f64 = 0.0;

    for (e, t) in mesh.triangles.iter().enumerate() {
        let v = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let l0 = linalg::norm(linalg::sub(v[1], v[0]));
        let l1 = linalg::norm(linalg::sub(v[2], v[1]));
        let l2 = linalg::norm(linalg::sub(v[0], v[2]));
        h[e] = l0.max(l1).max(l2);
        let area = signed_area(v[0], v[1], v[2]);
        let s = 0.5 * (l0 + l1 + l2);
        rho[e] = 2.0 * area / s;
        sigma = sigma.max(h[e] / rho[e]);

        let map = &maps[e];
        if map.curved {
            let b_inv = linalg::inv2(&map.b_mat);
            let mut ck: f64 = 0.0;
            for p in CK_SAMPLES {
                let df = map.jacobian(p);
                let mut dphi = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        dphi[i][j] = df[i][j] - map.b_mat[i][j];
                    }
                }
                // D Phi_K * B_K^{-1}
                let mut m = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = dphi[i][0] * b_inv[0][j] + dphi[i][1] * b_inv[1][j];
                    }
                }
                ck = ck.max(linalg::spectral_norm2(&m));
            }
            if ck >= 1.0 {
                return Err(Error::InvalidCurvedElement { elem: e, c_k: ck });
            }
            c_k[e] = ck;
        }
    }

    let mut h_face = Vec::with_capacity(faces.faces.len());
    let mut c_t: f64 = 1.0;
    for f in &faces.faces {
        match f.right {
            Some((r, _)) => {
                let (ha, hb) = (h[f.left], h[r]);
                h_face.push(ha.min(hb));
                c_t = c_t.max(ha.max(hb) / ha.min(hb));
            }
            None => h_face.push(h[f.left]),
        }
    }

    let h_max = h.iter().cloned().fold(0.0, f64::max);
    Ok(MeshMetrics { h, rho, c_k, h_face, sigma, c_t, h_max })
}

/// A fully prepared discretization level: mesh, connectivity, curved maps
/// and size metrics.
#[derive(Debug, Clone)]
pub struct MeshLevel {
    pub mesh: Mesh,
    pub faces: FaceSet,
    pub maps: Vec<CurvedMap>,
    pub metrics: MeshMetrics,
}

impl MeshLevel {
    /// Generate a disk level at the given target size with the circle chart.
    pub fn disk(target_h: f64) -> Result<MeshLevel> {
        let mesh = generate_disk_mesh(target_h)?;
        MeshLevel::from_mesh(mesh, disk_chart)
    }

    /// Curve an existing mesh with a chart and compute connectivity/metrics.
    pub fn from_mesh<C>(mesh: Mesh, chart: C) -> Result<MeshLevel>
    where
        C: Fn(Vec2) -> Option<Vec2>,
    {
        let faces = build_connectivity(&mesh)?;
        let maps = curve_boundary(&mesh, chart)?;
        let metrics = mesh_metrics(&mesh, &faces, &maps)?;
        Ok(MeshLevel { mesh, faces, maps, metrics })
    }

    pub fn n_elems(&self) -> usize {
        self.mesh.triangles.len()
    }
}

/// Convenience: single triangle (0,0)-(1,0)-(0,1).
#[cfg(test)]
pub fn unit_triangle_mesh() -> Mesh {
    Mesh {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        triangles: vec![[0, 1, 2]],
        boundary_edges: vec![
            BoundaryEdge { verts: [0, 1], marker: 1 },
            BoundaryEdge { verts: [1, 2], marker: 1 },
            BoundaryEdge { verts: [2, 0], marker: 1 },
        ],
    }
}

/// Convenience: unit square split along the diagonal.
#[cfg(test)]
pub fn two_triangle_mesh() -> Mesh {
    Mesh {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        boundary_edges: vec![
            BoundaryEdge { verts: [0, 1], marker: 1 },
            BoundaryEdge { verts: [1, 2], marker: 1 },
            BoundaryEdge { verts: [2, 3], marker: 1 },
            BoundaryEdge { verts: [3, 0], marker: 1 },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::BufReader;

    #[test]
    fn disk_mesh_two_rings_has_boundary_on_circle() {
        let mesh = generate_disk_mesh(0.6).unwrap();
        // n = 2: 1 + 6 + 12 vertices, 24 triangles.
        assert_eq!(mesh.vertices.len(), 19);
        assert_eq!(mesh.triangles.len(), 24);
        for be in &mesh.boundary_edges {
            for &v in &be.verts {
                let r = linalg::norm(mesh.vertices[v]);
                assert!((r - 1.0).abs() < 1e-14);
            }
        }
        for v in &mesh.vertices {
            assert!(linalg::norm(*v) <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn disk_mesh_rejects_bad_target() {
        assert!(generate_disk_mesh(0.0).is_err());
        assert!(generate_disk_mesh(-0.3).is_err());
    }

    #[test]
    fn disk_mesh_size_and_shape_regularity() {
        let mesh = generate_disk_mesh(0.1).unwrap();
        let faces = build_connectivity(&mesh).unwrap();
        let maps = curve_boundary(&mesh, disk_chart).unwrap();
        let m = mesh_metrics(&mesh, &faces, &maps).unwrap();
        assert!(m.sigma <= 4.0, "sigma = {}", m.sigma);
        assert!(m.h_max >= 0.05 && m.h_max <= 0.2, "h_max = {}", m.h_max);
    }

    #[test]
    fn connectivity_counts() {
        let faces = build_connectivity(&unit_triangle_mesh()).unwrap();
        assert_eq!(faces.n_interior, 0);
        assert_eq!(faces.n_boundary, 3);

        let faces = build_connectivity(&two_triangle_mesh()).unwrap();
        assert_eq!(faces.n_interior, 1);
        assert_eq!(faces.n_boundary, 4);
    }

    proptest! {
        #[test]
        fn handshake_identity_on_generated_meshes(inv_h in 1.5f64..16.0) {
            let mesh = generate_disk_mesh(1.0 / inv_h).unwrap();
            let faces = build_connectivity(&mesh).unwrap();
            prop_assert_eq!(
                3 * mesh.triangles.len(),
                2 * faces.n_interior + faces.n_boundary
            );
        }
    }

    #[test]
    fn load_single_triangle() {
        let text = "# comment\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 3\n0 1 1\n1 2 1\n2 0 1\n";
        let mesh = load_mesh(BufReader::new(text.as_bytes())).unwrap();
        assert_eq!(mesh.triangles.len(), 1);
    }

    #[test]
    fn load_normalizes_clockwise_triangle() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\nboundary_edges 3\n0 1 1\n1 2 1\n2 0 1\n";
        let mesh = load_mesh(BufReader::new(text.as_bytes())).unwrap();
        let t = mesh.triangles[0];
        let a = signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        assert!(a > 0.0);
    }

    #[test]
    fn load_reports_bad_index_with_line() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 1\n0 99 1\n";
        match load_mesh(BufReader::new(text.as_bytes())) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_boundary_edge() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 4\n0 1 1\n1 2 1\n2 0 1\n1 0 1\n";
        assert!(matches!(
            load_mesh(BufReader::new(text.as_bytes())),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn load_rejects_bad_header() {
        let text = "vertices 3\n";
        assert!(matches!(
            load_mesh(BufReader::new(text.as_bytes())),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn mesh_roundtrip_through_text() {
        let mesh = generate_disk_mesh(0.4).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = load_mesh(BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn curve_boundary_moves_only_boundary_midpoints() {
        let mesh = generate_disk_mesh(0.5).unwrap();
        let maps = curve_boundary(&mesh, disk_chart).unwrap();
        let boundary: std::collections::HashSet<(usize, usize)> = mesh
            .boundary_edges
            .iter()
            .map(|be| (be.verts[0].min(be.verts[1]), be.verts[0].max(be.verts[1])))
            .collect();
        for (e, t) in mesh.triangles.iter().enumerate() {
            let map = &maps[e];
            let has_boundary_edge = (0..3)
                .any(|k| boundary.contains(&(t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))));
            if !has_boundary_edge {
                assert!(!map.curved, "interior element {e} should be affine");
            }
            for (m, (i, j)) in [(3usize, (0usize, 1usize)), (4, (1, 2)), (5, (2, 0))] {
                let key = (t[i].min(t[j]), t[i].max(t[j]));
                if boundary.contains(&key) {
                    let r = linalg::norm(map.nodes[m]);
                    assert!((r - 1.0).abs() < 1e-14, "snapped node off circle: {r}");
                } else {
                    let mid = [
                        0.5 * (mesh.vertices[t[i]][0] + mesh.vertices[t[j]][0]),
                        0.5 * (mesh.vertices[t[i]][1] + mesh.vertices[t[j]][1]),
                    ];
                    assert_eq!(map.nodes[m], mid);
                }
            }
        }
    }

    #[test]
    fn chart_failure_is_reported() {
        // A mesh whose boundary midpoint lands on the origin.
        let mesh = Mesh {
            vertices: vec![[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                BoundaryEdge { verts: [0, 1], marker: 1 },
                BoundaryEdge { verts: [1, 2], marker: 1 },
                BoundaryEdge { verts: [2, 0], marker: 1 },
            ],
        };
        assert!(matches!(
            curve_boundary(&mesh, disk_chart),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn metrics_of_right_triangle() {
        let mesh = unit_triangle_mesh();
        let faces = build_connectivity(&mesh).unwrap();
        let maps = vec![CurvedMap::affine([0.0, 0.0], [1.0, 0.0], [0.0, 1.0])];
        let m = mesh_metrics(&mesh, &faces, &maps).unwrap();
        let sqrt2 = 2.0f64.sqrt();
        assert!((m.h[0] - sqrt2).abs() < 1e-14);
        assert!((m.rho[0] - (2.0 - sqrt2)).abs() < 1e-14);
        assert!((m.sigma - sqrt2 / (2.0 - sqrt2)).abs() < 1e-12);
        assert_eq!(m.c_k[0], 0.0);
    }

    #[test]
    fn face_size_is_min_of_incident_diameters() {
        // Two triangles of different size sharing an edge.
        let mesh = Mesh {
            vertices: vec![[0.0, 0.0], [0.5, 0.0], [0.0, 0.3], [0.5, -0.4]],
            triangles: vec![[0, 1, 2], [0, 3, 1]],
            boundary_edges: vec![
                BoundaryEdge { verts: [1, 2], marker: 1 },
                BoundaryEdge { verts: [2, 0], marker: 1 },
                BoundaryEdge { verts: [0, 3], marker: 1 },
                BoundaryEdge { verts: [3, 1], marker: 1 },
            ],
        };
        let faces = build_connectivity(&mesh).unwrap();
        let maps = curve_boundary(&mesh, |x| Some(x)).unwrap();
        let m = mesh_metrics(&mesh, &faces, &maps).unwrap();
        let shared = faces
            .faces
            .iter()
            .position(|f| !f.is_boundary())
            .unwrap();
        assert!((m.h_face[shared] - m.h[0].min(m.h[1])).abs() < 1e-15);
        for (f, hf) in faces.faces.iter().zip(&m.h_face) {
            let mut bound = m.h[f.left];
            if let Some((r, _)) = f.right {
                bound = bound.min(m.h[r]);
            }
            assert!(*hf <= bound + 1e-15);
        }
    }

    #[test]
    fn curved_disk_levels_have_decreasing_ck_and_bounded_ct() {
        let mut prev_max_ck = f64::INFINITY;
        for target in [0.5, 0.25, 0.125, 0.0625] {
            let mesh = generate_disk_mesh(target).unwrap();
            let faces = build_connectivity(&mesh).unwrap();
            let maps = curve_boundary(&mesh, disk_chart).unwrap();
            let m = mesh_metrics(&mesh, &faces, &maps).unwrap();
            let max_ck = m.c_k.iter().cloned().fold(0.0, f64::max);
            assert!(max_ck < 1.0);
            assert!(max_ck < prev_max_ck, "C_K should decrease under refinement");
            assert!(m.c_t <= 3.0, "C_T = {}", m.c_t);
            assert!(m.sigma <= 4.0, "sigma = {}", m.sigma);
            prev_max_ck = max_ck;
        }
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let mesh = Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.5]],
            triangles: vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]],
            boundary_edges: vec![],
        };
        assert!(matches!(build_connectivity(&mesh), Err(Error::NonManifold(_))));
    }
}
