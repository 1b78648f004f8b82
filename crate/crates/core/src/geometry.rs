//! Curved (isoparametric P2) element maps and face frames.
//!
//! Every element carries a quadratic map `F_K` from the reference triangle
//! `{(x,y): x,y >= 0, x+y <= 1}` determined by six geometry nodes: the three
//! vertices plus the three edge midpoints. Writing `F_K = affine + Phi_K`,
//! the affine part is fixed by the vertices; `Phi_K` vanishes unless a
//! midpoint was moved onto the boundary chart. Because `F_K` is quadratic,
//! its second derivative is a constant tensor and its third derivative is
//! zero, which makes the derivatives of the inverse map exactly computable by
//! implicit differentiation of `F_K o F_K^{-1} = id`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Reference coordinates of the six P2 geometry nodes
/// (vertices then edge midpoints, edge k joining vertices k and k+1 mod 3).
pub const REF_NODES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

/// Point on reference edge `edge` at parameter `t in [0,1]`, running in the
/// element's counter-clockwise vertex order.
pub fn ref_edge_point(edge: usize, t: f64) -> Vec2 {
    match edge {
        0 => [t, 0.0],
        1 => [1.0 - t, t],
        2 => [0.0, 1.0 - t],
        _ => panic!("edge index out of range"),
    }
}

/// Constant direction vector of a reference edge (d/dt of `ref_edge_point`).
pub fn ref_edge_dir(edge: usize) -> Vec2 {
    match edge {
        0 => [1.0, 0.0],
        1 => [-1.0, 1.0],
        2 => [0.0, -1.0],
        _ => panic!("edge index out of range"),
    }
}

/// Quadratic geometry map of one element.
#[derive(Debug, Clone)]
pub struct CurvedMap {
    /// Geometry nodes: 3 vertices then 3 edge midpoints.
    pub nodes: [[f64; 2]; 6],
    /// Affine part `x` -> `b_mat x + b_vec` fixed by the vertices.
    pub b_mat: Mat2,
    pub b_vec: Vec2,
    /// Constant second derivative: `d2f[a][i][j] = d^2 F_a / dx_i dx_j`.
    pub d2f: [[[f64; 2]; 2]; 2],
    /// True if any midpoint differs from the vertex average (Phi_K != 0).
    pub curved: bool,
}

/// P2 shape function values at a reference point.
fn p2_shape(p: Vec2) -> [f64; 6] {
    let (x, y) = (p[0], p[1]);
    let l0 = 1.0 - x - y;
    [
        l0 * (2.0 * l0 - 1.0),
        x * (2.0 * x - 1.0),
        y * (2.0 * y - 1.0),
        4.0 * x * l0,
        4.0 * x * y,
        4.0 * y * l0,
    ]
}

/// P2 shape gradients at a reference point.
fn p2_shape_grad(p: Vec2) -> [[f64; 2]; 6] {
    let (x, y) = (p[0], p[1]);
    [
        [4.0 * (x + y) - 3.0, 4.0 * (x + y) - 3.0],
        [4.0 * x - 1.0, 0.0],
        [0.0, 4.0 * y - 1.0],
        [4.0 - 8.0 * x - 4.0 * y, -4.0 * x],
        [4.0 * y, 4.0 * x],
        [-4.0 * y, 4.0 - 4.0 * x - 8.0 * y],
    ]
}

/// Constant P2 shape Hessians: [node][xx, xy, yy].
const P2_SHAPE_HESS: [[f64; 3]; 6] = [
    [4.0, 4.0, 4.0],
    [4.0, 0.0, 0.0],
    [0.0, 0.0, 4.0],
    [-8.0, -4.0, 0.0],
    [0.0, 4.0, 0.0],
    [0.0, -4.0, -8.0],
];

impl CurvedMap {
    /// Build the map from six geometry nodes.
    pub fn new(nodes: [[f64; 2]; 6]) -> Self {
        let b_mat = [
            [nodes[1][0] - nodes[0][0], nodes[2][0] - nodes[0][0]],
            [nodes[1][1] - nodes[0][1], nodes[2][1] - nodes[0][1]],
        ];
        let b_vec = nodes[0];
        let mut d2f = [[[0.0; 2]; 2]; 2];
        let mut curved = false;
        for k in 0..6 {
            for a in 0..2 {
                d2f[a][0][0] += nodes[k][a] * P2_SHAPE_HESS[k][0];
                d2f[a][0][1] += nodes[k][a] * P2_SHAPE_HESS[k][1];
                d2f[a][1][0] += nodes[k][a] * P2_SHAPE_HESS[k][1];
                d2f[a][1][1] += nodes[k][a] * P2_SHAPE_HESS[k][2];
            }
        }
        for (m, (i, j)) in [(3, (0, 1)), (4, (1, 2)), (5, (2, 0))] {
            let mid = [
                0.5 * (nodes[i][0] + nodes[j][0]),
                0.5 * (nodes[i][1] + nodes[j][1]),
            ];
            if (nodes[m][0] - mid[0]).abs() > 1e-15 || (nodes[m][1] - mid[1]).abs() > 1e-15 {
                curved = true;
            }
        }
        if !curved {
            d2f = [[[0.0; 2]; 2]; 2];
        }
        CurvedMap { nodes, b_mat, b_vec, d2f, curved }
    }

    /// Affine map from the three vertices (midpoints at the averages).
    pub fn affine(v0: Vec2, v1: Vec2, v2: Vec2) -> Self {
        let mid = |a: Vec2, b: Vec2| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        CurvedMap::new([v0, v1, v2, mid(v0, v1), mid(v1, v2), mid(v2, v0)])
    }

    /// Evaluate the map at a reference point.
    pub fn map_point(&self, p: Vec2) -> Vec2 {
        let n = p2_shape(p);
        let mut x = [0.0; 2];
        for k in 0..6 {
            x[0] += n[k] * self.nodes[k][0];
            x[1] += n[k] * self.nodes[k][1];
        }
        x
    }

    /// Jacobian `DF` at a reference point.
    pub fn jacobian(&self, p: Vec2) -> Mat2 {
        if !self.curved {
            return self.b_mat;
        }
        let g = p2_shape_grad(p);
        let mut df = [[0.0; 2]; 2];
        for k in 0..6 {
            for a in 0..2 {
                df[a][0] += self.nodes[k][a] * g[k][0];
                df[a][1] += self.nodes[k][a] * g[k][1];
            }
        }
        df
    }

    /// Physical curve along a reference edge: position, first and second
    /// derivative with respect to the edge parameter `t`.
    pub fn edge_curve(&self, edge: usize, t: f64) -> (Vec2, Vec2, Vec2) {
        let rp = ref_edge_point(edge, t);
        let e = ref_edge_dir(edge);
        let pos = self.map_point(rp);
        let d1 = linalg::mat_vec(&self.jacobian(rp), e);
        let mut d2 = [0.0; 2];
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    d2[a] += self.d2f[a][i][j] * e[i] * e[j];
                }
            }
        }
        (pos, d1, d2)
    }

    /// Invert the map by Newton iteration. Returns the reference point, or
    /// None if the iteration leaves the search region or stalls.
    pub fn invert_point(&self, x: Vec2, guess: Vec2) -> Option<Vec2> {
        let mut r = guess;
        for _ in 0..60 {
            let f = self.map_point(r);
            let res = [x[0] - f[0], x[1] - f[1]];
            if res[0].abs() + res[1].abs() < 1e-14 {
                return Some(r);
            }
            let inv = linalg::inv2(&self.jacobian(r));
            let step = linalg::mat_vec(&inv, res);
            r = [r[0] + step[0], r[1] + step[1]];
            if r[0] < -1.0 || r[1] < -1.0 || r[0] + r[1] > 3.0 {
                return None;
            }
        }
        None
    }
}

/// Derivatives of `F_K` and of its inverse at one reference point.
///
/// `inv_d1/inv_d2/inv_d3` are the derivatives of `G = F_K^{-1}` evaluated at
/// the image point `F_K(ref)`; index layout `inv_d2[a][i][j] = d^2 G_a /
/// dx_i dx_j`.
#[derive(Debug, Clone)]
pub struct MapDerivatives {
    pub df: Mat2,
    pub det: f64,
    pub df_inv: Mat2,
    pub d2f: [[[f64; 2]; 2]; 2],
    pub inv_d1: Mat2,
    pub inv_d2: [[[f64; 2]; 2]; 2],
    pub inv_d3: [[[[f64; 2]; 2]; 2]; 2],
}

/// Compute map derivatives at `ref_point`, including derivatives of the
/// inverse map up to order three.
///
/// Differentiating `F(G(x)) = x` once gives `DG = DF^{-1}`; differentiating
/// again (and once more, using `D^3 F = 0` for quadratic maps) gives the
/// closed forms assembled below.
pub fn map_derivatives(map: &CurvedMap, ref_point: Vec2) -> Result<MapDerivatives> {
    let df = map.jacobian(ref_point);
    let det = linalg::det2(&df);
    let scale = linalg::spectral_norm2(&map.b_mat);
    if det <= 1e-14 * scale * scale {
        return Err(Error::DegenerateMap { det });
    }
    let df_inv = linalg::inv2(&df);
    let g1 = df_inv; // DG at the image point

    let mut inv_d2 = [[[0.0; 2]; 2]; 2];
    if map.curved {
        // G_{b,ij} = -DG_{ba} * d2F_{a,cd} G_{c,i} G_{d,j}
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for a in 0..2 {
                        let mut t = 0.0;
                        for c in 0..2 {
                            for d in 0..2 {
                                t += map.d2f[a][c][d] * g1[c][i] * g1[d][j];
                            }
                        }
                        s += g1[b][a] * t;
                    }
                    inv_d2[b][i][j] = -s;
                }
            }
        }
    }

    let mut inv_d3 = [[[[0.0; 2]; 2]; 2]; 2];
    if map.curved {
        // G_{b,ijk} = -DG_{ba} * d2F_{a,cd} (G_{c,ij} G_{d,k}
        //             + G_{c,ik} G_{d,j} + G_{c,jk} G_{d,i})
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let mut s = 0.0;
                        for a in 0..2 {
                            let mut t = 0.0;
                            for c in 0..2 {
                                for d in 0..2 {
                                    t += map.d2f[a][c][d]
                                        * (inv_d2[c][i][j] * g1[d][k]
                                            + inv_d2[c][i][k] * g1[d][j]
                                            + inv_d2[c][j][k] * g1[d][i]);
                                }
                            }
                            s += g1[b][a] * t;
                        }
                        inv_d3[b][i][j][k] = -s;
                    }
                }
            }
        }
    }

    Ok(MapDerivatives {
        df,
        det,
        df_inv,
        d2f: map.d2f,
        inv_d1: g1,
        inv_d2,
        inv_d3,
    })
}

/// Geometric frame of a face at one quadrature point.
///
/// The normal is the -90 degree rotation of the unit tangent, which points
/// out of the element whose counter-clockwise edge orientation defines the
/// curve. The shape operator of a plane curve is `H tau tau^T`, so it is
/// stored through the scalar curvature alone.
#[derive(Debug, Clone, Copy)]
pub struct FaceFrame {
    /// Physical point on the face.
    pub point: Vec2,
    /// Unit tangent along the face orientation.
    pub tangent: Vec2,
    /// Unit normal, outward from the left element.
    pub normal: Vec2,
    /// |gamma'(t)|, the length of one unit of reference parameter.
    pub metric: f64,
    /// Mean curvature `H_F = div_T n_F`; zero on straight faces.
    pub curvature: f64,
}

/// Build a frame from a curve point with first and second derivatives.
pub fn frame_from_curve(pos: Vec2, d1: Vec2, d2: Vec2) -> Result<FaceFrame> {
    let metric = linalg::norm(d1);
    if metric <= 1e-14 {
        return Err(Error::DegenerateFace { metric });
    }
    let tangent = linalg::scale(d1, 1.0 / metric);
    let normal = [tangent[1], -tangent[0]];
    // Signed curvature of the parameterized curve. With n = rot(-90) tau this
    // equals div_T n_F.
    let curvature = linalg::cross(d1, d2) / (metric * metric * metric);
    Ok(FaceFrame { point: pos, tangent, normal, metric, curvature })
}

/// Frame of the face curve `gamma(t) = F_K(reference edge(t))` at `t`.
pub fn face_frame(map: &CurvedMap, edge: usize, t: f64) -> Result<FaceFrame> {
    let (pos, d1, d2) = map.edge_curve(edge, t);
    frame_from_curve(pos, d1, d2)
}

/// Quadratic form `xi1^T (grad_T n_F^T) xi2` with the frame's shape operator
/// `H tau tau^T`.
pub fn q_form(frame: &FaceFrame, xi1: Vec2, xi2: Vec2) -> f64 {
    frame.curvature * linalg::dot(xi1, frame.tangent) * linalg::dot(xi2, frame.tangent)
}
