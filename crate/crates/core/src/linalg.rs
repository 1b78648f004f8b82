//! Small dense linear algebra: 2x2 helpers and a full-pivot solver for the
//! local (Vandermonde / mass) systems.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

/// z-component of the 2D cross product a x b.
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// Spectral (induced Euclidean) norm of a 2x2 matrix via the closed-form
/// largest singular value.
pub fn spectral_norm2(m: &Mat2) -> f64 {
    // Singular values from the eigenvalues of M^T M.
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// Dense n x n matrix in row-major order.
#[derive(Clone)]
pub struct DenseMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(n: usize) -> Self {
        DenseMat { n, a: vec![0.0; n * n] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }
}

/// Solve A X = B for several right-hand sides with full-pivot Gaussian
/// elimination. `b` holds the right-hand sides column-major-free: it is a
/// list of columns. Returns the solution columns in the same layout.
pub fn solve_full_pivot(a: &DenseMat, b: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.n;
    let mut m = a.a.clone();
    let mut rhs: Vec<Vec<f64>> = b.to_vec();
    let mut col_perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // Full pivot over the trailing submatrix.
        let (mut pi, mut pj, mut pmax) = (k, k, 0.0f64);
        for i in k..n {
            for j in k..n {
                let v = m[i * n + j].abs();
                if v > pmax {
                    pmax = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if pmax == 0.0 {
            return None;
        }
        if pi != k {
            for j in 0..n {
                m.swap(k * n + j, pi * n + j);
            }
            for r in rhs.iter_mut() {
                r.swap(k, pi);
            }
        }
        if pj != k {
            for i in 0..n {
                m.swap(i * n + k, i * n + pj);
            }
            col_perm.swap(k, pj);
        }
        let piv = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / piv;
            if f == 0.0 {
                continue;
            }
            m[i * n + k] = 0.0;
            for j in (k + 1)..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            for r in rhs.iter_mut() {
                r[i] -= f * r[k];
            }
        }
    }

    let mut out = vec![vec![0.0; n]; rhs.len()];
    for (r, o) in rhs.iter().zip(out.iter_mut()) {
        let mut y = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = r[k];
            for j in (k + 1)..n {
                s -= m[k * n + j] * y[j];
            }
            y[k] = s / m[k * n + k];
        }
        // Undo the column permutation.
        for k in 0..n {
            o[col_perm[k]] = y[k];
        }
    }
    Some(out)
}

/// Cholesky factorization in place; returns the lower factor or None if the
/// matrix is not positive definite.
pub fn cholesky(a: &DenseMat) -> Option<DenseMat> {
    let n = a.n;
    let mut l = DenseMat::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.at(j, j));
            }
        }
    }
    Some(l)
}

/// Solve L L^T x = b given a Cholesky factor.
pub fn cholesky_solve(l: &DenseMat, b: &[f64], x: &mut [f64]) {
    let n = l.n;
    // Forward substitution into x, then backward in place.
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.at(i, k) * x[k];
        }
        x[i] = s / l.at(i, i);
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l.at(k, i) * x[k];
        }
        x[i] = s / l.at(i, i);
    }
}
