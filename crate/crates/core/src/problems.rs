//! Manufactured solutions on the unit disk and their right-hand sides.
//!
//! Both solutions are radial in s = x^2 + y^2, which keeps the homogeneous
//! boundary data exact on the circle: `u1 = sin(pi s)/4` vanishes at s = 1,
//! and `u2 = sin^2(pi s)` vanishes there together with its gradient, as the
//! clamped-plate problem requires.

use crate::linalg::Vec2;

/// Value, gradient and Hessian of a smooth function at a point.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec2,
    /// (xx, xy, yy)
    pub hess: [f64; 3],
}

fn radial_jet(x: Vec2, g: f64, g1: f64, g2: f64) -> Jet2 {
    // For u = g(s), s = |x|^2: grad = 2 g' x, hess_ij = 2 g' delta_ij
    // + 4 g'' x_i x_j.
    Jet2 {
        value: g,
        grad: [2.0 * g1 * x[0], 2.0 * g1 * x[1]],
        hess: [
            2.0 * g1 + 4.0 * g2 * x[0] * x[0],
            4.0 * g2 * x[0] * x[1],
            2.0 * g1 + 4.0 * g2 * x[1] * x[1],
        ],
    }
}

/// Poisson solution u1 = sin(pi (x^2+y^2)) / 4.
pub fn poisson_solution(x: Vec2) -> Jet2 {
    let s = x[0] * x[0] + x[1] * x[1];
    let pi = std::f64::consts::PI;
    let g = 0.25 * (pi * s).sin();
    let g1 = 0.25 * pi * (pi * s).cos();
    let g2 = -0.25 * pi * pi * (pi * s).sin();
    radial_jet(x, g, g1, g2)
}

/// Poisson right-hand side f = -Delta u1 = pi^2 s sin(pi s) - pi cos(pi s).
pub fn poisson_rhs(x: Vec2) -> f64 {
    let s = x[0] * x[0] + x[1] * x[1];
    let pi = std::f64::consts::PI;
    pi * pi * s * (pi * s).sin() - pi * (pi * s).cos()
}

/// Biharmonic solution u2 = sin^2(pi (x^2+y^2)).
pub fn biharmonic_solution(x: Vec2) -> Jet2 {
    let s = x[0] * x[0] + x[1] * x[1];
    let pi = std::f64::consts::PI;
    let g = (pi * s).sin().powi(2);
    let g1 = pi * (2.0 * pi * s).sin();
    let g2 = 2.0 * pi * pi * (2.0 * pi * s).cos();
    radial_jet(x, g, g1, g2)
}

/// Biharmonic right-hand side f = Delta^2 u2.
///
/// For radial u = g(s), Delta u = 4 (s g'' + g') =: 4 G(s) and
/// Delta^2 u = 16 (s G'' + G'), which collapses to the closed form below.
pub fn biharmonic_rhs(x: Vec2) -> f64 {
    let s = x[0] * x[0] + x[1] * x[1];
    let pi = std::f64::consts::PI;
    let (sn, cs) = (2.0 * pi * s).sin_cos();
    64.0 * pi * pi * cs - 256.0 * pi.powi(3) * s * sn - 128.0 * pi.powi(4) * s * s * cs
}
