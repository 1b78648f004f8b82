//! Interior-penalty discontinuous Galerkin solver for second-order (Poisson)
//! and fourth-order (clamped plate) elliptic problems on 2D domains with
//! curved boundaries.
//!
//! The domain boundary is approximated by isoparametric quadratic (P2)
//! triangles: only boundary-edge midpoints are moved onto the boundary chart,
//! so every interior face stays a straight segment. Element-local polynomials
//! live on the reference triangle and are mapped through the geometry, which
//! means physical derivatives of the basis pick up curvature correction terms
//! up to third order; those feed the face forms of the two schemes.
//!
//! Module layout:
//! - [`mesh`]: triangulations, connectivity, boundary curving, size metrics
//! - [`geometry`]: P2 element maps, inverse-map derivatives, face frames
//! - [`quadrature`]: reference triangle/edge rules, curved integration
//! - [`space`]: reference Lagrange basis and physical/trace derivatives
//! - [`assembly`]: the symmetric bilinear forms, penalties, CSR systems
//! - [`solver`]: Jacobi-preconditioned CG with iterative refinement
//! - [`analysis`]: error norms, EOCs, interpolation, inequality ratios
//! - [`problems`]: manufactured solutions on the unit disk
//! - [`study`]: convergence/verification drivers and CSV reports

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod geometry;
mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod study;

pub use analysis::{ErrorRecord, InequalityReport};
pub use assembly::{PenaltyConfig, SparseSystem};
pub use error::{Error, Result};
pub use geometry::{CurvedMap, FaceFrame};
pub use mesh::{Face, FaceSet, Mesh, MeshLevel, MeshMetrics};
pub use quadrature::QuadRule;
pub use solver::SolveReport;
pub use space::DGSpace;
pub use study::{ConvergenceReport, Problem, StudyConfig, VerifyConfig};
