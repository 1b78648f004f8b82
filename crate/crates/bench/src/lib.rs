//! Shared fixtures for the benchmarks.

use curveddg_core::assembly::{Assembly, PenaltyConfig, SparseSystem};
use curveddg_core::mesh::MeshLevel;
use curveddg_core::problems;
use curveddg_core::space::DGSpace;

/// A prepared disk discretization for benchmarking.
pub struct BenchCase {
    pub level: MeshLevel,
    pub space: DGSpace,
    pub degree: usize,
}

impl BenchCase {
    pub fn new(target_h: f64, degree: usize) -> Self {
        let level = MeshLevel::disk(target_h).expect("disk level");
        let space = DGSpace::new(degree, level.n_elems()).expect("space");
        BenchCase { level, space, degree }
    }

    pub fn assembly(&self) -> Assembly<'_> {
        Assembly::new(
            &self.space,
            &self.level.maps,
            &self.level.faces,
            &self.level.metrics,
            PenaltyConfig::defaults(self.degree),
            None,
        )
    }

    pub fn poisson_system(&self) -> SparseSystem {
        self.assembly()
            .assemble_poisson(problems::poisson_rhs)
            .expect("assembly")
    }
}
