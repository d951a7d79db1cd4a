//! Benchmark-only crate; see `benches/hot_paths.rs`.
//!
//! Shared input builders live here so the benchmarks measure the algorithms,
//! not the setup.

use atomweaver_core::lattice::{GridLattice, Occupancy, OccupancyGrid, TrapLattice};
use atomweaver_core::stochastic::{LoadingModel, RngStream};

/// A deterministic 1D occupancy at the machine's loading probability.
pub fn loaded_line(lattice: &TrapLattice, seed: u64) -> Occupancy {
    let loading = LoadingModel::new(0.6).unwrap();
    let mut rng = RngStream::new(seed, 0);
    atomweaver_core::stochastic::load(lattice, &loading, &mut rng)
}

/// A deterministic 2D occupancy with the given fill probability.
pub fn loaded_grid(lattice: &GridLattice, p: f64, seed: u64) -> OccupancyGrid {
    let loading = LoadingModel::new(p).unwrap();
    let mut rng = RngStream::new(seed, 0);
    atomweaver_core::stochastic::load_grid(lattice, &loading, &mut rng)
}
