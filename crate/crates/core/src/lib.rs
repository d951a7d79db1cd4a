//! Models for assembling defect-free atom arrays in optical tweezers.
//!
//! The crate covers the full feedback loop of a tweezer-array machine:
//! trap comb geometry ([`lattice`]), stochastic loading and vacuum loss
//! ([`stochastic`]), rearrangement planning in one and two dimensions
//! ([`planner`]), the cycle-time budget ([`timing`]), Monte Carlo
//! experiments over all of the above ([`simulator`]), and the multi-tone
//! RF waveforms that drive the acousto-optic deflector ([`waveform`]).

pub mod lattice;
pub mod planner;
pub mod simulator;
pub mod stochastic;
pub mod timing;
pub mod waveform;

pub use lattice::{GridLattice, Occupancy, OccupancyGrid, TrapLattice};
pub use planner::{Move, MovePlan, TargetSpec};
pub use simulator::grid2d::{Grid2dOptions, Grid2dResult, GridMethod};
pub use simulator::maintenance::{MaintenanceOptions, MaintenanceSummary};
pub use simulator::{EstimateWithCI, MonteCarloConfig};
pub use stochastic::{LoadingModel, LossModel, RngStream};
pub use timing::TimingParams;
pub use waveform::{Tone, ToneSet};
