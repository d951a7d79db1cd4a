//! Monte Carlo projection of assembly onto 2D trap grids.
//!
//! Each trial loads a grid, then repeats feedback passes (plan, move, decay
//! over the pass duration, image) until the planned region is defect-free,
//! progress stalls, or the pass budget runs out. The score of a trial is the
//! largest fully-occupied rectangle left at the end.

use rayon::prelude::*;

use crate::lattice::{GridLattice, OccupancyGrid};
use crate::planner::grid::{
    largest_full_rectangle, plan_method1_2d, plan_method2_2d, Method1Plan,
};
use crate::simulator::{EstimateWithCI, MonteCarloConfig, SimulatorError, DEFAULT_COVERAGE};
use crate::stochastic::{apply_loss_grid, load_grid, RngStream};
use crate::timing::feedback_duration;

/// Rearrangement strategy for grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMethod {
    /// Delete defect rows and columns, compact the survivors into a block,
    /// and release the deleted atoms. Two sweep sets per pass, but the
    /// array shrinks with every defect.
    Deletion,
    /// Rearrange every row independently toward its leftmost `target_cols`
    /// sites. One sweep set per non-identity row, atoms conserved.
    PerRow { target_cols: usize },
}

/// Scenario knobs for one 2D run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2dOptions {
    pub rows: usize,
    pub cols: usize,
    pub method: GridMethod,
    /// Feedback pass cap per trial.
    pub max_passes: usize,
}

/// Aggregated outcome of a 2D run.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2dResult {
    /// Mean atoms in the largest defect-free rectangle at trial end.
    pub defect_free_atoms: EstimateWithCI,
    /// Fraction of trials whose planned region ended defect-free.
    pub clean_fraction: EstimateWithCI,
    /// Mean feedback passes per trial.
    pub mean_passes: f64,
}

/// How one trial ended.
struct TrialEnd {
    final_atoms: usize,
    clean: bool,
    passes: usize,
}

/// Stop after this many consecutive passes without defect-count progress.
const STALL_PASSES: usize = 2;

struct StallTracker {
    prev_defects: Option<usize>,
    stalled: usize,
}

impl StallTracker {
    fn new() -> Self {
        Self { prev_defects: None, stalled: 0 }
    }

    /// Record this pass's defect count; true once progress has stalled.
    fn push(&mut self, defects: usize) -> bool {
        match self.prev_defects {
            Some(prev) if defects >= prev => self.stalled += 1,
            _ => self.stalled = 0,
        }
        self.prev_defects = Some(defects);
        self.stalled >= STALL_PASSES
    }
}

fn run_deletion_trial(
    cfg: &MonteCarloConfig,
    opts: &Grid2dOptions,
    rng: &mut RngStream,
) -> TrialEnd {
    let mut lattice = GridLattice::uniform(opts.rows, opts.cols).expect("validated dims");
    let mut occ = load_grid(&lattice, &cfg.loading, rng);
    let mut stall = StallTracker::new();
    let mut passes = 0;
    let mut clean = false;
    while passes < opts.max_passes {
        passes += 1;
        let readout_rows = occ.rows_with_atoms();
        let plan: Method1Plan = plan_method1_2d(&lattice, &occ).expect("dims match");
        let (block_rows, block_cols) = plan.block_dims();
        if block_rows == 0 || block_cols == 0 {
            occ = OccupancyGrid::empty(occ.rows(), occ.cols());
            break;
        }
        let moved = plan.apply(&occ);
        let duration =
            feedback_duration(&cfg.timing, plan.sweep_count(), plan.sweep_set_count(), readout_rows);
        let distances = plan.plan().distance_by_destination(occ.rows() * occ.cols());
        let cols = occ.cols();
        let survived =
            apply_loss_grid(&moved, &cfg.loss, duration, |r, c| distances[r * cols + c], rng);
        // Deleted rows and columns are gone for good; shrink to the block.
        occ = survived.crop(block_rows, block_cols);
        lattice = GridLattice::uniform(block_rows, block_cols).expect("nonzero dims");
        let defects = block_rows * block_cols - occ.atom_count();
        if defects == 0 {
            clean = true;
            break;
        }
        if stall.push(defects) {
            break;
        }
    }
    TrialEnd { final_atoms: largest_full_rectangle(&occ), clean, passes }
}

fn run_per_row_trial(
    cfg: &MonteCarloConfig,
    opts: &Grid2dOptions,
    target_cols: usize,
    rng: &mut RngStream,
) -> TrialEnd {
    let lattice = GridLattice::uniform(opts.rows, opts.cols).expect("validated dims");
    let mut occ = load_grid(&lattice, &cfg.loading, rng);
    let mut stall = StallTracker::new();
    let mut passes = 0;
    let mut clean = false;
    while passes < opts.max_passes {
        passes += 1;
        let readout_rows = occ.rows_with_atoms();
        let plans = plan_method2_2d(&lattice, &occ, target_cols).expect("validated width");
        let sweeps: usize = plans.iter().map(|p| p.sweep_count()).sum();
        let sweep_sets = plans.iter().filter(|p| !p.is_identity()).count();
        let mut moved = OccupancyGrid::empty(opts.rows, opts.cols);
        let mut distances = Vec::with_capacity(opts.rows);
        for (r, plan) in plans.iter().enumerate() {
            moved.set_row(r, &plan.apply(&occ.row(r)));
            distances.push(plan.distance_by_destination(opts.cols));
        }
        let duration = feedback_duration(&cfg.timing, sweeps, sweep_sets, readout_rows);
        occ = apply_loss_grid(&moved, &cfg.loss, duration, |r, c| distances[r][c], rng);
        let defects = opts.rows * target_cols
            - (0..opts.rows)
                .map(|r| (0..target_cols).filter(|&c| occ.is_occupied(r, c)).count())
                .sum::<usize>();
        if defects == 0 {
            clean = true;
            break;
        }
        if stall.push(defects) {
            break;
        }
    }
    TrialEnd { final_atoms: largest_full_rectangle(&occ), clean, passes }
}

/// Estimate the defect-free rectangle size a grid scenario yields.
pub fn simulate_2d(
    cfg: &MonteCarloConfig,
    opts: &Grid2dOptions,
) -> Result<Grid2dResult, SimulatorError> {
    cfg.validate()?;
    if opts.rows == 0 || opts.cols == 0 {
        return Err(SimulatorError::EmptyGrid);
    }
    if opts.max_passes == 0 {
        return Err(SimulatorError::NoPasses);
    }
    if let GridMethod::PerRow { target_cols } = opts.method {
        if target_cols == 0 || target_cols > opts.cols {
            return Err(SimulatorError::TargetTooWide { want: target_cols, got: opts.cols });
        }
    }
    struct Acc {
        atom_sum: f64,
        atom_sum_sq: f64,
        clean: u64,
        pass_sum: u64,
    }
    let zero = || Acc { atom_sum: 0.0, atom_sum_sq: 0.0, clean: 0, pass_sum: 0 };
    let acc = (0..cfg.trials)
        .into_par_iter()
        .fold(zero, |mut acc, trial| {
            let mut rng = RngStream::new(cfg.seed, trial);
            let end = match opts.method {
                GridMethod::Deletion => run_deletion_trial(cfg, opts, &mut rng),
                GridMethod::PerRow { target_cols } => {
                    run_per_row_trial(cfg, opts, target_cols, &mut rng)
                }
            };
            let a = end.final_atoms as f64;
            acc.atom_sum += a;
            acc.atom_sum_sq += a * a;
            acc.clean += u64::from(end.clean);
            acc.pass_sum += end.passes as u64;
            acc
        })
        .reduce(zero, |mut a, b| {
            a.atom_sum += b.atom_sum;
            a.atom_sum_sq += b.atom_sum_sq;
            a.clean += b.clean;
            a.pass_sum += b.pass_sum;
            a
        });
    Ok(Grid2dResult {
        defect_free_atoms: EstimateWithCI::mean(
            acc.atom_sum,
            acc.atom_sum_sq,
            cfg.trials,
            DEFAULT_COVERAGE,
        )?,
        clean_fraction: EstimateWithCI::wilson(acc.clean, cfg.trials, DEFAULT_COVERAGE)?,
        mean_passes: acc.pass_sum as f64 / cfg.trials as f64,
    })
}
