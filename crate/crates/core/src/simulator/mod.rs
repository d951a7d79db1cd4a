//! Monte Carlo experiments over the loading, planning, and loss models.
//!
//! Every experiment draws independent trials from deterministic per-trial
//! RNG streams and aggregates integer counts, so results are identical for
//! any execution order or thread count, and a config (including its seed)
//! pins its output exactly.

pub mod grid2d;
pub mod maintenance;

use rayon::prelude::*;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};
use thiserror::Error;

use crate::lattice::{Occupancy, TrapLattice};
use crate::planner::{plan_compaction_1d, plan_repair, TargetSpec};
use crate::stochastic::{apply_loss, load, LoadingModel, LossModel, RngStream};
use crate::timing::TimingParams;

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("need at least one trial")]
    NoTrials,
    #[error("coverage must lie in (0, 1), got {0}")]
    BadCoverage(f64),
    #[error("successes {successes} exceed trials {trials}")]
    BadCounts { successes: u64, trials: u64 },
    #[error("target length {target} exceeds {sites} lattice sites")]
    TargetTooLong { target: usize, sites: usize },
    #[error("initial atom count {initial} not in [target {target}, sites {sites}]")]
    BadInitialAtoms { initial: usize, target: usize, sites: usize },
    #[error("planning failed: {0}")]
    Planner(#[from] crate::planner::PlannerError),
    #[error("grid dimensions must be nonzero")]
    EmptyGrid,
    #[error("target width {want} exceeds {got} columns")]
    TargetTooWide { want: usize, got: usize },
    #[error("pass budget must be nonzero")]
    NoPasses,
}

/// Confidence level used throughout, mirroring the error bars the
/// experiments report.
pub const DEFAULT_COVERAGE: f64 = 0.68;

/// Two-sided normal quantile for a central interval of the given coverage.
pub fn z_for_coverage(coverage: f64) -> Result<f64, SimulatorError> {
    if !(coverage.is_finite() && 0.0 < coverage && coverage < 1.0) {
        return Err(SimulatorError::BadCoverage(coverage));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + 0.5 * coverage))
}

/// Wilson score interval for `successes / trials` at the given coverage.
pub fn wilson_interval(
    successes: u64,
    trials: u64,
    coverage: f64,
) -> Result<(f64, f64), SimulatorError> {
    if trials == 0 {
        return Err(SimulatorError::NoTrials);
    }
    if successes > trials {
        return Err(SimulatorError::BadCounts { successes, trials });
    }
    let z = z_for_coverage(coverage)?;
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2n = z * z / n;
    let denom = 1.0 + z2n;
    let center = (p_hat + z2n / 2.0) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n + z2n / (4.0 * n)).sqrt();
    Ok(((center - half).clamp(0.0, 1.0), (center + half).clamp(0.0, 1.0)))
}

/// A point estimate with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
}

impl EstimateWithCI {
    /// Binomial proportion with a Wilson score interval.
    pub fn wilson(successes: u64, trials: u64, coverage: f64) -> Result<Self, SimulatorError> {
        let (lower, upper) = wilson_interval(successes, trials, coverage)?;
        Ok(Self { estimate: successes as f64 / trials as f64, lower, upper, trials })
    }

    /// Sample mean with a normal-approximation interval from accumulated
    /// sum and sum of squares.
    pub fn mean(sum: f64, sum_sq: f64, trials: u64, coverage: f64) -> Result<Self, SimulatorError> {
        if trials == 0 {
            return Err(SimulatorError::NoTrials);
        }
        let z = z_for_coverage(coverage)?;
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 { ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0) } else { 0.0 };
        let half = z * (var / n).sqrt();
        Ok(Self { estimate: mean, lower: mean - half, upper: mean + half, trials })
    }

    /// Half-width of the interval.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Initial atom-number distribution over the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomCountDistribution {
    /// Independent loading of `sites` traps at probability `p`.
    Binomial { sites: usize, p: f64 },
}

impl AtomCountDistribution {
    /// P(atom count >= n), the hard ceiling on any length-n success.
    pub fn tail_at_least(&self, n: usize) -> f64 {
        match *self {
            AtomCountDistribution::Binomial { sites, p } => {
                if n == 0 {
                    return 1.0;
                }
                if n > sites {
                    return 0.0;
                }
                let dist = Binomial::new(p, sites as u64).expect("validated parameters");
                dist.sf(n as u64 - 1)
            }
        }
    }
}

/// The three analytic reference curves for single-cycle assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryCurves {
    /// P(initial atoms >= N): the atom-number ceiling.
    pub solid: f64,
    /// exp(-t_r N / tau): survival of N atoms over one feedback cycle.
    pub dashed: f64,
    /// Product of the two: the full model.
    pub dashdot: f64,
}

/// Evaluate the reference curves at length `n`.
pub fn theory_curves(
    n: usize,
    dist: &AtomCountDistribution,
    tau_s: f64,
    t_r_s: f64,
) -> TheoryCurves {
    let solid = dist.tail_at_least(n);
    let dashed = (-t_r_s * n as f64 / tau_s).exp();
    TheoryCurves { solid, dashed, dashdot: solid * dashed }
}

/// Scenario parameters shared by every Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: u64,
    pub seed: u64,
    pub lattice: TrapLattice,
    pub loading: LoadingModel,
    pub loss: LossModel,
    pub timing: TimingParams,
}

impl MonteCarloConfig {
    /// The reference machine: 100 traps, p = 0.6, tau = 6.2 s, default
    /// timing.
    pub fn reference(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            lattice: TrapLattice::default_1d(),
            loading: LoadingModel::new(0.6).expect("valid probability"),
            loss: LossModel::new(6.2).expect("valid lifetime"),
            timing: TimingParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        if self.trials == 0 {
            return Err(SimulatorError::NoTrials);
        }
        Ok(())
    }

    fn atom_count_distribution(&self) -> AtomCountDistribution {
        AtomCountDistribution::Binomial { sites: self.lattice.sites(), p: self.loading.p_load() }
    }
}

/// What one load-rearrange-image cycle produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub initial_atoms: usize,
    pub final_occupancy: Occupancy,
    /// Longest defect-free block at site 0 after the cycle.
    pub defect_free_len: usize,
    /// Simulated wall time the cycle covered, s.
    pub elapsed_s: f64,
    /// Atoms lost while the rearrangement ran.
    pub atoms_lost: usize,
}

/// Run one single-cycle trial on its own RNG stream.
pub fn run_single_cycle_trial(cfg: &MonteCarloConfig, trial: u64) -> TrialOutcome {
    let mut rng = RngStream::new(cfg.seed, trial);
    let loaded = load(&cfg.lattice, &cfg.loading, &mut rng);
    let initial_atoms = loaded.atom_count();
    let plan = plan_compaction_1d(&cfg.lattice, &loaded).expect("occupancy matches lattice");
    let moved = plan.apply(&loaded);
    let distances = plan.distance_by_destination(cfg.lattice.sites());
    let t_r = cfg.timing.rearrange_period_s;
    let survived = apply_loss(&moved, &cfg.loss, t_r, |s| distances[s], &mut rng);
    TrialOutcome {
        initial_atoms,
        defect_free_len: survived.leading_filled_run(),
        atoms_lost: initial_atoms - survived.atom_count(),
        elapsed_s: t_r,
        final_occupancy: survived,
    }
}

/// Per-length success estimates for one load-and-rearrange cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleCycleSummary {
    /// Block lengths 1..=sites.
    pub lengths: Vec<usize>,
    /// P(leftmost N sites loaded) before rearrangement.
    pub pre: Vec<EstimateWithCI>,
    /// P(leftmost N sites defect-free) after rearrangement and loss.
    pub post: Vec<EstimateWithCI>,
}

/// Estimate defect-free block probabilities before and after one
/// rearrangement cycle.
///
/// Pre-rearrangement, a length-N success needs the leftmost N traps to have
/// loaded directly; post-rearrangement it needs N atoms anywhere that then
/// survive the move.
pub fn simulate_single_cycle(cfg: &MonteCarloConfig) -> Result<SingleCycleSummary, SimulatorError> {
    cfg.validate()?;
    let sites = cfg.lattice.sites();
    // hist[run] counts trials whose leading filled run was exactly `run`.
    let (pre_hist, post_hist) = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; sites + 1], vec![0u64; sites + 1]),
            |(mut pre, mut post), trial| {
                let mut rng = RngStream::new(cfg.seed, trial);
                let loaded = load(&cfg.lattice, &cfg.loading, &mut rng);
                pre[loaded.leading_filled_run()] += 1;
                let plan =
                    plan_compaction_1d(&cfg.lattice, &loaded).expect("occupancy matches lattice");
                let moved = plan.apply(&loaded);
                let distances = plan.distance_by_destination(sites);
                let survived = apply_loss(
                    &moved,
                    &cfg.loss,
                    cfg.timing.rearrange_period_s,
                    |s| distances[s],
                    &mut rng,
                );
                post[survived.leading_filled_run()] += 1;
                (pre, post)
            },
        )
        .reduce(
            || (vec![0u64; sites + 1], vec![0u64; sites + 1]),
            |(mut pa, mut qa), (pb, qb)| {
                for (a, b) in pa.iter_mut().zip(pb) {
                    *a += b;
                }
                for (a, b) in qa.iter_mut().zip(qb) {
                    *a += b;
                }
                (pa, qa)
            },
        );
    let suffix = |hist: &[u64]| -> Vec<u64> {
        // successes at N = trials with run >= N.
        let mut acc = 0u64;
        let mut out = vec![0u64; sites + 1];
        for run in (0..=sites).rev() {
            acc += hist[run];
            out[run] = acc;
        }
        out
    };
    let pre_successes = suffix(&pre_hist);
    let post_successes = suffix(&post_hist);
    let mut lengths = Vec::with_capacity(sites);
    let mut pre = Vec::with_capacity(sites);
    let mut post = Vec::with_capacity(sites);
    for n in 1..=sites {
        lengths.push(n);
        pre.push(EstimateWithCI::wilson(pre_successes[n], cfg.trials, DEFAULT_COVERAGE)?);
        post.push(EstimateWithCI::wilson(post_successes[n], cfg.trials, DEFAULT_COVERAGE)?);
    }
    Ok(SingleCycleSummary { lengths, pre, post })
}

/// Cumulative success curve for repeated rearrangement toward a length-N
/// target.
///
/// One load, then up to `max_attempts` repair cycles spaced by the
/// rearrangement period; entry k-1 estimates P(defect-free target achieved
/// at some attempt <= k). With a single attempt this reproduces
/// [`simulate_single_cycle`] at length N draw-for-draw.
pub fn simulate_repeated_rearrangement(
    cfg: &MonteCarloConfig,
    target_n: usize,
    max_attempts: usize,
) -> Result<Vec<EstimateWithCI>, SimulatorError> {
    cfg.validate()?;
    let sites = cfg.lattice.sites();
    if target_n > sites {
        return Err(SimulatorError::TargetTooLong { target: target_n, sites });
    }
    if max_attempts == 0 {
        return Err(SimulatorError::NoPasses);
    }
    let spec = TargetSpec::left_block(target_n, sites)?;
    let first_success_hist = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || vec![0u64; max_attempts + 1],
            |mut hist, trial| {
                let mut rng = RngStream::new(cfg.seed, trial);
                let mut occ = load(&cfg.lattice, &cfg.loading, &mut rng);
                let mut first = 0usize;
                for attempt in 1..=max_attempts {
                    let plan =
                        plan_repair(&cfg.lattice, &occ, &spec).expect("sizes match by construction");
                    occ = plan.apply(&occ);
                    let distances = plan.distance_by_destination(sites);
                    occ = apply_loss(
                        &occ,
                        &cfg.loss,
                        cfg.timing.rearrange_period_s,
                        |s| distances[s],
                        &mut rng,
                    );
                    if spec.target_filled(&occ) {
                        first = attempt;
                        break;
                    }
                }
                // Index 0 counts never-succeeded trials.
                hist[first] += 1;
                hist
            },
        )
        .reduce(
            || vec![0u64; max_attempts + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut cumulative = Vec::with_capacity(max_attempts);
    let mut acc = 0u64;
    for attempt in 1..=max_attempts {
        acc += first_success_hist[attempt];
        cumulative.push(EstimateWithCI::wilson(acc, cfg.trials, DEFAULT_COVERAGE)?);
    }
    Ok(cumulative)
}

/// Theory curves for this config's loading distribution, evaluated over the
/// whole lattice.
pub fn theory_curve_table(cfg: &MonteCarloConfig) -> Vec<TheoryCurves> {
    let dist = cfg.atom_count_distribution();
    (1..=cfg.lattice.sites())
        .map(|n| theory_curves(n, &dist, cfg.loss.tau_s(), cfg.timing.rearrange_period_s))
        .collect()
}
