//! Long-hold maintenance of an assembled array: periodic imaging with
//! optional defect repair from a reservoir.
//!
//! Each trial starts from a freshly assembled array (target block filled,
//! spares parked immediately to its right), then alternates decay intervals
//! with probe images. With repair enabled, each probe fills any target
//! defects from the nearest reservoir atoms before the array is scored; the
//! array dies at the first probe where repair cannot restore it.

use rayon::prelude::*;

use crate::lattice::Occupancy;
use crate::planner::{plan_repair, TargetSpec};
use crate::simulator::{EstimateWithCI, MonteCarloConfig, SimulatorError, DEFAULT_COVERAGE};
use crate::stochastic::{apply_loss, RngStream};

/// Scenario knobs for one maintenance run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaintenanceOptions {
    /// Leftmost block to keep defect-free.
    pub target_n: usize,
    /// Atoms present at t = 0; the surplus over `target_n` is the reservoir.
    pub initial_atoms: usize,
    /// Fill target defects from the reservoir at each probe.
    pub repair: bool,
    /// Probe count cap; trials alive at the cap are censored.
    pub max_probes: usize,
}

/// Survival statistics over the probe sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceSummary {
    /// Probe times, s (first probe at one repair period).
    pub probe_times_s: Vec<f64>,
    /// Fraction of trials defect-free at each probe.
    pub survival: Vec<EstimateWithCI>,
    /// Per-trial array lifetime, with death inside a probe interval
    /// attributed to its midpoint.
    pub mean_lifetime_s: EstimateWithCI,
    /// Trials still alive when the probe budget ran out; their lifetimes
    /// enter the mean as the full observation window, biasing it low.
    pub censored: u64,
}

/// Simulate periodic imaging and optional repair of an assembled array.
///
/// The survival entry at probe k estimates P(target defect-free at time
/// (k+1) * repair_period), scored after repair when repair is enabled.
pub fn simulate_maintenance(
    cfg: &MonteCarloConfig,
    opts: &MaintenanceOptions,
) -> Result<MaintenanceSummary, SimulatorError> {
    cfg.validate()?;
    let sites = cfg.lattice.sites();
    if opts.target_n > sites {
        return Err(SimulatorError::TargetTooLong { target: opts.target_n, sites });
    }
    if opts.initial_atoms < opts.target_n || opts.initial_atoms > sites {
        return Err(SimulatorError::BadInitialAtoms {
            initial: opts.initial_atoms,
            target: opts.target_n,
            sites,
        });
    }
    if opts.max_probes == 0 {
        return Err(SimulatorError::NoPasses);
    }
    let spec = TargetSpec::left_block(opts.target_n, sites)?;
    let period = cfg.timing.repair_period_s;
    let has_move_penalty = cfg.loss.move_penalty_per_m() > 0.0;

    struct Acc {
        alive_at: Vec<u64>,
        lifetime_sum: f64,
        lifetime_sum_sq: f64,
        censored: u64,
    }
    let zero = || Acc {
        alive_at: vec![0u64; opts.max_probes],
        lifetime_sum: 0.0,
        lifetime_sum_sq: 0.0,
        censored: 0,
    };
    let acc = (0..cfg.trials)
        .into_par_iter()
        .fold(zero, |mut acc, trial| {
            let mut rng = RngStream::new(cfg.seed, trial);
            let mut occ = Occupancy::empty(sites);
            for site in 0..opts.initial_atoms {
                occ.set(site, true);
            }
            let mut death_probe = None;
            for probe in 0..opts.max_probes {
                occ = apply_loss(&occ, &cfg.loss, period, |_| 0.0, &mut rng);
                if opts.repair && !spec.target_filled(&occ) {
                    let plan = plan_repair(&cfg.lattice, &occ, &spec)
                        .expect("sizes match by construction");
                    let repaired = plan.apply(&occ);
                    // A zero-penalty move is lossless, so it draws nothing;
                    // the draw stream stays aligned with repair-off runs.
                    occ = if has_move_penalty {
                        let d = plan.distance_by_destination(sites);
                        apply_loss(&repaired, &cfg.loss, 0.0, |s| d[s], &mut rng)
                    } else {
                        repaired
                    };
                }
                if spec.target_filled(&occ) {
                    acc.alive_at[probe] += 1;
                } else {
                    // Defects only accumulate, so the array stays dead.
                    death_probe = Some(probe);
                    break;
                }
            }
            let lifetime = match death_probe {
                Some(k) => (k as f64 + 0.5) * period,
                None => {
                    acc.censored += 1;
                    opts.max_probes as f64 * period
                }
            };
            acc.lifetime_sum += lifetime;
            acc.lifetime_sum_sq += lifetime * lifetime;
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.alive_at.iter_mut().zip(b.alive_at) {
                *x += y;
            }
            a.lifetime_sum += b.lifetime_sum;
            a.lifetime_sum_sq += b.lifetime_sum_sq;
            a.censored += b.censored;
            a
        });

    let mut probe_times_s = Vec::with_capacity(opts.max_probes);
    let mut survival = Vec::with_capacity(opts.max_probes);
    for probe in 0..opts.max_probes {
        probe_times_s.push((probe + 1) as f64 * period);
        survival.push(EstimateWithCI::wilson(acc.alive_at[probe], cfg.trials, DEFAULT_COVERAGE)?);
    }
    Ok(MaintenanceSummary {
        probe_times_s,
        survival,
        mean_lifetime_s: EstimateWithCI::mean(
            acc.lifetime_sum,
            acc.lifetime_sum_sq,
            cfg.trials,
            DEFAULT_COVERAGE,
        )?,
        censored: acc.censored,
    })
}
