//! Named scenario bundles with the reference parameters baked in.
//!
//! Each preset reproduces one published figure: the single-cycle assembly
//! curve, repeated rearrangement, lifetime maintenance, and the four 2D
//! scaling projections. Grid shapes for the 2D presets were tuned so the
//! best point clears the published expected-atom counts.

use crate::config::{Experiment, Scenario};
use crate::CliError;

pub const PRESET_NAMES: [&str; 7] =
    ["fig3", "fig4c", "fig4d", "figS5a", "figS5b", "figS5c", "figS5d"];

/// Grid shapes swept by the deletion-method presets.
const DELETION_GRIDS: [(usize, usize); 4] = [(20, 20), (25, 25), (30, 30), (35, 35)];

/// Per-row shapes for p = 0.6: generous spare columns per row.
const PER_ROW_GRIDS_P06: [(usize, usize, usize); 6] =
    [(12, 40, 12), (13, 38, 13), (14, 35, 14), (14, 30, 14), (15, 30, 15), (16, 28, 16)];

/// Per-row shapes for p = 0.9: thinner margins suffice.
const PER_ROW_GRIDS_P09: [(usize, usize, usize); 6] =
    [(25, 35, 28), (26, 32, 26), (28, 30, 24), (28, 32, 26), (30, 30, 25), (30, 32, 24)];

fn grid_scenario(name: &str, p_load: f64, tau_s: f64, experiment: Experiment) -> Scenario {
    let mut s = Scenario::new(name, experiment);
    s.trials = 500;
    s.p_load = p_load;
    s.tau_s = tau_s;
    s
}

/// Build the scenarios behind a preset name.
pub fn preset(name: &str) -> Result<Vec<Scenario>, CliError> {
    let scenarios = match name {
        "fig3" => {
            vec![Scenario::new("fig3b", Experiment::SingleCycle)]
        }
        "fig4c" => [40usize, 50, 60]
            .into_iter()
            .map(|n| {
                let mut s = Scenario::new(
                    format!("fig4c_n{n}"),
                    Experiment::Repeated { target_n: n, max_attempts: 20 },
                );
                s.trials = 2_000;
                s
            })
            .collect(),
        "fig4d" => {
            let maintenance = |name: &str, target_n, initial_atoms, repair, max_probes| {
                let mut s = Scenario::new(
                    name,
                    Experiment::Maintenance { target_n, initial_atoms, repair, max_probes },
                );
                s.trials = 2_000;
                s.tau_s = 10.0;
                s
            };
            vec![
                maintenance("fig4d_norepair", 20, 20, false, 100),
                maintenance("fig4d_repair_n20", 20, 40, true, 600),
                maintenance("fig4d_repair_n40", 40, 48, true, 300),
            ]
        }
        "figS5a" => vec![grid_scenario(
            "figS5a",
            0.6,
            10.0,
            Experiment::GridDeletion { grids: DELETION_GRIDS.to_vec(), max_passes: 40 },
        )],
        "figS5b" => vec![grid_scenario(
            "figS5b",
            0.9,
            60.0,
            Experiment::GridDeletion { grids: DELETION_GRIDS.to_vec(), max_passes: 40 },
        )],
        "figS5c" => vec![grid_scenario(
            "figS5c",
            0.6,
            10.0,
            Experiment::GridPerRow { grids: PER_ROW_GRIDS_P06.to_vec(), max_passes: 40 },
        )],
        "figS5d" => vec![grid_scenario(
            "figS5d",
            0.9,
            60.0,
            Experiment::GridPerRow { grids: PER_ROW_GRIDS_P09.to_vec(), max_passes: 40 },
        )],
        unknown => {
            return Err(CliError::invalid(
                format!("preset `{unknown}`"),
                format!("unknown preset; valid names: {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(scenarios)
}

/// Apply command-line seed/trial overrides to every scenario of a preset.
pub fn apply_overrides(scenarios: &mut [Scenario], seed: Option<u64>, trials: Option<u64>) {
    for s in scenarios {
        if let Some(seed) = seed {
            s.seed = seed;
        }
        if let Some(trials) = trials {
            s.trials = trials;
        }
    }
}
