//! Flat INI-style scenario configs.
//!
//! A config holds one `[section]` per scenario with `key = value` lines.
//! Blank lines and lines starting with `#` or `;` are ignored. Syntax
//! problems report the offending line; value problems report scenario,
//! key, and line. Unknown keys are rejected rather than skipped, so a
//! typo cannot silently fall back to a default.

use std::collections::HashSet;
use std::path::Path;

use atomweaver_core::stochastic::{LoadingModel, LossModel};
use atomweaver_core::timing::TimingParams;

use crate::CliError;

/// What a scenario runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    SingleCycle,
    Repeated { target_n: usize, max_attempts: usize },
    Maintenance { target_n: usize, initial_atoms: usize, repair: bool, max_probes: usize },
    /// Deletion-method 2D scaling over a list of grid shapes.
    GridDeletion { grids: Vec<(usize, usize)>, max_passes: usize },
    /// Per-row-method 2D scaling over (rows, cols, target_cols) shapes.
    GridPerRow { grids: Vec<(usize, usize, usize)>, max_passes: usize },
    Waveform { n_tones: usize, duration_s: f64, phases: PhaseMode },
    Phases { n_tones: usize },
    SweepTable,
}

impl Experiment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Experiment::SingleCycle => "single-cycle",
            Experiment::Repeated { .. } => "repeated",
            Experiment::Maintenance { .. } => "maintenance",
            Experiment::GridDeletion { .. } => "2d-method1",
            Experiment::GridPerRow { .. } => "2d-method2",
            Experiment::Waveform { .. } => "waveform",
            Experiment::Phases { .. } => "phases",
            Experiment::SweepTable => "sweep-table",
        }
    }
}

/// Initial phases for waveform synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    Zero,
    Random,
    Optimized,
}

/// One fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: u64,
    /// Output file; relative paths resolve against the run's output
    /// directory. Defaults to the scenario name with a kind-specific
    /// extension.
    pub out: Option<String>,
    pub sites: usize,
    pub p_load: f64,
    pub tau_s: f64,
    pub move_penalty_per_m: f64,
    pub timing: TimingParams,
}

impl Scenario {
    /// Scenario with the reference machine's physics and the given
    /// experiment.
    pub fn new(name: impl Into<String>, experiment: Experiment) -> Self {
        Self {
            name: name.into(),
            experiment,
            seed: 0,
            trials: 10_000,
            out: None,
            sites: 100,
            p_load: 0.6,
            tau_s: 6.2,
            move_penalty_per_m: 0.0,
            timing: TimingParams::default(),
        }
    }

    /// Output file name, defaulted from the scenario name and kind.
    pub fn out_file(&self) -> String {
        match &self.out {
            Some(o) => o.clone(),
            None => match self.experiment {
                Experiment::Waveform { .. } => format!("{}.bin", self.name),
                _ => format!("{}.csv", self.name),
            },
        }
    }

    fn check(&self, ctx: &str) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::invalid(ctx, "trials must be at least 1"));
        }
        if self.sites == 0 {
            return Err(CliError::invalid(ctx, "sites must be at least 1"));
        }
        LoadingModel::new(self.p_load).map_err(|e| CliError::invalid(ctx, e.to_string()))?;
        LossModel::with_move_penalty(self.tau_s, self.move_penalty_per_m)
            .map_err(|e| CliError::invalid(ctx, e.to_string()))?;
        self.timing.validate().map_err(|e| CliError::invalid(ctx, e.to_string()))?;
        match &self.experiment {
            Experiment::Repeated { target_n, max_attempts } => {
                if *target_n > self.sites {
                    return Err(CliError::invalid(ctx, "target_n exceeds sites"));
                }
                if *max_attempts == 0 {
                    return Err(CliError::invalid(ctx, "max_attempts must be at least 1"));
                }
            }
            Experiment::Maintenance { target_n, initial_atoms, max_probes, .. } => {
                if *target_n > self.sites || *initial_atoms > self.sites {
                    return Err(CliError::invalid(ctx, "target_n and initial_atoms must fit the lattice"));
                }
                if initial_atoms < target_n {
                    return Err(CliError::invalid(ctx, "initial_atoms must be at least target_n"));
                }
                if *max_probes == 0 {
                    return Err(CliError::invalid(ctx, "max_probes must be at least 1"));
                }
            }
            Experiment::GridDeletion { grids, max_passes } => {
                if grids.is_empty() {
                    return Err(CliError::invalid(ctx, "grids must list at least one RxC shape"));
                }
                if grids.iter().any(|&(r, c)| r == 0 || c == 0) {
                    return Err(CliError::invalid(ctx, "grid dimensions must be nonzero"));
                }
                if *max_passes == 0 {
                    return Err(CliError::invalid(ctx, "max_passes must be at least 1"));
                }
            }
            Experiment::GridPerRow { grids, max_passes } => {
                if grids.is_empty() {
                    return Err(CliError::invalid(ctx, "grids must list at least one RxC:W shape"));
                }
                for &(r, c, w) in grids {
                    if r == 0 || c == 0 || w == 0 {
                        return Err(CliError::invalid(ctx, "grid dimensions must be nonzero"));
                    }
                    if w > c {
                        return Err(CliError::invalid(
                            ctx,
                            format!("target width {w} exceeds {c} columns"),
                        ));
                    }
                }
                if *max_passes == 0 {
                    return Err(CliError::invalid(ctx, "max_passes must be at least 1"));
                }
            }
            Experiment::Waveform { n_tones, duration_s, .. } => {
                if *n_tones == 0 {
                    return Err(CliError::invalid(ctx, "n_tones must be at least 1"));
                }
                if !(duration_s.is_finite() && *duration_s > 0.0) {
                    return Err(CliError::invalid(ctx, "duration_s must be positive"));
                }
            }
            Experiment::Phases { n_tones } => {
                if *n_tones == 0 {
                    return Err(CliError::invalid(ctx, "n_tones must be at least 1"));
                }
            }
            Experiment::SingleCycle | Experiment::SweepTable => {}
        }
        Ok(())
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn ctx(&self, key: &str) -> String {
        match self.entries.iter().find(|e| e.key == key) {
            Some(e) => format!("scenario `{}`, key `{}` (line {})", self.name, key, e.line),
            None => format!("scenario `{}`, key `{}`", self.name, key),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.iter_mut().find(|e| e.key == key).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.trim().parse::<T>().map(Some).map_err(|_| {
                CliError::invalid(
                    self.ctx(key),
                    format!("cannot parse {raw:?} as {}", std::any::type_name::<T>()),
                )
            }),
        }
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.parse(key)?.ok_or_else(|| {
            CliError::invalid(
                format!("scenario `{}` (line {})", self.name, self.line),
                format!("missing required key `{key}`"),
            )
        })
    }

    fn parse_bool(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.take(key) {
            None => Ok(default),
            Some(raw) => match raw.trim() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(CliError::invalid(
                    self.ctx(key),
                    format!("expected true or false, got {other:?}"),
                )),
            },
        }
    }
}

/// Split raw text into sections; syntax errors only.
fn split_sections(text: &str, path: &str) -> Result<Vec<Section>, CliError> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unclosed section header".into()))?
                .trim();
            if name.is_empty() {
                return Err(parse_err(line_no, "empty section name".into()));
            }
            sections.push(Section { name: name.to_string(), line: line_no, entries: Vec::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(parse_err(line_no, "empty key".into()));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| parse_err(line_no, "key outside any [section]".into()))?;
        section.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line: line_no,
            used: false,
        });
    }
    Ok(sections)
}

fn parse_grid_pair(token: &str) -> Option<(usize, usize)> {
    let (r, c) = token.split_once('x')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

fn parse_grid_triple(token: &str) -> Option<(usize, usize, usize)> {
    let (dims, w) = token.split_once(':')?;
    let (r, c) = parse_grid_pair(dims)?;
    Some((r, c, w.parse().ok()?))
}

fn scenario_from_section(mut sec: Section) -> Result<Scenario, CliError> {
    let kind: String = sec.require("kind")?;
    let experiment = match kind.as_str() {
        "single-cycle" => Experiment::SingleCycle,
        "repeated" => Experiment::Repeated {
            target_n: sec.require("target_n")?,
            max_attempts: sec.parse_or("max_attempts", 20)?,
        },
        "maintenance" => Experiment::Maintenance {
            target_n: sec.require("target_n")?,
            initial_atoms: sec.require("initial_atoms")?,
            repair: sec.parse_bool("repair", true)?,
            max_probes: sec.parse_or("max_probes", 600)?,
        },
        "2d-method1" => {
            let raw: String = sec.require("grids")?;
            let grids = raw
                .split_whitespace()
                .map(parse_grid_pair)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    CliError::invalid(sec.ctx("grids"), "expected shapes like `20x20 25x25`")
                })?;
            Experiment::GridDeletion { grids, max_passes: sec.parse_or("max_passes", 40)? }
        }
        "2d-method2" => {
            let raw: String = sec.require("grids")?;
            let grids = raw
                .split_whitespace()
                .map(parse_grid_triple)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    CliError::invalid(sec.ctx("grids"), "expected shapes like `12x40:12 14x35:14`")
                })?;
            Experiment::GridPerRow { grids, max_passes: sec.parse_or("max_passes", 40)? }
        }
        "waveform" => Experiment::Waveform {
            n_tones: sec.parse_or("n_tones", 100)?,
            duration_s: sec.parse_or("duration_s", 1e-3)?,
            phases: match sec.take("phases").as_deref() {
                None | Some("optimized") => PhaseMode::Optimized,
                Some("zero") => PhaseMode::Zero,
                Some("random") => PhaseMode::Random,
                Some(other) => {
                    return Err(CliError::invalid(
                        sec.ctx("phases"),
                        format!("expected zero, random, or optimized, got {other:?}"),
                    ))
                }
            },
        },
        "phases" => Experiment::Phases { n_tones: sec.parse_or("n_tones", 100)? },
        "sweep-table" => Experiment::SweepTable,
        other => {
            return Err(CliError::invalid(
                sec.ctx("kind"),
                format!(
                    "unknown kind {other:?}; expected one of single-cycle, repeated, \
                     maintenance, 2d-method1, 2d-method2, waveform, phases, sweep-table"
                ),
            ))
        }
    };

    let mut scenario = Scenario::new(sec.name.clone(), experiment);
    scenario.seed = sec.parse_or("seed", scenario.seed)?;
    scenario.trials = sec.parse_or("trials", scenario.trials)?;
    scenario.out = sec.take("out");
    scenario.sites = sec.parse_or("sites", scenario.sites)?;
    scenario.p_load = sec.parse_or("p_load", scenario.p_load)?;
    scenario.tau_s = sec.parse_or("tau_s", scenario.tau_s)?;
    scenario.move_penalty_per_m = sec.parse_or("move_penalty_per_m", scenario.move_penalty_per_m)?;
    scenario.timing.cycle_period_s = sec.parse_or("cycle_period_s", scenario.timing.cycle_period_s)?;
    scenario.timing.repair_period_s =
        sec.parse_or("repair_period_s", scenario.timing.repair_period_s)?;
    scenario.timing.rearrange_period_s =
        sec.parse_or("rearrange_period_s", scenario.timing.rearrange_period_s)?;

    if let Some(unused) = sec.entries.iter().find(|e| !e.used) {
        return Err(CliError::invalid(
            format!("scenario `{}`, key `{}` (line {})", sec.name, unused.key, unused.line),
            "unknown key for this scenario kind",
        ));
    }

    // Range-check the stochastic fields against the key that set them, so
    // out-of-range values point at their config line; `check` below repeats
    // the validation with section-level context as a net for preset bugs.
    LoadingModel::new(scenario.p_load)
        .map_err(|e| CliError::invalid(sec.ctx("p_load"), e.to_string()))?;
    LossModel::new(scenario.tau_s).map_err(|e| CliError::invalid(sec.ctx("tau_s"), e.to_string()))?;
    LossModel::with_move_penalty(scenario.tau_s, scenario.move_penalty_per_m)
        .map_err(|e| CliError::invalid(sec.ctx("move_penalty_per_m"), e.to_string()))?;

    scenario.check(&format!("scenario `{}` (line {})", sec.name, sec.line))?;
    Ok(scenario)
}

/// Parse config text into validated scenarios.
pub fn parse_config(text: &str, path: &str) -> Result<Vec<Scenario>, CliError> {
    let sections = split_sections(text, path)?;
    let mut seen = HashSet::new();
    for sec in &sections {
        if !seen.insert(sec.name.clone()) {
            return Err(CliError::invalid(
                format!("scenario `{}` (line {})", sec.name, sec.line),
                "duplicate scenario name",
            ));
        }
        let mut keys = HashSet::new();
        for e in &sec.entries {
            if !keys.insert(e.key.clone()) {
                return Err(CliError::invalid(
                    format!("scenario `{}`, key `{}` (line {})", sec.name, e.key, e.line),
                    "duplicate key",
                ));
            }
        }
    }
    sections.into_iter().map(scenario_from_section).collect()
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scenario_round_trips() {
        let cfg = "
# assembly curve
[fig3b]
kind = single-cycle
seed = 42
trials = 500
sites = 100
p_load = 0.6
tau_s = 6.2
out = custom.csv
";
        let scenarios = parse_config(cfg, "test.cfg").unwrap();
        assert_eq!(scenarios.len(), 1);
        let s = &scenarios[0];
        assert_eq!(s.name, "fig3b");
        assert_eq!(s.experiment, Experiment::SingleCycle);
        assert_eq!(s.seed, 42);
        assert_eq!(s.trials, 500);
        assert_eq!(s.out_file(), "custom.csv");
    }

    #[test]
    fn empty_config_yields_no_scenarios() {
        assert_eq!(parse_config("", "e.cfg").unwrap(), vec![]);
        assert_eq!(parse_config("# only comments\n\n", "e.cfg").unwrap(), vec![]);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("[a]\nkind single-cycle\n", "bad.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("bad.cfg:2:"), "{err}");

        let err = parse_config("kind = single-cycle\n", "bad.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("outside any"));

        let err = parse_config("[open\n", "bad.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_kind_and_keys_are_invalid_parameters() {
        let err = parse_config("[x]\nkind = warp\n", "c.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("unknown kind"));

        let err = parse_config("[x]\nkind = single-cycle\ntrails = 5\n", "c.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("trails"), "{err}");
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn value_errors_name_the_field() {
        let err = parse_config("[x]\nkind = single-cycle\np_load = 1.5\n", "c.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);

        let err = parse_config("[x]\nkind = single-cycle\ntrials = many\n", "c.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("trials"));

        let err = parse_config("[x]\nkind = repeated\n", "c.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("target_n"));
    }

    #[test]
    fn duplicate_sections_and_keys_are_rejected() {
        let err = parse_config("[a]\nkind = single-cycle\n[a]\nkind = single-cycle\n", "c.cfg")
            .unwrap_err();
        assert!(err.to_string().contains("duplicate scenario"));

        let err =
            parse_config("[a]\nkind = single-cycle\nseed = 1\nseed = 2\n", "c.cfg").unwrap_err();
        assert!(err.to_string().contains("duplicate key"));
    }

    #[test]
    fn grid_lists_parse_both_shapes() {
        let cfg = "
[m1]
kind = 2d-method1
grids = 20x20 25x25
[m2]
kind = 2d-method2
grids = 12x40:12 14x35:14
";
        let scenarios = parse_config(cfg, "g.cfg").unwrap();
        assert_eq!(
            scenarios[0].experiment,
            Experiment::GridDeletion { grids: vec![(20, 20), (25, 25)], max_passes: 40 }
        );
        assert_eq!(
            scenarios[1].experiment,
            Experiment::GridPerRow { grids: vec![(12, 40, 12), (14, 35, 14)], max_passes: 40 }
        );

        let err = parse_config("[m]\nkind = 2d-method2\ngrids = 12x40\n", "g.cfg").unwrap_err();
        assert_eq!(err.exit_code(), 3);

        let err = parse_config("[m]\nkind = 2d-method2\ngrids = 3x4:9\n", "g.cfg").unwrap_err();
        assert!(err.to_string().contains("exceeds"));
    }

    #[test]
    fn maintenance_requires_consistent_counts() {
        let err = parse_config(
            "[m]\nkind = maintenance\ntarget_n = 30\ninitial_atoms = 20\n",
            "m.cfg",
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("initial_atoms"));
    }
}
