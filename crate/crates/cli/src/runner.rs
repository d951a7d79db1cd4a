//! Scenario execution and table output.
//!
//! Every run writes one primary output file per scenario (CSV, or the
//! waveform binary) plus a JSON sidecar for the experiment kinds whose
//! headline numbers are not per-row quantities. All numeric output is
//! formatted with Rust's shortest round-trip float notation, so a rerun
//! with the same seed reproduces files byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use atomweaver_core::lattice::{
    TrapLattice, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M,
};
use atomweaver_core::simulator::grid2d::{simulate_2d, Grid2dOptions, GridMethod};
use atomweaver_core::simulator::maintenance::{simulate_maintenance, MaintenanceOptions};
use atomweaver_core::simulator::{
    simulate_repeated_rearrangement, simulate_single_cycle, theory_curve_table, MonteCarloConfig,
};
use atomweaver_core::stochastic::{LoadingModel, LossModel, RngStream};
use atomweaver_core::waveform::intermod::{imd_objective, optimize_phases};
use atomweaver_core::waveform::spectrum::power_spectrum_db;
use atomweaver_core::waveform::sweep::SweepPlanner;
use atomweaver_core::waveform::{synthesize, write_waveform, ToneSet};

use crate::config::{Experiment, PhaseMode, Scenario};
use crate::CliError;

/// Run scenarios in order, writing outputs under `out_dir` (used for
/// relative output paths). Returns every file written.
pub fn run_scenarios(scenarios: &[Scenario], out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for scenario in scenarios {
        written.extend(run_scenario(scenario, out_dir)?);
    }
    Ok(written)
}

fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let out_path = resolve(out_dir, &s.out_file());
    match &s.experiment {
        Experiment::SingleCycle => run_single_cycle(s, &out_path),
        Experiment::Repeated { target_n, max_attempts } => {
            run_repeated(s, *target_n, *max_attempts, &out_path)
        }
        Experiment::Maintenance { target_n, initial_atoms, repair, max_probes } => {
            let opts = MaintenanceOptions {
                target_n: *target_n,
                initial_atoms: *initial_atoms,
                repair: *repair,
                max_probes: *max_probes,
            };
            run_maintenance(s, &opts, &out_path)
        }
        Experiment::GridDeletion { grids, max_passes } => {
            let shapes: Vec<(usize, usize, Option<usize>)> =
                grids.iter().map(|&(r, c)| (r, c, None)).collect();
            run_grid(s, &shapes, *max_passes, &out_path)
        }
        Experiment::GridPerRow { grids, max_passes } => {
            let shapes: Vec<(usize, usize, Option<usize>)> =
                grids.iter().map(|&(r, c, w)| (r, c, Some(w))).collect();
            run_grid(s, &shapes, *max_passes, &out_path)
        }
        Experiment::Waveform { n_tones, duration_s, phases } => {
            run_waveform(s, *n_tones, *duration_s, *phases, &out_path)
        }
        Experiment::Phases { n_tones } => run_phases(s, *n_tones, &out_path),
        Experiment::SweepTable => run_sweep_table(s, &out_path),
    }
}

fn resolve(out_dir: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    // Maps are ordered, so the rendering is deterministic.
    writeln!(w, "{:#}", value)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    finish(w, path)
}

fn mc_config(s: &Scenario) -> Result<MonteCarloConfig, CliError> {
    let ctx = format!("scenario `{}`", s.name);
    let lattice =
        TrapLattice::new(s.sites, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M)
            .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let loading = LoadingModel::new(s.p_load).map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let loss = LossModel::with_move_penalty(s.tau_s, s.move_penalty_per_m)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    Ok(MonteCarloConfig {
        trials: s.trials,
        seed: s.seed,
        lattice,
        loading,
        loss,
        timing: s.timing,
    })
}

fn run_single_cycle(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = mc_config(s)?;
    let summary = simulate_single_cycle(&cfg).map_err(|e| CliError::runtime(e.to_string()))?;
    let theory = theory_curve_table(&cfg);
    let mut w = create(out)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "N,pre_estimate,pre_lo,pre_hi,post_estimate,post_lo,post_hi,solid,dashed,dashdot"
        )?;
        for (i, &n) in summary.lengths.iter().enumerate() {
            let (pre, post, th) = (summary.pre[i], summary.post[i], theory[i]);
            writeln!(
                w,
                "{n},{},{},{},{},{},{},{},{},{}",
                pre.estimate,
                pre.lower,
                pre.upper,
                post.estimate,
                post.lower,
                post.upper,
                th.solid,
                th.dashed,
                th.dashdot
            )?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;
    Ok(vec![out.to_path_buf()])
}

fn run_repeated(
    s: &Scenario,
    target_n: usize,
    max_attempts: usize,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = mc_config(s)?;
    let curve = simulate_repeated_rearrangement(&cfg, target_n, max_attempts)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let mut w = create(out)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "scenario,target_n,attempt,estimate,lo,hi,trials,seed")?;
        for (i, e) in curve.iter().enumerate() {
            writeln!(
                w,
                "{},{target_n},{},{},{},{},{},{}",
                s.name,
                i + 1,
                e.estimate,
                e.lower,
                e.upper,
                s.trials,
                s.seed
            )?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;
    Ok(vec![out.to_path_buf()])
}

fn run_maintenance(
    s: &Scenario,
    opts: &MaintenanceOptions,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = mc_config(s)?;
    let summary = simulate_maintenance(&cfg, opts).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut w = create(out)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "scenario,probe_time_s,estimate,lo,hi,trials,seed")?;
        for (t, e) in summary.probe_times_s.iter().zip(&summary.survival) {
            writeln!(
                w,
                "{},{t},{},{},{},{},{}",
                s.name, e.estimate, e.lower, e.upper, s.trials, s.seed
            )?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;

    let json_path = out.with_extension("json");
    write_json(
        &json_path,
        &serde_json::json!({
            "scenario": s.name,
            "target_n": opts.target_n,
            "initial_atoms": opts.initial_atoms,
            "repair": opts.repair,
            "mean_lifetime_s": summary.mean_lifetime_s.estimate,
            "lifetime_lo_s": summary.mean_lifetime_s.lower,
            "lifetime_hi_s": summary.mean_lifetime_s.upper,
            "censored_trials": summary.censored,
            "trials": s.trials,
            "seed": s.seed,
        }),
    )?;
    Ok(vec![out.to_path_buf(), json_path])
}

fn run_grid(
    s: &Scenario,
    shapes: &[(usize, usize, Option<usize>)],
    max_passes: usize,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = mc_config(s)?;
    let mut w = create(out)?;
    let mut records = Vec::new();
    let mut rows_out = Vec::new();
    for &(rows, cols, target_cols) in shapes {
        let method = match target_cols {
            None => GridMethod::Deletion,
            Some(w) => GridMethod::PerRow { target_cols: w },
        };
        let opts = Grid2dOptions { rows, cols, method, max_passes };
        let res = simulate_2d(&cfg, &opts).map_err(|e| CliError::runtime(e.to_string()))?;
        let width = target_cols.map(|w| w.to_string()).unwrap_or_default();
        rows_out.push(format!(
            "{},{rows},{cols},{width},{},{},{},{},{},{},{},{},{}",
            s.name,
            res.defect_free_atoms.estimate,
            res.defect_free_atoms.lower,
            res.defect_free_atoms.upper,
            res.clean_fraction.estimate,
            res.clean_fraction.lower,
            res.clean_fraction.upper,
            res.mean_passes,
            s.trials,
            s.seed
        ));
        records.push(serde_json::json!({
            "rows": rows,
            "cols": cols,
            "target_cols": target_cols,
            "defect_free_atoms": res.defect_free_atoms.estimate,
            "atoms_lo": res.defect_free_atoms.lower,
            "atoms_hi": res.defect_free_atoms.upper,
            "clean_fraction": res.clean_fraction.estimate,
            "mean_passes": res.mean_passes,
        }));
    }
    let mut emit = || -> std::io::Result<()> {
        writeln!(
            w,
            "scenario,rows,cols,target_cols,atoms_estimate,atoms_lo,atoms_hi,\
             clean_fraction,clean_lo,clean_hi,mean_passes,trials,seed"
        )?;
        for line in &rows_out {
            writeln!(w, "{line}")?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;

    let json_path = out.with_extension("json");
    write_json(
        &json_path,
        &serde_json::json!({
            "scenario": s.name,
            "p_load": s.p_load,
            "tau_s": s.tau_s,
            "trials": s.trials,
            "seed": s.seed,
            "points": records,
        }),
    )?;
    Ok(vec![out.to_path_buf(), json_path])
}

fn comb_lattice(s: &Scenario, n_tones: usize) -> Result<TrapLattice, CliError> {
    TrapLattice::new(n_tones, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M)
        .map_err(|e| CliError::invalid(format!("scenario `{}`", s.name), e.to_string()))
}

fn run_waveform(
    s: &Scenario,
    n_tones: usize,
    duration_s: f64,
    mode: PhaseMode,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let ctx = format!("scenario `{}`", s.name);
    let lattice = comb_lattice(s, n_tones)?;
    let amplitudes = vec![1.0; n_tones];
    let phases = match mode {
        PhaseMode::Zero => vec![0.0; n_tones],
        PhaseMode::Random => {
            let mut rng = RngStream::new(s.seed, 0);
            (0..n_tones).map(|_| rng.uniform() * std::f64::consts::TAU).collect()
        }
        PhaseMode::Optimized => {
            let freqs: Vec<i64> = lattice.frequencies_hz().collect();
            let mut rng = RngStream::new(s.seed, 0);
            optimize_phases(&freqs, &amplitudes, &mut rng)
                .map_err(|e| CliError::invalid(&ctx, e.to_string()))?
        }
    };
    let tones = ToneSet::for_lattice(&lattice, &amplitudes, &phases)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let samples =
        synthesize(&tones, duration_s).map_err(|e| CliError::invalid(&ctx, e.to_string()))?;

    let mut w = create(out)?;
    write_waveform(&mut w, &samples)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;

    let spectrum = power_spectrum_db(&samples, tones.sample_rate_hz(), tones.upconversion_hz())
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let spec_path = spectrum_path(out);
    let mut w = create(&spec_path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "frequency_hz,power_db")?;
        for (f, p) in &spectrum {
            writeln!(w, "{f},{p}")?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", spec_path.display())))?;
    finish(w, &spec_path)?;
    Ok(vec![out.to_path_buf(), spec_path])
}

fn spectrum_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}_spectrum.csv"))
}

fn run_phases(s: &Scenario, n_tones: usize, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ctx = format!("scenario `{}`", s.name);
    let lattice = comb_lattice(s, n_tones)?;
    let freqs: Vec<i64> = lattice.frequencies_hz().collect();
    let amplitudes = vec![1.0; n_tones];
    let equal = vec![0.0; n_tones];
    let before = imd_objective(&equal, &amplitudes, &freqs)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let mut rng = RngStream::new(s.seed, 0);
    let phases = optimize_phases(&freqs, &amplitudes, &mut rng)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let after = imd_objective(&phases, &amplitudes, &freqs)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;

    let mut w = create(out)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "tone,frequency_hz,phase_rad")?;
        for (i, (&f, &p)) in freqs.iter().zip(&phases).enumerate() {
            writeln!(w, "{i},{f},{p}")?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;

    let suppression_db = if before > 0.0 && after > 0.0 {
        Some(10.0 * (before / after).log10())
    } else {
        None
    };
    let json_path = out.with_extension("json");
    write_json(
        &json_path,
        &serde_json::json!({
            "scenario": s.name,
            "n_tones": n_tones,
            "objective_equal_phases": before,
            "objective_optimized": after,
            "suppression_db": suppression_db,
            "seed": s.seed,
        }),
    )?;
    Ok(vec![out.to_path_buf(), json_path])
}

fn run_sweep_table(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ctx = format!("scenario `{}`", s.name);
    let lattice = comb_lattice(s, s.sites)?;
    let planner = SweepPlanner::for_lattice(&lattice);
    let phases = vec![0.0; s.sites];
    let table = planner
        .sweep_table(&lattice, &phases)
        .map_err(|e| CliError::invalid(&ctx, e.to_string()))?;
    let mut w = create(out)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "src,dst,freq_start_hz,freq_end_hz,duration_s,phase_end_rad")?;
        let n = lattice.sites();
        for (i, e) in table.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                i / n,
                i % n,
                e.freq_start_hz,
                e.freq_end_hz,
                e.duration_s,
                e.phase_end_rad
            )?;
        }
        Ok(())
    };
    emit().map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out.display())))?;
    finish(w, out)?;
    Ok(vec![out.to_path_buf()])
}
