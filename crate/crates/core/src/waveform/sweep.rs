//! Piecewise-quadratic frequency sweeps that carry atoms between sites.
//!
//! A sweep accelerates the tone frequency uniformly for the first half of
//! its duration and decelerates for the second: two parabolic arcs, zero
//! slope at both ends (gentle on the atom), peak slope `2 df / T` at the
//! midpoint. The accumulated baseband phase of such a sweep is
//! `2 pi T (mean frequency - upconversion)`, so stretching the duration by
//! a fraction of a carrier cycle lands the tone on any requested end phase.

use std::f64::consts::TAU;

use crate::lattice::TrapLattice;
use crate::waveform::calibrate::AmplitudeMap;
use crate::waveform::{WaveformError, DEFAULT_UPCONVERSION_HZ};

/// Nominal sweep duration before end-phase adjustment, s.
pub const DEFAULT_SWEEP_DURATION_S: f64 = 3e-3;
/// Largest allowed fractional duration stretch for end-phase matching.
pub const DEFAULT_MAX_STRETCH: f64 = 0.01;

/// Sweep-planning context: nominal duration, stretch bound, hardware
/// upconversion, and the frequency band sweeps must stay inside.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlanner {
    base_duration_s: f64,
    max_stretch: f64,
    upconversion_hz: i64,
    band_lo_hz: i64,
    band_hi_hz: i64,
}

impl SweepPlanner {
    pub fn new(
        base_duration_s: f64,
        max_stretch: f64,
        upconversion_hz: i64,
        band_lo_hz: i64,
        band_hi_hz: i64,
    ) -> Self {
        Self { base_duration_s, max_stretch, upconversion_hz, band_lo_hz, band_hi_hz }
    }

    /// Planner whose band is the lattice's comb span, with default duration,
    /// stretch bound, and upconversion.
    pub fn for_lattice(lattice: &TrapLattice) -> Self {
        let (lo, hi) = lattice.frequency_span_hz();
        Self::new(
            DEFAULT_SWEEP_DURATION_S,
            DEFAULT_MAX_STRETCH,
            DEFAULT_UPCONVERSION_HZ,
            lo,
            hi,
        )
    }

    pub fn base_duration_s(&self) -> f64 {
        self.base_duration_s
    }

    /// Plan one sweep from `freq_start` to `freq_end`, beginning at phase
    /// `phase_start` and ending at a phase congruent to `phase_target`
    /// (mod 2pi).
    ///
    /// The duration starts at the nominal value and is stretched or
    /// shrunk by at most half a mean-carrier cycle to hit the end phase;
    /// if that exceeds the stretch bound, the error reports the duration
    /// that would have been needed. Equal endpoint frequencies yield a
    /// zero-duration identity plan (a static tone needs no sweep and keeps
    /// its phase).
    pub fn plan_sweep(
        &self,
        freq_start_hz: i64,
        freq_end_hz: i64,
        phase_start_rad: f64,
        phase_target_rad: f64,
    ) -> Result<SweepPlanEntry, WaveformError> {
        for f in [freq_start_hz, freq_end_hz] {
            if f < self.band_lo_hz || f > self.band_hi_hz {
                return Err(WaveformError::OutOfBand {
                    freq_hz: f,
                    lo_hz: self.band_lo_hz,
                    hi_hz: self.band_hi_hz,
                });
            }
        }
        if freq_start_hz == freq_end_hz {
            return Ok(SweepPlanEntry {
                freq_start_hz,
                freq_end_hz,
                duration_s: 0.0,
                phase_start_rad,
                phase_end_rad: phase_start_rad,
                upconversion_hz: self.upconversion_hz,
            });
        }
        let f_rel_mean =
            0.5 * (freq_start_hz + freq_end_hz) as f64 - self.upconversion_hz as f64;
        if f_rel_mean <= 0.0 {
            // Phase cannot be steered by stretching when the mean baseband
            // frequency vanishes; out of scope for real combs, which sit
            // well above the upconversion.
            return Err(WaveformError::PhaseUnreachable { required_duration_s: f64::INFINITY });
        }
        let t0 = self.base_duration_s;
        let phase_end_nominal = phase_start_rad + TAU * f_rel_mean * t0;
        let mismatch = wrap_pm_pi(phase_target_rad - phase_end_nominal);
        let dt = mismatch / (TAU * f_rel_mean);
        let duration_s = t0 + dt;
        if dt.abs() > self.max_stretch * t0 {
            return Err(WaveformError::PhaseUnreachable { required_duration_s: duration_s });
        }
        Ok(SweepPlanEntry {
            freq_start_hz,
            freq_end_hz,
            duration_s,
            phase_start_rad,
            phase_end_rad: phase_start_rad + TAU * f_rel_mean * duration_s,
            upconversion_hz: self.upconversion_hz,
        })
    }

    /// Sweep plans for every ordered (start site, end site) pair of the
    /// lattice, row-major by start site: entry `src * n + dst`. Diagonal
    /// entries are identity plans. `phases` gives each site's optimal
    /// phase; a sweep from `src` starts at `phases[src]` and targets
    /// `phases[dst]`.
    pub fn sweep_table(
        &self,
        lattice: &TrapLattice,
        phases: &[f64],
    ) -> Result<Vec<SweepPlanEntry>, WaveformError> {
        let n = lattice.sites();
        if phases.len() != n {
            return Err(WaveformError::LengthMismatch { want: n, got: phases.len() });
        }
        let freqs: Vec<i64> = lattice.frequencies_hz().collect();
        let mut table = Vec::with_capacity(n * n);
        for src in 0..n {
            for dst in 0..n {
                table.push(self.plan_sweep(freqs[src], freqs[dst], phases[src], phases[dst])?);
            }
        }
        Ok(table)
    }
}

/// One planned sweep. `phase_end_rad` is the accumulated (unwrapped)
/// baseband phase at the end of the sweep; it is congruent to the requested
/// target mod 2pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlanEntry {
    pub freq_start_hz: i64,
    pub freq_end_hz: i64,
    pub duration_s: f64,
    pub phase_start_rad: f64,
    pub phase_end_rad: f64,
    pub upconversion_hz: i64,
}

impl SweepPlanEntry {
    pub fn is_identity(&self) -> bool {
        self.freq_start_hz == self.freq_end_hz
    }

    /// Instantaneous RF frequency at `t` in `[0, duration]`, Hz.
    ///
    /// First half: `f_s + 2 df (t/T)^2`; second half mirrors it, so the
    /// trajectory is continuous, hits both endpoints exactly, and has zero
    /// slope at the ends with the peak slope `2 df / T` at the midpoint.
    pub fn freq_at(&self, t: f64) -> f64 {
        let (fs, fe) = (self.freq_start_hz as f64, self.freq_end_hz as f64);
        if self.is_identity() || self.duration_s == 0.0 {
            return fs;
        }
        let big_t = self.duration_s;
        let df = fe - fs;
        let t = t.clamp(0.0, big_t);
        if t <= 0.5 * big_t {
            let x = t / big_t;
            fs + 2.0 * df * x * x
        } else {
            let x = 1.0 - t / big_t;
            fe - 2.0 * df * x * x
        }
    }

    /// Accumulated baseband phase at `t`: `phase_start + 2 pi
    /// integral of (freq(u) - upconversion) du`, in closed form.
    pub fn phase_at(&self, t: f64) -> f64 {
        let (fs, fe) = (self.freq_start_hz as f64, self.freq_end_hz as f64);
        let f_up = self.upconversion_hz as f64;
        if self.is_identity() || self.duration_s == 0.0 {
            return self.phase_start_rad + TAU * (fs - f_up) * t;
        }
        let big_t = self.duration_s;
        let df = fe - fs;
        let t = t.clamp(0.0, big_t);
        let integral = if t <= 0.5 * big_t {
            let x = t / big_t;
            (fs - f_up) * t + 2.0 / 3.0 * df * big_t * x * x * x
        } else {
            let half = 0.5 * big_t;
            let at_half = (fs - f_up) * half + df * big_t / 12.0;
            let x = 1.0 - t / big_t;
            at_half + (fe - f_up) * (t - half) + 2.0 / 3.0 * df * big_t * (x * x * x - 0.125)
        };
        self.phase_start_rad + TAU * integral
    }

    /// Largest |df/dt| along the trajectory, reached at the midpoint.
    pub fn peak_slope_hz_per_s(&self) -> f64 {
        if self.duration_s == 0.0 {
            return 0.0;
        }
        2.0 * (self.freq_end_hz - self.freq_start_hz).abs() as f64 / self.duration_s
    }

    /// Drive amplitude at `t`, following the calibration map along the
    /// instantaneous frequency.
    pub fn amplitude_at(&self, t: f64, map: &AmplitudeMap) -> f64 {
        map.eval(self.freq_at(t))
    }
}

fn wrap_pm_pi(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w > std::f64::consts::PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn planner() -> SweepPlanner {
        SweepPlanner::for_lattice(&TrapLattice::default_1d())
    }

    #[test]
    fn ten_megahertz_sweep_kinematics() {
        let p = SweepPlanner::new(3e-3, 0.01, DEFAULT_UPCONVERSION_HZ, 74_500_000, 123_010_000);
        let e = p.plan_sweep(80_000_000, 90_000_000, 0.0, 0.0).unwrap();
        let t = e.duration_s;
        assert_relative_eq!(e.freq_at(0.0), 80e6);
        assert_relative_eq!(e.freq_at(t), 90e6);
        assert_relative_eq!(e.freq_at(0.5 * t), 85e6, epsilon = 1e-3);
        // Peak slope 2 df / T near 6.67 GHz/s for the nominal duration.
        assert_relative_eq!(e.peak_slope_hz_per_s(), 2.0 * 10e6 / t);
        assert!((e.peak_slope_hz_per_s() - 6.67e9).abs() / 6.67e9 < 0.02);
        // Endpoint slopes vanish: frequency barely changes near the ends.
        let eps = t * 1e-4;
        assert!((e.freq_at(eps) - 80e6).abs() < 1.0);
        assert!((e.freq_at(t - eps) - 90e6).abs() < 1.0);
    }

    #[test]
    fn identity_sweep_is_zero_length() {
        let e = planner().plan_sweep(80_000_000, 80_000_000, 1.0, 2.5).unwrap();
        assert!(e.is_identity());
        assert_eq!(e.duration_s, 0.0);
        assert_eq!(e.phase_end_rad, 1.0);
    }

    #[test]
    fn end_phase_matches_target_within_stretch() {
        let p = planner();
        let mut worst_stretch: f64 = 0.0;
        for k in 0..50 {
            let f1 = 74_500_000 + 490_000 * (k % 100);
            let f2 = 74_500_000 + 490_000 * ((37 * k + 11) % 100);
            if f1 == f2 {
                continue;
            }
            let target = (k as f64) * 0.713;
            let e = p.plan_sweep(f1, f2, 0.3, target).unwrap();
            let err = wrap_pm_pi(e.phase_at(e.duration_s) - target);
            assert!(err.abs() < 1e-6, "phase error {err}");
            worst_stretch =
                worst_stretch.max((e.duration_s - 3e-3).abs() / 3e-3);
        }
        assert!(worst_stretch <= 0.01);
        // The adjustment is at most half a mean-carrier cycle, well under
        // a microsecond for in-band sweeps.
        assert!(worst_stretch * 3e-3 < 1e-6);
    }

    #[test]
    fn phase_closed_form_matches_numeric_integration() {
        let e = planner().plan_sweep(74_990_000, 101_450_000, 0.4, 3.0).unwrap();
        let t = e.duration_s;
        let steps = 200_001;
        let h = t / (steps - 1) as f64;
        // Simpson integration of the instantaneous baseband frequency.
        let f_rel = |u: f64| e.freq_at(u) - e.upconversion_hz as f64;
        let mut acc = f_rel(0.0) + f_rel(t);
        for i in 1..steps - 1 {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f_rel(i as f64 * h);
        }
        let numeric = e.phase_start_rad + TAU * acc * h / 3.0;
        assert_relative_eq!(e.phase_at(t), numeric, epsilon = 1e-6, max_relative = 1e-10);
        // Interior points agree too.
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let tt = frac * t;
            let steps = 100_001;
            let h = tt / (steps - 1) as f64;
            let mut acc = f_rel(0.0) + f_rel(tt);
            for i in 1..steps - 1 {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f_rel(i as f64 * h);
            }
            let numeric = e.phase_start_rad + TAU * acc * h / 3.0;
            assert_relative_eq!(e.phase_at(tt), numeric, epsilon = 1e-6, max_relative = 1e-10);
        }
    }

    #[test]
    fn out_of_band_is_rejected() {
        let err = planner().plan_sweep(60_000_000, 80_000_000, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, WaveformError::OutOfBand { freq_hz: 60_000_000, .. }));
    }

    #[test]
    fn table_covers_all_pairs_and_matches_on_demand() {
        let lat = TrapLattice::new(7, 74_500_000, 490_000, 2.6e-6).unwrap();
        let p = SweepPlanner::for_lattice(&lat);
        let phases: Vec<f64> = (0..7).map(|i| (i as f64) * 0.9).collect();
        let table = p.sweep_table(&lat, &phases).unwrap();
        assert_eq!(table.len(), 49);
        for src in 0..7 {
            for dst in 0..7 {
                let entry = table[src * 7 + dst];
                let direct = p
                    .plan_sweep(
                        lat.site_frequency_hz(src).unwrap(),
                        lat.site_frequency_hz(dst).unwrap(),
                        phases[src],
                        phases[dst],
                    )
                    .unwrap();
                assert_eq!(entry, direct);
                assert_eq!(entry.is_identity(), src == dst);
            }
        }
    }

    #[test]
    fn single_site_table_is_one_identity() {
        let lat = TrapLattice::new(1, 74_500_000, 490_000, 2.6e-6).unwrap();
        let table = SweepPlanner::for_lattice(&lat).sweep_table(&lat, &[0.5]).unwrap();
        assert_eq!(table.len(), 1);
        assert!(table[0].is_identity());
    }
}
