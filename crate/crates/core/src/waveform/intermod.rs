//! Mixer-model intermodulation products and the phase optimization that
//! suppresses them.
//!
//! A weakly nonlinear drive chain mixes every tone pair: order-2 products
//! land at sum and difference frequencies, and order-3 products (difference
//! tones remixed with originals) land back on the comb itself, where they
//! interfere with the real trap tones. On an evenly spaced comb all pair
//! differences with the same index distance share one frequency, so they add
//! coherently; choosing tone phases to make those sums cancel is what keeps
//! the traps uniform.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::stochastic::RngStream;
use crate::waveform::{Tone, ToneSet, WaveformError};

/// Nonlinearity order of the modeled mixing products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingOrder {
    Second,
    Third,
}

/// Spurious tones generated by mixing, with unit-strength coupling: the
/// model asserts relative suppression, not absolute hardware levels.
///
/// Order 2 emits, for each ordered pair (i, j), the difference tone
/// `(w_i - w_j, phi_i - phi_j, A_i A_j)` (both signs appear, matching the
/// two conjugate products) and, for each unordered pair, the sum tone
/// `(w_i + w_j, phi_i + phi_j, A_i A_j)`. Order 3 remixes each difference
/// tone with an original: for each ordered pair (i, j) with i != j this
/// yields `(2 w_i - w_j, 2 phi_i - phi_j, A_i^2 A_j)` plus a component
/// landing back on `(w_j, phi_j, A_i^2 A_j)`.
pub fn intermod_products(ts: &ToneSet, order: MixingOrder) -> Vec<Tone> {
    let tones = ts.tones();
    let mut out = Vec::new();
    match order {
        MixingOrder::Second => {
            for (i, a) in tones.iter().enumerate() {
                for (j, b) in tones.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    out.push(
                        Tone::new(
                            a.amplitude() * b.amplitude(),
                            a.phase_rad() - b.phase_rad(),
                            a.freq_hz() - b.freq_hz(),
                        )
                        .expect("difference of on-grid tones is on-grid"),
                    );
                    if i < j {
                        out.push(
                            Tone::new(
                                a.amplitude() * b.amplitude(),
                                a.phase_rad() + b.phase_rad(),
                                a.freq_hz() + b.freq_hz(),
                            )
                            .expect("sum of on-grid tones is on-grid"),
                        );
                    }
                }
            }
        }
        MixingOrder::Third => {
            for (i, a) in tones.iter().enumerate() {
                for (j, b) in tones.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let coupling = a.amplitude() * a.amplitude() * b.amplitude();
                    out.push(
                        Tone::new(
                            coupling,
                            2.0 * a.phase_rad() - b.phase_rad(),
                            2 * a.freq_hz() - b.freq_hz(),
                        )
                        .expect("comb arithmetic stays on-grid"),
                    );
                    out.push(
                        Tone::new(coupling, b.phase_rad(), b.freq_hz())
                            .expect("original frequency is on-grid"),
                    );
                }
            }
        }
    }
    out
}

fn check_comb(frequencies: &[i64], phases: &[f64], amplitudes: &[f64]) -> Result<(), WaveformError> {
    if phases.len() != frequencies.len() {
        return Err(WaveformError::LengthMismatch { want: frequencies.len(), got: phases.len() });
    }
    if amplitudes.len() != frequencies.len() {
        return Err(WaveformError::LengthMismatch {
            want: frequencies.len(),
            got: amplitudes.len(),
        });
    }
    if frequencies.len() >= 2 {
        let step = frequencies[1] - frequencies[0];
        if step <= 0 {
            return Err(WaveformError::UnevenComb);
        }
        for w in frequencies.windows(2) {
            if w[1] - w[0] != step {
                return Err(WaveformError::UnevenComb);
            }
        }
    }
    Ok(())
}

/// Coherent difference-tone sums `S_d = sum_i A_i A_{i+d} e^{i(phi_i - phi_{i+d})}`
/// for every index distance d.
fn difference_sums(phases: &[f64], amplitudes: &[f64]) -> Vec<Complex64> {
    let n = phases.len();
    let phasors: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(amplitudes[i], phases[i])).collect();
    (1..n)
        .map(|d| (0..n - d).map(|i| phasors[i] * phasors[i + d].conj()).sum())
        .collect()
}

/// Total intermodulation power on an evenly spaced comb.
///
/// All pair differences with index distance d land on one frequency
/// `d * step`, so they sum coherently; distinct distances occupy distinct
/// frequencies and add as powers: `sum_d |S_d|^2`. A global phase offset
/// cancels inside every S_d, so the objective is shift-invariant.
pub fn imd_objective(
    phases: &[f64],
    amplitudes: &[f64],
    frequencies: &[i64],
) -> Result<f64, WaveformError> {
    check_comb(frequencies, phases, amplitudes)?;
    Ok(difference_sums(phases, amplitudes).iter().map(|s| s.norm_sqr()).sum())
}

/// Relative improvement per full coordinate sweep below which the descent
/// stops.
pub const PHASE_DESCENT_TOLERANCE: f64 = 1e-6;
/// Hard cap on coordinate-descent sweeps.
pub const PHASE_DESCENT_MAX_SWEEPS: usize = 100;

/// Minimize the intermodulation objective over tone phases.
///
/// Starts from independent uniform-random phases, then sweeps coordinates:
/// with all other phases fixed, the objective in one phase is
/// `K + Re[P e^{i phi}] + Re[Q e^{2i phi}]`, a two-harmonic function with up
/// to two local minima. Each update brackets the global minimum on a coarse
/// grid and refines it by golden-section search, so the objective never
/// increases. Stops when a full sweep improves the objective by less than
/// [`PHASE_DESCENT_TOLERANCE`] relative, or after
/// [`PHASE_DESCENT_MAX_SWEEPS`] sweeps.
pub fn optimize_phases(
    frequencies: &[i64],
    amplitudes: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>, WaveformError> {
    let n = frequencies.len();
    let mut phases: Vec<f64> = (0..n).map(|_| rng.uniform() * TAU).collect();
    check_comb(frequencies, &phases, amplitudes)?;
    if n < 3 {
        // One pair (or none): |S_d| is phase-invariant, nothing to optimize.
        return Ok(phases);
    }
    let mut objective = imd_objective(&phases, amplitudes, frequencies)?;
    for _ in 0..PHASE_DESCENT_MAX_SWEEPS {
        // Rebuild sums fresh each sweep so incremental updates cannot let
        // rounding drift break the monotone-descent guarantee.
        let mut sums = difference_sums(&phases, amplitudes);
        for i in 0..n {
            // Split each S_d into the part without tone i and tone i's two
            // appearances: S_d = C_d + u_d e^{i phi} + v_d e^{-i phi}.
            let mut p = Complex64::new(0.0, 0.0);
            let mut q = Complex64::new(0.0, 0.0);
            let mut parts: Vec<(usize, Complex64, Complex64, Complex64)> = Vec::new();
            for d in 1..n {
                let u = if i + d < n {
                    Complex64::from_polar(amplitudes[i] * amplitudes[i + d], -phases[i + d])
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let v = if i >= d {
                    Complex64::from_polar(amplitudes[i - d] * amplitudes[i], phases[i - d])
                } else {
                    Complex64::new(0.0, 0.0)
                };
                if u == Complex64::new(0.0, 0.0) && v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let e_i = Complex64::from_polar(1.0, phases[i]);
                let c = sums[d - 1] - u * e_i - v * e_i.conj();
                p += 2.0 * (c.conj() * u + c * v.conj());
                q += 2.0 * u * v.conj();
                parts.push((d, c, u, v));
            }
            let phi = argmin_two_harmonic(p, q);
            // Keep the old phase if the refined point is somehow no better;
            // guards strict descent against grid-bracketing corner cases.
            let score = |phi: f64| {
                (p * Complex64::from_polar(1.0, phi)).re
                    + (q * Complex64::from_polar(1.0, 2.0 * phi)).re
            };
            if score(phi) <= score(phases[i]) {
                phases[i] = phi.rem_euclid(TAU);
            }
            let e_i = Complex64::from_polar(1.0, phases[i]);
            for &(d, c, u, v) in &parts {
                sums[d - 1] = c + u * e_i + v * e_i.conj();
            }
        }
        let new_objective = imd_objective(&phases, amplitudes, frequencies)?;
        debug_assert!(
            new_objective <= objective * (1.0 + 1e-9) + 1e-12,
            "coordinate descent must not increase the objective"
        );
        let improvement = (objective - new_objective).max(0.0);
        let done = improvement < PHASE_DESCENT_TOLERANCE * objective.max(f64::MIN_POSITIVE);
        objective = new_objective;
        if done {
            break;
        }
    }
    Ok(phases)
}

/// Global minimizer of `f(phi) = Re[P e^{i phi}] + Re[Q e^{2i phi}]`.
fn argmin_two_harmonic(p: Complex64, q: Complex64) -> f64 {
    let f = |phi: f64| {
        (p * Complex64::from_polar(1.0, phi)).re + (q * Complex64::from_polar(1.0, 2.0 * phi)).re
    };
    // Coarse scan: 32 points resolve both harmonics' basins safely.
    const GRID: usize = 32;
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..GRID {
        let phi = TAU * k as f64 / GRID as f64;
        let val = f(phi);
        if val < best_val {
            best_val = val;
            best_idx = k;
        }
    }
    let step = TAU / GRID as f64;
    let center = best_idx as f64 * step;
    golden_section_min(&f, center - step, center + step)
}

fn golden_section_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
