//! Per-tone amplitude calibration against a measured trap response.
//!
//! The plant is an abstract response function (in the lab, a lightshift
//! measurement per trap). Multiplicative damped feedback levels the
//! responses; the resulting per-frequency amplitudes interpolate into a
//! smooth [`AmplitudeMap`] that sweeps sample while a tone is in motion.

use crate::waveform::WaveformError;

/// Feedback damping exponent: `A <- A * (target / response)^GAMMA`.
pub const CALIBRATION_GAMMA: f64 = 0.5;
/// Convergence bound on `max_i |response_i / target_i - 1|`.
pub const CALIBRATION_TOLERANCE: f64 = 0.02;

/// Monotone piecewise-cubic interpolant through `(frequency, amplitude)`
/// samples.
///
/// Tangents follow the Fritsch-Carlson construction, which never overshoots:
/// between two sample points the interpolant stays within their value range,
/// and it reproduces every sample exactly. Evaluation outside the sampled
/// span clamps to the end values.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMap {
    freqs_hz: Vec<f64>,
    amps: Vec<f64>,
    tangents: Vec<f64>,
}

impl AmplitudeMap {
    /// Points must be sorted by strictly increasing frequency; at least one
    /// point is required (a single point gives a constant map).
    pub fn from_points(points: &[(i64, f64)]) -> Result<Self, WaveformError> {
        if points.is_empty() {
            return Err(WaveformError::TooFewPoints { need: 1, got: 0 });
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(WaveformError::UnevenComb);
            }
        }
        for &(_, a) in points {
            if !(a.is_finite() && a >= 0.0) {
                return Err(WaveformError::BadAmplitude(a));
            }
        }
        let freqs_hz: Vec<f64> = points.iter().map(|&(f, _)| f as f64).collect();
        let amps: Vec<f64> = points.iter().map(|&(_, a)| a).collect();
        let tangents = fritsch_carlson_tangents(&freqs_hz, &amps);
        Ok(Self { freqs_hz, amps, tangents })
    }

    /// Interpolated amplitude at `freq_hz` (continuous: sweeps evaluate
    /// between comb tones). Clamps beyond the sampled span.
    pub fn eval(&self, freq_hz: f64) -> f64 {
        let n = self.freqs_hz.len();
        if n == 1 || freq_hz <= self.freqs_hz[0] {
            return self.amps[0];
        }
        if freq_hz >= self.freqs_hz[n - 1] {
            return self.amps[n - 1];
        }
        let i = match self.freqs_hz.binary_search_by(|x| x.partial_cmp(&freq_hz).unwrap()) {
            Ok(i) => return self.amps[i],
            Err(i) => i - 1,
        };
        let h = self.freqs_hz[i + 1] - self.freqs_hz[i];
        let t = (freq_hz - self.freqs_hz[i]) / h;
        let (a0, a1) = (self.amps[i], self.amps[i + 1]);
        let (m0, m1) = (self.tangents[i] * h, self.tangents[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * a0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * a1
            + (t3 - t2) * m1
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs_hz.iter().copied().zip(self.amps.iter().copied())
    }
}

/// Monotonicity-preserving tangents (Fritsch-Carlson): zero at local
/// extrema, harmonic-weighted mean of adjacent secants elsewhere, one-sided
/// secants at the ends.
fn fritsch_carlson_tangents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 1 {
        return vec![0.0];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        let (s0, s1) = (secants[i - 1], secants[i]);
        if s0 * s1 <= 0.0 {
            m[i] = 0.0;
        } else {
            let w0 = 2.0 * h[i] + h[i - 1];
            let w1 = h[i] + 2.0 * h[i - 1];
            m[i] = (w0 + w1) / (w0 / s0 + w1 / s1);
        }
    }
    m
}

/// Iteration record handed back with a calibration result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationReport {
    /// Feedback updates applied before convergence.
    pub iterations: usize,
    /// Final `max_i |response_i / target_i - 1|`.
    pub residual_spread: f64,
}

/// Level per-tone responses by damped multiplicative feedback.
///
/// Starting from `amplitudes = targets`, each round measures
/// `plant(amplitudes)` and updates `A_i <- A_i (target_i / response_i)^0.5`
/// until every response is within [`CALIBRATION_TOLERANCE`] of its target.
/// Returns the interpolating [`AmplitudeMap`] over `frequencies` plus a
/// report; a plant that fails to level within `max_iter` updates is an
/// error carrying the residual spread.
pub fn calibrate_amplitudes(
    plant: impl Fn(&[f64]) -> Vec<f64>,
    frequencies: &[i64],
    targets: &[f64],
    max_iter: usize,
) -> Result<(AmplitudeMap, CalibrationReport), WaveformError> {
    if targets.len() != frequencies.len() {
        return Err(WaveformError::LengthMismatch { want: frequencies.len(), got: targets.len() });
    }
    if frequencies.is_empty() {
        return Err(WaveformError::TooFewPoints { need: 1, got: 0 });
    }
    for &t in targets {
        if !(t.is_finite() && t > 0.0) {
            return Err(WaveformError::BadAmplitude(t));
        }
    }
    let mut amplitudes = targets.to_vec();
    let mut iterations = 0;
    loop {
        let responses = plant(&amplitudes);
        if responses.len() != amplitudes.len() {
            return Err(WaveformError::LengthMismatch {
                want: amplitudes.len(),
                got: responses.len(),
            });
        }
        let spread = responses
            .iter()
            .zip(targets.iter())
            .map(|(&r, &t)| (r / t - 1.0).abs())
            .fold(0.0, f64::max);
        if spread <= CALIBRATION_TOLERANCE {
            let points: Vec<(i64, f64)> =
                frequencies.iter().copied().zip(amplitudes.iter().copied()).collect();
            let mut sorted = points.clone();
            sorted.sort_by_key(|&(f, _)| f);
            let map = AmplitudeMap::from_points(&sorted)?;
            return Ok((map, CalibrationReport { iterations, residual_spread: spread }));
        }
        if iterations >= max_iter {
            return Err(WaveformError::CalibrationDiverged {
                iterations,
                residual_spread: spread,
                tolerance: CALIBRATION_TOLERANCE,
            });
        }
        for (a, (&r, &t)) in amplitudes.iter_mut().zip(responses.iter().zip(targets.iter())) {
            if r > 0.0 {
                *a *= (t / r).powf(CALIBRATION_GAMMA);
            } else {
                // Dead response: grow gently rather than divide by zero.
                *a *= 2.0;
            }
        }
        iterations += 1;
    }
}
