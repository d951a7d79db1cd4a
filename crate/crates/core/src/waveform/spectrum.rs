//! Power spectra of synthesized buffers, for spectrum dumps and tests.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::waveform::WaveformError;

/// Floor applied before converting power to dB.
const POWER_FLOOR: f64 = 1e-30;

/// Power spectrum of a complex baseband buffer, reported at RF.
///
/// Returns `(frequency Hz, power dB)` per FFT bin, ascending in frequency.
/// Bin frequencies are shifted by `upconversion_hz` so they read as RF;
/// power is normalized so a unit-amplitude tone filling the buffer reads
/// 0 dB. Bin spacing is `sample_rate / len`, exact for the 1 ms buffers the
/// synthesizer produces.
pub fn power_spectrum_db(
    samples: &[Complex64],
    sample_rate_hz: i64,
    upconversion_hz: i64,
) -> Result<Vec<(i64, f64)>, WaveformError> {
    if sample_rate_hz <= 0 {
        return Err(WaveformError::BadSampleRate(sample_rate_hz));
    }
    if samples.is_empty() {
        return Err(WaveformError::TooFewPoints { need: 1, got: 0 });
    }
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    let fs = sample_rate_hz as f64;
    let mut out: Vec<(i64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let cycles = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            let freq = (cycles * fs / n as f64).round() as i64 + upconversion_hz;
            let power = (x.norm_sqr() * scale).max(POWER_FLOOR);
            (freq, 10.0 * power.log10())
        })
        .collect();
    out.sort_unstable_by_key(|&(f, _)| f);
    Ok(out)
}

/// Power at the bin nearest `freq_hz`, dB.
pub fn power_at(spectrum: &[(i64, f64)], freq_hz: i64) -> f64 {
    spectrum
        .iter()
        .min_by_key(|&&(f, _)| (f - freq_hz).abs())
        .map(|&(_, p)| p)
        .expect("spectrum is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{
        synthesize, Tone, ToneSet, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_UPCONVERSION_HZ,
    };
    use approx::assert_relative_eq;

    #[test]
    fn single_tone_reads_zero_db_at_its_frequency() {
        let f = 80_000_000;
        let ts = ToneSet::new(
            vec![Tone::new(1.0, 0.3, f).unwrap()],
            DEFAULT_UPCONVERSION_HZ,
            DEFAULT_SAMPLE_RATE_HZ,
        )
        .unwrap();
        let s = synthesize(&ts, 1e-3).unwrap();
        let spec = power_spectrum_db(&s, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_UPCONVERSION_HZ).unwrap();
        assert_relative_eq!(power_at(&spec, f), 0.0, epsilon = 1e-9);
        // Any bin far from the tone sits at the floor.
        assert!(power_at(&spec, f + 10_000_000) < -200.0);
    }

    #[test]
    fn two_tones_read_their_amplitudes() {
        let ts = ToneSet::new(
            vec![
                Tone::new(1.0, 0.0, 80_000_000).unwrap(),
                Tone::new(0.5, 1.0, 90_000_000).unwrap(),
            ],
            DEFAULT_UPCONVERSION_HZ,
            DEFAULT_SAMPLE_RATE_HZ,
        )
        .unwrap();
        let s = synthesize(&ts, 1e-3).unwrap();
        let spec = power_spectrum_db(&s, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_UPCONVERSION_HZ).unwrap();
        assert_relative_eq!(power_at(&spec, 80_000_000), 0.0, epsilon = 1e-9);
        // 0.5 amplitude = -6.02 dB.
        assert_relative_eq!(power_at(&spec, 90_000_000), 20.0 * 0.5f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn bin_frequencies_span_both_nyquist_sides() {
        let ts = ToneSet::new(
            vec![Tone::new(1.0, 0.0, 80_000_000).unwrap()],
            DEFAULT_UPCONVERSION_HZ,
            DEFAULT_SAMPLE_RATE_HZ,
        )
        .unwrap();
        let s = synthesize(&ts, 1e-5).unwrap();
        let spec = power_spectrum_db(&s, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_UPCONVERSION_HZ).unwrap();
        assert_eq!(spec.len(), 1000);
        let lo = spec.first().unwrap().0;
        let hi = spec.last().unwrap().0;
        assert_eq!(lo, DEFAULT_UPCONVERSION_HZ - 50_000_000);
        assert_eq!(hi, DEFAULT_UPCONVERSION_HZ + 50_000_000 - 100_000);
        assert!(spec.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn empty_buffer_is_rejected() {
        assert!(matches!(
            power_spectrum_db(&[], DEFAULT_SAMPLE_RATE_HZ, DEFAULT_UPCONVERSION_HZ),
            Err(WaveformError::TooFewPoints { .. })
        ));
    }
}
