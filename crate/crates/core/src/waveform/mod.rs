//! Multi-tone RF waveform mathematics for the deflector drive.
//!
//! The deflector sees a sum of complex tones, digitally synthesized at
//! baseband and upconverted in hardware. Everything downstream of trap
//! quality lives here: exact tone synthesis ([`synthesize`]), the mixer
//! model for intermodulation products ([`intermod`]), phase optimization
//! against those products, per-tone amplitude calibration ([`calibrate`]),
//! and the piecewise-quadratic frequency sweeps that move atoms ([`sweep`]).

pub mod calibrate;
pub mod intermod;
pub mod spectrum;
pub mod sweep;

use std::f64::consts::TAU;
use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::TrapLattice;

/// Hardware upconversion frequency applied after digital synthesis, Hz.
pub const DEFAULT_UPCONVERSION_HZ: i64 = 74_000_000;
/// Synthesizer sample rate, Hz.
pub const DEFAULT_SAMPLE_RATE_HZ: i64 = 100_000_000;
/// Tone frequency granularity that keeps a 1 ms buffer loop-periodic, Hz.
pub const TONE_GRANULARITY_HZ: i64 = 1_000;

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("amplitude must be nonnegative and finite, got {0}")]
    BadAmplitude(f64),
    #[error("phase must be finite")]
    BadPhase,
    #[error("tone frequency {0} Hz is not a multiple of {TONE_GRANULARITY_HZ} Hz")]
    OffGridFrequency(i64),
    #[error("duplicate tone frequency {0} Hz")]
    DuplicateFrequency(i64),
    #[error("baseband tone at {freq_rel_hz} Hz exceeds Nyquist of {sample_rate_hz} Hz sampling")]
    NyquistViolation { freq_rel_hz: i64, sample_rate_hz: i64 },
    #[error("frequency {freq_hz} Hz outside deflector band [{lo_hz}, {hi_hz}] Hz")]
    OutOfBand { freq_hz: i64, lo_hz: i64, hi_hz: i64 },
    #[error("duration {0} s is not a whole number of sample periods")]
    DurationNotSampleAligned(f64),
    #[error("expected {want} values, got {got}")]
    LengthMismatch { want: usize, got: usize },
    #[error("frequencies must form an evenly spaced ascending comb")]
    UnevenComb,
    #[error("need at least {need} calibration points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("calibration spread {residual_spread:.4} still above {:.1}% after {iterations} iterations", .tolerance * 100.0)]
    CalibrationDiverged { iterations: usize, residual_spread: f64, tolerance: f64 },
    #[error("end phase unreachable within duration stretch bound; would need {required_duration_s} s")]
    PhaseUnreachable { required_duration_s: f64 },
    #[error("invalid sample rate {0} Hz")]
    BadSampleRate(i64),
}

/// One RF drive tone: a tweezer trap, or a spurious mixing product.
///
/// Frequencies are integer hertz on a 1 kHz grid so that a 1 ms buffer of
/// any tone set closes on itself exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    amplitude: f64,
    phase_rad: f64,
    freq_hz: i64,
}

impl Tone {
    pub fn new(amplitude: f64, phase_rad: f64, freq_hz: i64) -> Result<Self, WaveformError> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(WaveformError::BadAmplitude(amplitude));
        }
        if !phase_rad.is_finite() {
            return Err(WaveformError::BadPhase);
        }
        if freq_hz % TONE_GRANULARITY_HZ != 0 {
            return Err(WaveformError::OffGridFrequency(freq_hz));
        }
        Ok(Self { amplitude, phase_rad: phase_rad.rem_euclid(TAU), freq_hz })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Phase normalized into [0, 2pi).
    pub fn phase_rad(&self) -> f64 {
        self.phase_rad
    }

    pub fn freq_hz(&self) -> i64 {
        self.freq_hz
    }
}

/// A set of simultaneous tones plus the hardware constants needed to turn
/// them into samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneSet {
    tones: Vec<Tone>,
    upconversion_hz: i64,
    sample_rate_hz: i64,
}

impl ToneSet {
    /// Tones must have pairwise distinct frequencies and sit below Nyquist
    /// after downconversion.
    pub fn new(
        tones: Vec<Tone>,
        upconversion_hz: i64,
        sample_rate_hz: i64,
    ) -> Result<Self, WaveformError> {
        if sample_rate_hz <= 0 {
            return Err(WaveformError::BadSampleRate(sample_rate_hz));
        }
        let mut freqs: Vec<i64> = tones.iter().map(|t| t.freq_hz).collect();
        freqs.sort_unstable();
        for w in freqs.windows(2) {
            if w[0] == w[1] {
                return Err(WaveformError::DuplicateFrequency(w[0]));
            }
        }
        for t in &tones {
            let rel = t.freq_hz - upconversion_hz;
            if 2 * rel.abs() >= sample_rate_hz {
                return Err(WaveformError::NyquistViolation {
                    freq_rel_hz: rel,
                    sample_rate_hz,
                });
            }
        }
        Ok(Self { tones, upconversion_hz, sample_rate_hz })
    }

    /// One tone per lattice site with the default hardware constants;
    /// amplitudes and phases are per-site. Frequencies outside the comb
    /// cannot occur by construction, so this is the checked path for trap
    /// drives.
    pub fn for_lattice(
        lattice: &TrapLattice,
        amplitudes: &[f64],
        phases: &[f64],
    ) -> Result<Self, WaveformError> {
        if amplitudes.len() != lattice.sites() {
            return Err(WaveformError::LengthMismatch {
                want: lattice.sites(),
                got: amplitudes.len(),
            });
        }
        if phases.len() != lattice.sites() {
            return Err(WaveformError::LengthMismatch { want: lattice.sites(), got: phases.len() });
        }
        let tones = lattice
            .frequencies_hz()
            .zip(amplitudes.iter().zip(phases.iter()))
            .map(|(f, (&a, &p))| Tone::new(a, p, f))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(tones, DEFAULT_UPCONVERSION_HZ, DEFAULT_SAMPLE_RATE_HZ)
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn upconversion_hz(&self) -> i64 {
        self.upconversion_hz
    }

    pub fn sample_rate_hz(&self) -> i64 {
        self.sample_rate_hz
    }
}

/// Sample the baseband sum `sum_i A_i exp(i(phi_i + 2pi (w_i - w_up) t))`.
///
/// Per-sample phases are computed from the integer residue
/// `(f_rel * k) mod f_s`, never from accumulated floating-point steps, so a
/// buffer whose tones divide its length evenly is periodic exactly: the
/// sample after the last equals the first bit-for-bit.
pub fn synthesize(ts: &ToneSet, duration_s: f64) -> Result<Vec<Complex64>, WaveformError> {
    let fs = ts.sample_rate_hz;
    let n_exact = duration_s * fs as f64;
    let n = n_exact.round();
    if !(n_exact.is_finite() && n >= 0.0 && (n_exact - n).abs() <= 1e-6) {
        return Err(WaveformError::DurationNotSampleAligned(duration_s));
    }
    let n = n as usize;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for tone in &ts.tones {
        if tone.amplitude == 0.0 {
            continue;
        }
        let f_rel = tone.freq_hz - ts.upconversion_hz;
        for (k, s) in samples.iter_mut().enumerate() {
            let residue = (f_rel as i128 * k as i128).rem_euclid(fs as i128);
            let angle = tone.phase_rad + TAU * residue as f64 / fs as f64;
            *s += Complex64::from_polar(tone.amplitude, angle);
        }
    }
    Ok(samples)
}

/// Write samples as an 8-byte little-endian sample count followed by
/// interleaved re/im 32-bit little-endian floats.
pub fn write_waveform(mut w: impl Write, samples: &[Complex64]) -> io::Result<()> {
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

/// Inverse of [`write_waveform`].
pub fn read_waveform(mut r: impl Read) -> io::Result<Vec<Complex64>> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let n = u64::from_le_bytes(header) as usize;
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    let samples = buf
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
            Complex64::new(re, im)
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_tone(freq_hz: i64) -> ToneSet {
        ToneSet::new(
            vec![Tone::new(1.0, 0.0, freq_hz).unwrap()],
            DEFAULT_UPCONVERSION_HZ,
            DEFAULT_SAMPLE_RATE_HZ,
        )
        .unwrap()
    }

    #[test]
    fn tone_validation() {
        assert!(Tone::new(1.0, 0.0, 74_500_000).is_ok());
        assert!(matches!(Tone::new(-1.0, 0.0, 74_500_000), Err(WaveformError::BadAmplitude(_))));
        assert!(matches!(Tone::new(1.0, f64::NAN, 74_500_000), Err(WaveformError::BadPhase)));
        assert!(matches!(Tone::new(1.0, 0.0, 74_500_500), Err(WaveformError::OffGridFrequency(_))));
        let t = Tone::new(1.0, -1.0, 74_500_000).unwrap();
        assert!((0.0..TAU).contains(&t.phase_rad()));
        assert_relative_eq!(t.phase_rad(), TAU - 1.0);
    }

    #[test]
    fn tone_set_rejects_duplicates_and_nyquist() {
        let a = Tone::new(1.0, 0.0, 80_000_000).unwrap();
        let b = Tone::new(0.5, 1.0, 80_000_000).unwrap();
        assert!(matches!(
            ToneSet::new(vec![a, b], DEFAULT_UPCONVERSION_HZ, DEFAULT_SAMPLE_RATE_HZ),
            Err(WaveformError::DuplicateFrequency(80_000_000))
        ));
        let hot = Tone::new(1.0, 0.0, 74_000_000 + 50_000_000).unwrap();
        assert!(matches!(
            ToneSet::new(vec![hot], DEFAULT_UPCONVERSION_HZ, DEFAULT_SAMPLE_RATE_HZ),
            Err(WaveformError::NyquistViolation { .. })
        ));
    }

    #[test]
    fn single_cycle_tone() {
        // 1 kHz baseband tone over 1 ms: exactly one complex cycle.
        let ts = single_tone(DEFAULT_UPCONVERSION_HZ + 1_000);
        let s = synthesize(&ts, 1e-3).unwrap();
        assert_eq!(s.len(), 100_000);
        assert_relative_eq!(s[0].re, 1.0);
        assert_relative_eq!(s[0].im, 0.0);
        // Quarter cycle in: phase pi/2.
        assert_relative_eq!(s[25_000].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s[25_000].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_equal_tones_peak_at_twice_amplitude() {
        let a = Tone::new(1.0, 0.0, DEFAULT_UPCONVERSION_HZ + 1_000).unwrap();
        let b = Tone::new(1.0, 0.0, DEFAULT_UPCONVERSION_HZ + 2_000).unwrap();
        let ts = ToneSet::new(vec![a, b], DEFAULT_UPCONVERSION_HZ, DEFAULT_SAMPLE_RATE_HZ).unwrap();
        let s = synthesize(&ts, 1e-3).unwrap();
        let peak = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert_relative_eq!(peak, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn misaligned_duration_is_rejected() {
        let ts = single_tone(DEFAULT_UPCONVERSION_HZ + 1_000);
        assert!(matches!(
            synthesize(&ts, 1.23e-8),
            Err(WaveformError::DurationNotSampleAligned(_))
        ));
    }

    #[test]
    fn hundred_tone_buffer_is_loop_periodic_exactly() {
        let lat = TrapLattice::default_1d();
        let phases: Vec<f64> = (0..100).map(|i| (i as f64) * 0.37).collect();
        let ts = ToneSet::for_lattice(&lat, &vec![1.0; 100], &phases).unwrap();
        // Synthesize one sample beyond the loop and compare ends.
        let s = synthesize(&ts, 1e-3 + 1e-8).unwrap();
        assert_eq!(s.len(), 100_001);
        let peak = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mismatch = (s[100_000] - s[0]).norm();
        assert_eq!(mismatch, 0.0, "integer phase arithmetic repeats exactly");
        assert!(peak > 0.0);
    }

    #[test]
    fn parseval_power_for_full_period() {
        let lat = TrapLattice::default_1d();
        let amps: Vec<f64> = (0..100).map(|i| 0.5 + 0.01 * i as f64).collect();
        let phases: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let ts = ToneSet::for_lattice(&lat, &amps, &phases).unwrap();
        let s = synthesize(&ts, 1e-3).unwrap();
        let total: f64 = s.iter().map(|c| c.norm_sqr()).sum();
        let expected = s.len() as f64 * amps.iter().map(|a| a * a).sum::<f64>();
        assert_relative_eq!(total, expected, max_relative = 1e-9);
    }

    #[test]
    fn waveform_file_round_trips() {
        let ts = single_tone(DEFAULT_UPCONVERSION_HZ + 5_000);
        let s = synthesize(&ts, 1e-5).unwrap();
        let mut buf = Vec::new();
        write_waveform(&mut buf, &s).unwrap();
        assert_eq!(buf.len(), 8 + s.len() * 8);
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), s.len() as u64);
        let back = read_waveform(buf.as_slice()).unwrap();
        assert_eq!(back.len(), s.len());
        for (a, b) in s.iter().zip(back.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-6);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-6);
        }
    }
}
