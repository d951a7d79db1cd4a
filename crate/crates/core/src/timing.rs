//! Additive time budget of one measurement-and-feedback cycle.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("timing field {field} must be nonnegative and finite, got {value}")]
    BadField { field: &'static str, value: f64 },
    #[error("success probability {0} gives no finite wait time")]
    UndefinedWait(f64),
}

/// Durations of the steps that make up a feedback cycle, plus the repetition
/// periods used by the different experiment kinds.
///
/// The defaults reproduce the reference machine's budget: a 20 ms exposure,
/// 9 ms base image transfer plus 0.8 ms per camera row, sub-ms analysis,
/// 0.2 ms waveform computation per sweep, 3 ms per group of simultaneous
/// sweeps, and a 7 ms settling buffer. A typical one-dimensional cycle lands
/// near the machine's quoted 50 ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    /// Camera exposure for one image, s.
    pub exposure_s: f64,
    /// Image transfer overhead independent of frame size, s.
    pub transfer_base_s: f64,
    /// Additional transfer time per camera row read out, s.
    pub transfer_per_row_s: f64,
    /// Occupancy analysis and move planning, s.
    pub analysis_s: f64,
    /// Waveform computation per frequency sweep, s.
    pub waveform_per_sweep_s: f64,
    /// Playback of one group of simultaneous sweeps, s.
    pub move_per_sweep_set_s: f64,
    /// Settling buffer at the end of a cycle, s.
    pub buffer_s: f64,
    /// Time from one fresh load to the next, s.
    pub cycle_period_s: f64,
    /// Probe spacing for array-maintenance runs, s.
    pub repair_period_s: f64,
    /// Spacing of repeated rearrangement attempts, s.
    pub rearrange_period_s: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            exposure_s: 0.020,
            transfer_base_s: 0.009,
            transfer_per_row_s: 0.0008,
            analysis_s: 0.0005,
            waveform_per_sweep_s: 0.0002,
            move_per_sweep_set_s: 0.003,
            buffer_s: 0.007,
            cycle_period_s: 0.200,
            repair_period_s: 0.100,
            rearrange_period_s: 0.050,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<(), TimingError> {
        let fields = [
            ("exposure", self.exposure_s),
            ("transfer_base", self.transfer_base_s),
            ("transfer_per_row", self.transfer_per_row_s),
            ("analysis", self.analysis_s),
            ("waveform_per_sweep", self.waveform_per_sweep_s),
            ("move_per_sweep_set", self.move_per_sweep_set_s),
            ("buffer", self.buffer_s),
            ("cycle_period", self.cycle_period_s),
            ("repair_period", self.repair_period_s),
            ("rearrange_period", self.rearrange_period_s),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TimingError::BadField { field, value });
            }
        }
        Ok(())
    }
}

/// Duration of one feedback cycle that reads out `n_rows` camera rows,
/// computes `n_sweeps` frequency sweeps, and plays them in `n_sweep_sets`
/// groups.
pub fn feedback_duration(
    params: &TimingParams,
    n_sweeps: usize,
    n_sweep_sets: usize,
    n_rows: usize,
) -> f64 {
    params.exposure_s
        + params.transfer_base_s
        + params.transfer_per_row_s * n_rows as f64
        + params.analysis_s
        + params.waveform_per_sweep_s * n_sweeps as f64
        + params.move_per_sweep_set_s * n_sweep_sets as f64
        + params.buffer_s
}

/// Average wait for one defect-free array when each attempt takes `cycle_s`
/// and succeeds with probability `p_n`: `cycle / p_n`.
pub fn wait_time(p_n: f64, cycle_s: f64) -> Result<f64, TimingError> {
    if !(p_n.is_finite() && p_n > 0.0 && p_n <= 1.0) {
        return Err(TimingError::UndefinedWait(p_n));
    }
    Ok(cycle_s / p_n)
}
