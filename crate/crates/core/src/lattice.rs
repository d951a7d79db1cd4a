//! Trap comb geometry and site occupancy.
//!
//! A [`TrapLattice`] maps site indices to RF drive frequencies and real-space
//! positions. Frequencies are integer hertz throughout: every tone the
//! hardware plays divides the waveform sample rate evenly only if it is an
//! exact integer, and keeping them integral makes loop-periodicity checks
//! exact instead of approximate.

use thiserror::Error;

/// Site count of the standard one-dimensional comb.
pub const DEFAULT_SITES: usize = 100;
/// Drive frequency of site 0 in the standard comb, Hz.
pub const DEFAULT_FREQ_START_HZ: i64 = 74_500_000;
/// Tone-to-tone spacing of the standard comb, Hz.
pub const DEFAULT_FREQ_STEP_HZ: i64 = 490_000;
/// Real-space trap pitch of the standard comb, metres.
pub const DEFAULT_PITCH_M: f64 = 2.6e-6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice needs at least one site")]
    NoSites,
    #[error("frequency step must be positive, got {0} Hz")]
    NonPositiveStep(i64),
    #[error("start frequency must be positive, got {0} Hz")]
    NonPositiveStart(i64),
    #[error("pitch must be positive and finite")]
    BadPitch,
    #[error("site {site} out of range for {sites}-site lattice")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("occupancy has {got} sites, lattice has {want}")]
    SizeMismatch { got: usize, want: usize },
}

/// Evenly spaced one-dimensional comb of tweezer traps.
///
/// Site `i` sits at frequency `start + i * step` and position `i * pitch`.
/// Higher site index means higher drive frequency; moves between sites are
/// frequency sweeps and their length in real space is `|Δi| * pitch`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapLattice {
    sites: usize,
    freq_start_hz: i64,
    freq_step_hz: i64,
    pitch_m: f64,
}

impl TrapLattice {
    pub fn new(
        sites: usize,
        freq_start_hz: i64,
        freq_step_hz: i64,
        pitch_m: f64,
    ) -> Result<Self, LatticeError> {
        if sites == 0 {
            return Err(LatticeError::NoSites);
        }
        if freq_step_hz <= 0 {
            return Err(LatticeError::NonPositiveStep(freq_step_hz));
        }
        if freq_start_hz <= 0 {
            return Err(LatticeError::NonPositiveStart(freq_start_hz));
        }
        if !(pitch_m.is_finite() && pitch_m > 0.0) {
            return Err(LatticeError::BadPitch);
        }
        Ok(Self { sites, freq_start_hz, freq_step_hz, pitch_m })
    }

    /// The 100-site comb used by the reference machine: 74.5 MHz start,
    /// 0.49 MHz spacing, 2.6 um pitch.
    pub fn default_1d() -> Self {
        Self::new(DEFAULT_SITES, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M)
            .expect("default comb parameters are valid")
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn freq_step_hz(&self) -> i64 {
        self.freq_step_hz
    }

    pub fn pitch_m(&self) -> f64 {
        self.pitch_m
    }

    pub fn site_frequency_hz(&self, site: usize) -> Result<i64, LatticeError> {
        self.check_site(site)?;
        Ok(self.freq_start_hz + site as i64 * self.freq_step_hz)
    }

    pub fn site_position_m(&self, site: usize) -> Result<f64, LatticeError> {
        self.check_site(site)?;
        Ok(site as f64 * self.pitch_m)
    }

    /// Lowest and highest tone of the comb, Hz.
    pub fn frequency_span_hz(&self) -> (i64, i64) {
        (self.freq_start_hz, self.freq_start_hz + (self.sites - 1) as i64 * self.freq_step_hz)
    }

    /// All site frequencies in site order.
    pub fn frequencies_hz(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.sites).map(move |i| self.freq_start_hz + i as i64 * self.freq_step_hz)
    }

    /// Site whose frequency is closest to `freq_hz`, clamped to the comb.
    /// Ties round down to the lower site.
    pub fn nearest_site(&self, freq_hz: i64) -> usize {
        if freq_hz <= self.freq_start_hz {
            return 0;
        }
        let offset = freq_hz - self.freq_start_hz;
        let idx = (offset + self.freq_step_hz / 2) / self.freq_step_hz;
        // Exact midpoints: (offset + step/2) / step rounds half up for even
        // steps; push back down so ties go to the lower site.
        let idx = if self.freq_step_hz % 2 == 0
            && offset % self.freq_step_hz == self.freq_step_hz / 2
        {
            idx - 1
        } else {
            idx
        };
        (idx as usize).min(self.sites - 1)
    }

    /// Real-space distance between two sites, metres.
    pub fn distance_m(&self, a: usize, b: usize) -> Result<f64, LatticeError> {
        self.check_site(a)?;
        self.check_site(b)?;
        Ok((a.abs_diff(b)) as f64 * self.pitch_m)
    }

    fn check_site(&self, site: usize) -> Result<(), LatticeError> {
        if site >= self.sites {
            Err(LatticeError::SiteOutOfRange { site, sites: self.sites })
        } else {
            Ok(())
        }
    }
}

/// Which sites of a 1D lattice currently hold an atom.
///
/// Collisional blockade makes occupation binary, so this is just a bit per
/// site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    bits: Vec<bool>,
}

impl Occupancy {
    pub fn empty(sites: usize) -> Self {
        Self { bits: vec![false; sites] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn sites(&self) -> usize {
        self.bits.len()
    }

    pub fn is_occupied(&self, site: usize) -> bool {
        self.bits[site]
    }

    pub fn set(&mut self, site: usize, occupied: bool) {
        self.bits[site] = occupied;
    }

    pub fn atom_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of occupied sites, ascending.
    pub fn occupied_sites(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    /// Length of the defect-free block starting at site 0.
    pub fn leading_filled_run(&self) -> usize {
        self.bits.iter().take_while(|&&b| b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }
}

/// Two perpendicular tone combs addressing a rows x cols trap grid.
///
/// Row comb tones select rows, column comb tones select columns; a trap
/// exists at every crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLattice {
    row_comb: TrapLattice,
    col_comb: TrapLattice,
}

impl GridLattice {
    pub fn new(row_comb: TrapLattice, col_comb: TrapLattice) -> Self {
        Self { row_comb, col_comb }
    }

    /// Square-pitch grid with the standard comb parameters in both axes.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        let row_comb =
            TrapLattice::new(rows, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M)?;
        let col_comb =
            TrapLattice::new(cols, DEFAULT_FREQ_START_HZ, DEFAULT_FREQ_STEP_HZ, DEFAULT_PITCH_M)?;
        Ok(Self { row_comb, col_comb })
    }

    pub fn rows(&self) -> usize {
        self.row_comb.sites()
    }

    pub fn cols(&self) -> usize {
        self.col_comb.sites()
    }

    pub fn row_comb(&self) -> &TrapLattice {
        &self.row_comb
    }

    pub fn col_comb(&self) -> &TrapLattice {
        &self.col_comb
    }

    pub fn traps(&self) -> usize {
        self.rows() * self.cols()
    }
}

/// Atom presence on a 2D grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_occupied(&self, row: usize, col: usize) -> bool {
        self.bits[self.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, occupied: bool) {
        let i = self.index(row, col);
        self.bits[i] = occupied;
    }

    pub fn atom_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// One row as a 1D occupancy, for per-row move planning.
    pub fn row(&self, row: usize) -> Occupancy {
        let start = row * self.cols;
        Occupancy::from_bits(self.bits[start..start + self.cols].to_vec())
    }

    pub fn set_row(&mut self, row: usize, occ: &Occupancy) {
        assert_eq!(occ.sites(), self.cols, "row length mismatch");
        for c in 0..self.cols {
            self.set(row, c, occ.is_occupied(c));
        }
    }

    /// Count of atoms in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        (0..self.rows).map(|r| (0..self.cols).filter(|&c| self.is_occupied(r, c)).count()).collect()
    }

    /// Rows holding at least one atom; sets camera-readout cost.
    pub fn rows_with_atoms(&self) -> usize {
        self.row_counts().iter().filter(|&&n| n > 0).count()
    }

    /// Top-left `rows x cols` corner as a new grid.
    pub fn crop(&self, rows: usize, cols: usize) -> OccupancyGrid {
        assert!(rows <= self.rows && cols <= self.cols, "crop larger than grid");
        let mut out = OccupancyGrid::empty(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out.set(r, c, self.is_occupied(r, c));
            }
        }
        out
    }

    fn index(&self, row: usize, col: usize) -> usize {
        assert!(row < self.rows && col < self.cols, "grid index out of range");
        row * self.cols + col
    }
}
