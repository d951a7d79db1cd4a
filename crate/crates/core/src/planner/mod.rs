//! Rearrangement move planning.
//!
//! Planners turn a measured occupancy into a [`MovePlan`]: which tones sweep
//! where, and which traps switch off. Planning is lossless bookkeeping; atom
//! loss during the moves is applied separately by the stochastic layer.

pub mod grid;

use thiserror::Error;

use crate::lattice::{Occupancy, TrapLattice};

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("occupancy has {got} sites, lattice has {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("site {site} out of range for {sites}-site lattice")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("target and reservoir share site {0}")]
    OverlappingSpec(usize),
    #[error("target width {want} exceeds {got} columns")]
    TargetTooWide { want: usize, got: usize },
}

/// One tone sweep: the atom at `src` ends at `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub src: usize,
    pub dst: usize,
    /// Transport length in real space; zero for a static tone.
    pub distance_m: f64,
}

impl Move {
    pub fn is_static(&self) -> bool {
        self.src == self.dst
    }
}

/// A full rearrangement step: tone sweeps plus the traps switched off.
///
/// Static moves (src == dst) stay in the plan so a plan lists every atom it
/// accounts for, but they cost nothing in the timing model: no waveform is
/// computed for a tone that does not sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MovePlan {
    moves: Vec<Move>,
    kept_off: Vec<usize>,
}

impl MovePlan {
    pub fn new(moves: Vec<Move>, kept_off: Vec<usize>) -> Self {
        #[cfg(debug_assertions)]
        {
            let mut srcs: Vec<_> = moves.iter().map(|m| m.src).collect();
            let mut dsts: Vec<_> = moves.iter().map(|m| m.dst).collect();
            srcs.sort_unstable();
            srcs.dedup();
            dsts.sort_unstable();
            dsts.dedup();
            debug_assert_eq!(srcs.len(), moves.len(), "duplicate move source");
            debug_assert_eq!(dsts.len(), moves.len(), "duplicate move destination");
        }
        Self { moves, kept_off }
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    /// Sites whose trap is switched off for this step.
    pub fn kept_off(&self) -> &[usize] {
        &self.kept_off
    }

    /// Number of actual frequency sweeps: static tones excluded.
    pub fn sweep_count(&self) -> usize {
        self.moves.iter().filter(|m| !m.is_static()).count()
    }

    pub fn is_identity(&self) -> bool {
        self.sweep_count() == 0
    }

    /// Occupancy after executing the plan (no loss).
    ///
    /// Panics (debug) if a source is empty or two atoms land on one site;
    /// planners never emit such plans.
    pub fn apply(&self, occ: &Occupancy) -> Occupancy {
        let mut out = occ.clone();
        for m in &self.moves {
            debug_assert!(occ.is_occupied(m.src), "move from empty site {}", m.src);
            out.set(m.src, false);
        }
        for m in &self.moves {
            debug_assert!(!out.is_occupied(m.dst), "two atoms sent to site {}", m.dst);
            out.set(m.dst, true);
        }
        out
    }

    /// Transport distance keyed by destination site, zero elsewhere. This is
    /// the per-site distance the loss model sees after the plan runs.
    pub fn distance_by_destination(&self, sites: usize) -> Vec<f64> {
        let mut d = vec![0.0; sites];
        for m in &self.moves {
            d[m.dst] = m.distance_m;
        }
        d
    }
}

/// Partition of the lattice into a target pattern to keep defect-free and a
/// reservoir of spare sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    target: Vec<usize>,
    reservoir: Vec<usize>,
    sites: usize,
}

impl TargetSpec {
    /// `target` and `reservoir` must be disjoint subsets of `0..sites`.
    /// Both are kept sorted; duplicates within a set are dropped.
    pub fn new(
        mut target: Vec<usize>,
        mut reservoir: Vec<usize>,
        sites: usize,
    ) -> Result<Self, PlannerError> {
        target.sort_unstable();
        target.dedup();
        reservoir.sort_unstable();
        reservoir.dedup();
        for &s in target.iter().chain(reservoir.iter()) {
            if s >= sites {
                return Err(PlannerError::SiteOutOfRange { site: s, sites });
            }
        }
        let mut i = 0;
        let mut j = 0;
        while i < target.len() && j < reservoir.len() {
            match target[i].cmp(&reservoir[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Err(PlannerError::OverlappingSpec(target[i])),
            }
        }
        Ok(Self { target, reservoir, sites })
    }

    /// Leftmost `target_len` sites as target, everything else as reservoir.
    pub fn left_block(target_len: usize, sites: usize) -> Result<Self, PlannerError> {
        if target_len > sites {
            return Err(PlannerError::SiteOutOfRange { site: target_len, sites });
        }
        Self::new((0..target_len).collect(), (target_len..sites).collect(), sites)
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn reservoir(&self) -> &[usize] {
        &self.reservoir
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Empty target sites, ascending.
    pub fn target_defects(&self, occ: &Occupancy) -> Vec<usize> {
        self.target.iter().copied().filter(|&s| !occ.is_occupied(s)).collect()
    }

    pub fn target_filled(&self, occ: &Occupancy) -> bool {
        self.target.iter().all(|&s| occ.is_occupied(s))
    }

    /// Occupied reservoir sites, ascending.
    pub fn reservoir_atoms(&self, occ: &Occupancy) -> Vec<usize> {
        self.reservoir.iter().copied().filter(|&s| occ.is_occupied(s)).collect()
    }
}

fn check_size(lattice: &TrapLattice, occ: &Occupancy) -> Result<(), PlannerError> {
    if occ.sites() != lattice.sites() {
        return Err(PlannerError::SizeMismatch { got: occ.sites(), want: lattice.sites() });
    }
    Ok(())
}

fn move_between(lattice: &TrapLattice, src: usize, dst: usize) -> Move {
    let distance_m = lattice.pitch_m() * src.abs_diff(dst) as f64;
    Move { src, dst, distance_m }
}

/// Stack every atom to the left: the k-th occupied site (by position) moves
/// to site k. Unoccupied traps switch off. Ranks are preserved, so no two
/// swept tones ever cross.
pub fn plan_compaction_1d(
    lattice: &TrapLattice,
    occ: &Occupancy,
) -> Result<MovePlan, PlannerError> {
    check_size(lattice, occ)?;
    let moves = occ
        .occupied_sites()
        .into_iter()
        .enumerate()
        .map(|(rank, site)| move_between(lattice, site, rank))
        .collect();
    let kept_off = (0..occ.sites()).filter(|&s| !occ.is_occupied(s)).collect();
    Ok(MovePlan::new(moves, kept_off))
}

/// Fill the target pattern first, then park surplus atoms on the lowest
/// reservoir sites. Atoms are assigned to destinations in rank order on both
/// sides, which keeps trajectories crossing-free for any target/reservoir
/// geometry.
pub fn plan_target_reservoir(
    lattice: &TrapLattice,
    occ: &Occupancy,
    spec: &TargetSpec,
) -> Result<MovePlan, PlannerError> {
    check_size(lattice, occ)?;
    if spec.sites() != occ.sites() {
        return Err(PlannerError::SizeMismatch { got: spec.sites(), want: occ.sites() });
    }
    let atoms = occ.occupied_sites();
    let k = atoms.len();
    let mut dests: Vec<usize> = if k <= spec.target().len() {
        spec.target()[..k].to_vec()
    } else {
        let surplus = (k - spec.target().len()).min(spec.reservoir().len());
        let mut d = spec.target().to_vec();
        d.extend_from_slice(&spec.reservoir()[..surplus]);
        d
    };
    dests.sort_unstable();
    // More atoms than target plus reservoir sites: the overflow keeps its
    // rank and parks on the leftover sites so no atom is silently dropped.
    if dests.len() < k {
        let mut leftover: Vec<usize> = (0..occ.sites()).filter(|s| !dests.contains(s)).collect();
        leftover.truncate(k - dests.len());
        dests.extend(leftover);
        dests.sort_unstable();
    }
    let moves =
        atoms.iter().zip(dests.iter()).map(|(&src, &dst)| move_between(lattice, src, dst)).collect();
    let kept_off = (0..occ.sites()).filter(|&s| !occ.is_occupied(s)).collect();
    Ok(MovePlan::new(moves, kept_off))
}

/// Pull reservoir atoms into empty target sites, leftmost defect first, each
/// defect taking the nearest available reservoir atom. Distance ties prefer
/// the atom nearer the target pattern, then the lower site index. When the
/// reservoir runs short the leftmost defects win.
///
/// The nearest-atom rule can cross tones if reservoir atoms sit on both
/// sides of a defect pair; with the usual geometry (reservoir entirely to
/// one side) plans are crossing-free.
pub fn plan_repair(
    lattice: &TrapLattice,
    occ: &Occupancy,
    spec: &TargetSpec,
) -> Result<MovePlan, PlannerError> {
    check_size(lattice, occ)?;
    if spec.sites() != occ.sites() {
        return Err(PlannerError::SizeMismatch { got: spec.sites(), want: occ.sites() });
    }
    let mut available = spec.reservoir_atoms(occ);
    let mut moves = Vec::new();
    for defect in spec.target_defects(occ) {
        if available.is_empty() {
            break;
        }
        let dist_to_target = |s: usize| {
            spec.target().iter().map(|&t| s.abs_diff(t)).min().unwrap_or(usize::MAX)
        };
        let best = (0..available.len())
            .min_by_key(|&i| {
                let s = available[i];
                (s.abs_diff(defect), dist_to_target(s), s)
            })
            .expect("available is non-empty");
        let src = available.remove(best);
        moves.push(move_between(lattice, src, defect));
    }
    let kept_off = (0..occ.sites()).filter(|&s| !occ.is_occupied(s)).collect();
    Ok(MovePlan::new(moves, kept_off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lat(n: usize) -> TrapLattice {
        TrapLattice::new(n, 74_500_000, 490_000, 2.6e-6).unwrap()
    }

    fn occ(bits: &[u8]) -> Occupancy {
        Occupancy::from_bits(bits.iter().map(|&b| b != 0).collect())
    }

    #[test]
    fn compaction_stacks_left() {
        let plan = plan_compaction_1d(&lat(5), &occ(&[0, 1, 1, 0, 1])).unwrap();
        let pairs: Vec<_> = plan.moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(pairs, vec![(1, 0), (2, 1), (4, 2)]);
        assert_eq!(plan.kept_off(), &[0, 3]);
        assert_eq!(plan.sweep_count(), 3);
        let out = plan.apply(&occ(&[0, 1, 1, 0, 1]));
        assert_eq!(out.leading_filled_run(), 3);
        assert_eq!(out.atom_count(), 3);
    }

    #[test]
    fn compaction_of_full_lattice_is_identity() {
        let full = Occupancy::from_bits(vec![true; 100]);
        let plan = plan_compaction_1d(&lat(100), &full).unwrap();
        assert_eq!(plan.moves().len(), 100);
        assert!(plan.is_identity());
        assert!(plan.kept_off().is_empty());
        assert_eq!(plan.apply(&full), full);
    }

    #[test]
    fn compaction_four_site_schematic() {
        let plan = plan_compaction_1d(&lat(4), &occ(&[1, 0, 1, 1])).unwrap();
        let pairs: Vec<_> = plan.moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(pairs, vec![(0, 0), (2, 1), (3, 2)]);
        assert_eq!(plan.sweep_count(), 2);
    }

    #[test]
    fn move_distances_use_pitch() {
        let plan = plan_compaction_1d(&lat(5), &occ(&[0, 0, 0, 0, 1])).unwrap();
        assert_eq!(plan.moves()[0].distance_m, 4.0 * 2.6e-6);
        let d = plan.distance_by_destination(5);
        assert_eq!(d[0], 4.0 * 2.6e-6);
        assert_eq!(&d[1..], &[0.0; 4]);
    }

    #[test]
    fn target_reservoir_fills_target_then_parks_surplus() {
        let spec = TargetSpec::left_block(20, 100).unwrap();
        let mut bits = vec![false; 100];
        for i in 0..30 {
            bits[3 * i] = true;
        }
        let o = Occupancy::from_bits(bits);
        let plan = plan_target_reservoir(&lat(100), &o, &spec).unwrap();
        let out = plan.apply(&o);
        assert!(spec.target_filled(&out));
        assert_eq!(out.atom_count(), 30);
        assert_eq!(spec.reservoir_atoms(&out), (20..30).collect::<Vec<_>>());
    }

    #[test]
    fn target_reservoir_with_too_few_atoms_fills_prefix() {
        let spec = TargetSpec::left_block(20, 100).unwrap();
        let mut bits = vec![false; 100];
        for i in 0..10 {
            bits[90 - i] = true;
        }
        let o = Occupancy::from_bits(bits);
        let out = plan_target_reservoir(&lat(100), &o, &spec).unwrap().apply(&o);
        assert_eq!(out.leading_filled_run(), 10);
        assert_eq!(out.atom_count(), 10);
        assert!(spec.reservoir_atoms(&out).is_empty());
    }

    #[test]
    fn repair_pulls_nearest_reservoir_atom() {
        let spec = TargetSpec::left_block(20, 100).unwrap();
        let mut bits = vec![true; 20];
        bits[7] = false;
        bits.extend(std::iter::repeat(false).take(80));
        let mut bits = bits;
        bits[25] = true;
        bits[40] = true;
        let o = Occupancy::from_bits(bits);
        let plan = plan_repair(&lat(100), &o, &spec).unwrap();
        let pairs: Vec<_> = plan.moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(pairs, vec![(25, 7)]);
        assert!(spec.target_filled(&plan.apply(&o)));
    }

    #[test]
    fn repair_without_defects_is_empty() {
        let spec = TargetSpec::left_block(5, 10).unwrap();
        let o = occ(&[1, 1, 1, 1, 1, 0, 1, 0, 0, 0]);
        let plan = plan_repair(&lat(10), &o, &spec).unwrap();
        assert!(plan.moves().is_empty());
    }

    #[test]
    fn repair_shortfall_prefers_leftmost_defects() {
        let spec = TargetSpec::left_block(6, 12).unwrap();
        let o = occ(&[1, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 0]);
        let plan = plan_repair(&lat(12), &o, &spec).unwrap();
        let pairs: Vec<_> = plan.moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(pairs, vec![(9, 1)]);
    }

    #[test]
    fn repair_distance_tie_breaks_toward_target() {
        // Defect at 5; reservoir atoms at 3 and 7 are equidistant. Site 7
        // is farther from the target pattern {4, 5} than site 3, so 3 wins.
        let spec = TargetSpec::new(vec![4, 5], vec![0, 1, 2, 3, 6, 7], 8).unwrap();
        let o = occ(&[0, 0, 0, 1, 1, 0, 0, 1]);
        let plan = plan_repair(&lat(8), &o, &spec).unwrap();
        let pairs: Vec<_> = plan.moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(pairs, vec![(3, 5)]);
    }

    #[test]
    fn spec_validation_rejects_overlap_and_range() {
        assert_eq!(
            TargetSpec::new(vec![0, 1], vec![1, 2], 5).unwrap_err(),
            PlannerError::OverlappingSpec(1)
        );
        assert_eq!(
            TargetSpec::new(vec![0, 9], vec![], 5).unwrap_err(),
            PlannerError::SiteOutOfRange { site: 9, sites: 5 }
        );
        let spec = TargetSpec::left_block(3, 5).unwrap();
        let o = occ(&[1, 1]);
        assert!(matches!(
            plan_target_reservoir(&lat(2), &o, &spec),
            Err(PlannerError::SizeMismatch { .. })
        ));
    }

    fn ranks_preserved(plan: &MovePlan) -> bool {
        let mut sorted: Vec<_> = plan.moves().to_vec();
        sorted.sort_by_key(|m| m.src);
        sorted.windows(2).all(|w| w[0].dst < w[1].dst)
    }

    proptest! {
        #[test]
        fn compaction_preserves_rank_and_count(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
            let o = Occupancy::from_bits(bits);
            let l = lat(o.sites());
            let plan = plan_compaction_1d(&l, &o).unwrap();
            prop_assert!(ranks_preserved(&plan));
            let out = plan.apply(&o);
            prop_assert_eq!(out.atom_count(), o.atom_count());
            prop_assert_eq!(out.leading_filled_run(), o.atom_count());
        }

        #[test]
        fn target_reservoir_preserves_rank_and_count(
            bits in proptest::collection::vec(any::<bool>(), 1..80),
            tfrac in 0.0f64..1.0,
        ) {
            let o = Occupancy::from_bits(bits);
            let l = lat(o.sites());
            let tlen = ((o.sites() as f64) * tfrac) as usize;
            let spec = TargetSpec::left_block(tlen.min(o.sites()), o.sites()).unwrap();
            let plan = plan_target_reservoir(&l, &o, &spec).unwrap();
            prop_assert!(ranks_preserved(&plan));
            let out = plan.apply(&o);
            prop_assert_eq!(out.atom_count(), o.atom_count());
            let filled = spec.target().iter().filter(|&&s| out.is_occupied(s)).count();
            prop_assert_eq!(filled, o.atom_count().min(spec.target().len()));
        }

        #[test]
        fn repair_with_right_side_reservoir_never_crosses(
            bits in proptest::collection::vec(any::<bool>(), 30..60),
            tlen in 5usize..25,
        ) {
            let o = Occupancy::from_bits(bits);
            let l = lat(o.sites());
            let spec = TargetSpec::left_block(tlen, o.sites()).unwrap();
            let plan = plan_repair(&l, &o, &spec).unwrap();
            prop_assert!(ranks_preserved(&plan));
            let out = plan.apply(&o);
            prop_assert_eq!(out.atom_count(), o.atom_count());
            let defects_left = spec.target_defects(&out).len();
            let expected = spec.target_defects(&o).len().saturating_sub(spec.reservoir_atoms(&o).len());
            prop_assert_eq!(defects_left, expected);
        }
    }
}
