//! Rearrangement planning on 2D trap grids.
//!
//! Two strategies are implemented. The deletion method switches off whole
//! rows and columns until every defect is covered, then compacts the
//! surviving fully-occupied subgrid into a contiguous block; it trades atoms
//! for speed (one row sweep set plus one column sweep set). The per-row
//! method runs an independent 1D rearrangement in every row, which can fill
//! a target region completely but costs one sweep set per row.

use crate::lattice::{GridLattice, OccupancyGrid};
use crate::planner::{plan_target_reservoir, Move, MovePlan, PlannerError, TargetSpec};

/// Above this many defects, exhaustive cover selection (2^defect-rows
/// subsets) gives way to the greedy heuristic.
pub const METHOD1_EXACT_DEFECT_LIMIT: usize = 20;

/// Rows and columns chosen for deletion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSelection {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl CoverSelection {
    /// Atoms left if the grid were `rows x cols` after deletion.
    pub fn remaining_product(&self, rows: usize, cols: usize) -> usize {
        (rows - self.rows.len()) * (cols - self.cols.len())
    }
}

fn defect_list(occ: &OccupancyGrid) -> Vec<(usize, usize)> {
    let mut d = Vec::new();
    for r in 0..occ.rows() {
        for c in 0..occ.cols() {
            if !occ.is_occupied(r, c) {
                d.push((r, c));
            }
        }
    }
    d
}

fn distinct_sorted(values: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = values.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Best row/column deletion cover by exhaustive search.
///
/// Every optimal cover deletes only rows and columns that contain defects,
/// and once the deleted-row subset is fixed the needed columns are forced:
/// the columns of the defects left uncovered. Enumerating subsets of the
/// distinct defect rows therefore visits an optimum of the full
/// 2^defects assignment space at far lower cost. Exponential in the defect
/// row count; see [`METHOD1_EXACT_DEFECT_LIMIT`].
pub fn cover_exact(occ: &OccupancyGrid) -> CoverSelection {
    let defects = defect_list(occ);
    let defect_rows = distinct_sorted(defects.iter().map(|&(r, _)| r));
    let m = defect_rows.len();
    assert!(m < usize::BITS as usize, "defect row count too large to enumerate");
    let mut best: Option<(usize, usize, CoverSelection)> = None;
    for mask in 0u64..(1u64 << m) {
        let rows: Vec<usize> =
            (0..m).filter(|&i| mask & (1 << i) != 0).map(|i| defect_rows[i]).collect();
        let cols = distinct_sorted(
            defects.iter().filter(|&&(r, _)| !rows.contains(&r)).map(|&(_, c)| c),
        );
        let sel = CoverSelection { rows, cols };
        let product = sel.remaining_product(occ.rows(), occ.cols());
        let deletions = sel.rows.len() + sel.cols.len();
        let better = match &best {
            None => true,
            Some((bp, bd, _)) => product > *bp || (product == *bp && deletions < *bd),
        };
        if better {
            best = Some((product, deletions, sel));
        }
    }
    best.expect("at least the empty subset is evaluated").2
}

/// Greedy cover: repeatedly delete the row or column holding the most
/// uncovered defects; ties favor the deletion leaving the larger product,
/// then rows over columns, then the lower index.
pub fn cover_greedy(occ: &OccupancyGrid) -> CoverSelection {
    let mut uncovered = defect_list(occ);
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    while !uncovered.is_empty() {
        let rows_left = occ.rows() - rows.len();
        let cols_left = occ.cols() - cols.len();
        let mut row_counts = vec![0usize; occ.rows()];
        let mut col_counts = vec![0usize; occ.cols()];
        for &(r, c) in &uncovered {
            row_counts[r] += 1;
            col_counts[c] += 1;
        }
        // Candidate key: (covered defects, product after deletion, is-row,
        // negated index), maximized lexicographically.
        let best_row = (0..occ.rows()).max_by_key(|&r| (row_counts[r], std::cmp::Reverse(r)));
        let best_col = (0..occ.cols()).max_by_key(|&c| (col_counts[c], std::cmp::Reverse(c)));
        let (rc, r) = best_row.map(|r| (row_counts[r], r)).unwrap();
        let (cc, c) = best_col.map(|c| (col_counts[c], c)).unwrap();
        let row_product = (rows_left - 1) * cols_left;
        let col_product = rows_left * (cols_left - 1);
        let take_row = match rc.cmp(&cc) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => row_product >= col_product,
        };
        if take_row {
            rows.push(r);
            uncovered.retain(|&(dr, _)| dr != r);
        } else {
            cols.push(c);
            uncovered.retain(|&(_, dc)| dc != c);
        }
    }
    rows.sort_unstable();
    cols.sort_unstable();
    CoverSelection { rows, cols }
}

/// Deletion-method plan: the cover, plus the compaction of surviving rows
/// and columns into the top-left block.
#[derive(Debug, Clone, PartialEq)]
pub struct Method1Plan {
    deleted_rows: Vec<usize>,
    deleted_cols: Vec<usize>,
    plan: MovePlan,
    row_sweeps: usize,
    col_sweeps: usize,
    block_rows: usize,
    block_cols: usize,
}

impl Method1Plan {
    pub fn deleted_rows(&self) -> &[usize] {
        &self.deleted_rows
    }

    pub fn deleted_cols(&self) -> &[usize] {
        &self.deleted_cols
    }

    /// Per-atom moves in flat row-major indices.
    pub fn plan(&self) -> &MovePlan {
        &self.plan
    }

    /// Dimensions of the fully-occupied block the plan produces.
    pub fn block_dims(&self) -> (usize, usize) {
        (self.block_rows, self.block_cols)
    }

    /// Frequency sweeps needed: one per shifted row tone plus one per
    /// shifted column tone (whole rows and columns move as units).
    pub fn sweep_count(&self) -> usize {
        self.row_sweeps + self.col_sweeps
    }

    /// Rows move together, then columns: at most two sweep sets.
    pub fn sweep_set_count(&self) -> usize {
        usize::from(self.row_sweeps > 0) + usize::from(self.col_sweeps > 0)
    }

    /// Execute the plan. Atoms in deleted rows and columns are released
    /// (their traps switch off), so the result holds exactly
    /// `block_rows * block_cols` atoms in the top-left block.
    pub fn apply(&self, occ: &OccupancyGrid) -> OccupancyGrid {
        let mut out = OccupancyGrid::empty(occ.rows(), occ.cols());
        for m in self.plan.moves() {
            debug_assert!(occ.is_occupied(m.src / occ.cols(), m.src % occ.cols()));
            out.set(m.dst / occ.cols(), m.dst % occ.cols(), true);
        }
        out
    }
}

/// Plan the deletion method: cover every defect with row/column deletions
/// maximizing the remaining product, then compact survivors into a block.
/// Uses exhaustive cover selection up to [`METHOD1_EXACT_DEFECT_LIMIT`]
/// defects, greedy beyond.
pub fn plan_method1_2d(
    grid: &GridLattice,
    occ: &OccupancyGrid,
) -> Result<Method1Plan, PlannerError> {
    if occ.rows() != grid.rows() || occ.cols() != grid.cols() {
        return Err(PlannerError::SizeMismatch { got: occ.rows() * occ.cols(), want: grid.traps() });
    }
    let sel = if defect_list(occ).len() <= METHOD1_EXACT_DEFECT_LIMIT {
        cover_exact(occ)
    } else {
        cover_greedy(occ)
    };
    let kept_rows: Vec<usize> = (0..occ.rows()).filter(|r| !sel.rows.contains(r)).collect();
    let kept_cols: Vec<usize> = (0..occ.cols()).filter(|c| !sel.cols.contains(c)).collect();
    let row_sweeps = kept_rows.iter().enumerate().filter(|&(new, &old)| new != old).count();
    let col_sweeps = kept_cols.iter().enumerate().filter(|&(new, &old)| new != old).count();
    let row_pitch = grid.row_comb().pitch_m();
    let col_pitch = grid.col_comb().pitch_m();
    let mut moves = Vec::with_capacity(kept_rows.len() * kept_cols.len());
    let mut kept_off = Vec::new();
    let mut kept_site = vec![false; occ.rows() * occ.cols()];
    for (new_r, &old_r) in kept_rows.iter().enumerate() {
        for (new_c, &old_c) in kept_cols.iter().enumerate() {
            debug_assert!(occ.is_occupied(old_r, old_c), "cover left a defect uncovered");
            let distance_m = old_r.abs_diff(new_r) as f64 * row_pitch
                + old_c.abs_diff(new_c) as f64 * col_pitch;
            moves.push(Move {
                src: old_r * occ.cols() + old_c,
                dst: new_r * occ.cols() + new_c,
                distance_m,
            });
            kept_site[old_r * occ.cols() + old_c] = true;
        }
    }
    for site in 0..occ.rows() * occ.cols() {
        if !kept_site[site] {
            kept_off.push(site);
        }
    }
    Ok(Method1Plan {
        deleted_rows: sel.rows,
        deleted_cols: sel.cols,
        plan: MovePlan::new(moves, kept_off),
        row_sweeps,
        col_sweeps,
        block_rows: kept_rows.len(),
        block_cols: kept_cols.len(),
    })
}

/// Plan the per-row method: every row independently rearranges its atoms
/// into the leftmost `target_cols` columns, surplus parked in the row's
/// remaining sites. Returns one plan per row (empty rows included); each
/// non-identity plan costs one sweep set.
pub fn plan_method2_2d(
    grid: &GridLattice,
    occ: &OccupancyGrid,
    target_cols: usize,
) -> Result<Vec<MovePlan>, PlannerError> {
    if occ.rows() != grid.rows() || occ.cols() != grid.cols() {
        return Err(PlannerError::SizeMismatch { got: occ.rows() * occ.cols(), want: grid.traps() });
    }
    if target_cols > grid.cols() {
        return Err(PlannerError::TargetTooWide { want: target_cols, got: grid.cols() });
    }
    let spec = TargetSpec::left_block(target_cols, grid.cols())?;
    (0..occ.rows())
        .map(|r| plan_target_reservoir(grid.col_comb(), &occ.row(r), &spec))
        .collect()
}

/// Area of the largest fully-occupied axis-aligned rectangle, by the
/// rolling-histogram method.
pub fn largest_full_rectangle(occ: &OccupancyGrid) -> usize {
    let cols = occ.cols();
    let mut heights = vec![0usize; cols];
    let mut best = 0;
    for r in 0..occ.rows() {
        for c in 0..cols {
            heights[c] = if occ.is_occupied(r, c) { heights[c] + 1 } else { 0 };
        }
        best = best.max(max_histogram_rectangle(&heights));
    }
    best
}

fn max_histogram_rectangle(heights: &[usize]) -> usize {
    // Monotone stack of (start index, height).
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut best = 0;
    for (i, &h) in heights.iter().chain(std::iter::once(&0)).enumerate() {
        let mut start = i;
        while let Some(&(s, sh)) = stack.last() {
            if sh < h {
                break;
            }
            stack.pop();
            best = best.max(sh * (i - s));
            start = s;
        }
        stack.push((start, h));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;

    fn grid_occ(rows: usize, cols: usize, filled: &[(usize, usize)]) -> OccupancyGrid {
        let mut occ = OccupancyGrid::empty(rows, cols);
        for &(r, c) in filled {
            occ.set(r, c, true);
        }
        occ
    }

    fn full_but(rows: usize, cols: usize, holes: &[(usize, usize)]) -> OccupancyGrid {
        let mut occ = OccupancyGrid::empty(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                occ.set(r, c, true);
            }
        }
        for &(r, c) in holes {
            occ.set(r, c, false);
        }
        occ
    }

    #[test]
    fn single_defect_deletes_one_line() {
        let grid = GridLattice::uniform(3, 3).unwrap();
        let occ = full_but(3, 3, &[(1, 1)]);
        let plan = plan_method1_2d(&grid, &occ).unwrap();
        assert_eq!(plan.deleted_rows().len() + plan.deleted_cols().len(), 1);
        let (br, bc) = plan.block_dims();
        assert_eq!(br * bc, 6);
        let out = plan.apply(&occ);
        assert_eq!(out.atom_count(), 6);
        for r in 0..br {
            for c in 0..bc {
                assert!(out.is_occupied(r, c));
            }
        }
    }

    #[test]
    fn full_grid_needs_no_deletion_and_no_sweeps() {
        let grid = GridLattice::uniform(4, 5).unwrap();
        let occ = full_but(4, 5, &[]);
        let plan = plan_method1_2d(&grid, &occ).unwrap();
        assert!(plan.deleted_rows().is_empty() && plan.deleted_cols().is_empty());
        assert_eq!(plan.sweep_count(), 0);
        assert_eq!(plan.sweep_set_count(), 0);
        assert_eq!(plan.apply(&occ), occ);
    }

    #[test]
    fn diagonal_defects_on_2x2_leave_one_atom() {
        let grid = GridLattice::uniform(2, 2).unwrap();
        let occ = full_but(2, 2, &[(0, 0), (1, 1)]);
        let plan = plan_method1_2d(&grid, &occ).unwrap();
        let (br, bc) = plan.block_dims();
        assert_eq!(br * bc, 1);
        assert_eq!(plan.apply(&occ).atom_count(), 1);
    }

    #[test]
    fn cover_never_leaves_a_defect_and_block_is_full() {
        let mut rng = RngStream::new(99, 0);
        for trial in 0..200 {
            let rows = 2 + trial % 5;
            let cols = 2 + (trial / 5) % 5;
            let mut occ = OccupancyGrid::empty(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    occ.set(r, c, rng.bernoulli(0.7));
                }
            }
            let grid = GridLattice::uniform(rows, cols).unwrap();
            let plan = plan_method1_2d(&grid, &occ).unwrap();
            let out = plan.apply(&occ);
            let (br, bc) = plan.block_dims();
            assert_eq!(out.atom_count(), br * bc);
            assert_eq!(largest_full_rectangle(&out), br * bc);
        }
    }

    #[test]
    fn greedy_never_beats_exact() {
        let mut rng = RngStream::new(7, 1);
        for _ in 0..300 {
            let rows = 3 + (rng.uniform() * 3.0) as usize;
            let cols = 3 + (rng.uniform() * 3.0) as usize;
            let mut occ = OccupancyGrid::empty(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    occ.set(r, c, rng.bernoulli(0.6));
                }
            }
            let exact = cover_exact(&occ).remaining_product(rows, cols);
            let greedy = cover_greedy(&occ).remaining_product(rows, cols);
            assert!(greedy <= exact, "greedy {greedy} > exact {exact}");
        }
    }

    #[test]
    fn per_row_plans_compact_each_row() {
        let grid = GridLattice::uniform(3, 3).unwrap();
        let occ = grid_occ(3, 3, &[(0, 0), (0, 2), (2, 1)]);
        let plans = plan_method2_2d(&grid, &occ, 2).unwrap();
        assert_eq!(plans.len(), 3);
        let p0: Vec<_> = plans[0].moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(p0, vec![(0, 0), (2, 1)]);
        assert!(plans[1].moves().is_empty());
        let p2: Vec<_> = plans[2].moves().iter().map(|m| (m.src, m.dst)).collect();
        assert_eq!(p2, vec![(1, 0)]);
    }

    #[test]
    fn target_width_is_validated() {
        let grid = GridLattice::uniform(2, 3).unwrap();
        let occ = OccupancyGrid::empty(2, 3);
        assert!(matches!(
            plan_method2_2d(&grid, &occ, 4),
            Err(PlannerError::TargetTooWide { want: 4, got: 3 })
        ));
    }

    #[test]
    fn largest_rectangle_handles_edges() {
        assert_eq!(largest_full_rectangle(&OccupancyGrid::empty(3, 3)), 0);
        assert_eq!(largest_full_rectangle(&full_but(3, 4, &[])), 12);
        // L-shaped region: best is the 2x3 arm.
        let occ = grid_occ(
            3,
            3,
            &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0)],
        );
        assert_eq!(largest_full_rectangle(&occ), 6);
        let single = grid_occ(2, 2, &[(1, 1)]);
        assert_eq!(largest_full_rectangle(&single), 1);
    }
}
