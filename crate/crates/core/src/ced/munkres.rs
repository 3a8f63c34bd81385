//! Rectangular minimum-cost assignment (Munkres / Hungarian method).
//!
//! Shortest-augmenting-path formulation, O(n²·m) for an n×m matrix with
//! n ≤ m. Infinite cells are replaced internally by a sentinel strictly
//! larger than any feasible total (sum of all finite cells + 1) so the
//! potential arithmetic stays totally ordered; an assignment that lands on
//! such a cell is reported as infeasible.

use super::CostMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no finite full assignment exists")]
pub struct InfeasibleAssignment;

/// A minimum-cost row-to-column assignment over a [`CostMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` matrix index pairs, one per row, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

const UNASSIGNED: usize = usize::MAX;

/// Core solver over a cost closure. Requires `n <= m` and finite costs.
/// Returns the assigned column for every row.
pub(crate) fn solve_lap(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> f64) -> Vec<usize> {
    assert!(n <= m, "assignment needs at least as many columns as rows");
    // Columns are 1-based here; column 0 is the virtual start of each
    // augmenting path and p[0] holds the row currently being inserted.
    let mut u = vec![0.0_f64; n];
    let mut v = vec![0.0_f64; m + 1];
    let mut p = vec![UNASSIGNED; m + 1];
    for row in 0..n {
        p[0] = row;
        let mut j0 = 0_usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut way = vec![0_usize; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = UNASSIGNED;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                // strict comparison keeps the lowest column on ties
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    if p[j] != UNASSIGNED {
                        u[p[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == UNASSIGNED {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![UNASSIGNED; n];
    for j in 1..=m {
        if p[j] != UNASSIGNED {
            col_of_row[p[j]] = j - 1;
        }
    }
    col_of_row
}

/// Minimum assignment total for a small all-finite cost function.
pub(crate) fn min_total(n: usize, m: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let cols = solve_lap(n, m, cost);
    (0..n).map(|i| cost(i, cols[i])).sum()
}

/// Assign every row to a distinct column at minimum total cost.
///
/// Ties between equal-cost optima break deterministically toward the lowest
/// column index, row by row. Fails if every full assignment crosses an
/// infinite cell.
pub fn munkres_assign(matrix: &CostMatrix) -> Result<Assignment, InfeasibleAssignment> {
    let n = matrix.rows();
    let m = matrix.cols();
    if n == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total: 0.0,
        });
    }
    let finite_sum: f64 = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(i, j))
        .filter(|c| c.is_finite())
        .sum();
    let big = finite_sum + 1.0;
    let cost = move |i: usize, j: usize| {
        let c = matrix.get(i, j);
        if c.is_finite() {
            c
        } else {
            big
        }
    };

    let base = solve_lap(n, m, &cost);
    let optimum: f64 = (0..n).map(|i| cost(i, base[i])).sum();

    // Re-derive the assignment preferring the lowest column index per row
    // among all optima.
    let eps = 1e-9;
    let mut chosen = vec![UNASSIGNED; n];
    let mut taken = vec![false; m];
    let mut budget = optimum;
    for i in 0..n {
        for c in 0..m {
            if taken[c] {
                continue;
            }
            let head = cost(i, c);
            if head > budget + eps {
                continue;
            }
            let free_cols: Vec<usize> = (0..m).filter(|&j| !taken[j] && j != c).collect();
            let tail_rows = n - i - 1;
            let tail = if tail_rows == 0 {
                0.0
            } else {
                let sub = |a: usize, b: usize| cost(i + 1 + a, free_cols[b]);
                min_total(tail_rows, free_cols.len(), &sub)
            };
            if head + tail <= budget + eps {
                chosen[i] = c;
                taken[c] = true;
                budget -= head;
                break;
            }
        }
        if chosen[i] == UNASSIGNED {
            // numerically pathological; fall back to the base solution
            chosen[i] = base[i];
            taken[base[i]] = true;
            budget -= cost(i, base[i]);
        }
    }

    if (0..n).any(|i| matrix.get(i, chosen[i]).is_infinite()) {
        return Err(InfeasibleAssignment);
    }
    let total = (0..n).map(|i| matrix.get(i, chosen[i])).sum();
    Ok(Assignment {
        pairs: (0..n).map(|i| (i, chosen[i])).collect(),
        total,
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive-permutation reference used by tests only.

    use super::super::CostMatrix;

    /// Minimum-total assignment by trying every injective row→column map.
    /// Ties resolve to the lexicographically smallest column vector.
    pub fn brute_force(matrix: &CostMatrix) -> Option<(Vec<usize>, f64)> {
        let n = matrix.rows();
        let m = matrix.cols();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut cols = Vec::with_capacity(n);
        let mut used = vec![false; m];
        search(matrix, n, m, &mut cols, &mut used, 0.0, &mut best);
        best
    }

    fn search(
        matrix: &CostMatrix,
        n: usize,
        m: usize,
        cols: &mut Vec<usize>,
        used: &mut [bool],
        running: f64,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if cols.len() == n {
            let better = match best {
                None => true,
                Some((prev_cols, prev_total)) => {
                    running < *prev_total - 1e-9
                        || (running <= *prev_total + 1e-9 && cols.as_slice() < prev_cols.as_slice())
                }
            };
            if better {
                *best = Some((cols.clone(), running));
            }
            return;
        }
        let row = cols.len();
        for c in 0..m {
            if used[c] {
                continue;
            }
            let cell = matrix.get(row, c);
            if cell.is_infinite() {
                continue;
            }
            used[c] = true;
            cols.push(c);
            search(matrix, n, m, cols, used, running + cell, best);
            cols.pop();
            used[c] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::CostMatrix;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_cell() {
        let m = CostMatrix::from_rows(vec![vec![0.0]]);
        let a = munkres_assign(&m).unwrap();
        assert_eq!(a.total, 0.0);
        assert_eq!(a.pairs, vec![(0, 0)]);
    }

    #[test]
    fn prefers_lowest_column_on_ties() {
        let m = CostMatrix::from_rows(vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]]);
        let a = munkres_assign(&m).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn paper_cumulative_sub_block() {
        // rows u4, u2 × the two candidate subtrees after the cumulative update
        let m = CostMatrix::from_rows(vec![vec![7.0, 6.0], vec![6.0, 3.0]]);
        let a = munkres_assign(&m).unwrap();
        let (cols, total) = oracle::brute_force(&m).unwrap();
        assert_eq!(a.total, total);
        assert_eq!(a.total, 10.0);
        let got: Vec<usize> = a.pairs.iter().map(|&(_, c)| c).collect();
        assert_eq!(got, cols);
    }

    #[test]
    fn all_infinite_is_infeasible() {
        let m = CostMatrix::from_rows(vec![vec![f64::INFINITY, f64::INFINITY]]);
        assert_eq!(munkres_assign(&m), Err(InfeasibleAssignment));
    }

    #[test]
    fn infinite_cells_are_routed_around() {
        let m = CostMatrix::from_rows(vec![
            vec![f64::INFINITY, 5.0],
            vec![2.0, f64::INFINITY],
        ]);
        let a = munkres_assign(&m).unwrap();
        assert_eq!(a.total, 7.0);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    }

    fn random_matrix(rng: &mut ChaCha8Rng, max_dim: usize) -> CostMatrix {
        let n = rng.gen_range(1..=max_dim);
        let m = rng.gen_range(n..=max_dim);
        let rows = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if rng.gen_bool(0.15) {
                            f64::INFINITY
                        } else {
                            f64::from(rng.gen_range(0..100)) / 4.0
                        }
                    })
                    .collect()
            })
            .collect();
        CostMatrix::from_rows(rows)
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = random_matrix(&mut rng, 6);
            match (munkres_assign(&m), oracle::brute_force(&m)) {
                (Ok(a), Some((cols, total))) => {
                    assert!((a.total - total).abs() < 1e-9, "totals differ");
                    let got: Vec<usize> = a.pairs.iter().map(|&(_, c)| c).collect();
                    assert_eq!(got, cols, "tie-break differs on {m:?}");
                }
                (Err(_), None) => {}
                (got, want) => panic!("feasibility mismatch: {got:?} vs {want:?}"),
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix() -> impl Strategy<Value = CostMatrix> {
            (1..=5_usize)
                .prop_flat_map(|n| (Just(n), n..=6_usize))
                .prop_flat_map(|(n, m)| {
                    proptest::collection::vec(
                        prop_oneof![
                            4 => (0_u32..60).prop_map(|x| f64::from(x) / 4.0),
                            1 => Just(f64::INFINITY),
                        ],
                        n * m,
                    )
                    .prop_map(move |cells| {
                        CostMatrix::from_rows(cells.chunks(m).map(<[f64]>::to_vec).collect())
                    })
                })
        }

        proptest! {
            #[test]
            fn optimal_with_lowest_column_tie_break(m in arb_matrix()) {
                match (munkres_assign(&m), oracle::brute_force(&m)) {
                    (Ok(a), Some((cols, total))) => {
                        prop_assert!((a.total - total).abs() < 1e-9);
                        let got: Vec<usize> = a.pairs.iter().map(|&(_, c)| c).collect();
                        prop_assert_eq!(got, cols);
                    }
                    (Err(InfeasibleAssignment), None) => {}
                    (got, want) => {
                        prop_assert!(false, "feasibility mismatch: {:?} vs {:?}", got, want)
                    }
                }
            }
        }
    }
}
