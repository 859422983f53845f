//! Dense maximum-weight assignment (Kuhn-Munkres with row-by-row shortest
//! augmenting paths) plus a deterministic lexicographic tie-break.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
// Float supplies ln/sqrt/abs and friends in no_std builds; the std inherent
// methods shadow it when tests compile with std.
#[allow(unused_imports)]
use num_traits::Float;

/// Relative tolerance for deciding that an edge's reduced cost vanishes.
/// Exact ties are measure-zero in theory but occur in floats.
const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Column assigned to each row, maximizing the total score. Among assignments
/// whose reduced costs vanish within tolerance, returns the one that is
/// lexicographically smallest in (row, column) order.
pub(crate) fn max_weight_assignment(scores: &DMatrix<f64>) -> Vec<usize> {
    let n = scores.nrows();
    debug_assert_eq!(n, scores.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }

    // Minimization form on the negated scores, 1-indexed with a virtual
    // column 0; `assigned_row[j]` is the row currently holding column j.
    let cost = |i: usize, j: usize| -scores[(i, j)];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut assigned_row = vec![0usize; n + 1];

    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut came_from = vec![0usize; n + 1];
        let mut visited = vec![false; n + 1];
        loop {
            visited[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if visited[j] {
                    continue;
                }
                let slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    came_from[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if visited[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = came_from[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[assigned_row[j] - 1] = j - 1;
    }

    // Tight subgraph: edges whose reduced cost vanishes relative to the
    // magnitudes involved. Every optimal assignment lies inside it, and the
    // assignment just found is forced in so the graph always contains a
    // perfect matching.
    let mut tight = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let c = cost(i, j);
            let scale = 1.0 + c.abs() + u[i + 1].abs() + v[j + 1].abs();
            tight[i * n + j] = c - u[i + 1] - v[j + 1] <= RELATIVE_TOLERANCE * scale;
        }
        tight[i * n + row_to_col[i]] = true;
    }

    lexicographic_assignment(n, &tight, &row_to_col)
}

/// Greedy column choice per row, keeping only choices that still admit a
/// perfect matching of the remaining rows inside the tight subgraph.
fn lexicographic_assignment(n: usize, tight: &[bool], fallback: &[usize]) -> Vec<usize> {
    let mut chosen = vec![0usize; n];
    let mut used = vec![false; n];
    for i in 0..n {
        let mut pick = None;
        for c in 0..n {
            if used[c] || !tight[i * n + c] {
                continue;
            }
            if completable(i + 1, n, tight, &used, c) {
                pick = Some(c);
                break;
            }
        }
        // The search cannot fail while the invariant above holds; fall back
        // to the solver's own column so a bijection is returned regardless.
        let c = pick.unwrap_or(fallback[i]);
        debug_assert!(pick.is_some(), "tight subgraph lost its perfect matching");
        chosen[i] = c;
        used[c] = true;
    }
    chosen
}

/// Can rows `next_row..n` be perfectly matched into the columns not yet used
/// and distinct from `candidate`, using tight edges only? Kuhn's algorithm.
fn completable(next_row: usize, n: usize, tight: &[bool], used: &[bool], candidate: usize) -> bool {
    let mut col_owner = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    for row in next_row..n {
        seen.iter_mut().for_each(|s| *s = false);
        if !augment(row, n, tight, used, candidate, &mut col_owner, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(
    row: usize,
    n: usize,
    tight: &[bool],
    used: &[bool],
    candidate: usize,
    col_owner: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for c in 0..n {
        if c == candidate || used[c] || seen[c] || !tight[row * n + c] {
            continue;
        }
        seen[c] = true;
        if col_owner[c] == usize::MAX
            || augment(col_owner[c], n, tight, used, candidate, col_owner, seen)
        {
            col_owner[c] = row;
            return true;
        }
    }
    false
}
