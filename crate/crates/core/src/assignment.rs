//! Linear assignment: minimize `sum_i cost[i, perm[i]]` over permutations.
//!
//! Two kernels are provided. [`hungarian`] solves a dense square cost matrix
//! in `O(m^3)`. [`sort_assignment`] handles the rank-one cost
//! `cost[i, j] = a[i] * b[j]` in `O(m log m)` using the rearrangement
//! inequality: the sum is smallest when `a` ascending is paired with `b`
//! descending.
//!
//! Both kernels break ties the same way: among all optimal assignments the
//! lexicographically smallest mapping is returned.

use std::cmp::Ordering;
use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::Permutation;

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub perm: Permutation,
    pub cost: f64,
}

/// Exact minimum-cost assignment for a square matrix.
pub fn hungarian(cost: &DMatrix<f64>) -> Result<AssignmentResult> {
    let m = cost.nrows();
    if cost.ncols() != m {
        return Err(Error::Dimension(format!(
            "assignment cost must be square, got {}x{}",
            m,
            cost.ncols()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("assignment cost"));
    }
    if m == 0 {
        return Ok(AssignmentResult {
            perm: Permutation::identity(0),
            cost: 0.0,
        });
    }

    let (mut col_of_row, u, v) = shortest_augmenting_path(cost);

    let scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-11 * scale;
    lexicographic_refine(cost, &u, &v, tol, &mut col_of_row);

    let total = col_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum();
    Ok(AssignmentResult {
        perm: Permutation::new(col_of_row)?,
        cost: total,
    })
}

/// Successive shortest augmenting paths with row/column potentials.
///
/// Returns the row-to-column matching and the dual potentials; every reduced
/// cost `cost[i, j] - u[i] - v[j]` is (up to rounding) non-negative and the
/// matched edges are tight.
fn shortest_augmenting_path(cost: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let m = cost.nrows();
    const NONE: usize = usize::MAX;
    // Column index m is a virtual root.
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; m + 1];
    let mut row_of_col = vec![NONE; m + 1];
    let mut way = vec![m; m + 1];

    for row in 0..m {
        row_of_col[m] = row;
        let mut j0 = m;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = NONE;
            for j in 0..m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0, j)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == NONE {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == m {
                break;
            }
        }
    }

    let mut col_of_row = vec![0; m];
    for j in 0..m {
        col_of_row[row_of_col[j]] = j;
    }
    v.truncate(m);
    (col_of_row, u, v)
}

/// Moves an optimal matching to the lexicographically smallest perfect
/// matching of the tight (zero reduced cost) subgraph.
fn lexicographic_refine(
    cost: &DMatrix<f64>,
    u: &[f64],
    v: &[f64],
    tol: f64,
    col_of_row: &mut [usize],
) {
    let m = col_of_row.len();
    let tight: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| cost[(i, j)] - u[i] - v[j] <= tol)
                .collect()
        })
        .collect();
    // Without ties every row has exactly its matched column; nothing to do.
    if tight.iter().all(|t| t.len() <= 1) {
        return;
    }

    let mut row_of_col = vec![0; m];
    for (i, &j) in col_of_row.iter().enumerate() {
        row_of_col[j] = i;
    }
    let mut fixed_col = vec![false; m];

    for i in 0..m {
        let current = col_of_row[i];
        for &j in &tight[i] {
            if j >= current {
                break;
            }
            if fixed_col[j] {
                continue;
            }
            let r = row_of_col[j];
            // Row i takes column j, row r must reach the freed column through
            // tight edges among unfixed rows.
            if let Some(path) = alternating_path(&tight, r, current, j, &fixed_col, &row_of_col) {
                col_of_row[i] = j;
                row_of_col[j] = i;
                for (row, col) in path {
                    col_of_row[row] = col;
                    row_of_col[col] = row;
                }
                break;
            }
        }
        fixed_col[col_of_row[i]] = true;
    }
}

/// Breadth-first search for an alternating path from `start_row` to `target`.
/// Returns the (row, new column) reassignments along the path.
fn alternating_path(
    tight: &[Vec<usize>],
    start_row: usize,
    target: usize,
    taken: usize,
    fixed_col: &[bool],
    row_of_col: &[usize],
) -> Option<Vec<(usize, usize)>> {
    let m = tight.len();
    const NONE: usize = usize::MAX;
    // parent_col[c] = row that reached column c
    let mut parent_row_of_col = vec![NONE; m];
    let mut queue = VecDeque::from([start_row]);
    let mut visited_row = vec![false; m];
    visited_row[start_row] = true;
    while let Some(a) = queue.pop_front() {
        for &c in &tight[a] {
            if c == taken || fixed_col[c] || parent_row_of_col[c] != NONE {
                continue;
            }
            parent_row_of_col[c] = a;
            if c == target {
                let mut path = Vec::new();
                let mut col = c;
                loop {
                    let row = parent_row_of_col[col];
                    path.push((row, col));
                    if row == start_row {
                        return Some(path);
                    }
                    col = current_col_of(row, row_of_col);
                }
            }
            let b = row_of_col[c];
            if !visited_row[b] {
                visited_row[b] = true;
                queue.push_back(b);
            }
        }
    }
    None
}

fn current_col_of(row: usize, row_of_col: &[usize]) -> usize {
    row_of_col
        .iter()
        .position(|&r| r == row)
        .expect("row is matched")
}

/// Minimizer of `sum_i a[i] * b[perm[i]]`.
pub fn sort_assignment(a: &[f64], b: &[f64]) -> Result<AssignmentResult> {
    RankOneAssigner::new(b)?.assign(a)
}

/// Rank-one assignment against a fixed `b`, sorted once and reused.
#[derive(Debug, Clone)]
pub struct RankOneAssigner {
    b: Vec<f64>,
    /// Indices of `b`, by value descending then index ascending.
    order: Vec<usize>,
    /// For each position in `order`, the id of its equal-value class.
    class_at: Vec<usize>,
    /// Members of each class, ascending index.
    classes: Vec<Vec<usize>>,
}

impl RankOneAssigner {
    pub fn new(b: &[f64]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("assignment vector"));
        }
        // Adding zero folds -0.0 into 0.0 so sorting and grouping agree.
        let b: Vec<f64> = b.iter().map(|v| v + 0.0).collect();
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by(|&i, &j| b[j].total_cmp(&b[i]).then(i.cmp(&j)));
        let mut class_at = Vec::with_capacity(b.len());
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (k, &idx) in order.iter().enumerate() {
            if k == 0 || b[order[k - 1]] != b[idx] {
                classes.push(Vec::new());
            }
            classes.last_mut().unwrap().push(idx);
            class_at.push(classes.len() - 1);
        }
        Ok(Self {
            b,
            order,
            class_at,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn assign(&self, a: &[f64]) -> Result<AssignmentResult> {
        let m = self.b.len();
        if a.len() != m {
            return Err(Error::Dimension(format!(
                "sort assignment lengths differ: {} vs {m}",
                a.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("assignment vector"));
        }
        let a: Vec<f64> = a.iter().map(|v| v + 0.0).collect();
        let mut a_order: Vec<usize> = (0..m).collect();
        a_order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(i.cmp(&j)));

        // Group equal values of `a`; each group is owed the b-classes sitting
        // at its sorted positions, in any arrangement.
        let mut group_of_row = vec![0; m];
        let mut quotas: Vec<Vec<(usize, usize)>> = Vec::new();
        for k in 0..m {
            let row = a_order[k];
            if k == 0 || a[a_order[k - 1]].total_cmp(&a[row]) != Ordering::Equal {
                quotas.push(Vec::new());
            }
            let g = quotas.len() - 1;
            group_of_row[row] = g;
            let class = self.class_at[k];
            match quotas[g].last_mut() {
                Some((c, count)) if *c == class => *count += 1,
                _ => quotas[g].push((class, 1)),
            }
        }

        // Rows in index order take the smallest admissible b index.
        let mut next_in_class = vec![0usize; self.classes.len()];
        let mut mapping = vec![0; m];
        for row in 0..m {
            let g = group_of_row[row];
            let (slot, class) = quotas[g]
                .iter()
                .enumerate()
                .filter(|(_, (_, count))| *count > 0)
                .min_by_key(|(_, (class, _))| self.classes[*class][next_in_class[*class]])
                .map(|(slot, (class, _))| (slot, *class))
                .expect("group quota covers its rows");
            mapping[row] = self.classes[class][next_in_class[class]];
            next_in_class[class] += 1;
            quotas[g][slot].1 -= 1;
        }

        let cost = mapping.iter().enumerate().map(|(i, &j)| a[i] * self.b[j]).sum();
        Ok(AssignmentResult {
            perm: Permutation::new(mapping)?,
            cost,
        })
    }

    /// Indices of `b` by descending value.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Assignment cost of a given permutation.
pub fn assignment_cost(cost: &DMatrix<f64>, perm: &Permutation) -> f64 {
    perm.mapping()
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum()
}
