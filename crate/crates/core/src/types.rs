//! Domain types shared by every solver.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paired features `x` (n x d_x) and labels `y` (n x d_y).
///
/// The rows of `y` are not assumed to correspond to the rows of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "x has {} rows but y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "dataset must be non-empty, got x {}x{} and y {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("labels"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dx(&self) -> usize {
        self.x.ncols()
    }

    pub fn dy(&self) -> usize {
        self.y.ncols()
    }

    /// Keeps the given rows (of both matrices, in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x.select_rows(rows), self.y.select_rows(rows))
    }

    /// Same features, new label matrix.
    pub fn with_labels(&self, y: DMatrix<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.x, self.y)
    }
}

/// A bijection on `0..n`.
///
/// `mapping[i] = j` means the permutation matrix has a one at `(i, j)`:
/// row `i` of `x` is paired with row `j` of `y`, so row `i` of `Pi * Y` is `y[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for (i, &j) in mapping.iter().enumerate() {
            if j >= n {
                return Err(Error::InvalidPermutation(format!(
                    "entry {i} maps to {j}, outside 0..{n}"
                )));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidPermutation(format!("value {j} appears twice")));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn get(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        Self { mapping: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn fixed_points(&self) -> usize {
        self.mapping
            .iter()
            .enumerate()
            .filter(|(i, j)| i == *j)
            .count()
    }

    /// `Pi * m`: row `i` of the result is row `mapping[i]` of `m`.
    pub fn apply_rows(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of size {} applied to matrix with {} rows",
                self.len(),
                m.nrows()
            )));
        }
        Ok(m.select_rows(&self.mapping))
    }

    /// `Pi^T * m`, the inverse row shuffle.
    pub fn apply_rows_transposed(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.inverse().apply_rows(m)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for (i, &j) in self.mapping.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        p
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        Self::new(mapping)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}

/// Known `(x_row, y_row)` correspondences.
///
/// `x_rows()[k]` is paired with `y_rows()[k]`; both index lists are injective.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    x_rows: Vec<usize>,
    y_rows: Vec<usize>,
}

impl SeedSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(pairs: &[(usize, usize)], n: usize) -> Result<Self> {
        if pairs.len() > n {
            return Err(Error::InvalidSeeds(format!(
                "{} seeds for only {n} rows",
                pairs.len()
            )));
        }
        let mut x_seen = vec![false; n];
        let mut y_seen = vec![false; n];
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidSeeds(format!(
                    "pair ({i}, {j}) out of range for n = {n}"
                )));
            }
            if std::mem::replace(&mut x_seen[i], true) {
                return Err(Error::InvalidSeeds(format!("x row {i} is seeded twice")));
            }
            if std::mem::replace(&mut y_seen[j], true) {
                return Err(Error::InvalidSeeds(format!("y row {j} is seeded twice")));
            }
        }
        Ok(Self {
            x_rows: pairs.iter().map(|p| p.0).collect(),
            y_rows: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Seeds taken from a known permutation at the given x rows.
    pub fn from_permutation(perm: &Permutation, x_rows: &[usize]) -> Result<Self> {
        let pairs: Vec<_> = x_rows.iter().map(|&i| (i, perm.get(i))).collect();
        Self::new(&pairs, perm.len())
    }

    pub fn len(&self) -> usize {
        self.x_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_rows.is_empty()
    }

    /// The seeded x rows, `C`.
    pub fn x_rows(&self) -> &[usize] {
        &self.x_rows
    }

    /// The seeded y rows, `C*`, aligned with [`x_rows`](Self::x_rows).
    pub fn y_rows(&self) -> &[usize] {
        &self.y_rows
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.x_rows.iter().copied().zip(self.y_rows.iter().copied())
    }

    /// Checks the set against a problem size; used when seeds come from a file.
    pub fn validate(&self, n: usize) -> Result<()> {
        let pairs: Vec<_> = self.pairs().collect();
        Self::new(&pairs, n).map(|_| ())
    }

    pub fn is_consistent_with(&self, perm: &Permutation) -> bool {
        self.pairs()
            .all(|(i, j)| i < perm.len() && perm.get(i) == j)
    }
}

/// Regression coefficients, d_x x d_y.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    beta: DMatrix<f64>,
}

impl Coefficients {
    pub fn new(beta: DMatrix<f64>) -> Result<Self> {
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self { beta })
    }

    pub fn zeros(dx: usize, dy: usize) -> Self {
        Self {
            beta: DMatrix::zeros(dx, dy),
        }
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.beta
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.beta
    }
}
