//! Outlier removal and per-column scaling, with the bookkeeping needed to map
//! fitted coefficients back to raw units.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Coefficients, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPolicy {
    /// Rows with any column beyond this many standard deviations are
    /// dropped, repeatedly until none remain. `None` keeps every row.
    pub outlier_z: Option<f64>,
}

impl Default for PreprocessPolicy {
    fn default() -> Self {
        Self { outlier_z: Some(4.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    /// Zero mean, unit population standard deviation.
    Standardize,
    /// Mapped onto `[0, 1]`.
    MinMax,
}

/// `processed = (raw - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub kind: ScalingKind,
    pub offset: f64,
    pub scale: f64,
}

impl ColumnScaling {
    fn fit(col: &[f64]) -> Option<Self> {
        let (min, max) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if max <= min {
            return None;
        }
        if min >= 0.0 {
            return Some(Self {
                kind: ScalingKind::MinMax,
                offset: min,
                scale: max - min,
            });
        }
        let (mean, std) = mean_std(col);
        (std > 0.0).then_some(Self {
            kind: ScalingKind::Standardize,
            offset: mean,
            scale: std,
        })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.offset) / self.scale
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.scale + self.offset
    }
}

fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

/// What [`preprocess`] did to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    /// Raw row indices that were removed as outliers, ascending.
    pub removed_rows: Vec<usize>,
    /// Raw feature indices that survived, ascending.
    pub kept_features: Vec<usize>,
    /// Raw feature indices dropped for having zero variance.
    pub dropped_features: Vec<usize>,
    pub raw_features: usize,
    /// One per kept feature.
    pub features: Vec<ColumnScaling>,
    pub labels: Vec<ColumnScaling>,
}

impl Transform {
    /// Applies the stored column maps to raw data with the same columns.
    /// Rows are not filtered.
    pub fn apply(&self, raw: &Dataset) -> Result<Dataset> {
        if raw.dx() != self.raw_features || raw.dy() != self.labels.len() {
            return Err(Error::Dimension("data does not match the transform".into()));
        }
        let x = DMatrix::from_fn(raw.n(), self.kept_features.len(), |i, k| {
            self.features[k].apply(raw.x()[(i, self.kept_features[k])])
        });
        let y = DMatrix::from_fn(raw.n(), raw.dy(), |i, j| self.labels[j].apply(raw.y()[(i, j)]));
        Dataset::new(x, y)
    }

    /// Maps processed-space label values back to raw units.
    pub fn raw_predictions(&self, processed: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(processed.nrows(), processed.ncols(), |i, j| {
            self.labels[j].invert(processed[(i, j)])
        })
    }

    /// Raw-space coefficients (zero rows for dropped features) and intercept
    /// equivalent to `beta` fitted on processed data.
    pub fn raw_coefficients(&self, beta: &Coefficients) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let b = beta.beta();
        if b.nrows() != self.kept_features.len() || b.ncols() != self.labels.len() {
            return Err(Error::Dimension("coefficients do not match the transform".into()));
        }
        let mut raw = DMatrix::zeros(self.raw_features, b.ncols());
        let mut intercept = DMatrix::zeros(1, b.ncols());
        for (j, ly) in self.labels.iter().enumerate() {
            let mut shift = 0.0;
            for (k, fx) in self.features.iter().enumerate() {
                let w = ly.scale * b[(k, j)] / fx.scale;
                raw[(self.kept_features[k], j)] = w;
                shift += w * fx.offset;
            }
            intercept[(0, j)] = ly.offset - shift;
        }
        Ok((raw, intercept))
    }
}

fn outlier_rows(data: &Dataset, threshold: f64) -> Vec<usize> {
    let mut flagged = vec![false; data.n()];
    for m in [data.x(), data.y()] {
        for col in columns(m) {
            let (mean, std) = mean_std(&col);
            if std == 0.0 {
                continue;
            }
            for (i, v) in col.iter().enumerate() {
                if ((v - mean) / std).abs() > threshold {
                    flagged[i] = true;
                }
            }
        }
    }
    (0..data.n()).filter(|&i| flagged[i]).collect()
}

/// Removes outliers, drops constant features, then standardizes signed
/// columns and min-max scales non-negative ones.
pub fn preprocess(data: &Dataset, policy: &PreprocessPolicy) -> Result<(Dataset, Transform)> {
    if data.n() < 2 {
        return Err(Error::Dimension("preprocessing needs at least two rows".into()));
    }
    let mut kept_rows: Vec<usize> = (0..data.n()).collect();
    let mut current = data.clone();
    if let Some(z) = policy.outlier_z {
        if !(z > 0.0) {
            return Err(Error::Config(format!("outlier threshold must be > 0, got {z}")));
        }
        loop {
            let bad = outlier_rows(&current, z);
            if bad.is_empty() {
                break;
            }
            let keep: Vec<usize> = (0..current.n()).filter(|i| bad.binary_search(i).is_err()).collect();
            if keep.len() < 2 {
                return Err(Error::Dimension("outlier removal left fewer than two rows".into()));
            }
            kept_rows = keep.iter().map(|&i| kept_rows[i]).collect();
            current = current.select_rows(&keep)?;
        }
    }
    let removed_rows: Vec<usize> = (0..data.n()).filter(|i| kept_rows.binary_search(i).is_err()).collect();

    let mut kept_features = Vec::new();
    let mut dropped_features = Vec::new();
    let mut features = Vec::new();
    for (k, col) in columns(current.x()).iter().enumerate() {
        match ColumnScaling::fit(col) {
            Some(s) => {
                kept_features.push(k);
                features.push(s);
            }
            None => {
                log::warn!("feature column {k} has zero variance and is dropped");
                dropped_features.push(k);
            }
        }
    }
    if kept_features.is_empty() {
        return Err(Error::Dimension("every feature column has zero variance".into()));
    }
    let labels = columns(current.y())
        .iter()
        .enumerate()
        .map(|(j, col)| {
            ColumnScaling::fit(col)
                .ok_or_else(|| Error::Dimension(format!("label column {j} has zero variance")))
        })
        .collect::<Result<Vec<_>>>()?;
    let transform = Transform {
        removed_rows,
        kept_features,
        dropped_features,
        raw_features: data.dx(),
        features,
        labels,
    };
    let processed = transform.apply(&current)?;
    Ok((processed, transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ridge_solve;
    use crate::synth::stream_rng;
    use crate::types::Permutation;
    use rand_distr::{Distribution, Normal};

    fn single(col: &[f64]) -> Dataset {
        let n = col.len();
        let y = DMatrix::from_fn(n, 1, |i, _| i as f64 - 1.5);
        Dataset::new(DMatrix::from_column_slice(n, 1, col), y).unwrap()
    }

    #[test]
    fn signed_column_is_standardized() {
        let (p, t) = preprocess(&single(&[-1.0, 0.0, 1.0]), &PreprocessPolicy::default()).unwrap();
        let col: Vec<f64> = p.x().column(0).iter().copied().collect();
        let (m, s) = mean_std(&col);
        assert!(m.abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        assert_eq!(t.features[0].kind, ScalingKind::Standardize);
    }

    #[test]
    fn nonnegative_column_is_min_max() {
        let (p, _) = preprocess(&single(&[0.0, 5.0, 10.0]), &PreprocessPolicy::default()).unwrap();
        assert_eq!(p.x().column(0).iter().copied().collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_feature_is_dropped() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 7.0, 2.0, 7.0, 4.0, 7.0]);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.0]);
        let (p, t) = preprocess(&Dataset::new(x, y).unwrap(), &PreprocessPolicy::default()).unwrap();
        assert_eq!(p.dx(), 1);
        assert_eq!(t.dropped_features, [1]);
    }

    #[test]
    fn outliers_removed_to_fixed_point() {
        let mut col: Vec<f64> = (0..50).map(|i| (i % 7) as f64 - 3.0).collect();
        col.push(1e3);
        let (p, t) = preprocess(&single(&col), &PreprocessPolicy::default()).unwrap();
        assert_eq!(t.removed_rows, [50]);
        assert_eq!(p.n(), 50);
        let none = PreprocessPolicy { outlier_z: None };
        assert_eq!(preprocess(&single(&col), &none).unwrap().0.n(), 51);
    }

    fn random_raw(seed: u64) -> Dataset {
        let mut rng = stream_rng(seed, 0);
        let normal = Normal::new(3.0, 2.0).unwrap();
        let x = DMatrix::from_fn(40, 3, |_, k| {
            let v: f64 = normal.sample(&mut rng);
            if k == 1 { v.abs() * 10.0 } else { v }
        });
        let y = DMatrix::from_fn(40, 1, |i, _| x[(i, 0)] - 2.0 * x[(i, 1)] + normal.sample(&mut rng));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn idempotent() {
        for seed in 0..5 {
            let (once, _) = preprocess(&random_raw(seed), &PreprocessPolicy::default()).unwrap();
            let (twice, t) = preprocess(&once, &PreprocessPolicy::default()).unwrap();
            assert!(t.removed_rows.is_empty());
            assert!((once.x() - twice.x()).amax() < 1e-12);
            assert!((once.y() - twice.y()).amax() < 1e-12);
        }
    }

    #[test]
    fn raw_coefficients_reproduce_predictions() {
        for seed in 0..5 {
            let raw = random_raw(seed);
            let (p, t) = preprocess(&raw, &PreprocessPolicy { outlier_z: None }).unwrap();
            let beta = ridge_solve(p.x(), p.y(), &Permutation::identity(p.n()), 0.1).unwrap();
            let via_processed = t.raw_predictions(&beta.predict(p.x()));
            let (b, c) = t.raw_coefficients(&beta).unwrap();
            let mut direct = raw.x() * b;
            for mut row in direct.row_iter_mut() {
                row += &c;
            }
            assert!((via_processed - direct).amax() < 1e-10);
        }
    }

    #[test]
    fn apply_matches_fit_on_same_rows() {
        let raw = random_raw(3);
        let (p, t) = preprocess(&raw, &PreprocessPolicy { outlier_z: None }).unwrap();
        assert_eq!(t.apply(&raw).unwrap(), p);
    }
}
