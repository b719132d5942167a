//! Evaluation measures: permutation overlap, coefficient correlation and
//! normalized train/test residuals.

use crate::error::{Error, Result};
use crate::types::{Coefficients, Dataset, Permutation};

/// Fraction of rows paired identically by `est` and `truth`.
pub fn perm_overlap(est: &Permutation, truth: &Permutation) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "permutations of size {} and {}",
            est.len(),
            truth.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::Dimension("empty permutation".into()));
    }
    let agree = est
        .mapping()
        .iter()
        .zip(truth.mapping())
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / est.len() as f64)
}

/// Cosine of the Frobenius angle between two coefficient matrices.
pub fn beta_correlation(est: &Coefficients, reference: &Coefficients) -> Result<f64> {
    let (a, b) = (est.beta(), reference.beta());
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "coefficient shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 {
        return Err(Error::ZeroNorm("estimated coefficients"));
    }
    if nb == 0.0 {
        return Err(Error::ZeroNorm("reference coefficients"));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `||Pi Y - X beta|| / ||Y||`.
pub fn train_error(data: &Dataset, est: &Permutation, beta: &Coefficients) -> Result<f64> {
    let y_norm = data.y().norm();
    if y_norm == 0.0 {
        return Err(Error::ZeroNorm("labels"));
    }
    if beta.beta().nrows() != data.dx() || beta.beta().ncols() != data.dy() {
        return Err(Error::Dimension("coefficients do not match the data".into()));
    }
    let resid = est.apply_rows(data.y())? - beta.predict(data.x());
    Ok(resid.norm() / y_norm)
}

/// Normalized residual on held-out data, which is assumed unshuffled.
pub fn test_error(test: &Dataset, beta: &Coefficients) -> Result<f64> {
    train_error(test, &Permutation::identity(test.n()), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ridge_solve;
    use crate::synth::{generate, uniform_permutation, stream_rng};
    use nalgebra::DMatrix;

    #[test]
    fn overlap_cases() {
        let id = Permutation::identity(3);
        assert_eq!(perm_overlap(&id, &id).unwrap(), 1.0);
        let rev = Permutation::new(vec![2, 1, 0]).unwrap();
        assert!((perm_overlap(&id, &rev).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(perm_overlap(&id, &Permutation::identity(4)).is_err());
    }

    #[test]
    fn overlap_matches_matrix_inner_product() {
        let mut rng = stream_rng(8, 0);
        for _ in 0..10 {
            let a = uniform_permutation(50, &mut rng);
            let b = uniform_permutation(50, &mut rng);
            let inner = a.to_matrix().dot(&b.to_matrix()) / 50.0;
            assert!((perm_overlap(&a, &b).unwrap() - inner).abs() < 1e-15);
            assert_eq!(perm_overlap(&a, &b).unwrap(), perm_overlap(&b, &a).unwrap());
            // Relabel both by a common permutation.
            let c = uniform_permutation(50, &mut rng);
            let relabel = |p: &Permutation| {
                Permutation::new(c.mapping().iter().map(|&i| p.get(i)).collect()).unwrap()
            };
            assert_eq!(
                perm_overlap(&relabel(&a), &relabel(&b)).unwrap(),
                perm_overlap(&a, &b).unwrap()
            );
        }
    }

    #[test]
    fn correlation_cases() {
        let b = Coefficients::new(DMatrix::from_column_slice(2, 1, &[1.0, -2.0])).unwrap();
        assert!((beta_correlation(&b, &b).unwrap() - 1.0).abs() < 1e-15);
        let neg = Coefficients::new(-b.beta()).unwrap();
        assert!((beta_correlation(&neg, &b).unwrap() + 1.0).abs() < 1e-15);
        let e1 = Coefficients::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let e2 = Coefficients::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert_eq!(beta_correlation(&e1, &e2).unwrap(), 0.0);
        assert!(beta_correlation(&Coefficients::zeros(2, 1), &b).is_err());
        for c in [-3.0, 0.5, 7.0] {
            let scaled = Coefficients::new(b.beta() * c).unwrap();
            let r = beta_correlation(&scaled, &e1).unwrap();
            let expected = c.signum() * beta_correlation(&b, &e1).unwrap();
            assert!((r - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn train_error_cases() {
        let inst = generate(25, 2, 1, 0.0, 2).unwrap();
        let e = train_error(&inst.data, &inst.truth_perm, &inst.truth_beta).unwrap();
        assert!(e < 1e-14);
        let zero = Coefficients::zeros(2, 1);
        for p in [Permutation::identity(25), inst.truth_perm.clone()] {
            assert!((train_error(&inst.data, &p, &zero).unwrap() - 1.0).abs() < 1e-14);
        }
        let flat = Dataset::new(DMatrix::from_element(3, 1, 1.0), DMatrix::zeros(3, 1)).unwrap();
        assert!(train_error(&flat, &Permutation::identity(3), &zero).is_err());
    }

    #[test]
    fn test_error_cases() {
        let inst = generate(25, 2, 1, 0.1, 3).unwrap();
        let aligned = inst.aligned();
        let beta = ridge_solve(aligned.x(), aligned.y(), &Permutation::identity(25), 0.0).unwrap();
        let te = test_error(&aligned, &beta).unwrap();
        let tr = train_error(&aligned, &Permutation::identity(25), &beta).unwrap();
        assert_eq!(te, tr);
        assert_eq!(test_error(&aligned, &Coefficients::zeros(2, 1)).unwrap(), 1.0);
    }
}
