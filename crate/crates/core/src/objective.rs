//! Ridge regression under a fixed pairing and the quadratic objective over
//! permutations obtained by eliminating the coefficients.
//!
//! For a pairing `Pi`, the ridge coefficients are
//! `beta = M X^T Pi Y` with `M = (X^T X + lambda I)^-1`. Substituting back gives
//! `||Pi Y - X beta||^2 + lambda ||beta||^2 = tr(Y^T Pi^T L Pi Y)` with
//! `L = (S - I)^2 + lambda X M M X^T` and `S = X M X^T`.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{Coefficients, Dataset, Permutation};

/// Largest condition number of `X^T X` accepted when `lambda = 0`.
pub const MAX_CONDITION: f64 = 1e12;

/// Default ridge parameter: `1e-6 * tr(X^T X) / d_x`.
pub fn default_lambda(x: &DMatrix<f64>) -> f64 {
    let trace: f64 = x.iter().map(|v| v * v).sum();
    1e-6 * trace / x.ncols() as f64
}

/// Factored ridge normal equations `(X^T X + lambda I)`, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct RidgeSystem {
    lambda: f64,
    chol: Cholesky<f64, Dyn>,
}

impl RidgeSystem {
    pub fn new(x: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let mut gram = x.transpose() * x;
        if lambda == 0.0 {
            let condition = condition_number(&gram);
            if !(condition <= MAX_CONDITION) {
                return Err(Error::Singular { condition });
            }
        }
        for k in 0..gram.nrows() {
            gram[(k, k)] += lambda;
        }
        let chol = Cholesky::new(gram.clone()).ok_or_else(|| Error::Singular {
            condition: condition_number(&gram),
        })?;
        Ok(Self { lambda, chol })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `M = (X^T X + lambda I)^-1`, symmetrized.
    pub fn inverse(&self) -> DMatrix<f64> {
        let m = self.chol.inverse();
        (&m + m.transpose()) * 0.5
    }

    /// Coefficients for the labels already aligned with the rows of `x`.
    pub fn solve(&self, x: &DMatrix<f64>, aligned_y: &DMatrix<f64>) -> Result<Coefficients> {
        if x.nrows() != aligned_y.nrows() {
            return Err(Error::Dimension(format!(
                "x has {} rows, labels have {}",
                x.nrows(),
                aligned_y.nrows()
            )));
        }
        Coefficients::new(self.chol.solve(&(x.transpose() * aligned_y)))
    }
}

fn condition_number(sym: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `M = (X^T X + lambda I)^-1`.
pub fn ridge_gram(x: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    Ok(RidgeSystem::new(x, lambda)?.inverse())
}

/// The matrices defining the permutation objective.
#[derive(Debug, Clone)]
pub struct ObjectiveMatrices {
    /// `(X^T X + lambda I)^-1`, d_x x d_x.
    pub m: DMatrix<f64>,
    /// The ridge hat matrix `X M X^T`, n x n.
    pub s: DMatrix<f64>,
    /// `(S - I)^2 + lambda X M M X^T`, n x n, symmetric PSD.
    pub l: DMatrix<f64>,
}

pub fn objective_matrix(x: &DMatrix<f64>, lambda: f64) -> Result<ObjectiveMatrices> {
    let m = ridge_gram(x, lambda)?;
    let xm = x * &m;
    let mut s = &xm * x.transpose();
    let n = s.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    // S^2 + lambda X M M X^T = X M (X^T X + lambda I) M X^T = S, so the
    // objective matrix collapses to I - S.
    let l = DMatrix::identity(n, n) - &s;
    Ok(ObjectiveMatrices { m, s, l })
}

/// Ridge coefficients for the pairing `pi`: `M X^T Pi Y`.
pub fn ridge_solve(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    pi: &Permutation,
    lambda: f64,
) -> Result<Coefficients> {
    let aligned = pi.apply_rows(y)?;
    RidgeSystem::new(x, lambda)?.solve(x, &aligned)
}

/// `tr(Y^T Pi^T L Pi Y)`.
pub fn objective_value(l: &DMatrix<f64>, pi: &Permutation, y: &DMatrix<f64>) -> Result<f64> {
    if l.nrows() != l.ncols() || l.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "objective matrix {}x{} incompatible with labels {}x{}",
            l.nrows(),
            l.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let z = pi.apply_rows(y)?;
    Ok(trace_quadratic(l, &z).max(0.0))
}

/// `tr(A^T Q B)`.
pub(crate) fn trace_bilinear(a: &DMatrix<f64>, q: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(&(q * b))
}

/// `tr(Z^T Q Z)`.
pub(crate) fn trace_quadratic(q: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    trace_bilinear(z, q, z)
}

/// Penalized residual `||Pi Y - X beta||^2 + lambda ||beta||^2` for given coefficients.
pub fn penalized_residual(
    data: &Dataset,
    pi: &Permutation,
    beta: &Coefficients,
    lambda: f64,
) -> Result<f64> {
    let aligned = pi.apply_rows(data.y())?;
    let resid = aligned - beta.predict(data.x());
    Ok(resid.norm_squared() + lambda * beta.beta().norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1.0)
    }

    #[test]
    fn gram_of_identity() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert_eq!(ridge_gram(&x, 0.0).unwrap(), DMatrix::identity(2, 2));
        let m = ridge_gram(&x, 1.0).unwrap();
        assert!(rel_err(&m, &(DMatrix::identity(2, 2) * 0.5)) < 1e-15);
    }

    #[test]
    fn gram_residual_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = randn(6, 3, &mut rng);
        let m = ridge_gram(&x, 0.1).unwrap();
        let a = x.transpose() * &x + DMatrix::identity(3, 3) * 0.1;
        assert!(rel_err(&(m * a), &DMatrix::identity(3, 3)) < 1e-8);
    }

    #[test]
    fn rank_deficient_without_ridge_is_singular() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(ridge_gram(&x, 0.0), Err(Error::Singular { .. })));
        assert!(ridge_gram(&x, 0.5).is_ok());
    }

    #[test]
    fn negative_lambda_rejected() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(ridge_gram(&x, -1.0), Err(Error::Config(_))));
    }

    #[test]
    fn objective_matrix_square_identity_vanishes() {
        let x = DMatrix::<f64>::identity(4, 4);
        let om = objective_matrix(&x, 0.0).unwrap();
        assert!(rel_err(&om.s, &DMatrix::identity(4, 4)) < 1e-15);
        assert!(om.l.norm() < 1e-15);
    }

    #[test]
    fn objective_matrix_rank_one_by_hand() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let om = objective_matrix(&x, 0.0).unwrap();
        assert_eq!(om.m[(0, 0)], 1.0);
        assert_eq!(om.s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(om.l, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn objective_matrix_matches_expanded_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = randn(8, 2, &mut rng);
        let lambda = 0.01;
        let om = objective_matrix(&x, lambda).unwrap();
        // Literal (S - I)^2 + lambda X M^T M X^T.
        let s_minus_i = &om.s - DMatrix::identity(8, 8);
        let xm = &x * &om.m;
        let literal = &s_minus_i * &s_minus_i + (&xm * xm.transpose()) * lambda;
        assert!(rel_err(&om.l, &literal) < 1e-10);
    }

    #[test]
    fn ridge_solve_interpolates_with_identity() {
        let x = DMatrix::<f64>::identity(3, 3);
        let y = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 2.0, 0.5, 3.0, 4.0]);
        let beta = ridge_solve(&x, &y, &Permutation::identity(3), 0.0).unwrap();
        assert!(rel_err(beta.beta(), &y) < 1e-14);
    }

    #[test]
    fn ridge_solve_scalar() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let y = DMatrix::from_element(1, 1, 2.0);
        let beta = ridge_solve(&x, &y, &Permutation::identity(1), 1.0).unwrap();
        assert!((beta.beta()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ridge_solve_matches_independent_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn(10, 2, &mut rng);
        let y = randn(10, 1, &mut rng);
        let pi = Permutation::new(vec![3, 7, 0, 9, 1, 4, 2, 8, 6, 5]).unwrap();
        let beta = ridge_solve(&x, &y, &pi, 0.0).unwrap();
        // SVD least squares on the explicitly permuted labels.
        let target = pi.to_matrix() * &y;
        let lsq = x.clone().svd(true, true).solve(&target, 1e-14).unwrap();
        assert!(rel_err(beta.beta(), &lsq) < 1e-8);
        // Zero gradient of the least-squares objective.
        let grad = x.transpose() * (&x * beta.beta() - target);
        assert!(grad.norm() < 1e-10);
    }

    #[test]
    fn objective_value_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = randn(5, 2, &mut rng);
        let pi = Permutation::new(vec![4, 2, 0, 1, 3]).unwrap();
        assert_eq!(objective_value(&DMatrix::zeros(5, 5), &pi, &y).unwrap(), 0.0);
        let v = objective_value(&DMatrix::identity(5, 5), &pi, &y).unwrap();
        assert!((v - y.norm_squared()).abs() < 1e-12 * y.norm_squared());
        assert!(objective_value(&DMatrix::identity(4, 4), &pi, &y).is_err());
    }

    #[test]
    fn objective_is_psd_and_symmetric_for_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for t in 0..100 {
            let n = 3 + t % 10;
            let dx = 1 + t % 3;
            let x = randn(n, dx, &mut rng);
            let lambda = [0.0, 0.01, 0.5, 3.0][t % 4];
            let om = objective_matrix(&x, lambda).unwrap();
            let asym = (&om.l - om.l.transpose()).norm() / om.l.norm().max(1e-300);
            assert!(asym <= 1e-10);
            let masym = (&om.m - om.m.transpose()).norm() / om.m.norm();
            assert!(masym <= 1e-10);
            let eig = SymmetricEigen::new(om.l.clone()).eigenvalues;
            // Eigenvalues of I - S lie in [0, 1].
            assert!(eig.min() >= -1e-10 && eig.max() <= 1.0 + 1e-10);
        }
    }
}
