//! Reference methods: least squares under the true pairing, and naive
//! alternating minimization over (permutation, coefficients).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::{hungarian, sort_assignment};
use crate::error::{Error, Result};
use crate::gncr::{SolveResult, StageTrace};
use crate::objective::{default_lambda, penalized_residual, RidgeSystem};
use crate::synth::{stream_rng, uniform_permutation};
use crate::types::{Coefficients, Dataset, Permutation};

/// Ridge fit on data whose rows are already correctly paired.
pub fn ols_unshuffled(data: &Dataset, lambda: f64) -> Result<Coefficients> {
    RidgeSystem::new(data.x(), lambda)?.solve(data.x(), data.y())
}

/// Starting point for alternating minimization.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NaiveInit {
    /// Ridge fit on the labels as given (identity pairing).
    #[default]
    Auto,
    Beta(Coefficients),
    /// The `Auto` start plus `restarts` random pairings drawn from `seed`;
    /// the run with the lowest final objective wins.
    RandomRestarts { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveConfig {
    pub lambda: Option<f64>,
    /// Relative change of the coefficients that ends the iteration.
    pub tol: f64,
    pub max_iters: usize,
    pub use_fast_path: bool,
}

impl Default for NaiveConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: 1e-8,
            max_iters: 100,
            use_fast_path: true,
        }
    }
}

/// `argmin_Pi ||Pi Y - X beta||^2` as a linear assignment.
fn best_pairing(data: &Dataset, beta: &Coefficients, use_fast_path: bool) -> Result<Permutation> {
    let fit = beta.predict(data.x());
    if use_fast_path && data.dy() == 1 {
        let a: Vec<f64> = fit.iter().map(|v| -v).collect();
        return Ok(sort_assignment(&a, data.y().as_slice())?.perm);
    }
    let cost: DMatrix<f64> = -(fit * data.y().transpose());
    Ok(hungarian(&cost)?.perm)
}

/// Alternates exact assignment and ridge steps until the pairing and the
/// coefficients stop changing.
pub fn naive_ao(data: &Dataset, init: &NaiveInit, cfg: &NaiveConfig) -> Result<SolveResult> {
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(Error::Config("naive AO needs tol > 0 and max_iters > 0".into()));
    }
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(data.x()));
    let system = RidgeSystem::new(data.x(), lambda)?;
    let auto_beta = || system.solve(data.x(), data.y());
    match init {
        NaiveInit::Auto => alternate(data, &system, auto_beta()?, cfg),
        NaiveInit::Beta(beta) => {
            if beta.beta().shape() != (data.dx(), data.dy()) {
                return Err(Error::Dimension("initial coefficients do not match the data".into()));
            }
            alternate(data, &system, beta.clone(), cfg)
        }
        NaiveInit::RandomRestarts { restarts, seed } => {
            let mut best = alternate(data, &system, auto_beta()?, cfg)?;
            let mut rng = stream_rng(*seed, 0);
            for _ in 0..*restarts {
                let start = uniform_permutation(data.n(), &mut rng);
                let beta0 = system.solve(data.x(), &start.apply_rows(data.y())?)?;
                let run = alternate(data, &system, beta0, cfg)?;
                if final_objective(&run) < final_objective(&best) {
                    best = run;
                }
            }
            Ok(best)
        }
    }
}

fn final_objective(r: &SolveResult) -> f64 {
    r.trace.last().map_or(f64::INFINITY, |t| t.objective)
}

fn alternate(
    data: &Dataset,
    system: &RidgeSystem,
    beta0: Coefficients,
    cfg: &NaiveConfig,
) -> Result<SolveResult> {
    let lambda = system.lambda();
    let mut beta = beta0;
    let mut perm: Option<Permutation> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let next_perm = best_pairing(data, &beta, cfg.use_fast_path)?;
        let next_beta = system.solve(data.x(), &next_perm.apply_rows(data.y())?)?;
        iterations += 1;
        history.push(penalized_residual(data, &next_perm, &next_beta, lambda)?);
        let change = (next_beta.beta() - beta.beta()).norm() / beta.beta().norm().max(f64::MIN_POSITIVE);
        let same_perm = perm.as_ref() == Some(&next_perm);
        beta = next_beta;
        perm = Some(next_perm);
        // Both halves must be stationary so the output is a fixed point.
        if same_perm && change < cfg.tol {
            converged = true;
            break;
        }
    }
    let perm = perm.expect("at least one iteration");
    let y_est = perm.apply_rows(data.y())?;
    let trace = vec![StageTrace {
        mu: 0.0,
        inner_iterations: iterations,
        objective: *history.last().unwrap(),
        step: 1.0,
        hit_cap: !converged,
        history,
    }];
    Ok(SolveResult {
        perm,
        beta,
        y_est,
        trace,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ridge_solve;
    use crate::synth::generate;

    #[test]
    fn ols_interpolates_identity_design() {
        let x = DMatrix::<f64>::identity(3, 3);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, 5.0, -2.0]);
        let data = Dataset::new(x, y.clone()).unwrap();
        assert_eq!(ols_unshuffled(&data, 0.0).unwrap().beta(), &y);
    }

    #[test]
    fn ols_is_ridge_with_identity() {
        let inst = generate(30, 3, 2, 0.1, 1).unwrap();
        let a = ols_unshuffled(&inst.data, 0.2).unwrap();
        let b = ridge_solve(inst.data.x(), inst.data.y(), &Permutation::identity(30), 0.2).unwrap();
        assert!((a.beta() - b.beta()).norm() < 1e-12);
    }

    #[test]
    fn ordered_noiseless_data_converges_immediately() {
        let inst = generate(20, 2, 1, 0.0, 2).unwrap();
        let data = inst.aligned();
        let cfg = NaiveConfig {
            lambda: Some(0.0),
            ..NaiveConfig::default()
        };
        let r = naive_ao(&data, &NaiveInit::Auto, &cfg).unwrap();
        assert!(r.perm.is_identity());
        assert!((r.beta.beta() - inst.truth_beta.beta()).norm() < 1e-10);
        // One step to find the pairing, one to confirm it.
        assert!(r.trace[0].inner_iterations <= 2);
    }

    #[test]
    fn result_is_a_fixed_point_and_descends() {
        for seed in 0..10 {
            let inst = generate(40, 2, 1, 0.05, seed).unwrap();
            let cfg = NaiveConfig::default();
            let r = naive_ao(&inst.data, &NaiveInit::Auto, &cfg).unwrap();
            assert!(!r.trace[0].hit_cap);
            let again = best_pairing(&inst.data, &r.beta, true).unwrap();
            assert_eq!(again, r.perm);
            let beta = ridge_solve(inst.data.x(), inst.data.y(), &again, r.lambda).unwrap();
            assert_eq!(beta, r.beta);
            let h = &r.trace[0].history;
            assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        }
    }

    #[test]
    fn multi_output_uses_hungarian() {
        let inst = generate(15, 2, 2, 0.01, 4).unwrap();
        let r = naive_ao(&inst.data, &NaiveInit::Auto, &NaiveConfig::default()).unwrap();
        let h = &r.trace[0].history;
        assert!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
    }

    #[test]
    fn restarts_never_worse_than_auto() {
        let inst = generate(30, 2, 1, 0.01, 5).unwrap();
        let cfg = NaiveConfig::default();
        let auto = naive_ao(&inst.data, &NaiveInit::Auto, &cfg).unwrap();
        let multi = naive_ao(
            &inst.data,
            &NaiveInit::RandomRestarts { restarts: 5, seed: 1 },
            &cfg,
        )
        .unwrap();
        assert!(final_objective(&multi) <= final_objective(&auto));
    }
}
