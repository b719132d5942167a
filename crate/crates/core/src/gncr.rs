//! Seeded shuffled regression by graduated non-convexity and Frank-Wolfe.
//!
//! The unseeded rows are relaxed from permutations to doubly stochastic
//! matrices `D`. Only the product `W = D * Y_hat` is tracked, which keeps the
//! iterate at `m x d_y` instead of `m x m`. For fixed `mu` the relaxed objective
//! is
//!
//! ```text
//! g_mu(W) = 2 tr(Y_tilde^T L_tilde W) + tr(W^T L_hat W) - mu ||H W||^2
//! ```
//!
//! where `H` centers columns. Growing `mu` from near zero to the top eigenvalue
//! of `L` morphs the problem from convex to concave, which drives the iterate
//! to a vertex of the polytope, i.e. a permutation.
//!
//! Each Frank-Wolfe step solves a linear assignment against the gradient and
//! takes the exact minimizing step along the segment to that vertex.

use log::{debug, warn};
use nalgebra::DMatrix;

use crate::assignment::{hungarian, RankOneAssigner};
use crate::error::{Error, Result};
use crate::objective::{default_lambda, objective_matrix, ridge_solve};
use crate::types::{Coefficients, Dataset, Permutation, SeedSet};

/// Solver hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GncrConfig {
    /// Ridge parameter; `None` picks `1e-6 * tr(X^T X) / d_x`.
    pub lambda: Option<f64>,
    /// Continuation factor, `mu <- gamma * mu` between stages.
    pub gamma: f64,
    /// First continuation value; `None` picks `mu_max / 1000`.
    pub mu0: Option<f64>,
    /// Relative Frobenius change of the iterate that ends a stage.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    /// Use the sorting assignment when labels are one-dimensional.
    pub use_fast_path: bool,
}

impl Default for GncrConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            gamma: 1.3,
            mu0: None,
            inner_tol: 1e-6,
            max_inner_iters: 300,
            max_outer_iters: 200,
            use_fast_path: true,
        }
    }
}

impl GncrConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be > 1, got {}", self.gamma)));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be >= 0, got {l}")));
            }
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(Error::Config(format!("mu0 must be > 0, got {mu0}")));
            }
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::Config(format!(
                "inner_tol must be > 0, got {}",
                self.inner_tol
            )));
        }
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// The problem restricted to the unseeded rows.
#[derive(Debug, Clone)]
pub struct SeededPartition {
    /// `Y[C̄*]`: labels not claimed by a seed, ascending row order.
    pub y_hat: DMatrix<f64>,
    /// `Y[C*]`: seeded labels, row `k` paired with x row `seeds.x_rows()[k]`.
    pub y_tilde: DMatrix<f64>,
    /// `L[C̄, C̄]`.
    pub l_hat: DMatrix<f64>,
    /// `L[C, C̄]`, rows in seed order.
    pub l_tilde: DMatrix<f64>,
    /// `C̄`, ascending.
    pub free_x_rows: Vec<usize>,
    /// `C̄*`, ascending.
    pub free_y_rows: Vec<usize>,
    pub seeds: SeedSet,
}

impl SeededPartition {
    /// Number of unseeded rows.
    pub fn free_len(&self) -> usize {
        self.free_x_rows.len()
    }

    pub fn dy(&self) -> usize {
        self.y_hat.ncols()
    }

    /// `L_tilde^T Y_tilde`, the constant part of the gradient.
    pub fn cross_term(&self) -> DMatrix<f64> {
        self.l_tilde.transpose() * &self.y_tilde
    }

    /// Full permutation from seeds plus a permutation of the free rows.
    pub fn assemble(&self, local: &Permutation) -> Result<Permutation> {
        if local.len() != self.free_len() {
            return Err(Error::Dimension(format!(
                "local permutation has size {}, expected {}",
                local.len(),
                self.free_len()
            )));
        }
        let n = self.free_len() + self.seeds.len();
        let mut mapping = vec![0; n];
        for (i, j) in self.seeds.pairs() {
            mapping[i] = j;
        }
        for (k, &i) in self.free_x_rows.iter().enumerate() {
            mapping[i] = self.free_y_rows[local.get(k)];
        }
        Permutation::new(mapping)
    }
}

fn complement(rows: &[usize], n: usize) -> Vec<usize> {
    let mut taken = vec![false; n];
    for &r in rows {
        taken[r] = true;
    }
    (0..n).filter(|&r| !taken[r]).collect()
}

/// Splits labels and objective matrix into seeded and free parts.
pub fn partition_seeds(
    data: &Dataset,
    l: &DMatrix<f64>,
    seeds: &SeedSet,
) -> Result<SeededPartition> {
    let n = data.n();
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::Dimension(format!(
            "objective matrix is {}x{}, expected {n}x{n}",
            l.nrows(),
            l.ncols()
        )));
    }
    seeds.validate(n)?;
    let free_x_rows = complement(seeds.x_rows(), n);
    let free_y_rows = complement(seeds.y_rows(), n);
    let y = data.y();
    Ok(SeededPartition {
        y_hat: y.select_rows(&free_y_rows),
        y_tilde: y.select_rows(seeds.y_rows()),
        l_hat: l.select_rows(&free_x_rows).select_columns(&free_x_rows),
        l_tilde: l.select_rows(seeds.x_rows()).select_columns(&free_x_rows),
        free_x_rows,
        free_y_rows,
        seeds: seeds.clone(),
    })
}

/// `H W`: subtracts each column's mean.
pub(crate) fn center(w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = w.clone();
    let m = w.nrows();
    if m == 0 {
        return out;
    }
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / m as f64;
        col.add_scalar_mut(-mean);
    }
    out
}

/// `L_hat_mu W = L_hat W - mu H W`.
fn shifted_product(l_hat: &DMatrix<f64>, w: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    let mut out = l_hat * w;
    if mu != 0.0 {
        out -= center(w) * mu;
    }
    out
}

fn check_shape(part: &SeededPartition, w: &DMatrix<f64>, what: &str) -> Result<()> {
    if w.shape() != part.y_hat.shape() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            part.y_hat.nrows(),
            part.y_hat.ncols()
        )));
    }
    Ok(())
}

/// Relaxed objective at `W = D * Y_hat`.
pub fn g_mu(part: &SeededPartition, w: &DMatrix<f64>, mu: f64) -> Result<f64> {
    check_shape(part, w, "iterate")?;
    Ok(g_mu_with_cross(part, &part.cross_term(), w, mu))
}

fn g_mu_with_cross(part: &SeededPartition, cross: &DMatrix<f64>, w: &DMatrix<f64>, mu: f64) -> f64 {
    2.0 * cross.dot(w) + w.dot(&shifted_product(&part.l_hat, w, mu))
}

/// Gradient of `g_mu` with respect to a free (not necessarily doubly
/// stochastic) `D`, where `W = D * Y_hat`:
/// `2 (L_hat_mu D Y_hat Y_hat^T + L_tilde^T Y_tilde Y_hat^T)`.
pub fn coupling_gradient(part: &SeededPartition, d: &DMatrix<f64>, mu: f64) -> Result<DMatrix<f64>> {
    let m = part.free_len();
    if d.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "coupling is {}x{}, expected {m}x{m}",
            d.nrows(),
            d.ncols()
        )));
    }
    let w = d * &part.y_hat;
    let r = shifted_product(&part.l_hat, &w, mu) + part.cross_term();
    Ok(r * part.y_hat.transpose() * 2.0)
}

/// Exact minimizer of `eta2 * a^2 - 2 * eta1 * a` over `a` in `[0, 1]`.
///
/// When `eta2 = 0` the quadratic is linear and the `eta2 <= 0` branches apply.
/// In the doubly concave case both endpoints are compared and ties keep `0`.
pub fn optimal_step(eta1: f64, eta2: f64) -> Result<f64> {
    if eta1.is_nan() || eta2.is_nan() {
        return Err(Error::NonFinite("line search coefficients"));
    }
    let alpha = if eta2 > 0.0 {
        if eta1 >= 0.0 {
            (eta1 / eta2).min(1.0)
        } else {
            0.0
        }
    } else if eta1 >= 0.0 || eta2 - 2.0 * eta1 < 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(alpha)
}

/// Coefficients `(eta1, eta2)` with
/// `g_mu(W + a (Y* - W)) - g_mu(W) = eta2 a^2 - 2 eta1 a`.
pub fn line_search_coeffs(
    part: &SeededPartition,
    w: &DMatrix<f64>,
    y_star: &DMatrix<f64>,
    mu: f64,
) -> Result<(f64, f64)> {
    check_shape(part, w, "iterate")?;
    check_shape(part, y_star, "vertex")?;
    Ok(line_search_with_cross(part, &part.cross_term(), w, y_star, mu))
}

fn line_search_with_cross(
    part: &SeededPartition,
    cross: &DMatrix<f64>,
    w: &DMatrix<f64>,
    y_star: &DMatrix<f64>,
    mu: f64,
) -> (f64, f64) {
    // Evaluated on the direction itself rather than as differences of the
    // four traces, which cancel badly near convergence.
    let dir = y_star - w;
    let l_dir = shifted_product(&part.l_hat, &dir, mu);
    let eta2 = dir.dot(&l_dir);
    let eta1 = -(w.dot(&l_dir) + cross.dot(&dir));
    (eta1, eta2)
}

/// Barycenter of the polytope: every row is the column mean of `Y_hat`.
pub fn barycenter(y_hat: &DMatrix<f64>) -> DMatrix<f64> {
    let m = y_hat.nrows();
    let mut w = DMatrix::zeros(m, y_hat.ncols());
    if m == 0 {
        return w;
    }
    for (c, col) in y_hat.column_iter().enumerate() {
        let mean = col.sum() / m as f64;
        w.column_mut(c).fill(mean);
    }
    w
}

/// One Frank-Wolfe iteration's bookkeeping.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub vertex: Permutation,
    pub eta1: f64,
    pub eta2: f64,
    pub alpha: f64,
    pub objective_before: f64,
    pub objective_after: f64,
    /// `||W_next - W|| / ||W||`.
    pub relative_change: f64,
}

/// Per-stage summary of the continuation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTrace {
    pub mu: f64,
    pub inner_iterations: usize,
    /// `g_mu` at stage exit.
    pub objective: f64,
    /// Last step size taken.
    pub step: f64,
    /// True when the stage ended on the iteration cap.
    pub hit_cap: bool,
    /// `g_mu` at stage entry followed by its value after every iteration.
    pub history: Vec<f64>,
}

/// Frank-Wolfe machinery over a fixed partition.
#[derive(Debug, Clone)]
pub struct FrankWolfe {
    part: SeededPartition,
    cross: DMatrix<f64>,
    rank_one: Option<RankOneAssigner>,
}

impl FrankWolfe {
    pub fn new(part: SeededPartition, use_fast_path: bool) -> Result<Self> {
        let rank_one = if use_fast_path && part.dy() == 1 {
            Some(RankOneAssigner::new(part.y_hat.column(0).as_slice())?)
        } else {
            None
        };
        let cross = part.cross_term();
        Ok(Self {
            part,
            cross,
            rank_one,
        })
    }

    pub fn partition(&self) -> &SeededPartition {
        &self.part
    }

    pub fn uses_fast_path(&self) -> bool {
        self.rank_one.is_some()
    }

    pub fn objective(&self, w: &DMatrix<f64>, mu: f64) -> f64 {
        g_mu_with_cross(&self.part, &self.cross, w, mu)
    }

    /// Half the gradient in `W`: `L_hat_mu W + L_tilde^T Y_tilde`.
    fn scores(&self, w: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
        shifted_product(&self.part.l_hat, w, mu) + &self.cross
    }

    /// Vertex minimizing the linearization of `g_mu` at `w`, and `Pi* Y_hat`.
    pub fn linear_step(&self, w: &DMatrix<f64>, mu: f64) -> Result<(Permutation, DMatrix<f64>)> {
        let r = self.scores(w, mu);
        let vertex = match &self.rank_one {
            Some(assigner) => assigner.assign(r.column(0).as_slice())?.perm,
            None => hungarian(&(r * self.part.y_hat.transpose()))?.perm,
        };
        let y_star = vertex.apply_rows(&self.part.y_hat)?;
        Ok((vertex, y_star))
    }

    pub fn line_search(&self, w: &DMatrix<f64>, y_star: &DMatrix<f64>, mu: f64) -> (f64, f64) {
        line_search_with_cross(&self.part, &self.cross, w, y_star, mu)
    }

    /// Takes one step in place.
    pub fn step(&self, w: &mut DMatrix<f64>, mu: f64) -> Result<StepInfo> {
        let before = self.objective(w, mu);
        let (vertex, y_star) = self.linear_step(w, mu)?;
        let (eta1, eta2) = self.line_search(w, &y_star, mu);
        let alpha = optimal_step(eta1, eta2)?;
        let norm = w.norm();
        let delta = (&y_star - &*w) * alpha;
        let relative_change = if norm > 0.0 {
            delta.norm() / norm
        } else if delta.norm() > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        *w += delta;
        let after = self.objective(w, mu);
        Ok(StepInfo {
            vertex,
            eta1,
            eta2,
            alpha,
            objective_before: before,
            objective_after: after,
            relative_change,
        })
    }

    /// Iterates at fixed `mu` until the iterate stops moving or the cap binds.
    pub fn run_stage(&self, w: &mut DMatrix<f64>, mu: f64, cfg: &GncrConfig) -> Result<StageTrace> {
        let mut history = vec![self.objective(w, mu)];
        let mut step = 0.0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.max_inner_iters {
            let info = self.step(w, mu)?;
            iterations += 1;
            step = info.alpha;
            history.push(info.objective_after);
            if info.relative_change < cfg.inner_tol {
                converged = true;
                break;
            }
        }
        Ok(StageTrace {
            mu,
            inner_iterations: iterations,
            objective: *history.last().unwrap(),
            step,
            hit_cap: !converged,
            history,
        })
    }

    /// Nearest vertex to `w`.
    pub fn extract_permutation(&self, w: &DMatrix<f64>) -> Result<Permutation> {
        let neg = -w;
        Ok(match &self.rank_one {
            Some(assigner) => assigner.assign(neg.column(0).as_slice())?.perm,
            None => hungarian(&(neg * self.part.y_hat.transpose()))?.perm,
        })
    }
}

/// Vertex of the linearized problem at `w` and the corresponding `Pi* Y_hat`.
pub fn fw_linear_step(
    part: &SeededPartition,
    w: &DMatrix<f64>,
    mu: f64,
    cfg: &GncrConfig,
) -> Result<(Permutation, DMatrix<f64>)> {
    check_shape(part, w, "iterate")?;
    FrankWolfe::new(part.clone(), cfg.use_fast_path)?.linear_step(w, mu)
}

/// Permutation of the free rows whose vertex `Pi Y_hat` is closest to `w`.
pub fn extract_permutation(part: &SeededPartition, w: &DMatrix<f64>) -> Result<Permutation> {
    check_shape(part, w, "iterate")?;
    let neg = -w;
    Ok(hungarian(&(neg * part.y_hat.transpose()))?.perm)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn top_eigenvalue(l: &DMatrix<f64>, rel_tol: f64, max_iters: usize) -> Result<f64> {
    let n = l.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    // Deterministic start with no special alignment.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 97) as f64 / 97.0);
    v /= v.norm();
    let mut rho = f64::NAN;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iters {
        let lv = l * &v;
        let next = v.dot(&lv);
        let norm = lv.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        if rho.is_finite() {
            last_change = (next - rho).abs() / next.abs().max(f64::MIN_POSITIVE);
            if last_change <= rel_tol {
                return Ok(next.max(0.0));
            }
        }
        rho = next;
        v = lv / norm;
    }
    Err(Error::PowerIteration {
        iterations: max_iters,
        last_change,
    })
}

/// Returns `(mu0, mu_max)`: `mu_max` is the top eigenvalue of `L`.
pub fn mu_schedule(l: &DMatrix<f64>, cfg: &GncrConfig) -> Result<(f64, f64)> {
    let mu_max = top_eigenvalue(l, 1e-6, 100_000)?;
    let mu0 = match cfg.mu0 {
        Some(mu0) => mu0,
        None => (1e-12 * mu_max).max(mu_max / 1000.0),
    };
    Ok((mu0, mu_max))
}

/// The continuation values actually visited.
///
/// Geometric from `mu0` by `gamma` while below `mu_max`, then one final stage
/// at `mu_max` so the last stage is concave. `mu_max = 0` (perfect
/// interpolation) runs a single stage at `mu = 1`.
pub fn continuation_values(mu0: f64, mu_max: f64, gamma: f64, max_stages: usize) -> Vec<f64> {
    if mu_max <= 0.0 {
        return vec![1.0];
    }
    if mu0 >= mu_max {
        return vec![mu0];
    }
    let mut mus = Vec::new();
    let mut mu = mu0;
    while mu < mu_max && mus.len() + 1 < max_stages {
        mus.push(mu);
        mu *= gamma;
    }
    mus.push(mu_max);
    mus
}

/// Rows of the de-shuffled label estimate: seeded x rows take their seed
/// label, the remaining x rows (ascending) take the rows of `y_est_hat`.
pub fn collate(y_est_hat: &DMatrix<f64>, y_tilde: &DMatrix<f64>, seeds: &SeedSet) -> Result<DMatrix<f64>> {
    if y_tilde.nrows() != seeds.len() {
        return Err(Error::Dimension(format!(
            "{} seeded label rows for {} seeds",
            y_tilde.nrows(),
            seeds.len()
        )));
    }
    if y_est_hat.ncols() != y_tilde.ncols() && y_tilde.nrows() > 0 && y_est_hat.nrows() > 0 {
        return Err(Error::Dimension("label widths differ".into()));
    }
    let dy = if y_est_hat.nrows() > 0 {
        y_est_hat.ncols()
    } else {
        y_tilde.ncols()
    };
    let n = y_est_hat.nrows() + y_tilde.nrows();
    seeds.validate(n)?;
    let mut out = DMatrix::zeros(n, dy);
    for (k, &i) in seeds.x_rows().iter().enumerate() {
        out.row_mut(i).copy_from(&y_tilde.row(k));
    }
    for (k, i) in complement(seeds.x_rows(), n).into_iter().enumerate() {
        out.row_mut(i).copy_from(&y_est_hat.row(k));
    }
    Ok(out)
}

/// Output of a shuffled-regression solver.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub perm: Permutation,
    pub beta: Coefficients,
    /// De-shuffled label estimate, row `i` aligned with x row `i`.
    pub y_est: DMatrix<f64>,
    pub trace: Vec<StageTrace>,
    pub lambda: f64,
}

impl SolveResult {
    /// Whether the last stage stopped on the tolerance rather than the cap.
    /// Earlier stages only warm-start the next one and often run to the cap.
    pub fn converged(&self) -> bool {
        self.trace.last().is_none_or(|s| !s.hit_cap)
    }

    pub fn capped_stages(&self) -> usize {
        self.trace.iter().filter(|s| s.hit_cap).count()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.trace.iter().map(|s| s.inner_iterations).sum()
    }
}

/// Runs the full continuation and returns permutation, coefficients and labels.
pub fn gncr_solve(data: &Dataset, seeds: &SeedSet, cfg: &GncrConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let n = data.n();
    seeds.validate(n)?;
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(data.x()));

    if seeds.len() == n {
        let perm = seeds_to_permutation(seeds, n)?;
        let beta = ridge_solve(data.x(), data.y(), &perm, lambda)?;
        let y_est = perm.apply_rows(data.y())?;
        return Ok(SolveResult {
            perm,
            beta,
            y_est,
            trace: Vec::new(),
            lambda,
        });
    }

    let om = objective_matrix(data.x(), lambda)?;
    let (mu0, mu_max) = mu_schedule(&om.l, cfg)?;
    let part = partition_seeds(data, &om.l, seeds)?;
    let fw = FrankWolfe::new(part, cfg.use_fast_path)?;

    let mut w = barycenter(&fw.partition().y_hat);
    let mut trace = Vec::new();
    for mu in continuation_values(mu0, mu_max, cfg.gamma, cfg.max_outer_iters) {
        let stage = fw.run_stage(&mut w, mu, cfg)?;
        if stage.hit_cap {
            debug!(
                "stage mu = {mu:.3e} stopped at the {} iteration cap",
                cfg.max_inner_iters
            );
        }
        trace.push(stage);
    }
    if trace.last().is_some_and(|s| s.hit_cap) {
        warn!("final stage stopped at the iteration cap; the estimate may not be a vertex");
    }

    let local = fw.extract_permutation(&w)?;
    let part = fw.partition();
    let perm = part.assemble(&local)?;
    let y_est = collate(&w, &part.y_tilde, seeds)?;
    let beta = ridge_solve(data.x(), data.y(), &perm, lambda)?;
    Ok(SolveResult {
        perm,
        beta,
        y_est,
        trace,
        lambda,
    })
}

fn seeds_to_permutation(seeds: &SeedSet, n: usize) -> Result<Permutation> {
    let mut mapping = vec![0; n];
    for (i, j) in seeds.pairs() {
        mapping[i] = j;
    }
    Permutation::new(mapping)
}
