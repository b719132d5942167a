//! Experiment protocols: synthetic grids, seed-ratio sweeps and repeated
//! train/test splits of a real dataset.
//!
//! Every trial derives its own seed from `(rng_seed, trial index)` and owns
//! its generators, so the records do not depend on the number of threads.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::index::sample;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{naive_ao, ols_unshuffled, NaiveConfig, NaiveInit};
use crate::error::{Error, Result};
use crate::gncr::{gncr_solve, GncrConfig, SolveResult};
use crate::metrics::{beta_correlation, perm_overlap, test_error, train_error};
use crate::objective::{default_lambda, penalized_residual};
use crate::synth::{generate, recovery_feasible, snr, stream_rng, uniform_permutation};
use crate::types::{Coefficients, Dataset, Permutation, SeedSet};

use super::io::load_csv;
use super::preprocess::{preprocess, PreprocessPolicy};

/// Constant of the recovery threshold reported with synthetic trials.
pub const RECOVERY_C1: f64 = 3.0;

const STREAM_INSTANCE: u64 = 5;
const STREAM_SAMPLING: u64 = 6;

/// Deterministic 64-bit seed for item `index` of a labelled stream.
pub fn derive_seed(rng_seed: u64, stream: u64, index: usize) -> u64 {
    let mut rng = stream_rng(rng_seed, stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SyntheticGrid,
    Real,
    SeedSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gncr,
    Naive,
    /// Least squares on the correctly paired data; a reference, not a
    /// shuffled-regression method.
    Ols,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Gncr => "gncr",
            Algorithm::Naive => "naive",
            Algorithm::Ols => "ols",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Synthetic sample sizes.
    pub ns: Vec<usize>,
    /// Synthetic noise levels.
    pub sigmas: Vec<f64>,
    pub dx: usize,
    pub dy: usize,
    /// Real data; replaces the synthetic generator when set.
    pub dataset: Option<DatasetSpec>,
    pub preprocess: PreprocessPolicy,
    pub repeats: usize,
    /// Training fraction for real data.
    pub split_ratio: f64,
    /// Fractions of true pairs revealed as seeds (seed-sweep mode).
    pub seed_ratios: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub gncr: GncrConfig,
    pub naive: NaiveConfig,
    /// Extra random restarts for naive alternating minimization.
    pub naive_restarts: usize,
    pub rng_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Record wall-clock seconds per solver call. Off by default so reports
    /// are reproducible byte for byte.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SyntheticGrid,
            ns: vec![20],
            sigmas: vec![0.0],
            dx: 2,
            dy: 1,
            dataset: None,
            preprocess: PreprocessPolicy::default(),
            repeats: 1,
            split_ratio: 0.8,
            seed_ratios: vec![0.0],
            algorithms: vec![Algorithm::Gncr],
            gncr: GncrConfig::default(),
            naive: NaiveConfig::default(),
            naive_restarts: 0,
            rng_seed: 0,
            threads: None,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repeats == 0 {
            return bad("repeats must be >= 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        self.gncr.validate()?;
        let synthetic = self.dataset.is_none();
        if self.mode == Mode::Real && synthetic {
            return bad("real mode needs a dataset".into());
        }
        if synthetic {
            if self.ns.is_empty() || self.sigmas.is_empty() {
                return bad("synthetic grid needs at least one n and one sigma".into());
            }
            if self.ns.iter().any(|&n| n < 2) {
                return bad("synthetic n must be >= 2".into());
            }
            if self.sigmas.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
                return bad("sigma values must be >= 0".into());
            }
            if self.dx == 0 || self.dy == 0 {
                return bad("dx and dy must be >= 1".into());
            }
        }
        if self.mode == Mode::SeedSweep {
            if self.seed_ratios.is_empty() {
                return bad("seed sweep needs at least one ratio".into());
            }
            if let Some(r) = self.seed_ratios.iter().find(|r| !(**r >= 0.0 && **r <= 1.0)) {
                return bad(format!("seed ratio {r} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Metrics of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub repeat: usize,
    pub algorithm: Algorithm,
    pub n: usize,
    pub dx: usize,
    pub dy: usize,
    pub sigma: Option<f64>,
    pub seed_ratio: Option<f64>,
    pub num_seeds: usize,
    pub trial_seed: u64,
    /// `None` when noiseless (infinite).
    pub snr: Option<f64>,
    pub recovery_feasible: Option<bool>,
    pub overlap: Option<f64>,
    pub beta_corr: Option<f64>,
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    pub time_s: Option<f64>,
    pub converged: Option<bool>,
    pub stages: usize,
    pub inner_iterations: usize,
    /// `||Pi Y - X beta||^2 + lambda ||beta||^2` at the returned estimate.
    pub objective: Option<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    /// Key of the cell this record is averaged into.
    pub fn group(&self) -> String {
        let mut key = format!("{} n={}", self.algorithm, self.n);
        if let Some(s) = self.sigma {
            key.push_str(&format!(" sigma={s}"));
        }
        if let Some(r) = self.seed_ratio {
            key.push_str(&format!(" ratio={r}"));
        }
        key
    }

    /// Whether every metric lies in its documented range.
    pub fn in_range(&self) -> bool {
        let within = |v: Option<f64>, lo: f64, hi: f64| v.is_none_or(|v| v >= lo && v <= hi);
        within(self.overlap, 0.0, 1.0)
            && within(self.beta_corr, -1.0, 1.0)
            && within(self.train_error, 0.0, f64::INFINITY)
            && within(self.test_error, 0.0, f64::INFINITY)
            && within(self.time_s, 0.0, f64::INFINITY)
    }
}

/// One trial's data with everything the metrics need.
struct Instance {
    /// Shuffled training data.
    data: Dataset,
    truth: Permutation,
    /// Coefficients the estimate is correlated against.
    reference_beta: Coefficients,
    test: Option<Dataset>,
    seeds: SeedSet,
    sigma: Option<f64>,
    snr: Option<f64>,
    seed_ratio: Option<f64>,
}

impl Instance {
    fn aligned(&self) -> Result<Dataset> {
        self.data.with_labels(self.truth.apply_rows(self.data.y())?)
    }
}

struct Trial {
    index: usize,
    repeat: usize,
    seed: u64,
    build: Box<dyn Fn(u64) -> Result<Instance> + Send + Sync>,
}

fn solve_one(alg: Algorithm, inst: &Instance, cfg: &ExperimentConfig) -> Result<SolveResult> {
    let lambda = cfg.gncr.lambda.unwrap_or_else(|| default_lambda(inst.data.x()));
    match alg {
        Algorithm::Gncr => gncr_solve(&inst.data, &inst.seeds, &cfg.gncr),
        Algorithm::Naive => {
            let naive = NaiveConfig {
                lambda: Some(cfg.naive.lambda.unwrap_or(lambda)),
                ..cfg.naive.clone()
            };
            let init = if cfg.naive_restarts > 0 {
                NaiveInit::RandomRestarts {
                    restarts: cfg.naive_restarts,
                    seed: cfg.rng_seed,
                }
            } else {
                NaiveInit::Auto
            };
            naive_ao(&inst.data, &init, &naive)
        }
        Algorithm::Ols => {
            let aligned = inst.aligned()?;
            let beta = ols_unshuffled(&aligned, lambda)?;
            Ok(SolveResult {
                perm: inst.truth.clone(),
                y_est: aligned.y().clone(),
                beta,
                trace: Vec::new(),
                lambda,
            })
        }
    }
}

fn record(trial: &Trial, alg: Algorithm, inst: &Result<Instance>, cfg: &ExperimentConfig) -> TrialRecord {
    let mut rec = TrialRecord {
        trial: trial.index,
        repeat: trial.repeat,
        algorithm: alg,
        n: 0,
        dx: 0,
        dy: 0,
        sigma: None,
        seed_ratio: None,
        num_seeds: 0,
        trial_seed: trial.seed,
        snr: None,
        recovery_feasible: None,
        overlap: None,
        beta_corr: None,
        train_error: None,
        test_error: None,
        time_s: None,
        converged: None,
        stages: 0,
        inner_iterations: 0,
        objective: None,
        error: None,
    };
    let inst = match inst {
        Ok(inst) => inst,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.n = inst.data.n();
    rec.dx = inst.data.dx();
    rec.dy = inst.data.dy();
    rec.sigma = inst.sigma;
    rec.seed_ratio = inst.seed_ratio;
    rec.num_seeds = inst.seeds.len();
    rec.snr = inst.snr;
    if inst.sigma.is_some() {
        rec.recovery_feasible = Some(recovery_feasible(
            rec.n,
            inst.snr.unwrap_or(f64::INFINITY),
            RECOVERY_C1,
        ));
    }
    let start = Instant::now();
    let solved = solve_one(alg, inst, cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let outcome = solved.and_then(|r| {
        rec.converged = Some(r.converged());
        rec.stages = r.trace.len();
        rec.inner_iterations = r.total_inner_iterations();
        rec.objective = Some(penalized_residual(&inst.data, &r.perm, &r.beta, r.lambda)?);
        rec.overlap = Some(perm_overlap(&r.perm, &inst.truth)?);
        rec.beta_corr = beta_correlation(&r.beta, &inst.reference_beta).ok();
        rec.train_error = Some(train_error(&inst.data, &r.perm, &r.beta)?);
        if let Some(test) = &inst.test {
            rec.test_error = Some(test_error(test, &r.beta)?);
        }
        Ok(())
    });
    if let Err(e) = outcome {
        log::warn!("trial {} ({alg}) failed: {e}", trial.index);
        rec.error = Some(e.to_string());
    }
    if cfg.timing {
        rec.time_s = Some((elapsed * 1e3).round() / 1e3);
    }
    rec
}

fn execute(trials: Vec<Trial>, cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let work = || -> Vec<TrialRecord> {
        trials
            .par_iter()
            .map(|t| {
                let inst = (t.build)(t.seed);
                cfg.algorithms
                    .iter()
                    .map(|&alg| record(t, alg, &inst, cfg))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
            .map(|pool| pool.install(work)),
        None => Ok(work()),
    }
}

fn synthetic_instance(
    n: usize,
    sigma: f64,
    cfg: &ExperimentConfig,
    instance_seed: u64,
) -> Result<Instance> {
    let s = generate(n, cfg.dx, cfg.dy, sigma, instance_seed)?;
    let snr_value = snr(&s.truth_beta, sigma)?;
    Ok(Instance {
        data: s.data,
        truth: s.truth_perm,
        reference_beta: s.truth_beta,
        test: None,
        seeds: SeedSet::empty(),
        sigma: Some(sigma),
        snr: snr_value.is_finite().then_some(snr_value),
        seed_ratio: None,
    })
}

/// Draws `round(ratio * free)` true pairs as seeds.
fn draw_seeds(truth: &Permutation, ratio: f64, sampling_seed: u64) -> Result<SeedSet> {
    let n = truth.len();
    let k = ((ratio * n as f64).round() as usize).min(n);
    let mut rng = stream_rng(sampling_seed, 0);
    let mut x_rows = sample(&mut rng, n, k).into_vec();
    x_rows.sort_unstable();
    SeedSet::from_permutation(truth, &x_rows)
}

/// Row indices of a uniform random split with `round(fraction * n)` rows in
/// the training part. Both parts are ascending.
pub fn split_indices(n: usize, fraction: f64, rng_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::Dimension(format!(
            "split of {n} rows at {fraction} leaves an empty part"
        )));
    }
    let perm = uniform_permutation(n, &mut stream_rng(rng_seed, 0));
    let mut train = perm.mapping()[..n_train].to_vec();
    let mut test = perm.mapping()[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(data: &Dataset, fraction: f64, rng_seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.n(), fraction, rng_seed)?;
    Ok((data.select_rows(&train)?, data.select_rows(&test)?))
}

/// Split, then shuffle the training labels by a uniform permutation.
fn real_instance(data: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let (train, test) = split(data, cfg.split_ratio, seed)?;
    let truth = uniform_permutation(train.n(), &mut stream_rng(seed, 1));
    let lambda = cfg.gncr.lambda.unwrap_or_else(|| default_lambda(train.x()));
    let reference_beta = ols_unshuffled(&train, lambda)?;
    let shuffled = train.with_labels(truth.apply_rows_transposed(train.y())?)?;
    Ok(Instance {
        data: shuffled,
        truth,
        reference_beta,
        test: Some(test),
        seeds: SeedSet::empty(),
        sigma: None,
        snr: None,
        seed_ratio: None,
    })
}

fn load_real(cfg: &ExperimentConfig) -> Result<Dataset> {
    let spec = cfg.dataset.as_ref().ok_or_else(|| Error::Config("no dataset".into()))?;
    let raw = load_csv(&spec.path, &spec.labels)?;
    let (data, transform) = preprocess(&raw.data, &cfg.preprocess)?;
    log::info!(
        "{}: {} rows kept of {}, {} features",
        spec.path.display(),
        data.n(),
        raw.data.n(),
        data.dx()
    );
    if !transform.dropped_features.is_empty() {
        log::warn!("dropped constant features {:?}", transform.dropped_features);
    }
    Ok(data)
}

/// Every `(n, sigma)` cell of the grid, `repeats` times each, in n-major order.
pub fn run_synthetic_grid(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut trials = Vec::new();
    for &n in &cfg.ns {
        for &sigma in &cfg.sigmas {
            for repeat in 0..cfg.repeats {
                let index = trials.len();
                let c = cfg.clone();
                trials.push(Trial {
                    index,
                    repeat,
                    seed: derive_seed(cfg.rng_seed, STREAM_INSTANCE, index),
                    build: Box::new(move |seed| synthetic_instance(n, sigma, &c, seed)),
                });
            }
        }
    }
    execute(trials, cfg)
}

/// GnCR with a growing fraction of revealed true pairs. Each repeat uses the
/// same instance for every ratio, so ratios are compared on paired data.
pub fn run_seed_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let real = match cfg.dataset {
        Some(_) => Some(std::sync::Arc::new(load_real(cfg)?)),
        None => None,
    };
    let cells: Vec<(usize, f64)> = match real {
        Some(_) => vec![(0, f64::NAN)],
        None => cfg
            .ns
            .iter()
            .flat_map(|&n| cfg.sigmas.iter().map(move |&s| (n, s)))
            .collect(),
    };
    let mut trials = Vec::new();
    let mut instance_index = 0;
    for &(n, sigma) in &cells {
        for repeat in 0..cfg.repeats {
            let instance_seed = derive_seed(cfg.rng_seed, STREAM_INSTANCE, instance_index);
            instance_index += 1;
            for &ratio in &cfg.seed_ratios {
                let index = trials.len();
                let c = cfg.clone();
                let real = real.clone();
                trials.push(Trial {
                    index,
                    repeat,
                    seed: derive_seed(cfg.rng_seed, STREAM_SAMPLING, index),
                    build: Box::new(move |seed| {
                        let mut inst = match &real {
                            Some(data) => real_instance(data, &c, instance_seed)?,
                            None => synthetic_instance(n, sigma, &c, instance_seed)?,
                        };
                        inst.seeds = draw_seeds(&inst.truth, ratio, seed)?;
                        inst.seed_ratio = Some(ratio);
                        Ok(inst)
                    }),
                });
            }
        }
    }
    execute(trials, cfg)
}

/// Repeated random train/test splits of a preprocessed real dataset with
/// shuffled training labels.
pub fn run_real(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let data = std::sync::Arc::new(load_real(cfg)?);
    let trials = (0..cfg.repeats)
        .map(|repeat| {
            let c = cfg.clone();
            let data = data.clone();
            Trial {
                index: repeat,
                repeat,
                seed: derive_seed(cfg.rng_seed, STREAM_INSTANCE, repeat),
                build: Box::new(move |seed| real_instance(&data, &c, seed)),
            }
        })
        .collect();
    execute(trials, cfg)
}

/// Runs the protocol selected by `cfg.mode`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    match cfg.mode {
        Mode::SyntheticGrid => run_synthetic_grid(cfg),
        Mode::SeedSweep => run_seed_sweep(cfg),
        Mode::Real => run_real(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(ns: Vec<usize>, sigmas: Vec<f64>, repeats: usize) -> ExperimentConfig {
        ExperimentConfig {
            ns,
            sigmas,
            repeats,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_cell_single_record() {
        let recs = run_synthetic_grid(&grid(vec![20], vec![0.0], 1)).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!((r.algorithm, r.n, r.sigma), (Algorithm::Gncr, 20, Some(0.0)));
        assert!(r.error.is_none() && r.in_range());
        assert_eq!(r.time_s, None);
        assert_eq!(r.snr, None);
    }

    #[test]
    fn ols_given_truth_is_exact_without_noise() {
        let mut cfg = grid(vec![20], vec![0.0], 3);
        cfg.algorithms = vec![Algorithm::Ols];
        cfg.gncr.lambda = Some(0.0);
        for r in run_synthetic_grid(&cfg).unwrap() {
            assert_eq!(r.overlap, Some(1.0));
            assert!(r.train_error.unwrap() < 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_records() {
        let mut cfg = grid(vec![12, 16], vec![0.0, 0.01], 2);
        cfg.algorithms = vec![Algorithm::Gncr, Algorithm::Naive];
        cfg.threads = Some(1);
        let serial = run_synthetic_grid(&cfg).unwrap();
        cfg.threads = Some(4);
        assert_eq!(serial, run_synthetic_grid(&cfg).unwrap());
        assert_eq!(serial.len(), 2 * 2 * 2 * 2);
    }

    #[test]
    fn failures_are_recorded_and_the_grid_continues() {
        // n = 2 with d_x = 3 and lambda = 0 has a singular Gram matrix.
        let mut cfg = grid(vec![2, 10], vec![0.0], 1);
        cfg.dx = 3;
        cfg.gncr.lambda = Some(0.0);
        let recs = run_synthetic_grid(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].error.is_some());
        assert!(recs[1].error.is_none());
    }

    #[test]
    fn timing_is_opt_in() {
        let mut cfg = grid(vec![10], vec![0.0], 1);
        cfg.timing = true;
        let t = run_synthetic_grid(&cfg).unwrap()[0].time_s.unwrap();
        assert!(t >= 0.0 && (t * 1e3 - (t * 1e3).round()).abs() < 1e-9);
    }

    #[test]
    fn split_cases() {
        let (train, test) = split_indices(10, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split_indices(10, 0.8, 3).unwrap(), (train.clone(), test.clone()));
        let mut all: Vec<usize> = train.into_iter().chain(test).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(10, 0.0, 0).is_err());
        assert!(split_indices(2, 0.9, 0).is_err());
    }

    #[test]
    fn sweep_endpoints() {
        let mut cfg = grid(vec![30], vec![0.01], 2);
        cfg.mode = Mode::SeedSweep;
        cfg.seed_ratios = vec![0.0, 1.0];
        let recs = run_seed_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 4);
        for r in recs.iter().filter(|r| r.seed_ratio == Some(1.0)) {
            assert_eq!(r.overlap, Some(1.0));
            assert_eq!(r.num_seeds, 30);
        }
        // Ratio 0 is the unseeded solver on the same instance.
        let r0 = &recs[0];
        let inst = synthetic_instance(30, 0.01, &cfg, derive_seed(cfg.rng_seed, STREAM_INSTANCE, 0)).unwrap();
        let direct = gncr_solve(&inst.data, &SeedSet::empty(), &cfg.gncr).unwrap();
        assert_eq!(r0.overlap, Some(perm_overlap(&direct.perm, &inst.truth).unwrap()));
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = ExperimentConfig::default();
        cfg.repeats = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.split_ratio = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::SeedSweep;
        cfg.seed_ratios = vec![1.5];
        assert!(run_seed_sweep(&cfg).is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.mode = Mode::Real;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, STREAM_INSTANCE, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, STREAM_INSTANCE, 0), derive_seed(8, STREAM_INSTANCE, 0));
    }
}
