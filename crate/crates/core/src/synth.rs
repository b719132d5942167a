//! Synthetic shuffled-regression instances and the recovery threshold.
//!
//! Every instance is drawn from one ChaCha8 generator seeded with `rng_seed`.
//! Each component comes from its own stream of that generator, so changing
//! how one component is drawn never shifts the others:
//!
//! | stream | component |
//! |--------|-----------|
//! | 1      | features `X`, row-major |
//! | 2      | coefficients `beta`, row-major |
//! | 3      | planted permutation (Fisher-Yates) |
//! | 4      | noise, row-major |

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{Coefficients, Dataset, Permutation};

pub const STREAM_FEATURES: u64 = 1;
pub const STREAM_BETA: u64 = 2;
pub const STREAM_PERMUTATION: u64 = 3;
pub const STREAM_NOISE: u64 = 4;

/// Generator for one labelled stream of a seed.
pub fn stream_rng(rng_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    rng
}

fn standard_normal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // from_fn is column-major; draw row-major so the layout is documented.
    let values: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

/// Uniformly random permutation of `0..n`.
pub fn uniform_permutation(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut mapping: Vec<usize> = (0..n).collect();
    mapping.shuffle(rng);
    Permutation::new(mapping).expect("shuffle of 0..n is a permutation")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    /// Shuffled data: `truth_perm` applied to `y` gives `X beta + noise`.
    pub data: Dataset,
    pub truth_perm: Permutation,
    pub truth_beta: Coefficients,
    pub sigma: f64,
    /// The noise draw, aligned with the rows of `X`.
    pub noise: DMatrix<f64>,
}

impl SynthInstance {
    /// The labels in their original (unshuffled) order.
    pub fn aligned(&self) -> Dataset {
        let y = self
            .truth_perm
            .apply_rows(self.data.y())
            .expect("instance is consistent");
        self.data.with_labels(y).expect("instance is consistent")
    }
}

/// Draws `X` and `beta` with i.i.d. standard normal entries, a uniform
/// permutation and `N(0, sigma^2)` noise.
pub fn generate(n: usize, dx: usize, dy: usize, sigma: f64, rng_seed: u64) -> Result<SynthInstance> {
    if dx == 0 || dy == 0 {
        return Err(Error::Dimension(format!("d_x = {dx} and d_y = {dy} must be >= 1")));
    }
    let beta = standard_normal(dx, dy, &mut stream_rng(rng_seed, STREAM_BETA));
    generate_with_beta(n, Coefficients::new(beta)?, sigma, rng_seed)
}

/// As [`generate`] with given coefficients.
pub fn generate_with_beta(
    n: usize,
    beta: Coefficients,
    sigma: f64,
    rng_seed: u64,
) -> Result<SynthInstance> {
    if n == 0 {
        return Err(Error::Dimension("n must be >= 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
    }
    let (dx, dy) = beta.beta().shape();
    let x = standard_normal(n, dx, &mut stream_rng(rng_seed, STREAM_FEATURES));
    let truth_perm = uniform_permutation(n, &mut stream_rng(rng_seed, STREAM_PERMUTATION));
    let noise = if sigma > 0.0 {
        standard_normal(n, dy, &mut stream_rng(rng_seed, STREAM_NOISE)) * sigma
    } else {
        DMatrix::zeros(n, dy)
    };
    let aligned = beta.predict(&x) + &noise;
    // Row i of the aligned labels is stored at y[truth(i)].
    let y = truth_perm.apply_rows_transposed(&aligned)?;
    Ok(SynthInstance {
        data: Dataset::new(x, y)?,
        truth_perm,
        truth_beta: beta,
        sigma,
        noise,
    })
}

/// `||beta||_F^2 / sigma^2`; infinite for noiseless data.
pub fn snr(beta: &Coefficients, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(beta.beta().norm_squared() / (sigma * sigma))
}

/// Whether `log(1 + snr) / log(n) > c1`, the regime where the maximum
/// likelihood permutation is asymptotically exact.
pub fn recovery_feasible(n: usize, snr_value: f64, c1: f64) -> bool {
    if n < 2 {
        return false;
    }
    // Compared in the exponentiated domain so exact powers stay exact.
    1.0 + snr_value > (n as f64).powf(c1)
}
