//! Reproducible random streams keyed by `(seed, stream_id)` and
//! multivariate normal sampling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::LowerTriangularFactor;

/// Words reserved per block when a stream is partitioned for parallel
/// Monte Carlo. A block never comes close to consuming this many.
const BLOCK_WORDS: u128 = 1 << 40;

/// ChaCha8 stream selected by `(seed, stream_id)`. Identical keys give
/// identical sequences; distinct stream ids select disjoint ChaCha
/// streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent stream derived from this one's key.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(splitmix64(self.seed ^ splitmix64(self.stream_id)), tag)
    }

    /// Fresh generator positioned at block `index` of this key's stream.
    /// Splitting a Monte Carlo loop into blocks this way makes the draws
    /// independent of how blocks are scheduled across threads.
    pub fn block(&self, index: u64) -> RngStream {
        let mut out = RngStream::new(self.seed, self.stream_id);
        out.rng.set_word_pos(index as u128 * BLOCK_WORDS);
        out
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.rng.sample(StandardNormal);
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n_draws × dim` matrix whose rows are i.i.d. `N(0, L·Lᵀ)`.
pub fn mvn_sample(cov_factor: &LowerTriangularFactor, n_draws: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let dim = cov_factor.dim();
    let l = cov_factor.matrix();
    let mut out = DMatrix::zeros(n_draws, dim);
    let mut u = DVector::zeros(dim);
    for r in 0..n_draws {
        rng.fill_standard_normal(u.as_mut_slice());
        let z = l * &u;
        out.set_row(r, &z.transpose());
    }
    out
}

/// One draw of `mean + L·u`.
pub fn mvn_draw(mean: &DVector<f64>, cov_factor: &LowerTriangularFactor, rng: &mut RngStream) -> DVector<f64> {
    let mut u = DVector::zeros(cov_factor.dim());
    rng.fill_standard_normal(u.as_mut_slice());
    mean + cov_factor.matrix() * u
}
