//! BPSK over AWGN and the per-bit log-likelihood messages of stage `S_0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Log-likelihoods (nats) of one conditional bit being 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LLPair {
    pub ll0: f64,
    pub ll1: f64,
}

impl LLPair {
    pub const fn new(ll0: f64, ll1: f64) -> Self {
        LLPair { ll0, ll1 }
    }

    /// The log-likelihood of `bit`.
    #[inline]
    pub fn get(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.ll0
        } else {
            self.ll1
        }
    }

    /// Adds `c` to both members.
    pub fn offset(&self, c: f64) -> Self {
        LLPair::new(self.ll0 + c, self.ll1 + c)
    }
}

/// Eb/N0 operating point of one simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    /// Code rate `K / N`.
    pub rate: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return invalid(format!("rate {rate} outside (0, 1]"));
        }
        if !ebn0_db.is_finite() {
            return invalid("Eb/N0 must be finite");
        }
        Ok(ChannelParams {
            ebn0_db,
            rate,
            seed,
        })
    }

    /// Rate-adjusted noise variance `1 / (2 R Eb/N0)`.
    pub fn noise_variance(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }
}

/// The random stream owned by trial `trial` of a run seeded with `seed`.
///
/// Each trial index selects its own ChaCha stream, so trials can be generated
/// in any order or in parallel and still reproduce bit-for-bit.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws `count` standard normal samples.
pub fn standard_normals<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

/// BPSK-maps `x` (0 → +1, 1 → −1) and adds noise scaled from unit normals.
pub fn modulate_with_noise(x: &[u8], noise: &[f64], sigma2: f64) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    x.iter()
        .zip(noise)
        .map(|(&b, &z)| (1.0 - 2.0 * f64::from(b)) + sigma * z)
        .collect()
}

/// `y_i = (1 − 2 x_i) + N(0, σ²)`, reproducible from `p.seed`.
pub fn transmit(x: &[u8], p: &ChannelParams) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = standard_normals(&mut rng, x.len());
    modulate_with_noise(x, &noise, p.noise_variance())
}

/// Per-bit log-likelihoods of a BPSK/AWGN sample with the common term dropped:
/// `ll0 = y / σ²`, `ll1 = −y / σ²`.
pub fn channel_ll(y: f64, sigma2: f64) -> Result<LLPair> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return invalid(format!(
            "noise variance {sigma2} must be positive and finite"
        ));
    }
    let s = y / sigma2;
    Ok(LLPair::new(s, -s))
}

/// [`channel_ll`] over a whole received word.
pub fn channel_lls(y: &[f64], sigma2: f64) -> Result<Vec<LLPair>> {
    y.iter().map(|&v| channel_ll(v, sigma2)).collect()
}
