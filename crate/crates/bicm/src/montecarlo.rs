//! Monte Carlo simulation oracles for the channel `y = sqrt(snr) x + z`.
//!
//! These estimators exist to validate the quadrature implementations in
//! [`crate::infotheory`], so the per-sample arithmetic is written out here
//! independently rather than shared with the code paths it checks.
//!
//! Sampling is deterministic: samples are processed in fixed-size batches,
//! each batch seeded from the user seed and the batch index through a
//! SplitMix64 expansion into a counter-based ChaCha stream. Batches may be
//! evaluated concurrently; the merge is performed in batch order, so a given
//! `(seed, samples)` pair always produces bit-identical estimates.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::LN_2;

use crate::constellation::Constellation;
use crate::infotheory::Snr;
use crate::{Error, Result};

const BATCH_SIZE: u64 = 1 << 16;

/// A Monte Carlo point estimate with its standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Running `(count, mean, M2)` statistics; batches merge associatively.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }

    fn estimate(self, seed: u64) -> McEstimate {
        let std_error = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).sqrt() / (self.count as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error,
            samples: self.count,
            seed,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut state = seed ^ batch.wrapping_mul(0xA0761D6478BD642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// One complex noise draw `z ~ CN(0, 1)`: two independent real Gaussians of
/// variance 1/2, matching the density `exp(-|z|^2) / pi`.
fn draw_noise<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn validate(points: &[Complex64], samples: u64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    Ok(())
}

/// Precomputed pairwise shifts `sqrt(snr) (a_p - a_q)`, flattened row-major.
fn difference_table(points: &[Complex64], snr: Snr) -> Vec<Complex64> {
    let root_snr = snr.value().sqrt();
    let n = points.len();
    let mut table = Vec::with_capacity(n * n);
    for &sent in points {
        for &other in points {
            table.push(root_snr * (sent - other));
        }
    }
    table
}

fn run_batches<F>(samples: u64, seed: u64, body: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng, &mut Moments, u64) + Sync,
{
    let batches = samples.div_ceil(BATCH_SIZE);
    let merged = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = batch_rng(seed, batch);
            let mut stats = Moments::default();
            let size = BATCH_SIZE.min(samples - batch * BATCH_SIZE);
            body(&mut rng, &mut stats, size);
            stats
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    merged.estimate(seed)
}

/// Monte Carlo estimate of the MMSE: draws `A` uniform and `Z ~ CN(0, 1)`,
/// forms the conditional-mean estimate of `A` from the channel output, and
/// averages `|A - E[A | Y]|^2`.
pub fn mc_mmse(points: &[Complex64], snr: Snr, samples: u64, seed: u64) -> Result<McEstimate> {
    validate(points, samples)?;
    let n = points.len();
    let table = difference_table(points, snr);
    Ok(run_batches(samples, seed, |rng, stats, size| {
        for _ in 0..size {
            let p = rng.gen_range(0..n);
            let z = draw_noise(rng);
            let row = &table[p * n..(p + 1) * n];
            let mut max_exponent = f64::NEG_INFINITY;
            for &d in row {
                max_exponent = max_exponent.max(-(d + z).norm_sqr());
            }
            let mut numerator = Complex64::new(0.0, 0.0);
            let mut denominator = 0.0;
            for (&d, &a) in row.iter().zip(points) {
                let w = (-(d + z).norm_sqr() - max_exponent).exp();
                numerator += a * w;
                denominator += w;
            }
            let estimate = numerator / denominator;
            stats.push((points[p] - estimate).norm_sqr());
        }
    }))
}

/// Monte Carlo estimate of the coded-modulation mutual information in nats:
/// averages the per-sample log ratio of the conditional to the marginal
/// channel density, stabilized in the log domain.
pub fn mc_mi_cm(points: &[Complex64], snr: Snr, samples: u64, seed: u64) -> Result<McEstimate> {
    validate(points, samples)?;
    let n = points.len();
    let log_cardinality = (n as f64).ln();
    let table = difference_table(points, snr);
    Ok(run_batches(samples, seed, |rng, stats, size| {
        for _ in 0..size {
            let p = rng.gen_range(0..n);
            let z = draw_noise(rng);
            let row = &table[p * n..(p + 1) * n];
            let mut max_exponent = f64::NEG_INFINITY;
            for &d in row {
                max_exponent = max_exponent.max(-(d + z).norm_sqr());
            }
            let mut sum = 0.0;
            for &d in row {
                sum += (-(d + z).norm_sqr() - max_exponent).exp();
            }
            stats.push(log_cardinality - (max_exponent + sum.ln()) - z.norm_sqr());
        }
    }))
}

/// Monte Carlo estimate of the BICM mutual information in nats: per sample,
/// the sum over bit positions of the log ratio of the transmitted-bit subset
/// likelihood to half the total likelihood.
pub fn mc_mi_bicm(c: &Constellation, snr: Snr, samples: u64, seed: u64) -> Result<McEstimate> {
    validate(c.points(), samples)?;
    let points = c.points();
    let n = points.len();
    let m = c.bits_per_symbol();
    let table = difference_table(points, snr);
    Ok(run_batches(samples, seed, |rng, stats, size| {
        let mut likelihood = vec![0.0; n];
        for _ in 0..size {
            let p = rng.gen_range(0..n);
            let z = draw_noise(rng);
            let row = &table[p * n..(p + 1) * n];
            let mut max_exponent = f64::NEG_INFINITY;
            for &d in row {
                max_exponent = max_exponent.max(-(d + z).norm_sqr());
            }
            let mut full_sum = 0.0;
            for (q, &d) in row.iter().enumerate() {
                likelihood[q] = (-(d + z).norm_sqr() - max_exponent).exp();
                full_sum += likelihood[q];
            }
            let mut value = 0.0;
            for position in 1..=m {
                let b = c.label_bit(p, position);
                let mut subset_sum = 0.0;
                for (q, &w) in likelihood.iter().enumerate() {
                    if c.label_bit(q, position) == b {
                        subset_sum += w;
                    }
                }
                value += subset_sum.ln() - full_sum.ln() + LN_2;
            }
            stats.push(value);
        }
    }))
}
