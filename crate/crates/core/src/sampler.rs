//! Seeded Monte Carlo generation of joint-measurement outcomes `ξ′`.
//!
//! # Generator
//!
//! Every stream is a xoshiro256++ generator. Stream 0 is seeded with
//! `Xoshiro256PlusPlus::seed_from_u64(seed)`, which expands the 64-bit seed
//! into the 256-bit state with SplitMix64. Stream `k` starts from the same
//! state advanced by `k` calls of `jump()` (2¹²⁸ steps each), so substreams
//! never overlap. A uniform in `[0, 1)` is `(next_u64() >> 11) · 2⁻⁵³`.
//!
//! Reference values, `seed = 42`, stream 0, first three `next_u64()` outputs:
//! see `reference_outputs_for_seed_42` in the tests below.
//!
//! # Sampling
//!
//! Outcomes are drawn by inverse CDF over the canonical outcome order
//! (see [`Outcome`]). For `n` shots over `m` streams, stream `k` draws
//! `⌊n/m⌋` shots plus one extra when `k < n mod m`, and the streams are
//! concatenated in index order. The result depends only on
//! `(seed, stream_count, n)`, never on thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belltests::single_shot_chsh_table;
use crate::error::{Error, Result};
use crate::inversion::InversionKernel;
use crate::measurement::Outcome;

const NEGATIVE_TOL: f64 = 1e-10;
const SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngConfig {
    pub seed: u64,
    pub stream_count: usize,
}

impl RngConfig {
    pub fn new(seed: u64, stream_count: usize) -> Result<Self> {
        if stream_count == 0 {
            return Err(Error::InvalidStreamCount);
        }
        Ok(RngConfig { seed, stream_count })
    }

    pub fn single(seed: u64) -> Self {
        RngConfig {
            seed,
            stream_count: 1,
        }
    }

    /// Generator for substream `index`.
    pub fn stream(&self, index: usize) -> Xoshiro256PlusPlus {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(self.seed);
        for _ in 0..index {
            rng.jump();
        }
        rng
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Cumulative table over the 16 outcomes; zero-weight outcomes are never drawn.
#[derive(Clone, Debug)]
struct Cdf([f64; 16]);

impl Cdf {
    fn new(probs: &[f64; 16]) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < -NEGATIVE_TOL) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is negative or non-finite")));
        }
        let clamped = probs.map(|p| p.max(0.0));
        let total: f64 = clamped.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        let mut cdf = [0.0; 16];
        let mut acc = 0.0;
        for (slot, p) in cdf.iter_mut().zip(clamped) {
            acc += p / total;
            *slot = acc;
        }
        let last = clamped.iter().rposition(|&p| p > 0.0).expect("total is positive");
        for slot in cdf[last..].iter_mut() {
            *slot = 1.0;
        }
        Ok(Cdf(cdf))
    }

    fn draw(&self, u: f64) -> Outcome {
        let index = self.0.iter().position(|&c| u < c).unwrap_or(15);
        Outcome::from_index(index)
    }
}

/// Draws `n` i.i.d. outcomes from `probs`.
pub fn sample_shots(probs: &[f64; 16], n: usize, rng: &RngConfig) -> Result<Vec<Outcome>> {
    if rng.stream_count == 0 {
        return Err(Error::InvalidStreamCount);
    }
    let cdf = Cdf::new(probs)?;
    let base = n / rng.stream_count;
    let extra = n % rng.stream_count;
    let chunks: Vec<Vec<Outcome>> = (0..rng.stream_count)
        .into_par_iter()
        .map(|k| {
            let len = base + usize::from(k < extra);
            let mut gen = rng.stream(k);
            (0..len).map(|_| cdf.draw(uniform(&mut gen))).collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Counts divided by the number of shots.
pub fn empirical_frequencies(shots: &[Outcome]) -> Result<[f64; 16]> {
    if shots.is_empty() {
        return Err(Error::EmptyShotList);
    }
    let mut counts = [0u64; 16];
    for o in shots {
        counts[o.index()] += 1;
    }
    let n = shots.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

/// One sampled outcome with its single-shot CHSH value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// 1-based.
    pub index: u64,
    pub xi_prime: Outcome,
    pub s_single: f64,
    pub running_mean_s: f64,
}

pub fn shot_records(kernel: &InversionKernel, shots: &[Outcome]) -> Result<Vec<ShotRecord>> {
    let table = single_shot_chsh_table(kernel)?;
    let mut sum = 0.0;
    Ok(shots
        .iter()
        .enumerate()
        .map(|(i, &xi_prime)| {
            let s_single = table[xi_prime.index()];
            sum += s_single;
            let index = i as u64 + 1;
            ShotRecord {
                index,
                xi_prime,
                s_single,
                running_mean_s: sum / index as f64,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub shots: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); absent for one shot.
    pub std_dev: Option<f64>,
    pub std_error: Option<f64>,
    /// Distinct `|S(ξ′)|` values seen, ascending, deduplicated at `1e-12`.
    pub distinct_abs_values: Vec<f64>,
}

pub fn convergence_report(kernel: &InversionKernel, shots: &[Outcome]) -> Result<ConvergenceSummary> {
    if shots.is_empty() {
        return Err(Error::EmptyShotList);
    }
    let table = single_shot_chsh_table(kernel)?;
    let n = shots.len();
    let mut counts = [0u64; 16];
    for o in shots {
        counts[o.index()] += 1;
    }
    // sums grouped by outcome keep the mean independent of shot order
    let mean = counts
        .iter()
        .zip(table)
        .map(|(&c, s)| c as f64 * s)
        .sum::<f64>()
        / n as f64;
    let (std_dev, std_error) = if n > 1 {
        let ss: f64 = counts
            .iter()
            .zip(table)
            .map(|(&c, s)| c as f64 * (s - mean).powi(2))
            .sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        (Some(sd), Some(sd / (n as f64).sqrt()))
    } else {
        (None, None)
    };
    let mut distinct_abs_values: Vec<f64> = Vec::new();
    let mut seen: Vec<f64> = counts
        .iter()
        .zip(table)
        .filter(|(&c, _)| c > 0)
        .map(|(_, s)| s.abs())
        .collect();
    seen.sort_by(f64::total_cmp);
    for v in seen {
        if distinct_abs_values.last().is_none_or(|&last| (v - last).abs() > 1e-12) {
            distinct_abs_values.push(v);
        }
    }
    Ok(ConvergenceSummary {
        shots: n,
        mean,
        std_dev,
        std_error,
        distinct_abs_values,
    })
}
