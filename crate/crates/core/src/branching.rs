//! Galton-Watson process with offspring law `sum_r Bin(N_r, p_r)`, which
//! dominates the generation sizes of the explored trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::GraphParams;
use crate::numeric::{compensated_sum, normal_quantile};
use crate::rng::{stream, Purpose};
use crate::sampling::{RingBlocks, RingProfile};

#[derive(Debug, Clone)]
pub struct OffspringLaw {
    pub params: GraphParams,
    pub rings: Vec<RingProfile>,
    blocks: RingBlocks,
}

impl OffspringLaw {
    pub fn new(params: GraphParams) -> Self {
        let rings = params.rings();
        let blocks = RingBlocks::new(&rings);
        OffspringLaw { params, rings, blocks }
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.rings.iter().map(|r| r.size as f64 * r.p))
    }

    pub fn variance(&self) -> f64 {
        compensated_sum(self.rings.iter().map(|r| r.size as f64 * r.p * (1.0 - r.p)))
    }

    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }

    /// `P(X = 0)` and `P(X = 1)`.
    pub fn low_masses(&self) -> (f64, f64) {
        let log_p0 = compensated_sum(self.rings.iter().map(|r| r.size as f64 * (-r.p).ln_1p()));
        let p0 = log_p0.exp();
        let ratio = compensated_sum(self.rings.iter().filter(|r| r.p < 1.0).map(|r| r.size as f64 * r.p / (1.0 - r.p)));
        (p0, p0 * ratio)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.blocks.count_hits(1, rng)
    }

    /// Total offspring of `parents` independent individuals.
    pub fn sample_generation<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        if parents == 0 {
            return 0;
        }
        self.blocks.count_hits(parents, rng)
    }
}

pub fn sample_offspring<R: Rng + ?Sized>(law: &OffspringLaw, rng: &mut R) -> u64 {
    law.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub total: u64,
    /// `max_k zeta_k`, including `zeta_0 = 1`.
    pub max_generation: u64,
    /// First generation with no individuals.
    pub extinction_generation: Option<u32>,
    pub cap_hit: bool,
}

/// Simulates one tree generation by generation. Stops early, flagging
/// `cap_hit`, once the total progeny would exceed `population_cap`.
pub fn simulate_tree<R: Rng + ?Sized>(law: &OffspringLaw, rng: &mut R, population_cap: u64) -> TreeSummary {
    let mut size = 1u64;
    let mut total = 1u64;
    let mut max_generation = 1u64;
    let mut generation = 0u32;
    loop {
        if size == 0 {
            return TreeSummary { total, max_generation, extinction_generation: Some(generation), cap_hit: false };
        }
        if total > population_cap {
            return TreeSummary { total, max_generation, extinction_generation: None, cap_hit: true };
        }
        size = law.sample_generation(size, rng);
        generation += 1;
        total += size;
        max_generation = max_generation.max(size);
    }
}

/// `max_{k >= 1} zeta_k`, saturated: the simulation stops as soon as a
/// generation exceeds `threshold`, in which case the returned value is that
/// generation's size (> threshold).
pub fn max_generation_until<R: Rng + ?Sized>(law: &OffspringLaw, rng: &mut R, threshold: u64) -> u64 {
    let mut size = 1u64;
    let mut max = 0u64;
    while size > 0 {
        size = law.sample_generation(size, rng);
        max = max.max(size);
        if max > threshold {
            break;
        }
    }
    max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: u64,
    pub hits: u64,
    pub samples: u64,
    /// `K * P^(max > K)`.
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TailEstimate {
    pub fn from_counts(threshold: u64, hits: u64, samples: u64, level: f64) -> Self {
        let (lo, hi) = wilson_interval(hits, samples, level);
        let k = threshold as f64;
        TailEstimate {
            threshold,
            hits,
            samples,
            value: k * hits as f64 / samples as f64,
            ci_low: k * lo,
            ci_high: k * hi,
        }
    }

    /// Relative standard error of the estimate.
    pub fn relative_se(&self) -> f64 {
        let p = self.hits as f64 / self.samples as f64;
        if p == 0.0 {
            return f64::INFINITY;
        }
        ((1.0 - p) / (p * self.samples as f64)).sqrt()
    }
}

pub fn wilson_interval(hits: u64, n: u64, level: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(level);
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// `K * P^(max_k zeta_k > K)` from `samples` trees; tree `i` uses stream
/// `(seed, Branching, i)`.
pub fn max_tail_estimate(law: &OffspringLaw, threshold: u64, samples: u64, seed: u64) -> TailEstimate {
    let tails = max_tail_profile(law, &[threshold], samples, seed);
    tails.into_iter().next().expect("one threshold")
}

/// Tail estimates for several thresholds from one set of trees.
pub fn max_tail_profile(law: &OffspringLaw, thresholds: &[u64], samples: u64, seed: u64) -> Vec<TailEstimate> {
    let top = thresholds.iter().copied().max().unwrap_or(0);
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| {
            let m = max_generation_until(law, &mut stream(seed, Purpose::Branching, i), top);
            thresholds.iter().map(|&k| u64::from(m > k)).collect::<Vec<u64>>()
        })
        .reduce(|| vec![0; thresholds.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    thresholds
        .iter()
        .zip(hits)
        .map(|(&k, h)| TailEstimate::from_counts(k, h, samples, 0.99))
        .collect()
}
