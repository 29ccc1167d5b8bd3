//! Exact samplers for independent Bernoulli trials grouped by ring.
//!
//! The pairs `(v, u)` at distance `r` form `N_r` independent Bernoulli(`p_r`)
//! trials. Two exact realizations are provided:
//!
//! * [`RingBlocks::for_each_hit`]: rings are grouped into dyadic blocks
//!   `r in [2^b, 2^{b+1})`. Inside a block every trial is first run as a
//!   Bernoulli(`q_b`) with `q_b = max_r p_r`, using geometric skips over the
//!   concatenated trial sequence, and each candidate is kept with probability
//!   `p_r / q_b`. Each trial is thus an independent Bernoulli(`p_r`), and the
//!   expected work per call is `O(log N + hits)`.
//! * [`per_ring_hits`]: one `Bin(N_r, p_r)` count per ring followed by a uniform
//!   subset of ring positions without replacement. `O(N)` per call; used as
//!   the reference path.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// One ring's `(radius, size, probability)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RingProfile {
    pub side: u32,
    pub r: u32,
    pub size: u64,
    pub p: f64,
}

#[derive(Debug, Clone)]
struct Block {
    q: f64,
    // ln(1 - q); -inf when q == 1
    log_fail: f64,
    radii: Vec<u32>,
    // cumulative ring sizes, length radii.len() + 1
    offsets: Vec<u64>,
    keep: Vec<f64>,
}

impl Block {
    fn trials(&self) -> u64 {
        *self.offsets.last().unwrap_or(&0)
    }

    #[inline]
    fn locate(&self, pos: u64) -> usize {
        // index i with offsets[i] <= pos < offsets[i + 1]
        self.offsets.partition_point(|&o| o <= pos) - 1
    }
}

/// Dyadic-block thinning sampler over a ring table.
#[derive(Debug, Clone)]
pub struct RingBlocks {
    blocks: Vec<Block>,
}

impl RingBlocks {
    pub fn new(rings: &[RingProfile]) -> Self {
        let mut blocks: Vec<Block> = Vec::new();
        let mut current: Option<(u32, Block)> = None;
        for ring in rings.iter().filter(|ring| ring.size > 0 && ring.p > 0.0) {
            let level = 31 - ring.r.leading_zeros();
            match current.as_mut() {
                Some((lvl, block)) if *lvl == level => {
                    block.q = block.q.max(ring.p);
                    block.radii.push(ring.r);
                    let last = block.trials();
                    block.offsets.push(last + ring.size);
                    block.keep.push(ring.p);
                }
                _ => {
                    if let Some((_, block)) = current.take() {
                        blocks.push(block);
                    }
                    current = Some((
                        level,
                        Block {
                            q: ring.p,
                            log_fail: 0.0,
                            radii: vec![ring.r],
                            offsets: vec![0, ring.size],
                            keep: vec![ring.p],
                        },
                    ));
                }
            }
        }
        if let Some((_, block)) = current {
            blocks.push(block);
        }
        for block in &mut blocks {
            let q = block.q;
            block.log_fail = (-q).ln_1p();
            for k in &mut block.keep {
                *k = (*k / q).min(1.0);
            }
        }
        RingBlocks { blocks }
    }

    /// Runs `copies` independent copies of every trial and calls
    /// `hit(r, position)` for each success, where `position` indexes the
    /// ring member (`0..N_r`). With `copies > 1` the same position may recur.
    pub fn for_each_hit<R: Rng + ?Sized, F: FnMut(u32, u64)>(&self, copies: u64, rng: &mut R, mut hit: F) {
        for block in &self.blocks {
            let per_copy = block.trials();
            let total = per_copy.saturating_mul(copies);
            let mut pos: u64 = 0;
            loop {
                let gap = geometric_gap(block.log_fail, rng);
                pos = match pos.checked_add(gap) {
                    Some(p) if p < total => p,
                    _ => break,
                };
                let within = pos % per_copy;
                let i = block.locate(within);
                let keep = block.keep[i];
                if keep >= 1.0 || rng.random::<f64>() < keep {
                    hit(block.radii[i], within - block.offsets[i]);
                }
                pos += 1;
            }
        }
    }

    /// Number of successes among `copies` copies of the full trial table.
    pub fn count_hits<R: Rng + ?Sized>(&self, copies: u64, rng: &mut R) -> u64 {
        let mut count = 0;
        self.for_each_hit(copies, rng, |_, _| count += 1);
        count
    }
}

/// Failures before the first success of a Bernoulli(q) sequence, with
/// `log_fail = ln(1 - q)`.
#[inline]
fn geometric_gap<R: Rng + ?Sized>(log_fail: f64, rng: &mut R) -> u64 {
    if log_fail == f64::NEG_INFINITY {
        return 0;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let g = (u.ln() / log_fail).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Reference sampler: `Bin(N_r, p_r)` per ring, then that many distinct
/// positions drawn uniformly (Floyd's algorithm).
pub fn per_ring_hits<R: Rng + ?Sized, F: FnMut(u32, u64)>(rings: &[RingProfile], rng: &mut R, mut hit: F) {
    let mut chosen: Vec<u64> = Vec::new();
    for ring in rings {
        if ring.size == 0 || ring.p <= 0.0 {
            continue;
        }
        let k = if ring.p >= 1.0 {
            ring.size
        } else {
            Binomial::new(ring.size, ring.p).expect("valid binomial").sample(rng)
        };
        if k == 0 {
            continue;
        }
        uniform_subset(ring.size, k, rng, &mut chosen);
        for &pos in &chosen {
            hit(ring.r, pos);
        }
    }
}

/// `k` distinct values from `0..n`, uniformly (Floyd). Output order is the
/// insertion order.
pub fn uniform_subset<R: Rng + ?Sized>(n: u64, k: u64, rng: &mut R, out: &mut Vec<u64>) {
    out.clear();
    debug_assert!(k <= n);
    for j in (n - k)..n {
        let t = rng.random_range(0..=j);
        if out.contains(&t) {
            out.push(j);
        } else {
            out.push(t);
        }
    }
}
