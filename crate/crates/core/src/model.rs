//! The random graph `G_N^c` on the torus: every pair `{u, v}` is an edge
//! independently with probability `p(u, v) = min{c / (N^{2-alpha} rho^alpha), 1}`.
//!
//! Three views of the same law live here: closed-form ring sums (expected
//! degree, second moment), an eager [`AdjacencyGraph`] for small sides, and
//! the lazy [`RevealOracle`] that draws edges only when the exploration asks.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::NeighborSource;
use crate::geometry::{ring_probability, Torus, TorusPoint};
use crate::numeric::compensated_sum;
use crate::sampling::{per_ring_hits, RingBlocks, RingProfile};

/// `1 / (4 ln 2)`.
pub fn critical_coupling() -> f64 {
    1.0 / (4.0 * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub side: u32,
    pub c: f64,
    pub alpha: f64,
    pub critical: bool,
}

impl GraphParams {
    /// `c = 0` is accepted as the empty-graph degenerate case.
    pub fn new(side: u32, c: f64, alpha: f64) -> Result<Self> {
        Torus::new(side)?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidCoupling(c));
        }
        if !(0.0..2.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(GraphParams { side, c, alpha, critical: false })
    }

    /// The critical model: `alpha = 1`, `c = 1 / (4 ln 2)`.
    pub fn critical(side: u32) -> Result<Self> {
        let mut params = Self::new(side, critical_coupling(), 1.0)?;
        params.critical = true;
        Ok(params)
    }

    pub fn with_coupling(self, c: f64) -> Result<Self> {
        Self::new(self.side, c, self.alpha)
    }

    pub fn torus(&self) -> Torus {
        Torus::new(self.side).expect("validated side")
    }

    pub fn vertex_count(&self) -> usize {
        self.torus().vertex_count()
    }

    pub fn ring_probability(&self, r: u32) -> f64 {
        ring_probability(self.side, r, self.c, self.alpha)
    }

    pub fn pair_probability(&self, u: TorusPoint, v: TorusPoint) -> f64 {
        self.ring_probability(self.torus().distance(u, v))
    }

    /// Ring table for `r = 1..=max_distance`.
    pub fn rings(&self) -> Vec<RingProfile> {
        let torus = self.torus();
        (1..=torus.max_distance())
            .map(|r| RingProfile {
                side: self.side,
                r,
                size: torus.ring_size(r),
                p: self.ring_probability(r),
            })
            .collect()
    }
}

/// `sum_r N_r p_r`, the expected degree of any vertex.
pub fn expected_degree_sum(params: &GraphParams) -> f64 {
    compensated_sum(params.rings().iter().map(|ring| ring.size as f64 * ring.p))
}

/// `sum_r N_r p_r^2`.
pub fn second_moment_sum(params: &GraphParams) -> f64 {
    compensated_sum(params.rings().iter().map(|ring| ring.size as f64 * ring.p * ring.p))
}

/// Closed-form approximation of the expected degree,
/// `4c ln 2 - 2c/N - c/N^2` (odd) or `... - 2c/N^2` (even), valid to `O(N^-4)`
/// at `alpha = 1`.
pub fn expected_degree_asymptotic(params: &GraphParams) -> f64 {
    let n = params.side as f64;
    let c = params.c;
    let tail = if params.side % 2 == 1 { c } else { 2.0 * c };
    4.0 * c * std::f64::consts::LN_2 - 2.0 * c / n - tail / (n * n)
}

/// `sum_{u in A} p(v, u)`.
pub fn neighbor_prob_mass(v: TorusPoint, set: &[TorusPoint], params: &GraphParams) -> f64 {
    compensated_sum(set.iter().map(|&u| params.pair_probability(v, u)))
}

/// `max_{|A| = a} sum_{u in A} p(v, u)` for `a = 0..n-1`. Since `p_r`
/// decreases in `r`, the maximum is attained by the `a` nearest vertices.
pub fn nearest_set_mass(params: &GraphParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.vertex_count());
    let mut acc = crate::numeric::CompensatedSum::new();
    out.push(0.0);
    for ring in params.rings() {
        for _ in 0..ring.size {
            acc.add(ring.p);
            out.push(acc.value());
        }
    }
    out
}

/// Default cap on the side length for eager realization.
pub const MATERIALIZE_CAP: u32 = 64;

/// A fully realized graph, for brute-force oracles on small tori.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub side: u32,
    pub c: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Sorted `(u, v)` vertex-index pairs with `u < v`.
    pub edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
    processed: Vec<bool>,
}

impl AdjacencyGraph {
    pub fn from_edges(side: u32, c: f64, alpha: f64, seed: u64, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        let torus = Torus::new(side)?;
        let n = torus.vertex_count() as u32;
        for e in &mut edges {
            if e.0 == e.1 || e.0 >= n || e.1 >= n {
                return Err(Error::InvalidArgument(format!("bad edge {:?}", e)));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n as usize];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        Ok(AdjacencyGraph {
            side,
            c,
            alpha,
            seed,
            edges,
            adjacency,
            processed: vec![false; n as usize],
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.adjacency.iter().map(|a| a.len() as u32).collect()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    /// Forget which vertices an exploration has processed.
    pub fn reset(&mut self) {
        self.processed.iter_mut().for_each(|p| *p = false);
    }

    /// Edge list text: a header `N <N> c <c> alpha <alpha> seed <seed>`, then
    /// one `x1 y1 x2 y2` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let torus = Torus::new(self.side).expect("validated side");
        let mut buf = String::new();
        writeln!(buf, "N {} c {} alpha {} seed {}", self.side, self.c, self.alpha, self.seed).unwrap();
        for &(u, v) in &self.edges {
            let (a, b) = (torus.point_at(u), torus.point_at(v));
            writeln!(buf, "{} {} {} {}", a.x, a.y, b.x, b.y).unwrap();
        }
        out.write_all(buf.as_bytes())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, what: &str| Error::InvalidArgument(format!("edge list line {line}: {what}"));
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let header = header.map_err(|e| bad(1, &e.to_string()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 8 || fields[0] != "N" || fields[2] != "c" || fields[4] != "alpha" || fields[6] != "seed" {
            return Err(bad(1, "malformed header"));
        }
        let side: u32 = fields[1].parse().map_err(|_| bad(1, "side"))?;
        let c: f64 = fields[3].parse().map_err(|_| bad(1, "c"))?;
        let alpha: f64 = fields[5].parse().map_err(|_| bad(1, "alpha"))?;
        let seed: u64 = fields[7].parse().map_err(|_| bad(1, "seed"))?;
        let torus = Torus::new(side)?;
        let mut edges = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| bad(i + 1, &e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<u32> = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(i + 1, "expected four integers"))?;
            if nums.len() != 4 {
                return Err(bad(i + 1, "expected four integers"));
            }
            let a = torus.point(nums[0], nums[1])?;
            let b = torus.point(nums[2], nums[3])?;
            edges.push((torus.index(a), torus.index(b)));
        }
        Self::from_edges(side, c, alpha, seed, edges)
    }
}

impl NeighborSource for AdjacencyGraph {
    fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    fn is_fresh(&self) -> bool {
        !self.processed.iter().any(|&p| p)
    }

    fn reveal<R: Rng + ?Sized, F: Fn(u32) -> bool>(&mut self, v: u32, available: F, _rng: &mut R, out: &mut Vec<u32>) -> Result<()> {
        if std::mem::replace(&mut self.processed[v as usize], true) {
            return Err(Error::AlreadyProcessed(v));
        }
        out.clear();
        out.extend(self.adjacency[v as usize].iter().copied().filter(|&u| available(u)));
        Ok(())
    }
}

/// Realizes every pair independently (`O(N^4)` scan).
pub fn materialize_graph<R: Rng + ?Sized>(params: &GraphParams, seed: u64, rng: &mut R) -> Result<AdjacencyGraph> {
    materialize_graph_capped(params, seed, rng, MATERIALIZE_CAP)
}

pub fn materialize_graph_capped<R: Rng + ?Sized>(params: &GraphParams, seed: u64, rng: &mut R, cap: u32) -> Result<AdjacencyGraph> {
    if params.side > cap {
        return Err(Error::SizeCapExceeded { side: params.side, cap });
    }
    let torus = params.torus();
    let n = torus.vertex_count() as u32;
    let probs: Vec<f64> = (0..=torus.max_distance()).map(|r| params.ring_probability(r)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        let pu = torus.point_at(u);
        for v in (u + 1)..n {
            let p = probs[torus.distance(pu, torus.point_at(v)) as usize];
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    AdjacencyGraph::from_edges(params.side, params.c, params.alpha, seed, edges)
}

/// How the oracle draws a vertex's edge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RevealStrategy {
    /// Dyadic-block thinning with geometric skips (default, `O(log N)` per step).
    #[default]
    Thinned,
    /// `Bin(N_r, p_r)` per ring plus a uniform subset (`O(N)` per step).
    PerRing,
}

const NEVER: u32 = u32::MAX;

/// Lazy edge revelation for one exploration.
///
/// When vertex `v` is processed, every pair `(v, u)` is sampled over the full
/// ring structure and hits outside the available set are discarded. A
/// discarded pair either was already decided when `u` was processed (and the
/// ledger keeps that value) or will never be asked about again, since `u` is
/// no longer available to anyone. The returned set therefore has exactly the
/// law `Bin(|ring_r cap U|, p_r)` per ring, uniform within the ring.
#[derive(Debug, Clone)]
pub struct RevealOracle {
    params: GraphParams,
    torus: Torus,
    rings: Vec<RingProfile>,
    blocks: RingBlocks,
    strategy: RevealStrategy,
    step: u32,
    processed_at: Vec<u32>,
    first_used_at: Vec<u32>,
    revealed_by: Vec<u32>,
}

impl RevealOracle {
    pub fn new(params: GraphParams) -> Self {
        Self::with_strategy(params, RevealStrategy::default())
    }

    pub fn with_strategy(params: GraphParams, strategy: RevealStrategy) -> Self {
        let torus = params.torus();
        let rings = params.rings();
        let blocks = RingBlocks::new(&rings);
        let n = torus.vertex_count();
        RevealOracle {
            params,
            torus,
            rings,
            blocks,
            strategy,
            step: 0,
            processed_at: vec![NEVER; n],
            first_used_at: vec![NEVER; n],
            revealed_by: vec![NEVER; n],
        }
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    /// Clears the ledger so the oracle can serve a new, independent graph.
    pub fn reset(&mut self) {
        self.step = 0;
        self.processed_at.fill(NEVER);
        self.first_used_at.fill(NEVER);
        self.revealed_by.fill(NEVER);
    }

    /// Step at which `v` had its edges revealed, if it has.
    pub fn processed_step(&self, v: u32) -> Option<u32> {
        (self.processed_at[v as usize] != NEVER).then(|| self.processed_at[v as usize])
    }

    /// The stored indicator of pair `{a, b}` if the exploration determined it.
    pub fn edge_status(&self, a: u32, b: u32) -> Option<bool> {
        if a == b {
            return Some(false);
        }
        if self.revealed_by[b as usize] == a || self.revealed_by[a as usize] == b {
            return Some(true);
        }
        for (x, y) in [(a, b), (b, a)] {
            let sx = self.processed_at[x as usize];
            // y was still unexplored when x was processed and x did not pick it
            if sx != NEVER && self.first_used_at[y as usize] > sx {
                return Some(false);
            }
        }
        None
    }

    fn draw<R: Rng + ?Sized>(&self, center: TorusPoint, rng: &mut R, mut hit: impl FnMut(u32)) {
        let torus = self.torus;
        let mut emit = |r: u32, pos: u64| hit(torus.index(torus.ring_member(center, r, pos)));
        match self.strategy {
            RevealStrategy::Thinned => self.blocks.for_each_hit(1, rng, &mut emit),
            RevealStrategy::PerRing => per_ring_hits(&self.rings, rng, &mut emit),
        }
    }
}

impl NeighborSource for RevealOracle {
    fn vertex_count(&self) -> usize {
        self.torus.vertex_count()
    }

    fn is_fresh(&self) -> bool {
        self.step == 0
    }

    fn reveal<R: Rng + ?Sized, F: Fn(u32) -> bool>(&mut self, v: u32, available: F, rng: &mut R, out: &mut Vec<u32>) -> Result<()> {
        if self.processed_at[v as usize] != NEVER {
            return Err(Error::AlreadyProcessed(v));
        }
        self.step += 1;
        let step = self.step;
        self.processed_at[v as usize] = step;
        if self.first_used_at[v as usize] == NEVER {
            self.first_used_at[v as usize] = step;
        }
        out.clear();
        let center = self.torus.point_at(v);
        self.draw(center, rng, |u| {
            if u != v && available(u) {
                out.push(u);
            }
        });
        for &u in out.iter() {
            self.revealed_by[u as usize] = v;
            self.first_used_at[u as usize] = step;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn degree_sum_edge_cases() {
        let p = GraphParams::new(10, 0.0, 1.0).unwrap();
        assert_eq!(expected_degree_sum(&p), 0.0);
        assert_eq!(second_moment_sum(&p), 0.0);
        let er = GraphParams::new(10, 0.5, 0.0).unwrap();
        assert!((expected_degree_sum(&er) - 0.5 * 99.0 / 100.0).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert_eq!(GraphParams::new(10, 1.0, 3.0), Err(Error::InvalidAlpha(3.0)));
        assert_eq!(GraphParams::new(10, 1.0, 2.0), Err(Error::InvalidAlpha(2.0)));
        assert!(GraphParams::new(10, -1.0, 1.0).is_err());
        assert!(GraphParams::new(2, 1.0, 1.0).is_err());
        let crit = GraphParams::critical(50).unwrap();
        assert!(crit.critical);
        assert_eq!(crit.c, 1.0 / (4.0 * 2f64.ln()));
    }

    #[test]
    fn clamp_never_binds_at_alpha_one() {
        for side in [3u32, 4, 10, 101] {
            let p = GraphParams::new(side, 1.0, 1.0).unwrap();
            assert!(p.rings().iter().all(|r| r.p < 1.0));
        }
    }

    #[test]
    fn neighbor_mass_identities() {
        let params = GraphParams::critical(20).unwrap();
        let torus = params.torus();
        let v = TorusPoint { x: 3, y: 17 };
        assert_eq!(neighbor_prob_mass(v, &[], &params), 0.0);
        let others: Vec<_> = torus.points().filter(|&u| u != v).collect();
        let all = neighbor_prob_mass(v, &others, &params);
        assert!((all - expected_degree_sum(&params)).abs() < 1e-14);
        let unit = torus.ring(v, 1);
        assert!((neighbor_prob_mass(v, &unit, &params) - 4.0 * params.ring_probability(1)).abs() < 1e-16);
    }

    #[test]
    fn neighbor_mass_bounds_random_sets() {
        use rand::seq::IndexedRandom;
        for side in [10u32, 25, 40] {
            let params = GraphParams::critical(side).unwrap();
            let torus = params.torus();
            let pts: Vec<_> = torus.points().collect();
            let mut rng = stream(side as u64, Purpose::Generic, 0);
            for _ in 0..1000 {
                let v = pts[rng.random_range(0..pts.len())];
                let size = rng.random_range(0..=pts.len());
                let set: Vec<_> = pts.choose_multiple(&mut rng, size).copied().filter(|&u| u != v).collect();
                let mass = neighbor_prob_mass(v, &set, &params);
                let a = set.len() as f64;
                let n = side as f64;
                assert!(params.c * a / (n * n) <= mass + 1e-15);
                assert!(mass <= 4.0 * params.c * a.sqrt() / n + 1e-15);
            }
        }
    }

    #[test]
    fn nearest_set_mass_dominates_and_obeys_bounds() {
        for side in [3u32, 10, 11, 40] {
            let params = GraphParams::critical(side).unwrap();
            let best = nearest_set_mass(&params);
            let n = side as f64;
            assert_eq!(best.len(), params.vertex_count());
            assert!((best.last().unwrap() - expected_degree_sum(&params)).abs() < 1e-14);
            for (a, &m) in best.iter().enumerate().skip(1) {
                let a = a as f64;
                assert!(params.c * a / (n * n) <= m + 1e-15);
                assert!(m <= 4.0 * params.c * a.sqrt() / n + 1e-15);
            }
        }
        let params = GraphParams::critical(12).unwrap();
        let best = nearest_set_mass(&params);
        let torus = params.torus();
        let v = TorusPoint { x: 0, y: 0 };
        let pts: Vec<_> = torus.points().filter(|&u| u != v).collect();
        let mut rng = stream(9, Purpose::Generic, 0);
        for _ in 0..500 {
            let set: Vec<_> = pts.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
            assert!(neighbor_prob_mass(v, &set, &params) <= best[set.len()] + 1e-15);
        }
    }

    #[test]
    fn materialize_cap_and_empty() {
        let mut rng = stream(1, Purpose::Materialize, 0);
        let big = GraphParams::critical(65).unwrap();
        assert_eq!(
            materialize_graph(&big, 0, &mut rng).unwrap_err(),
            Error::SizeCapExceeded { side: 65, cap: 64 }
        );
        let empty = GraphParams::new(10, 0.0, 1.0).unwrap();
        assert!(materialize_graph(&empty, 0, &mut rng).unwrap().edges.is_empty());
    }

    #[test]
    fn materialized_mean_degree() {
        let params = GraphParams::critical(10).unwrap();
        let samples = 10_000;
        let mut degrees = Vec::with_capacity(samples);
        for i in 0..samples {
            let mut rng = stream(2, Purpose::Materialize, i as u64);
            let g = materialize_graph(&params, i as u64, &mut rng).unwrap();
            degrees.push(2.0 * g.edges.len() as f64 / 100.0);
        }
        let (mean, var) = crate::numeric::mean_variance(&degrees);
        let se = (var / samples as f64).sqrt();
        assert!((mean - expected_degree_sum(&params)).abs() < 3.0 * se, "{mean} vs {}", expected_degree_sum(&params));
    }

    #[test]
    fn edge_list_roundtrip() {
        let params = GraphParams::new(8, 1.5, 1.0).unwrap();
        let mut rng = stream(3, Purpose::Materialize, 0);
        let g = materialize_graph(&params, 17, &mut rng).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N 8 c 1.5 alpha 1 seed 17\n"));
        let back = AdjacencyGraph::read_edge_list(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, g);
        assert!(AdjacencyGraph::read_edge_list(std::io::Cursor::new("N 8 c 1\n")).is_err());
        assert!(AdjacencyGraph::read_edge_list(std::io::Cursor::new("N 8 c 1 alpha 1 seed 0\n0 0 9 9\n")).is_err());
    }

    #[test]
    fn oracle_rejects_double_processing() {
        let params = GraphParams::critical(10).unwrap();
        let mut oracle = RevealOracle::new(params);
        let mut rng = stream(4, Purpose::Generic, 0);
        let mut out = Vec::new();
        oracle.reveal(5, |_| true, &mut rng, &mut out).unwrap();
        assert_eq!(oracle.reveal(5, |_| true, &mut rng, &mut out), Err(Error::AlreadyProcessed(5)));
    }

    #[test]
    fn zero_coupling_reveals_nothing() {
        for strategy in [RevealStrategy::Thinned, RevealStrategy::PerRing] {
            let params = GraphParams::new(12, 0.0, 1.0).unwrap();
            let mut oracle = RevealOracle::with_strategy(params, strategy);
            let mut rng = stream(5, Purpose::Generic, 0);
            let mut out = vec![1];
            for v in 0..144 {
                oracle.reveal(v, |_| true, &mut rng, &mut out).unwrap();
                assert!(out.is_empty());
            }
        }
    }

    #[test]
    fn erdos_renyi_reveal_mean() {
        let c = 0.8;
        let params = GraphParams::new(10, c, 0.0).unwrap();
        let mut oracle = RevealOracle::new(params);
        let mut rng = stream(6, Purpose::Generic, 0);
        let draws = 100_000;
        let mut total = 0usize;
        let mut out = Vec::new();
        for _ in 0..draws {
            oracle.reset();
            oracle.reveal(0, |_| true, &mut rng, &mut out).unwrap();
            total += out.len();
        }
        let trials = 99.0;
        let p = c / 100.0;
        let mean = trials * p;
        let se = (trials * p * (1.0 - p) / draws as f64).sqrt();
        assert!((total as f64 / draws as f64 - mean).abs() < 3.0 * se);
    }

    #[test]
    fn ledger_is_idempotent_and_consistent() {
        let params = GraphParams::new(10, 2.0, 1.0).unwrap();
        let mut oracle = RevealOracle::new(params);
        let mut rng = stream(7, Purpose::Generic, 0);
        let mut used = vec![false; 100];
        let mut out = Vec::new();
        used[0] = true;
        oracle.reveal(0, |u| !used[u as usize], &mut rng, &mut out).unwrap();
        let first: Vec<u32> = out.clone();
        for &u in &first {
            used[u as usize] = true;
        }
        for u in 1..100 {
            let status = oracle.edge_status(0, u);
            assert_eq!(status, Some(first.contains(&u)));
            assert_eq!(status, oracle.edge_status(u, 0));
            assert_eq!(status, oracle.edge_status(0, u));
        }
        if let Some(&w) = first.first() {
            oracle.reveal(w, |u| !used[u as usize], &mut rng, &mut out).unwrap();
            for &u in &first {
                if u != w {
                    // both were already used when w was processed
                    assert_eq!(oracle.edge_status(w, u), None);
                }
            }
            assert_eq!(oracle.edge_status(w, 0), Some(true));
        }
    }
}
