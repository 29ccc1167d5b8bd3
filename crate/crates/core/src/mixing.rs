//! Markov chains driven by the edge probabilities.
//!
//! `P(u, v) = p(u, v) / Z_N` for `u != v`, where `Z_N = sum_{v != u} p(u, v)`
//! is the expected degree. With a forbidden set `A` the row of `u` is
//! renormalized over `V_N \ A` (`P_A`). For `A` empty, `P` is symmetric and
//! translation invariant, so the uniform law is stationary and a single base
//! row (the row of the origin) determines the whole matrix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Torus, TorusPoint};
use crate::model::{expected_degree_sum, second_moment_sum, GraphParams};
use crate::numeric::compensated_sum;

/// Dense computations are restricted to sides up to this value.
pub const DENSE_CAP: u32 = 32;

/// Relative slack for comparisons between two exact-in-principle floating
/// computations of the same quantity.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub params: GraphParams,
    forbidden: Vec<bool>,
    forbidden_count: usize,
}

impl KernelSpec {
    pub fn new(params: GraphParams) -> Self {
        let n = params.vertex_count();
        KernelSpec { params, forbidden: vec![false; n], forbidden_count: 0 }
    }

    pub fn with_forbidden(params: GraphParams, forbidden: &[TorusPoint]) -> Self {
        let mut spec = Self::new(params);
        let torus = params.torus();
        for &p in forbidden {
            let i = torus.index(p) as usize;
            if !spec.forbidden[i] {
                spec.forbidden[i] = true;
                spec.forbidden_count += 1;
            }
        }
        spec
    }

    pub fn torus(&self) -> Torus {
        self.params.torus()
    }

    pub fn is_forbidden(&self, p: TorusPoint) -> bool {
        self.forbidden[self.torus().index(p) as usize]
    }

    pub fn forbidden_count(&self) -> usize {
        self.forbidden_count
    }

    /// `Z_N` (empty forbidden set) via the ring sum.
    pub fn normalizer(&self) -> f64 {
        expected_degree_sum(&self.params)
    }

    /// `p(origin, v)` for every vertex index `v`.
    pub fn base_weights(&self) -> Vec<f64> {
        let torus = self.torus();
        let probs: Vec<f64> = (0..=torus.max_distance()).map(|r| self.params.ring_probability(r)).collect();
        let origin = TorusPoint { x: 0, y: 0 };
        torus.points().map(|v| probs[torus.distance(origin, v) as usize]).collect()
    }
}

/// Row `P_A(u, .)` as a dense vector over all of `V_N` (entries of `u` and of
/// forbidden states are zero).
pub fn kernel_row(spec: &KernelSpec, u: TorusPoint) -> Result<Vec<f64>> {
    let torus = spec.torus();
    if spec.is_forbidden(u) {
        return Err(Error::ForbiddenState(torus.index(u)));
    }
    let probs: Vec<f64> = (0..=torus.max_distance()).map(|r| spec.params.ring_probability(r)).collect();
    let mut row: Vec<f64> = torus
        .points()
        .enumerate()
        .map(|(i, v)| if spec.forbidden[i] { 0.0 } else { probs[torus.distance(u, v) as usize] })
        .collect();
    let z = compensated_sum(row.iter().copied());
    if z <= 0.0 {
        return Err(Error::DeadEnd(torus.index(u)));
    }
    row.iter_mut().for_each(|x| *x /= z);
    Ok(row)
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch(mu.len(), nu.len()));
    }
    for v in [mu, nu] {
        let s = compensated_sum(v.iter().copied());
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::NotAProbabilityVector(s));
        }
    }
    let half = 0.5 * compensated_sum(mu.iter().zip(nu).map(|(a, b)| (a - b).abs()));
    Ok(half.clamp(0.0, 1.0))
}

/// `mu P` for the unrestricted kernel, using translation invariance:
/// `(mu P)(v) = sum_x mu(x) w(v - x) / Z`.
struct Stepper {
    torus: Torus,
    weights: Vec<f64>,
}

impl Stepper {
    fn new(spec: &KernelSpec) -> Self {
        let z = compensated_sum(spec.base_weights());
        let weights = spec.base_weights().into_iter().map(|w| w / z).collect();
        Stepper { torus: spec.torus(), weights }
    }

    fn step(&self, mu: &[f64], out: &mut [f64]) {
        let n = self.torus.side() as usize;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (xa, xb) = (x / n, x % n);
            for (d, &w) in self.weights.iter().enumerate() {
                let (da, db) = (d / n, d % n);
                let va = if xa + da >= n { xa + da - n } else { xa + da };
                let vb = if xb + db >= n { xb + db - n } else { xb + db };
                out[va * n + vb] += m * w;
            }
        }
    }

    /// Rows `P^k(u, .)` for `k = 1..=k_max`.
    fn powers(&self, u: TorusPoint, k_max: usize) -> Vec<Vec<f64>> {
        let n = self.torus.vertex_count();
        let mut mu = vec![0.0; n];
        mu[self.torus.index(u) as usize] = 1.0;
        let mut out = Vec::with_capacity(k_max);
        let mut next = vec![0.0; n];
        for _ in 0..k_max {
            self.step(&mu, &mut next);
            std::mem::swap(&mut mu, &mut next);
            out.push(mu.clone());
        }
        out
    }
}

fn require_unrestricted(spec: &KernelSpec) -> Result<()> {
    if spec.forbidden_count > 0 {
        return Err(Error::InvalidArgument("operation needs an empty forbidden set".into()));
    }
    Ok(())
}

fn require_dense(spec: &KernelSpec) -> Result<()> {
    if spec.params.side > DENSE_CAP {
        return Err(Error::SizeCapExceeded { side: spec.params.side, cap: DENSE_CAP });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingRow {
    pub k: usize,
    pub max_tv: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub side: u32,
    pub c1: f64,
    pub starts: usize,
    pub rows: Vec<MixingRow>,
}

impl MixingReport {
    /// Rows with `k >= 2` whose distance exceeds the bound.
    pub fn violations(&self) -> Vec<&MixingRow> {
        self.rows.iter().filter(|r| r.k >= 2 && r.max_tv > r.bound).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,max_tv,bound\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.k, r.max_tv, r.bound));
        }
        s
    }
}

/// `(1 - c1)^{k/2 - 1}` with `c1 = c / 2`.
pub fn mixing_bound(c: f64, k: usize) -> f64 {
    (1.0 - c / 2.0).powf(k as f64 / 2.0 - 1.0)
}

/// Exact `max_u TV(P^k(u, .), uniform)` over the given start states for
/// `k = 1..=k_max`.
pub fn mixing_profile(spec: &KernelSpec, k_max: usize, starts: &[TorusPoint]) -> Result<MixingReport> {
    require_unrestricted(spec)?;
    require_dense(spec)?;
    if starts.is_empty() {
        return Err(Error::EmptySample);
    }
    let stepper = Stepper::new(spec);
    let n = stepper.torus.vertex_count();
    let uniform = vec![1.0 / n as f64; n];
    let mut max_tv = vec![0.0f64; k_max];
    for &u in starts {
        for (k, row) in stepper.powers(u, k_max).iter().enumerate() {
            max_tv[k] = max_tv[k].max(tv_distance(row, &uniform)?);
        }
    }
    let c = spec.params.c;
    Ok(MixingReport {
        side: spec.params.side,
        c1: c / 2.0,
        starts: starts.len(),
        rows: max_tv
            .into_iter()
            .enumerate()
            .map(|(i, tv)| MixingRow { k: i + 1, max_tv: tv, bound: mixing_bound(c, i + 1) })
            .collect(),
    })
}

/// `mu P^k` for an arbitrary initial law.
pub fn evolve(spec: &KernelSpec, mu: &[f64], k: usize) -> Result<Vec<f64>> {
    require_unrestricted(spec)?;
    require_dense(spec)?;
    let stepper = Stepper::new(spec);
    if mu.len() != stepper.torus.vertex_count() {
        return Err(Error::DimensionMismatch(mu.len(), stepper.torus.vertex_count()));
    }
    let mut cur = mu.to_vec();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..k {
        stepper.step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// `P^2(u, u) = sum_r N_r p_r^2 / Z_N^2`, the same for every `u`.
pub fn return_probability(spec: &KernelSpec) -> Result<f64> {
    require_unrestricted(spec)?;
    let z = spec.normalizer();
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(second_moment_sum(&spec.params) / (z * z))
}

/// `sum_x p(u, x) p(x, v)` by direct summation (`O(N^2)`).
pub fn two_step_weight(params: &GraphParams, u: TorusPoint, v: TorusPoint) -> f64 {
    let torus = params.torus();
    let probs: Vec<f64> = (0..=torus.max_distance()).map(|r| params.ring_probability(r)).collect();
    compensated_sum(
        torus
            .points()
            .map(|x| probs[torus.distance(u, x) as usize] * probs[torus.distance(x, v) as usize]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub u: TorusPoint,
    pub v: TorusPoint,
    pub k: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub return_probability: f64,
    pub checked: usize,
    pub violations: Vec<DominanceViolation>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `P^k(u, v) <= P^2(u, u)` for every listed pair and `k = 2..=k_max`.
pub fn two_step_dominance_check(spec: &KernelSpec, pairs: &[(TorusPoint, TorusPoint)], k_max: usize) -> Result<DominanceReport> {
    require_unrestricted(spec)?;
    require_dense(spec)?;
    let bound = return_probability(spec)?;
    let stepper = Stepper::new(spec);
    let torus = stepper.torus;
    let mut by_start: std::collections::BTreeMap<TorusPoint, Vec<TorusPoint>> = Default::default();
    for &(u, v) in pairs {
        by_start.entry(u).or_default().push(v);
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    for (u, targets) in by_start {
        let powers = stepper.powers(u, k_max);
        for k in 2..=k_max {
            for &v in &targets {
                let value = powers[k - 1][torus.index(v) as usize];
                checked += 1;
                if value > bound * (1.0 + ROUNDING_SLACK) {
                    violations.push(DominanceViolation { u, v, k, value, bound });
                }
            }
        }
    }
    Ok(DominanceReport { return_probability: bound, checked, violations })
}

/// Cumulative ring weights for sampling one step of the unrestricted kernel.
#[derive(Debug, Clone)]
struct RingPicker {
    radii: Vec<u32>,
    sizes: Vec<u64>,
    cumulative: Vec<f64>,
}

impl RingPicker {
    fn new(params: &GraphParams) -> Self {
        let rings: Vec<_> = params.rings().into_iter().filter(|r| r.p > 0.0 && r.size > 0).collect();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(rings.len());
        for r in &rings {
            acc += r.size as f64 * r.p;
            cumulative.push(acc);
        }
        RingPicker {
            radii: rings.iter().map(|r| r.r).collect(),
            sizes: rings.iter().map(|r| r.size).collect(),
            cumulative,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, torus: &Torus, from: TorusPoint, rng: &mut R) -> Option<TorusPoint> {
        let total = *self.cumulative.last()?;
        let x = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x).min(self.radii.len() - 1);
        let idx = rng.random_range(0..self.sizes[i]);
        Some(torus.ring_member(from, self.radii[i], idx))
    }
}

const REJECTION_LIMIT: usize = 4096;

/// Samples the self-avoiding walk `X~` of length `length` (so `length + 1`
/// states) started at `start`. At step `i` the transition is `P_B` with
/// `B = A_i ∪ {trajectory so far}`, where `A_i` is `forbidden_at(i)`; the sets
/// are accumulated, so they only grow.
pub fn restricted_walk_sample<R, F>(spec: &KernelSpec, length: usize, start: TorusPoint, mut forbidden_at: F, rng: &mut R) -> Result<Vec<TorusPoint>>
where
    R: Rng + ?Sized,
    F: FnMut(usize) -> Vec<TorusPoint>,
{
    let torus = spec.torus();
    let mut blocked = spec.forbidden.clone();
    if blocked[torus.index(start) as usize] {
        return Err(Error::ForbiddenState(torus.index(start)));
    }
    let picker = RingPicker::new(&spec.params);
    let mut path = Vec::with_capacity(length + 1);
    path.push(start);
    blocked[torus.index(start) as usize] = true;
    let mut current = start;
    for i in 1..=length {
        for p in forbidden_at(i) {
            blocked[torus.index(p) as usize] = true;
        }
        let mut chosen = None;
        for _ in 0..REJECTION_LIMIT {
            match picker.sample(&torus, current, rng) {
                Some(p) if !blocked[torus.index(p) as usize] => {
                    chosen = Some(p);
                    break;
                }
                Some(_) => continue,
                None => break,
            }
        }
        let next = match chosen {
            Some(p) => p,
            None => exact_restricted_step(spec, &blocked, current, rng)?,
        };
        blocked[torus.index(next) as usize] = true;
        path.push(next);
        current = next;
    }
    Ok(path)
}

fn exact_restricted_step<R: Rng + ?Sized>(spec: &KernelSpec, blocked: &[bool], from: TorusPoint, rng: &mut R) -> Result<TorusPoint> {
    let torus = spec.torus();
    let weights: Vec<f64> = torus
        .points()
        .enumerate()
        .map(|(i, v)| if blocked[i] { 0.0 } else { spec.params.pair_probability(from, v) })
        .collect();
    let total = compensated_sum(weights.iter().copied());
    if total <= 0.0 {
        return Err(Error::DeadEnd(torus.index(from)));
    }
    let mut x = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = Some(i);
            if x < w {
                return Ok(torus.point_at(i as u32));
            }
            x -= w;
        }
    }
    Ok(torus.point_at(last.expect("positive total") as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn pt(x: u32, y: u32) -> TorusPoint {
        TorusPoint { x, y }
    }

    #[test]
    fn rows_are_stochastic_and_zero_on_diagonal() {
        for side in [5u32, 8, 13] {
            let spec = KernelSpec::new(GraphParams::critical(side).unwrap());
            let torus = spec.torus();
            let u = pt(1, side - 2);
            let row = kernel_row(&spec, u).unwrap();
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(row[torus.index(u) as usize], 0.0);
            for v in torus.points() {
                let r = torus.distance(u, v);
                if r > 0 {
                    // proportional to 1/r
                    let ratio = row[torus.index(v) as usize] * r as f64 / (row[torus.index(torus.ring(u, 1)[0]) as usize]);
                    assert!((ratio - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forbidden_rows() {
        let params = GraphParams::critical(6).unwrap();
        let a = [pt(0, 1), pt(2, 2)];
        let spec = KernelSpec::with_forbidden(params, &a);
        assert_eq!(kernel_row(&spec, pt(0, 1)), Err(Error::ForbiddenState(1)));
        let row = kernel_row(&spec, pt(0, 0)).unwrap();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(row[1], 0.0);
        // row inflation: P <= P_A
        let plain = kernel_row(&KernelSpec::new(params), pt(0, 0)).unwrap();
        for (i, (&pa, &p)) in row.iter().zip(&plain).enumerate() {
            if i != 1 && i != 14 {
                assert!(p <= pa);
            }
        }
    }

    #[test]
    fn tv_examples() {
        let mu = [0.2, 0.3, 0.5];
        assert_eq!(tv_distance(&mu, &mu).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(tv_distance(&[1.0], &[0.5, 0.5]), Err(Error::DimensionMismatch(1, 2)));
        assert!(matches!(tv_distance(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotAProbabilityVector(_))));
    }

    #[test]
    fn stepper_matches_dense_rows() {
        let spec = KernelSpec::new(GraphParams::new(7, 0.7, 1.0).unwrap());
        let torus = spec.torus();
        let u = pt(2, 5);
        let stepper = Stepper::new(&spec);
        let powers = stepper.powers(u, 2);
        let row_u = kernel_row(&spec, u).unwrap();
        for (a, b) in powers[0].iter().zip(&row_u) {
            assert!((a - b).abs() < 1e-15);
        }
        // P^2 by explicit dense product
        for v in torus.points() {
            let mut s = 0.0;
            for x in torus.points() {
                let rx = kernel_row(&spec, x).unwrap();
                s += row_u[torus.index(x) as usize] * rx[torus.index(v) as usize];
            }
            assert!((powers[1][torus.index(v) as usize] - s).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_and_uniform_stationary() {
        let spec = KernelSpec::new(GraphParams::critical(9).unwrap());
        let torus = spec.torus();
        let rows: Vec<Vec<f64>> = torus.points().map(|u| kernel_row(&spec, u).unwrap()).collect();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                assert!((rows[i][j] - rows[j][i]).abs() < 1e-15);
            }
        }
        let n = torus.vertex_count();
        let uniform = vec![1.0 / n as f64; n];
        for k in [1, 5, 20] {
            let mu = evolve(&spec, &uniform, k).unwrap();
            assert!(tv_distance(&mu, &uniform).unwrap() < 1e-14);
        }
    }

    #[test]
    fn mixing_profile_small() {
        let spec = KernelSpec::new(GraphParams::critical(25).unwrap());
        let report = mixing_profile(&spec, 10, &[pt(0, 0), pt(7, 19)]).unwrap();
        assert!(report.violations().is_empty());
        let k10 = &report.rows[9];
        assert!((k10.bound - 0.451_3).abs() < 1e-3, "{}", k10.bound);
        assert!(k10.max_tv <= k10.bound);
        assert!(report.rows.windows(2).all(|w| w[1].max_tv <= w[0].max_tv + 1e-15));
        assert!(report.to_csv().starts_with("k,max_tv,bound\n1,"));
        let big = KernelSpec::new(GraphParams::critical(33).unwrap());
        assert!(matches!(mixing_profile(&big, 2, &[pt(0, 0)]), Err(Error::SizeCapExceeded { .. })));
    }

    #[test]
    fn return_probability_consistency() {
        let zero = KernelSpec::new(GraphParams::new(10, 0.0, 1.0).unwrap());
        assert_eq!(return_probability(&zero).unwrap(), 0.0);
        let spec = KernelSpec::new(GraphParams::critical(11).unwrap());
        let rp = return_probability(&spec).unwrap();
        let stepper = Stepper::new(&spec);
        for u in [pt(0, 0), pt(4, 9)] {
            let p2 = &stepper.powers(u, 2)[1];
            assert!((p2[spec.torus().index(u) as usize] - rp).abs() < 1e-15);
        }
        let z = spec.normalizer();
        let direct = two_step_weight(&spec.params, pt(0, 0), pt(0, 0)) / (z * z);
        assert!((direct - rp).abs() < 1e-15);
    }

    #[test]
    fn dominance_small_cases() {
        let spec = KernelSpec::new(GraphParams::new(9, 0.9, 1.0).unwrap());
        let torus = spec.torus();
        let pts: Vec<_> = torus.points().collect();
        let pairs: Vec<_> = pts.iter().flat_map(|&u| pts.iter().map(move |&v| (u, v))).collect();
        let report = two_step_dominance_check(&spec, &pairs, 8).unwrap();
        assert!(report.passed());
        assert_eq!(report.checked, 81 * 81 * 7);
    }

    #[test]
    fn restricted_walk_avoids_repeats() {
        let params = GraphParams::critical(11).unwrap();
        let spec = KernelSpec::with_forbidden(params, &[pt(0, 1)]);
        let mut rng = stream(9, Purpose::RestrictedWalk, 0);
        for _ in 0..200 {
            let path = restricted_walk_sample(&spec, 30, pt(0, 0), |i| vec![pt(i as u32 % 11, 5)], &mut rng).unwrap();
            assert_eq!(path.len(), 31);
            let set: std::collections::HashSet<_> = path.iter().collect();
            assert_eq!(set.len(), 31);
            assert!(!path.contains(&pt(0, 1)));
            for (i, p) in path.iter().enumerate().skip(1) {
                for j in 1..=i {
                    assert_ne!(*p, pt(j as u32 % 11, 5));
                }
            }
        }
    }

    #[test]
    fn restricted_walk_dead_end() {
        let params = GraphParams::critical(3).unwrap();
        let spec = KernelSpec::new(params);
        let mut rng = stream(10, Purpose::RestrictedWalk, 0);
        let err = restricted_walk_sample(&spec, 9, pt(0, 0), |_| Vec::new(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::DeadEnd(_)));
        assert_eq!(restricted_walk_sample(&spec, 8, pt(0, 0), |_| Vec::new(), &mut rng).unwrap().len(), 9);
    }

    #[test]
    fn restricted_single_step_law() {
        // empty A, one step: P restricted to avoid the start, i.e. P itself
        let params = GraphParams::critical(5).unwrap();
        let spec = KernelSpec::new(params);
        let row = kernel_row(&spec, pt(2, 2)).unwrap();
        let mut rng = stream(11, Purpose::RestrictedWalk, 0);
        let draws = 200_000;
        let mut counts = vec![0usize; 25];
        for _ in 0..draws {
            let path = restricted_walk_sample(&spec, 1, pt(2, 2), |_| Vec::new(), &mut rng).unwrap();
            counts[spec.torus().index(path[1]) as usize] += 1;
        }
        for (i, &p) in row.iter().enumerate() {
            let f = counts[i] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() <= 4.0 * se + 1e-12, "state {i}: {f} vs {p}");
        }
    }
}
