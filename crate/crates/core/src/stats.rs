//! Seeded Monte Carlo campaigns that tie the exploration to its limit.
//!
//! Every run draws from its own counter-based stream and results are
//! collected in run-index order, so the output is the same for any number
//! of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::OffspringLaw;
use crate::error::{Error, Result};
use crate::exploration::{budget_for_horizon, component_sizes, explore, walk_index, ExplorationTrace};
use crate::limit::{sample_limit_components, LimitSample};
use crate::model::{GraphParams, RevealOracle};
use crate::numeric::{mean_variance, normal_quantile, two_thirds_power};
use crate::rng::{stream, Purpose};

pub const DEFAULT_LEVEL: f64 = 0.99;

/// Runs `f` inside a pool with `threads` workers (`None` or 0: rayon's
/// default).
pub fn with_threads<T: Send, F: FnOnce() -> T + Send>(threads: Option<usize>, f: F) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads.filter(|&k| k > 0) {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Explores `runs` independent graphs, each for `budget` steps, and maps
/// each trace through `summarize`. Results are in run order.
pub fn run_explorations<T, F>(params: &GraphParams, budget: usize, runs: usize, seed: u64, summarize: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &ExplorationTrace) -> T + Sync,
{
    (0..runs)
        .into_par_iter()
        .map_init(
            || RevealOracle::new(*params),
            |oracle, run| {
                oracle.reset();
                let mut rng = stream(seed, Purpose::Exploration, run as u64);
                let trace = explore(oracle, &mut rng, budget)?;
                Ok(summarize(run, &trace))
            },
        )
        .collect()
}

/// Sup-distance between the two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Step budget `ceil(T n^{2/3})`, which must not exceed `n`.
pub fn horizon_budget(params: &GraphParams, horizon: f64) -> Result<usize> {
    let n = params.vertex_count();
    let wanted = (horizon * two_thirds_power(n)).ceil();
    if !(horizon > 0.0) || wanted > n as f64 {
        return Err(Error::BudgetTooLarge { budget: wanted.max(0.0) as usize, vertices: n });
    }
    Ok(budget_for_horizon(n, horizon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub s: f64,
    pub index: usize,
    pub mean: f64,
    pub mean_ci: (f64, f64),
    pub variance: f64,
    pub variance_ci: (f64, f64),
    pub target_mean: f64,
    pub target_variance: f64,
}

impl MomentRow {
    fn from_values(s: f64, index: usize, values: &[f64], level: f64) -> Self {
        let m = values.len() as f64;
        let (mean, variance) = mean_variance(values);
        let z = normal_quantile(level);
        let half_mean = z * (variance / m).sqrt();
        let half_var = z * variance * (2.0 / (m - 1.0)).sqrt();
        MomentRow {
            s,
            index,
            mean,
            mean_ci: (mean - half_mean, mean + half_mean),
            variance,
            variance_ci: (variance - half_var, variance + half_var),
            target_mean: -0.5 * s * s,
            target_variance: s,
        }
    }

    /// Mean within `max(0.1 s^2, 4 sqrt(s / M))` of `-s^2/2`.
    pub fn mean_ok(&self, runs: usize) -> bool {
        let tol = (0.1 * self.s * self.s).max(4.0 * (self.s / runs as f64).sqrt());
        (self.mean - self.target_mean).abs() <= tol
    }

    /// Variance within 15% of `s`.
    pub fn variance_ok(&self) -> bool {
        (self.variance - self.target_variance).abs() <= 0.15 * self.target_variance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub runs: usize,
    pub level: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentsReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.mean_ok(self.runs) && r.variance_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,index,mean,mean_ci_low,mean_ci_high,variance,variance_ci_low,variance_ci_high,target_mean,target_variance\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.s, r.index, r.mean, r.mean_ci.0, r.mean_ci.1, r.variance, r.variance_ci.0, r.variance_ci.1, r.target_mean, r.target_variance
            );
        }
        out
    }
}

fn check_grid(s_grid: &[f64], horizon: f64) -> Result<()> {
    for &s in s_grid {
        if !(s > 0.0 && s <= horizon) {
            return Err(Error::InvalidArgument(format!("grid point s = {s} outside (0, {horizon}]")));
        }
    }
    Ok(())
}

fn moments_from_values(s_grid: &[f64], indices: &[usize], values: &[Vec<f64>], level: f64) -> MomentsReport {
    let rows = s_grid
        .iter()
        .zip(indices)
        .enumerate()
        .map(|(g, (&s, &index))| {
            let column: Vec<f64> = values.iter().map(|v| v[g]).collect();
            MomentRow::from_values(s, index, &column, level)
        })
        .collect();
    MomentsReport { runs: values.len(), level, rows }
}

/// Sample mean and variance of `z~(s)` over `runs` explorations with
/// horizon `max(s_grid)`.
pub fn walk_moments(params: &GraphParams, s_grid: &[f64], runs: usize, seed: u64) -> Result<MomentsReport> {
    let horizon = s_grid.iter().copied().fold(0.0, f64::max);
    check_grid(s_grid, horizon)?;
    if runs < 2 {
        return Err(Error::InvalidArgument("at least two runs are needed for a variance".into()));
    }
    let n = params.vertex_count();
    let budget = horizon_budget(params, horizon)?;
    let indices = s_grid.iter().map(|&s| walk_index(n, s)).collect::<Result<Vec<_>>>()?;
    let scale = (n as f64).cbrt();
    let values = run_explorations(params, budget, runs, seed, |_, trace| {
        indices.iter().map(|&i| trace.z[i - 1] as f64 / scale).collect::<Vec<f64>>()
    })?;
    Ok(moments_from_values(s_grid, &indices, &values, DEFAULT_LEVEL))
}

/// Top-`j` completed components of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunComponents {
    pub top: Vec<u64>,
    pub completed: usize,
    pub partial: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub coordinate: usize,
    pub ks: f64,
    pub graph_samples: usize,
    pub limit_samples: usize,
    /// Runs with fewer than `coordinate` completed components (entry set to 0).
    pub graph_shortfall: usize,
    pub limit_shortfall: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentComparison {
    pub top: usize,
    pub scale: f64,
    pub runs: Vec<RunComponents>,
    pub ks: Vec<KsRow>,
}

impl ComponentComparison {
    /// `C_i / n^{2/3}` across runs, 0 where the run has fewer than `i` components.
    pub fn graph_coordinate(&self, i: usize) -> Vec<f64> {
        self.runs.iter().map(|r| r.top.get(i).map_or(0.0, |&c| c as f64 / self.scale)).collect()
    }

    pub fn ks_csv(&self) -> String {
        let mut out = String::from("coordinate,ks,graph_samples,limit_samples,graph_shortfall,limit_shortfall\n");
        for r in &self.ks {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.coordinate, r.ks, r.graph_samples, r.limit_samples, r.graph_shortfall, r.limit_shortfall);
        }
        out
    }

    /// Columns `run,rank,size,completed_flag`; the open component, if any,
    /// is listed last with flag 0.
    pub fn components_csv(&self) -> String {
        let mut out = String::from("run,rank,size,completed_flag\n");
        for (run, r) in self.runs.iter().enumerate() {
            for (rank, size) in r.top.iter().enumerate() {
                let _ = writeln!(out, "{run},{},{size},1", rank + 1);
            }
            if let Some(p) = r.partial {
                let _ = writeln!(out, "{run},{},{p},0", r.top.len() + 1);
            }
        }
        out
    }
}

fn compare_components(runs: Vec<RunComponents>, top: usize, scale: f64, limit: &LimitSample) -> Result<ComponentComparison> {
    let mut cmp = ComponentComparison { top, scale, runs, ks: Vec::new() };
    for i in 0..top {
        let graph = cmp.graph_coordinate(i);
        let lim = limit.coordinate(i);
        cmp.ks.push(KsRow {
            coordinate: i + 1,
            ks: ks_two_sample(&graph, &lim)?,
            graph_samples: graph.len(),
            limit_samples: lim.len(),
            graph_shortfall: cmp.runs.iter().filter(|r| r.completed <= i).count(),
            limit_shortfall: lim.iter().filter(|&&x| x == 0.0).count(),
        });
    }
    Ok(cmp)
}

fn run_components(trace: &ExplorationTrace, top: usize) -> RunComponents {
    let sizes = component_sizes(trace).expect("exploration walks are well formed");
    RunComponents { top: sizes.completed.iter().take(top).copied().collect(), completed: sizes.completed.len(), partial: sizes.partial }
}

/// KS distance per coordinate `i <= top` between `C_i / n^{2/3}` (completed
/// components within the horizon) and `gamma_i` (completed excursions).
pub fn component_vs_excursion(params: &GraphParams, horizon: f64, graph_runs: usize, limit: &LimitSample, seed: u64) -> Result<ComponentComparison> {
    let top = limit.top;
    let budget = horizon_budget(params, horizon)?;
    let runs = run_explorations(params, budget, graph_runs, seed, |_, trace| run_components(trace, top))?;
    compare_components(runs, top, two_thirds_power(params.vertex_count()), limit)
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(total: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut remaining = total;
    let mut mass = 1.0f64;
    let mut out = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            out.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = if remaining == 0 || q == 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        out.push(x);
        remaining -= x;
        mass -= p;
    }
    out
}

/// TV distance between empirical counts and the uniform law on their cells.
pub fn tv_to_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let u = 1.0 / counts.len() as f64;
    0.5 * counts.iter().map(|&c| (c as f64 / total as f64 - u).abs()).sum::<f64>()
}

const NOISE_REPLICATES: u64 = 8;
const BOOTSTRAP_REPLICATES: u64 = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub tv: f64,
    /// Mean TV of uniform samples of the same size.
    pub noise_floor: f64,
    pub bootstrap_ci: (f64, f64),
}

fn tv_estimate(counts: &[u64], seed: u64, tag: u64) -> TvEstimate {
    let total: u64 = counts.iter().sum();
    let cells = counts.len();
    let uniform = vec![1.0 / cells as f64; cells];
    let noise: f64 = (0..NOISE_REPLICATES)
        .map(|r| tv_to_uniform(&multinomial(total, &uniform, &mut stream(seed, Purpose::NoiseFloor, tag * 1000 + r))))
        .sum::<f64>()
        / NOISE_REPLICATES as f64;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let mut boot: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|r| tv_to_uniform(&multinomial(total, &empirical, &mut stream(seed, Purpose::Bootstrap, tag * 1000 + r))))
        .collect();
    boot.sort_by(f64::total_cmp);
    let lo = boot[(0.005 * BOOTSTRAP_REPLICATES as f64) as usize];
    let hi = boot[((0.995 * BOOTSTRAP_REPLICATES as f64) as usize).min(boot.len() - 1)];
    TvEstimate { tv: tv_to_uniform(counts), noise_floor: noise, bootstrap_ci: (lo, hi) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub side: u32,
    pub i: usize,
    pub j: usize,
    pub runs: usize,
    /// Law of `v_j` against uniform on all vertices.
    pub marginal: TvEstimate,
    /// Law of the displacement `v_j - v_i` against uniform on the nonzero
    /// displacements.
    pub displacement: TvEstimate,
}

impl UniformityReport {
    pub fn ratio(&self) -> f64 {
        self.marginal.tv / self.marginal.noise_floor
    }
}

/// Smallest admissible separation `ceil(n^{1/6})`.
pub fn minimum_separation(vertex_count: usize) -> usize {
    let n = vertex_count as f64;
    let s = n.powf(1.0 / 6.0).ceil() as usize;
    // guard against powf landing just above an integer
    if s > 1 && ((s - 1) as f64).powi(6) >= n {
        s - 1
    } else {
        s
    }
}

pub fn walker_uniformity(params: &GraphParams, i: usize, j: usize, runs: usize, seed: u64) -> Result<UniformityReport> {
    let n = params.vertex_count();
    if i == 0 || j <= i {
        return Err(Error::InvalidArgument(format!("need 1 <= i < j, got i = {i}, j = {j}")));
    }
    if j - i < minimum_separation(n) {
        return Err(Error::InvalidArgument(format!("separation j - i = {} below ceil(n^(1/6)) = {}", j - i, minimum_separation(n))));
    }
    if j > n {
        return Err(Error::StepOutOfRange { index: j, steps: n });
    }
    if runs == 0 {
        return Err(Error::EmptySample);
    }
    let torus = params.torus();
    let pairs = run_explorations(params, j, runs, seed, |_, trace| (trace.processed[i - 1], trace.processed[j - 1]))?;
    let mut marginal = vec![0u64; n];
    let mut displacement = vec![0u64; n];
    for &(a, b) in &pairs {
        marginal[b as usize] += 1;
        let d = torus.displacement(torus.point_at(a), torus.point_at(b));
        displacement[torus.index(d) as usize] += 1;
    }
    // displacement 0 is impossible; drop that cell
    displacement.remove(0);
    Ok(UniformityReport {
        side: params.side,
        i,
        j,
        runs,
        marginal: tv_estimate(&marginal, seed, 1),
        displacement: tv_estimate(&displacement, seed, 2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: usize,
    pub exceedances: u64,
    pub frequency: f64,
    pub bound: f64,
    pub se: f64,
}

impl GrowthRow {
    pub fn passed(&self) -> bool {
        self.frequency <= self.bound + 3.0 * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub factor: f64,
    pub runs: usize,
    pub rows: Vec<GrowthRow>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(GrowthRow::passed)
    }
}

fn growth_rows(used: &[Vec<u32>], k_max: usize, factor: f64) -> Vec<GrowthRow> {
    let m = used.len() as f64;
    (1..=k_max)
        .map(|k| {
            let exceedances = used.iter().filter(|u| u.get(k - 1).is_some_and(|&x| x as f64 >= factor * k as f64)).count() as u64;
            let bound = (-(k as f64) * (factor - std::f64::consts::E)).exp().min(1.0);
            GrowthRow { k, exceedances, frequency: exceedances as f64 / m, bound, se: (bound * (1.0 - bound) / m).sqrt() }
        })
        .collect()
}

/// Frequency of `|I_k| >= C k` for `k <= k_max` against `exp(-k (C - e))`.
pub fn growth_bound_report(params: &GraphParams, runs: usize, k_max: usize, factor: f64, seed: u64) -> Result<GrowthReport> {
    if factor <= std::f64::consts::E {
        return Err(Error::ThresholdTooSmall(factor));
    }
    if runs == 0 {
        return Err(Error::EmptySample);
    }
    let budget = k_max.min(params.vertex_count());
    let used = run_explorations(params, budget, runs, seed, |_, trace| trace.used.clone())?;
    Ok(GrowthReport { factor, runs, rows: growth_rows(&used, k_max, factor) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub x: u64,
    /// `P^(D >= x)`.
    pub empirical: f64,
    /// `P(Poisson(1) >= x)`.
    pub poisson: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub side: u32,
    pub samples: u64,
    pub rows: Vec<DominationRow>,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.empirical <= r.poisson + 3.0 * r.se)
    }
}

/// `P(Poisson(lambda) >= x)` for `x = 0..=x_max`.
pub fn poisson_survival(lambda: f64, x_max: u64) -> Vec<f64> {
    let mut pmf = (-lambda).exp();
    let mut cdf = 0.0f64;
    let mut out = Vec::with_capacity(x_max as usize + 1);
    for x in 0..=x_max {
        out.push((1.0 - cdf).max(0.0));
        cdf += pmf;
        pmf *= lambda / (x + 1) as f64;
    }
    out
}

/// Survival function of the root's degree against Poisson(1).
pub fn poisson_domination(params: &GraphParams, samples: u64, seed: u64) -> Result<DominationReport> {
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let law = OffspringLaw::new(*params);
    let degrees: Vec<u64> = (0..samples).into_par_iter().map(|i| law.sample(&mut stream(seed, Purpose::Degree, i))).collect();
    let x_max = degrees.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0u64; x_max as usize + 1];
    for &d in &degrees {
        counts[d as usize] += 1;
    }
    let poisson = poisson_survival(1.0, x_max);
    let m = samples as f64;
    let mut at_least = samples;
    let mut rows = Vec::new();
    for x in 0..=x_max {
        let empirical = at_least as f64 / m;
        let q = poisson[x as usize];
        rows.push(DominationRow { x, empirical, poisson: q, se: (q * (1.0 - q) / m).sqrt() });
        at_least -= counts[x as usize];
    }
    Ok(DominationReport { side: params.side, samples, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub params: GraphParams,
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    pub dt: f64,
    pub limit_runs: usize,
    pub top: usize,
    pub s_grid: Vec<f64>,
    pub growth_k_max: usize,
    pub growth_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub side: u32,
    pub c: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    pub dt: f64,
    pub limit_runs: usize,
    pub moments: MomentsReport,
    pub components: ComponentComparison,
    pub growth: GrowthReport,
}

struct CampaignRun {
    walk: Vec<f64>,
    components: RunComponents,
    used: Vec<u32>,
}

/// Walk moments, component-vs-excursion KS and growth counts from one set
/// of explorations.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    let params = &config.params;
    check_grid(&config.s_grid, config.horizon)?;
    if config.runs < 2 {
        return Err(Error::InvalidArgument("a campaign needs at least two runs".into()));
    }
    if config.growth_factor <= std::f64::consts::E {
        return Err(Error::ThresholdTooSmall(config.growth_factor));
    }
    let n = params.vertex_count();
    let budget = horizon_budget(params, config.horizon)?;
    let indices = config.s_grid.iter().map(|&s| walk_index(n, s)).collect::<Result<Vec<_>>>()?;
    let scale = (n as f64).cbrt();
    let k_max = config.growth_k_max.min(budget);
    let runs = run_explorations(params, budget, config.runs, config.seed, |_, trace| CampaignRun {
        walk: indices.iter().map(|&i| trace.z[i - 1] as f64 / scale).collect(),
        components: run_components(trace, config.top),
        used: trace.used[..k_max].to_vec(),
    })?;
    let mut walks = Vec::with_capacity(runs.len());
    let mut comps = Vec::with_capacity(runs.len());
    let mut used = Vec::with_capacity(runs.len());
    for r in runs {
        walks.push(r.walk);
        comps.push(r.components);
        used.push(r.used);
    }
    let limit = sample_limit_components(config.horizon, config.dt, config.limit_runs, config.top, config.seed, false)?;
    Ok(CampaignResult {
        side: params.side,
        c: params.c,
        alpha: params.alpha,
        horizon: config.horizon,
        runs: config.runs,
        seed: config.seed,
        dt: config.dt,
        limit_runs: config.limit_runs,
        moments: moments_from_values(&config.s_grid, &indices, &walks, DEFAULT_LEVEL),
        components: compare_components(comps, config.top, two_thirds_power(n), &limit)?,
        growth: GrowthReport { factor: config.growth_factor, runs: config.runs, rows: growth_rows(&used, k_max, config.growth_factor) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.5, 2.5]).unwrap(), 0.5);
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample));
        // ties across samples
        assert_eq!(ks_two_sample(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn ks_matches_brute_force() {
        let mut rng = stream(1, Purpose::Generic, 0);
        for _ in 0..200 {
            let a: Vec<f64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(0..8) as f64).collect();
            let b: Vec<f64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(0..8) as f64).collect();
            let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let brute = a.iter().chain(&b).map(|&x| (cdf(&a, x) - cdf(&b, x)).abs()).fold(0.0, f64::max);
            assert!((ks_two_sample(&a, &b).unwrap() - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = stream(2, Purpose::Generic, 0);
        let probs = [0.1, 0.2, 0.3, 0.4];
        let counts = multinomial(10_000, &probs, &mut rng);
        assert_eq!(counts.iter().sum::<u64>(), 10_000);
        for (c, p) in counts.iter().zip(probs) {
            let se = (10_000.0 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - 10_000.0 * p).abs() < 4.0 * se);
        }
        assert_eq!(multinomial(5, &[0.0, 1.0, 0.0], &mut rng), vec![0, 5, 0]);
    }

    #[test]
    fn poisson_survival_values() {
        let s = poisson_survival(1.0, 3);
        assert_eq!(s[0], 1.0);
        assert!((s[1] - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((s[3] - (1.0 - 2.5 * (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn separation() {
        assert_eq!(minimum_separation(225), 3);
        assert_eq!(minimum_separation(64), 2);
        assert_eq!(minimum_separation(65), 3);
        assert_eq!(minimum_separation(1), 1);
    }

    #[test]
    fn growth_rejects_small_factor() {
        let p = GraphParams::critical(20).unwrap();
        assert_eq!(growth_bound_report(&p, 10, 5, 2.0, 1), Err(Error::ThresholdTooSmall(2.0)));
    }

    #[test]
    fn growth_small_run() {
        let p = GraphParams::critical(30).unwrap();
        let report = growth_bound_report(&p, 2000, 20, 6.0, 3).unwrap();
        assert_eq!(report.rows.len(), 20);
        assert!(report.passed());
        assert!(report.rows[10..].iter().all(|r| r.exceedances == 0));
    }

    #[test]
    fn budget_cap() {
        let p = GraphParams::critical(10).unwrap();
        assert!(matches!(horizon_budget(&p, 10.0), Err(Error::BudgetTooLarge { .. })));
        assert_eq!(horizon_budget(&p, 1.0).unwrap(), 22);
    }

    #[test]
    fn moments_first_grid_point_near_zero() {
        let p = GraphParams::critical(40).unwrap();
        let report = walk_moments(&p, &[0.005, 0.5], 500, 4).unwrap();
        let first = &report.rows[0];
        assert_eq!(first.index, 1);
        assert_eq!(first.mean, 0.0);
        assert!(report.rows[1].mean_ci.0 < report.rows[1].mean);
    }

    #[test]
    fn moments_reject_bad_grid() {
        let p = GraphParams::critical(40).unwrap();
        assert!(walk_moments(&p, &[0.0, 0.5], 10, 4).is_err());
        assert!(walk_moments(&p, &[0.5], 1, 4).is_err());
    }

    #[test]
    fn identical_samples_give_zero_ks() {
        let limit = LimitSample {
            horizon: 1.0,
            dt: 0.1,
            top: 1,
            include_truncated: false,
            rows: vec![vec![0.5], vec![0.25]],
            truncated: vec![false, false],
        };
        let runs = vec![
            RunComponents { top: vec![2], completed: 1, partial: None },
            RunComponents { top: vec![1], completed: 3, partial: Some(1) },
        ];
        let cmp = compare_components(runs, 1, 4.0, &limit).unwrap();
        assert_eq!(cmp.ks[0].ks, 0.0);
        assert!(cmp.components_csv().starts_with("run,rank,size,completed_flag\n0,1,2,1\n1,1,1,1\n1,2,1,0\n"));
    }

    #[test]
    fn uniformity_with_no_edges() {
        // c = 0: v_j is uniform on the vertices not yet used
        let p = GraphParams::new(6, 0.0, 1.0).unwrap();
        let report = walker_uniformity(&p, 2, 4, 50_000, 5).unwrap();
        assert!(report.marginal.tv <= report.marginal.noise_floor * 2.0 + 4.0 / 36.0);
        assert!(report.marginal.bootstrap_ci.0 <= report.marginal.tv + 1e-12);
        assert!(walker_uniformity(&p, 2, 3, 10, 5).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = GraphParams::critical(30).unwrap();
        let one = with_threads(Some(1), || walk_moments(&p, &[0.5, 1.0], 200, 9)).unwrap().unwrap();
        let three = with_threads(Some(3), || walk_moments(&p, &[0.5, 1.0], 200, 9)).unwrap().unwrap();
        assert_eq!(one, three);
    }
}
