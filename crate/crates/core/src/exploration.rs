//! Breadth-first walk that reveals the components of the graph one vertex
//! per step.
//!
//! At step `k` the walk processes `v_k`: the active vertex of smallest depth
//! (chosen uniformly among that depth) if any vertex is active, otherwise a
//! uniform unexplored vertex, which becomes a new root. Its neighbors among
//! the unexplored vertices are revealed and become active. The process
//! `z(1) = 0`, `z(k + 1) = z(k) - 1 + |revealed_k|` first hits `-m` exactly
//! when the `m`-th component is complete.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::two_thirds_power;

/// Anything that can answer "which available vertices are joined to `v`?".
pub trait NeighborSource {
    fn vertex_count(&self) -> usize;

    /// True if no vertex has been processed yet.
    fn is_fresh(&self) -> bool;

    /// Writes the neighbors of `v` that satisfy `available` into `out`.
    /// Each vertex may be processed at most once.
    fn reveal<R: Rng + ?Sized, F: Fn(u32) -> bool>(&mut self, v: u32, available: F, rng: &mut R, out: &mut Vec<u32>) -> Result<()>;
}

pub const NO_PARENT: u32 = u32::MAX;

/// Full record of one exploration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub vertex_count: usize,
    pub budget: usize,
    /// `z[k - 1] = z(k)` for `k = 1..=steps + 1`.
    pub z: Vec<i64>,
    /// `revealed[k - 1] = |N(v_k, k)|`.
    pub revealed: Vec<u32>,
    /// `used[k - 1] = |I_k|`.
    pub used: Vec<u32>,
    /// `active[k - 1] = |A_k|`.
    pub active: Vec<u32>,
    /// `processed[k - 1] = v_k`.
    pub processed: Vec<u32>,
    /// Steps (1-based) at which a new root was started.
    pub root_steps: Vec<usize>,
    /// Parent of each used vertex (`NO_PARENT` for roots and unused vertices).
    pub parent: Vec<u32>,
    /// Depth below the root of each used vertex.
    pub depth: Vec<u32>,
}

impl ExplorationTrace {
    pub fn steps(&self) -> usize {
        self.processed.len()
    }

    /// True when every vertex was processed.
    pub fn is_complete(&self) -> bool {
        self.steps() == self.vertex_count
    }

    fn root_of(&self, mut v: u32) -> u32 {
        while self.parent[v as usize] != NO_PARENT {
            v = self.parent[v as usize];
        }
        v
    }
}

/// Runs the walk for at most `budget` steps (stopping earlier only when
/// every vertex has been processed).
pub fn explore<S: NeighborSource, R: Rng + ?Sized>(source: &mut S, rng: &mut R, budget: usize) -> Result<ExplorationTrace> {
    let n = source.vertex_count();
    if budget > n {
        return Err(Error::BudgetTooLarge { budget, vertices: n });
    }
    if !source.is_fresh() {
        return Err(Error::SourceNotFresh);
    }

    let mut used = vec![false; n];
    let mut used_count: u32 = 0;
    // unexplored vertices with O(1) removal
    let mut unexplored: Vec<u32> = (0..n as u32).collect();
    let mut slot: Vec<u32> = (0..n as u32).collect();
    let remove = |v: u32, unexplored: &mut Vec<u32>, slot: &mut Vec<u32>| {
        let i = slot[v as usize] as usize;
        let last = *unexplored.last().expect("non-empty");
        unexplored.swap_remove(i);
        if last != v {
            slot[last as usize] = i as u32;
        }
    };

    let mut current: Vec<u32> = Vec::new();
    let mut cursor = 0usize;
    let mut next: Vec<u32> = Vec::new();
    let mut found: Vec<u32> = Vec::new();

    let mut trace = ExplorationTrace {
        vertex_count: n,
        budget,
        z: Vec::with_capacity(budget + 1),
        revealed: Vec::with_capacity(budget),
        used: Vec::with_capacity(budget),
        active: Vec::with_capacity(budget),
        processed: Vec::with_capacity(budget),
        root_steps: Vec::new(),
        parent: vec![NO_PARENT; n],
        depth: vec![0; n],
    };
    trace.z.push(0);

    for k in 1..=budget {
        if cursor == current.len() && !next.is_empty() {
            std::mem::swap(&mut current, &mut next);
            next.clear();
            current.shuffle(rng);
            cursor = 0;
        }
        let v = if cursor < current.len() {
            cursor += 1;
            current[cursor - 1]
        } else {
            if unexplored.is_empty() {
                break;
            }
            let v = unexplored[rng.random_range(0..unexplored.len())];
            remove(v, &mut unexplored, &mut slot);
            used[v as usize] = true;
            used_count += 1;
            trace.root_steps.push(k);
            v
        };

        source.reveal(v, |u| !used[u as usize], rng, &mut found)?;
        let child_depth = trace.depth[v as usize] + 1;
        for &u in &found {
            debug_assert!(!used[u as usize]);
            used[u as usize] = true;
            used_count += 1;
            remove(u, &mut unexplored, &mut slot);
            trace.parent[u as usize] = v;
            trace.depth[u as usize] = child_depth;
            next.push(u);
        }

        let z_prev = *trace.z.last().expect("z(1) present");
        trace.z.push(z_prev - 1 + found.len() as i64);
        trace.revealed.push(found.len() as u32);
        trace.used.push(used_count);
        trace.active.push(((current.len() - cursor) + next.len()) as u32);
        trace.processed.push(v);
    }
    Ok(trace)
}

/// Step budget `ceil(T n^{2/3})`, capped at `n`.
pub fn budget_for_horizon(vertex_count: usize, horizon: f64) -> usize {
    ((horizon * two_thirds_power(vertex_count)).ceil() as usize).min(vertex_count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSizes {
    /// Completed component sizes, largest first.
    pub completed: Vec<u64>,
    /// Completed sizes in the order they were revealed.
    pub in_order: Vec<u64>,
    /// Steps spent in a component still open when the walk ended.
    pub partial: Option<u64>,
}

/// Extracts `C_m = tau_m - tau_{m-1}` with `tau_0 = 1` and
/// `tau_m = min{k : z(k) = -m}`.
pub fn component_sizes_from_walk(z: &[i64]) -> Result<ComponentSizes> {
    match z.first() {
        Some(0) => {}
        _ => return Err(Error::WalkNotAnchored),
    }
    for (i, w) in z.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc < -1 {
            return Err(Error::MalformedWalk { index: i + 1, increment: inc });
        }
    }
    let mut in_order = Vec::new();
    let mut last_tau = 1usize;
    let mut level = 0i64;
    for (i, &zk) in z.iter().enumerate().skip(1) {
        let k = i + 1;
        if zk == level - 1 {
            level -= 1;
            in_order.push((k - last_tau) as u64);
            last_tau = k;
        }
    }
    let partial = (last_tau < z.len()).then(|| (z.len() - last_tau) as u64);
    let mut completed = in_order.clone();
    completed.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ComponentSizes { completed, in_order, partial })
}

pub fn component_sizes(trace: &ExplorationTrace) -> Result<ComponentSizes> {
    component_sizes_from_walk(&trace.z)
}

/// `z~(s) = n^{-1/3} z(1 + floor(n^{2/3} s))` at each grid point.
pub fn rescale_walk(trace: &ExplorationTrace, vertex_count: usize, s_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    rescale_walk_values(&trace.z, vertex_count, s_grid)
}

pub fn rescale_walk_values(z: &[i64], vertex_count: usize, s_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let cube_root = (vertex_count as f64).cbrt();
    s_grid
        .iter()
        .map(|&s| {
            let index = walk_index(vertex_count, s)?;
            let recorded = z.len();
            if index > recorded {
                return Err(Error::OutOfBudget { s, index, recorded });
            }
            Ok((s, z[index - 1] as f64 / cube_root))
        })
        .collect()
}

/// 1-based index `1 + floor(n^{2/3} s)`.
pub fn walk_index(vertex_count: usize, s: f64) -> Result<usize> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("grid point s = {s} must be finite and non-negative")));
    }
    Ok(1 + (two_thirds_power(vertex_count) * s).floor() as usize)
}

/// Tree distance between `v_i` and `v_j` (1-based step indices): `None` when
/// they lie in different revealed trees.
pub fn tree_distance(trace: &ExplorationTrace, i: usize, j: usize) -> Result<Option<u32>> {
    let steps = trace.steps();
    for index in [i, j] {
        if index == 0 || index > steps {
            return Err(Error::StepOutOfRange { index, steps });
        }
    }
    let (mut a, mut b) = (trace.processed[i - 1], trace.processed[j - 1]);
    if trace.root_of(a) != trace.root_of(b) {
        return Ok(None);
    }
    let mut dist = 0;
    while trace.depth[a as usize] > trace.depth[b as usize] {
        a = trace.parent[a as usize];
        dist += 1;
    }
    while trace.depth[b as usize] > trace.depth[a as usize] {
        b = trace.parent[b as usize];
        dist += 1;
    }
    while a != b {
        a = trace.parent[a as usize];
        b = trace.parent[b as usize];
        dist += 2;
    }
    Ok(Some(dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphParams, RevealOracle};
    use crate::rng::{stream, Purpose};

    /// Fixed adjacency lists; ignores randomness.
    struct Stub {
        adj: Vec<Vec<u32>>,
        done: Vec<bool>,
    }

    impl NeighborSource for Stub {
        fn vertex_count(&self) -> usize {
            self.adj.len()
        }
        fn is_fresh(&self) -> bool {
            !self.done.iter().any(|&d| d)
        }
        fn reveal<R: Rng + ?Sized, F: Fn(u32) -> bool>(&mut self, v: u32, available: F, _rng: &mut R, out: &mut Vec<u32>) -> Result<()> {
            assert!(!std::mem::replace(&mut self.done[v as usize], true));
            out.clear();
            out.extend(self.adj[v as usize].iter().copied().filter(|&u| available(u)));
            Ok(())
        }
    }

    fn stub(n: usize, edges: &[(u32, u32)]) -> Stub {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        Stub { adj, done: vec![false; n] }
    }

    #[test]
    fn path_graph_from_an_end() {
        // a - b - c, with a single vertex the walk must start at an endpoint
        // for the hand trace; try seeds until the root is vertex 0.
        for seed in 0..64 {
            let mut s = stub(3, &[(0, 1), (1, 2)]);
            let mut rng = stream(seed, Purpose::Generic, 0);
            let trace = explore(&mut s, &mut rng, 3).unwrap();
            if trace.processed[0] == 0 {
                assert_eq!(trace.z, vec![0, 0, 0, -1]);
                assert_eq!(component_sizes(&trace).unwrap().completed, vec![3]);
                return;
            }
        }
        panic!("root 0 never chosen");
    }

    #[test]
    fn path_graph_any_root_gives_one_component() {
        let mut s = stub(3, &[(0, 1), (1, 2)]);
        let mut rng = stream(1, Purpose::Generic, 0);
        let trace = explore(&mut s, &mut rng, 3).unwrap();
        assert_eq!(*trace.z.last().unwrap(), -1);
        assert_eq!(component_sizes(&trace).unwrap().completed, vec![3]);
    }

    #[test]
    fn isolated_vertices() {
        let params = GraphParams::new(5, 0.0, 1.0).unwrap();
        let mut oracle = RevealOracle::new(params);
        let mut rng = stream(2, Purpose::Generic, 0);
        let trace = explore(&mut oracle, &mut rng, 25).unwrap();
        for (i, &z) in trace.z.iter().enumerate() {
            assert_eq!(z, -(i as i64));
        }
        let sizes = component_sizes(&trace).unwrap();
        assert_eq!(sizes.completed, vec![1; 25]);
        assert_eq!(sizes.partial, None);
        assert_eq!(trace.root_steps, (1..=25).collect::<Vec<_>>());
    }

    #[test]
    fn sizes_from_walk_examples() {
        let s = component_sizes_from_walk(&[0, -1, -2]).unwrap();
        assert_eq!(s.completed, vec![1, 1]);
        assert_eq!(component_sizes_from_walk(&[0, 0, 0, -1]).unwrap().completed, vec![3]);
        let open = component_sizes_from_walk(&[0, -1, 0, 1]).unwrap();
        assert_eq!(open.completed, vec![1]);
        assert_eq!(open.partial, Some(2));
        assert_eq!(
            component_sizes_from_walk(&[0, -2]),
            Err(Error::MalformedWalk { index: 1, increment: -2 })
        );
        assert_eq!(component_sizes_from_walk(&[1, 0]), Err(Error::WalkNotAnchored));
    }

    #[test]
    fn rescale_examples() {
        let n = 22_500;
        assert_eq!(walk_index(n, 0.0).unwrap(), 1);
        // n^{2/3} = 150^{4/3} = 796.99...
        assert_eq!(walk_index(n, 1.0).unwrap(), 797);
        let z: Vec<i64> = (0..800).map(|k| -k).collect();
        let out = rescale_walk_values(&z, n, &[0.0, 1.0]).unwrap();
        assert_eq!(out[0], (0.0, 0.0));
        assert!((out[1].1 - (-796.0 / 22_500f64.cbrt())).abs() < 1e-12);
        assert!(matches!(rescale_walk_values(&z, n, &[2.0]), Err(Error::OutOfBudget { .. })));
        assert!(rescale_walk_values(&z, n, &[-0.5]).is_err());
    }

    #[test]
    fn tree_distance_cases() {
        // 0 - 1, 0 - 2, 1 - 3 ; 4 isolated
        let mut s = stub(5, &[(0, 1), (0, 2), (1, 3)]);
        let mut rng = stream(3, Purpose::Generic, 0);
        let trace = explore(&mut s, &mut rng, 5).unwrap();
        let step_of = |v: u32| trace.processed.iter().position(|&p| p == v).unwrap() + 1;
        let d = |a: u32, b: u32| tree_distance(&trace, step_of(a), step_of(b)).unwrap();
        for v in 0..5 {
            assert_eq!(d(v, v), Some(0));
        }
        let root = trace.processed[trace.root_steps[0] - 1];
        if root == 0 {
            assert_eq!(d(0, 1), Some(1));
            assert_eq!(d(1, 2), Some(2));
            assert_eq!(d(3, 2), Some(3));
        }
        assert_eq!(d(4, 0), None);
        assert!(tree_distance(&trace, 0, 1).is_err());
        assert!(tree_distance(&trace, 1, 6).is_err());
    }

    #[test]
    fn budget_and_freshness_checked() {
        let params = GraphParams::critical(5).unwrap();
        let mut oracle = RevealOracle::new(params);
        let mut rng = stream(4, Purpose::Generic, 0);
        assert_eq!(
            explore(&mut oracle, &mut rng, 26).unwrap_err(),
            Error::BudgetTooLarge { budget: 26, vertices: 25 }
        );
        explore(&mut oracle, &mut rng, 3).unwrap();
        assert_eq!(explore(&mut oracle, &mut rng, 3).unwrap_err(), Error::SourceNotFresh);
    }

    #[test]
    fn structural_invariants_on_random_runs() {
        for (side, c) in [(12u32, 0.36), (12, 1.5), (20, 0.36), (9, 3.0)] {
            let params = GraphParams::new(side, c, 1.0).unwrap();
            let n = params.vertex_count();
            for run in 0..50 {
                let mut oracle = RevealOracle::new(params);
                let mut rng = stream(side as u64 * 1000 + run, Purpose::Exploration, 0);
                let trace = explore(&mut oracle, &mut rng, n).unwrap();
                assert!(trace.is_complete());
                let mut total = 0i64;
                for k in 1..=trace.steps() {
                    // walk identity
                    assert_eq!(trace.z[k - 1], -(k as i64 - 1) + total);
                    total += trace.revealed[k - 1] as i64;
                    // |A_k| = z(k+1) + 1 relative to the running minimum
                    let min_before = trace.z[..k].iter().copied().min().unwrap();
                    assert_eq!(trace.active[k - 1] as i64, trace.z[k] - min_before + 1);
                    // I_k = revealed sets plus roots
                    let roots = trace.root_steps.iter().filter(|&&s| s <= k).count() as i64;
                    assert_eq!(trace.used[k - 1] as i64, total + roots);
                    assert!(trace.used[k - 1] as usize >= k);
                }
                // generation discipline inside a component
                let mut bounds = trace.root_steps.clone();
                bounds.push(trace.steps() + 1);
                for w in bounds.windows(2) {
                    let depths: Vec<u32> = (w[0]..w[1]).map(|k| trace.depth[trace.processed[k - 1] as usize]).collect();
                    assert!(depths.windows(2).all(|d| d[0] <= d[1]), "{depths:?}");
                }
                let sizes = component_sizes(&trace).unwrap();
                assert_eq!(sizes.completed.iter().sum::<u64>(), n as u64);
                assert_eq!(sizes.partial, None);
            }
        }
    }
}
