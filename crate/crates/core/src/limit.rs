//! Reference sampler for the scaling limit: `W~(s) = W(s) - s^2 / 2`, its
//! reflection `B = W~ - cummin W~`, and the ordered excursion lengths of `B`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

pub const DEFAULT_DT: f64 = 1e-4;

/// `W~` and `B` on the grid `s_i = i dt`, `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPath {
    pub horizon: f64,
    pub dt: f64,
    pub drifted: Vec<f64>,
    pub reflected: Vec<f64>,
}

impl LimitPath {
    /// Builds a path from given `W~` values (first value must be 0).
    pub fn from_drifted(horizon: f64, dt: f64, drifted: Vec<f64>) -> Result<Self> {
        check_grid(horizon, dt)?;
        if drifted.first() != Some(&0.0) {
            return Err(Error::WalkNotAnchored);
        }
        let mut reflected = Vec::with_capacity(drifted.len());
        let mut min = f64::INFINITY;
        for &w in &drifted {
            min = min.min(w);
            reflected.push(w - min);
        }
        Ok(LimitPath { horizon, dt, drifted, reflected })
    }

    pub fn steps(&self) -> usize {
        self.drifted.len() - 1
    }
}

fn check_grid(horizon: f64, dt: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon T = {horizon} must be positive")));
    }
    if !(dt > 0.0) || dt > horizon {
        return Err(Error::InvalidArgument(format!("step dt = {dt} must lie in (0, T]")));
    }
    Ok(())
}

fn grid_steps(horizon: f64, dt: f64) -> usize {
    (horizon / dt).round() as usize
}

pub fn sample_drifted_bm<R: Rng + ?Sized>(horizon: f64, dt: f64, rng: &mut R) -> Result<LimitPath> {
    check_grid(horizon, dt)?;
    let steps = grid_steps(horizon, dt);
    let sd = dt.sqrt();
    let mut drifted = Vec::with_capacity(steps + 1);
    drifted.push(0.0);
    let mut w = 0.0;
    for i in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        let s = i as f64 * dt;
        drifted.push(w - 0.5 * s * s);
    }
    LimitPath::from_drifted(horizon, dt, drifted)
}

/// Excursion lengths as grid-step counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionSample {
    /// Completed excursions, longest first.
    pub completed: Vec<u64>,
    /// The open segment after the last record, if it has positive length.
    pub truncated: Option<u64>,
}

impl ExcursionSample {
    pub fn lengths(&self, dt: f64) -> Vec<f64> {
        self.completed.iter().map(|&k| k as f64 * dt).collect()
    }

    /// All lengths including the open segment, longest first.
    pub fn with_truncated(&self) -> Vec<u64> {
        let mut all = self.completed.clone();
        if let Some(t) = self.truncated {
            let at = all.partition_point(|&x| x >= t);
            all.insert(at, t);
        }
        all
    }
}

/// Records are the grid points where `W~` reaches a strict new minimum
/// (including `s = 0`); excursions are the gaps between records.
pub fn excursion_lengths(path: &LimitPath) -> ExcursionSample {
    let mut completed = Vec::new();
    let mut min = path.drifted[0];
    let mut last = 0usize;
    for (i, &w) in path.drifted.iter().enumerate().skip(1) {
        if w < min {
            min = w;
            completed.push((i - last) as u64);
            last = i;
        }
    }
    let tail = path.steps() - last;
    completed.sort_unstable_by(|a, b| b.cmp(a));
    ExcursionSample { completed, truncated: (tail > 0).then_some(tail as u64) }
}

/// Top-`j` lengths of one path without storing it.
fn streamed_top<R: Rng + ?Sized>(steps: usize, dt: f64, top: usize, include_truncated: bool, rng: &mut R) -> (Vec<u64>, bool) {
    let sd = dt.sqrt();
    let mut best: Vec<u64> = Vec::with_capacity(top + 1);
    let push = |len: u64, best: &mut Vec<u64>| {
        if best.len() < top || best.last().is_some_and(|&m| len > m) {
            let at = best.partition_point(|&x| x >= len);
            best.insert(at, len);
            best.truncate(top);
        }
    };
    let mut w = 0.0f64;
    let mut min = 0.0f64;
    let mut last = 0usize;
    for i in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        let s = i as f64 * dt;
        let v = w - 0.5 * s * s;
        if v < min {
            min = v;
            push((i - last) as u64, &mut best);
            last = i;
        }
    }
    let truncated = steps > last;
    if truncated && include_truncated {
        push((steps - last) as u64, &mut best);
    }
    (best, truncated)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub horizon: f64,
    pub dt: f64,
    pub top: usize,
    pub include_truncated: bool,
    /// Row `m` holds `(gamma_1, ..., gamma_j)` of path `m`; missing entries are 0.
    pub rows: Vec<Vec<f64>>,
    /// Whether path `m` ended inside an excursion.
    pub truncated: Vec<bool>,
}

impl LimitSample {
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row[i]).collect()
    }

    /// CSV with columns `gamma1..gammaj,truncated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let names: Vec<String> = (1..=self.top).map(|i| format!("gamma{i}")).collect();
        out.push_str(&names.join(","));
        out.push_str(",truncated\n");
        for (row, &t) in self.rows.iter().zip(&self.truncated) {
            for x in row {
                out.push_str(&format!("{x},"));
            }
            out.push_str(if t { "1\n" } else { "0\n" });
        }
        out
    }
}

/// `paths` independent draws of the top-`top` excursion lengths on
/// `[0, horizon]`. Path `m` uses stream `(seed, LimitPath, m)`.
pub fn sample_limit_components(horizon: f64, dt: f64, paths: usize, top: usize, seed: u64, include_truncated: bool) -> Result<LimitSample> {
    check_grid(horizon, dt)?;
    if top == 0 {
        return Err(Error::InvalidArgument("top count j must be at least 1".into()));
    }
    let steps = grid_steps(horizon, dt);
    let draws: Vec<(Vec<u64>, bool)> = (0..paths)
        .into_par_iter()
        .map(|m| {
            let mut rng = stream(seed, Purpose::LimitPath, m as u64);
            streamed_top(steps, dt, top, include_truncated, &mut rng)
        })
        .collect();
    let mut rows = Vec::with_capacity(paths);
    let mut truncated = Vec::with_capacity(paths);
    for (best, t) in draws {
        let mut row: Vec<f64> = best.iter().map(|&k| k as f64 * dt).collect();
        row.resize(top, 0.0);
        rows.push(row);
        truncated.push(t);
    }
    Ok(LimitSample { horizon, dt, top, include_truncated, rows, truncated })
}
