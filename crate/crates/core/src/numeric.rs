//! Small numeric helpers shared by the analytic sums and the statistics.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Two-sided standard normal quantile for the given confidence level
/// (only the levels used by the harness are tabulated).
pub fn normal_quantile(level: f64) -> f64 {
    const TABLE: [(f64, f64); 4] = [(0.90, 1.644_853_6), (0.95, 1.959_964), (0.99, 2.575_829_3), (0.999, 3.290_526_7)];
    TABLE
        .iter()
        .min_by(|a, b| (a.0 - level).abs().total_cmp(&(b.0 - level).abs()))
        .map(|&(_, z)| z)
        .unwrap_or(2.575_829_3)
}

/// Mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, ss / (n - 1) as f64)
}

/// `N^{1/3}`-style powers of the vertex count computed through `cbrt`, so
/// perfect cubes come out exact.
pub fn two_thirds_power(n: usize) -> f64 {
    let t = (n as f64).cbrt();
    t * t
}
