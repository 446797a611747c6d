//! Small accumulators with cluster-robust standard errors.
//!
//! Every accumulator is fed one value (or one pair) per independent path and
//! merged in a fixed order, so results do not depend on the thread schedule.

use serde::{Deserialize, Serialize};

/// Mean of per-path values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAcc {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Ratio `Σx / Σy` of per-path totals with a delta-method standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioAcc {
    pub count: u64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl RatioAcc {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn merge(&mut self, o: &Self) {
        self.count += o.count;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
    }

    pub fn ratio(&self) -> f64 {
        if self.sy == 0.0 {
            return f64::NAN;
        }
        self.sx / self.sy
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 || self.sy == 0.0 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let r = self.ratio();
        let ybar = self.sy / n;
        // Residuals x_i − r·y_i, centred by construction.
        let ss = self.sxx - 2.0 * r * self.sxy + r * r * self.syy;
        (ss.max(0.0) / (n - 1.0)).sqrt() / (ybar * n.sqrt())
    }

    /// Denominator total (e.g. the number of conditioning events).
    pub fn denominator(&self) -> f64 {
        self.sy
    }
}

pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic of an uncensored sample.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == x {
            k += 1;
        }
        let f = cdf(x);
        d = d.max((k as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = k;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;

    #[test]
    fn mean_and_stderr() {
        let mut a = MeanAcc::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            a.push(x);
        }
        assert_eq!(a.mean(), 2.5);
        assert!((a.variance() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_stderr_matches_binomial_when_y_is_one() {
        let mut r = RatioAcc::default();
        let mut rng = TrialRng::new(2, 0);
        for _ in 0..10_000 {
            r.push((rng.next_f64() < 0.3) as u8 as f64, 1.0);
        }
        let p = r.ratio();
        let b = binomial_stderr(p, 10_000);
        assert!((r.stderr() / b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ks_of_uniform_draws() {
        let mut rng = TrialRng::new(9, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.next_f64()).collect();
        assert!(ks_statistic(&xs, |x| x) < 0.006);
        assert_eq!(ks_statistic(&[0.5], |x| x), 0.5);
    }
}
