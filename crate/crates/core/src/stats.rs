//! Sample statistics with standard errors, and the goodness-of-fit tests used
//! by the simulation checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::report::decimal_f64;

/// An estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(serialize_with = "decimal_f64")]
    pub value: f64,
    #[serde(serialize_with = "decimal_f64")]
    pub se: f64,
}

impl Estimate {
    /// `(value - target) / se`; zero when both the error and the se vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if self.se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY * diff.signum()
            }
        } else {
            diff / self.se
        }
    }

    pub fn within(&self, target: f64, bands: f64) -> bool {
        self.z_score(target).abs() <= bands
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    Estimate {
        value: mean(xs),
        se: (variance(xs) / xs.len() as f64).sqrt(),
    }
}

/// Sample variance with the large-sample standard error `sqrt((m₄ - s⁴)/N)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Estimate {
        value: s2,
        se: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
    }
}

/// `Σ a_t / Σ b_t` with the delta-method standard error.
pub fn ratio_estimate(a: &[f64], b: &[f64]) -> Estimate {
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let r = ma / mb;
    let resid: f64 = a.iter().zip(b).map(|(x, y)| (x - r * y).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: r,
        se: (resid / n).sqrt() / mb.abs(),
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F₁ - F₂|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    let (n, m) = (x.len() as f64, y.len() as f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value `c(α) sqrt((n+m)/(nm))`, `c(α) = sqrt(-ln(α/2)/2)`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson chi-square statistic of observed counts against expected counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

/// Upper `α` quantile of chi-square with `k` degrees of freedom.
pub fn chi_square_critical(k: usize, alpha: f64) -> f64 {
    ChiSquared::new(k as f64).map_or(f64::NAN, |d| d.inverse_cdf(1.0 - alpha))
}

/// Upper-tail standard normal quantile.
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        let e = mean_estimate(&xs);
        assert!((e.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(e.within(2.5, 0.0));
    }

    #[test]
    fn ratio_of_proportional_samples_is_exact() {
        let b = [1.0, 2.0, 5.0];
        let a: Vec<f64> = b.iter().map(|x| 3.0 * x).collect();
        let r = ratio_estimate(&a, &b);
        assert!((r.value - 3.0).abs() < 1e-15);
        assert!(r.se < 1e-12);
    }

    #[test]
    fn ks_values() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_critical(0.05, 100, 100) - 1.358 * 0.02f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn quantiles() {
        assert!((normal_upper_quantile(0.025) - 1.959_964).abs() < 1e-5);
        // chi-square with 7 df at 0.001 is 24.322
        assert!((chi_square_critical(7, 0.001) - 24.322).abs() < 1e-3);
    }
}
