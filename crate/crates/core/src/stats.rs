//! Monte Carlo estimators with standard errors.
//!
//! Inputs are per-path samples in path order. Sums run sequentially in that
//! order so results do not depend on how the samples were produced.

use serde::Serialize;

/// A Monte Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }

    /// Signed distance to `target` in units of the standard error.
    /// Zero SE gives 0 on exact agreement and ±inf otherwise.
    pub fn z(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if self.se > 0.0 {
            diff / self.se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }

    /// `|value - target| <= k * se + abs_slack`.
    pub fn within(&self, target: f64, k: f64, abs_slack: f64) -> bool {
        (self.value - target).abs() <= k * self.se + abs_slack
    }
}

pub fn mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate {
            value: f64::NAN,
            se: f64::NAN,
        };
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { value: m, se: 0.0 };
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let var = ss / (n - 1) as f64;
    Estimate {
        value: m,
        se: (var / n as f64).sqrt(),
    }
}

/// Unbiased sample variance; the SE uses the fourth central moment,
/// `Var(s²) ≈ (m4 - s⁴) / n`.
pub fn variance(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n < 2 {
        return Estimate {
            value: f64::NAN,
            se: f64::NAN,
        };
    }
    let nf = n as f64;
    let m = xs.iter().sum::<f64>() / nf;
    let (mut s2, mut s4) = (0.0, 0.0);
    for x in xs {
        let d2 = (x - m) * (x - m);
        s2 += d2;
        s4 += d2 * d2;
    }
    let var = s2 / (nf - 1.0);
    let m2 = s2 / nf;
    let m4 = s4 / nf;
    Estimate {
        value: var,
        se: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
    }
}

/// Sample covariance with SE from the spread of centered products.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Estimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Estimate {
            value: f64::NAN,
            se: f64::NAN,
        };
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let est = mean(&prods);
    Estimate {
        value: est.value * nf / (nf - 1.0),
        se: est.se,
    }
}

/// Least-squares slope of `ln y` against `ln x`. Pairs with a non-positive
/// coordinate are skipped; `None` when fewer than two usable pairs remain.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance_of_small_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let m = mean(&xs);
        assert_eq!(m.value, 2.5);
        // s² = 5/3, se = sqrt(5/3 / 4)
        assert!((m.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!((variance(&xs).value - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_identical_samples_is_variance() {
        let xs = [0.5, -1.0, 2.0, 3.5, 0.0];
        assert!((covariance(&xs, &xs).value - variance(&xs).value).abs() < 1e-14);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&xs, &[0.0; 4]), None);
    }

    #[test]
    fn z_with_zero_se() {
        assert_eq!(Estimate::exact(1.0).z(1.0), 0.0);
        assert_eq!(Estimate::exact(1.0).z(0.0), f64::INFINITY);
    }
}
