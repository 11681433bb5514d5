//! Small statistics toolkit: binomial proportions, weighted least squares,
//! empirical quantiles, bootstrap resampling and sample correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Resamples used for bootstrap intervals.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Self { successes, trials }
    }

    pub fn record(&mut self, hit: bool) {
        self.trials += 1;
        self.successes += u64::from(hit);
    }

    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// Wald standard error `sqrt(p (1 - p) / n)`.
    pub fn se(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wald interval with continuity correction, clamped to `[0, 1]`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let p = self.estimate();
        let half = z * self.se() + 0.5 / self.trials as f64;
        ((p - half).max(0.0), (p + half).min(1.0))
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

/// Standard error of the sample mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q));
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// `y - (intercept + slope * x)` per point.
    pub residuals: Vec<f64>,
}

/// Weighted least squares `y ~ a + b x` with weights taken as inverse variances.
/// Standard errors come from the weights alone, not rescaled by the residuals.
pub fn weighted_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(Error::Precondition("fit inputs differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Precondition(format!("a line needs two points, got {}", xs.len())));
    }
    if ws.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Precondition("fit weights must be positive and finite".into()));
    }
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Precondition("fit abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(LinearFit {
        slope,
        intercept,
        slope_se: (1.0 / sxx).sqrt(),
        intercept_se: (1.0 / sw + xbar * xbar / sxx).sqrt(),
        residuals,
    })
}

/// Ordinary least squares; standard errors from the residual variance.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let mut fit = weighted_fit(xs, ys, &vec![1.0; xs.len()])?;
    if xs.len() > 2 {
        let s2 = fit.residuals.iter().map(|r| r * r).sum::<f64>() / (xs.len() - 2) as f64;
        fit.slope_se *= s2.sqrt();
        fit.intercept_se *= s2.sqrt();
    }
    Ok(fit)
}

/// Deterministic resampling stream for bootstrap intervals.
pub struct Bootstrap {
    rng: ChaCha8Rng,
}

impl Bootstrap {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A resample with replacement of `data`.
    pub fn resample<T: Copy>(&mut self, data: &[T]) -> Vec<T> {
        (0..data.len()).map(|_| data[self.rng.random_range(0..data.len())]).collect()
    }

    /// Percentile interval `[q_lo, q_hi]` of finite replicate statistics.
    pub fn percentile_interval(replicates: &mut Vec<f64>, level: f64) -> (f64, f64) {
        replicates.retain(|x| x.is_finite());
        replicates.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        (quantile_sorted(replicates, tail), quantile_sorted(replicates, 1.0 - tail))
    }
}

/// Pearson correlation of paired samples with its standard error
/// `sqrt((1 - r^2) / (n - 2))`.
pub fn correlation(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pairs.len();
    if n < 3 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    Some((r, ((1.0 - r * r) / (n - 2) as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_basics() {
        let mut p = Proportion::default();
        for i in 0..10 {
            p.record(i < 3);
        }
        assert_eq!(p.estimate(), 0.3);
        assert!((p.se() - (0.21f64 / 10.0).sqrt()).abs() < 1e-15);
        let q = Proportion::new(30, 100);
        let (lo, hi) = q.interval(Z95);
        assert!((hi - lo - 2.0 * (Z95 * q.se() + 0.005)).abs() < 1e-12);
        let (lo, hi) = Proportion::new(0, 10).interval(Z95);
        assert_eq!((lo, hi), (0.0, 0.05));
    }

    #[test]
    fn z95_matches_the_normal_quantile() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!((n.inverse_cdf(0.975) - Z95).abs() < 1e-9);
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
        assert!(quantile_sorted(&[], 0.5).is_nan());
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
        let fit = weighted_fit(&xs, &ys, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        let fit = ols_fit(&xs, &ys).unwrap();
        assert!(fit.slope_se < 1e-6);
    }

    #[test]
    fn ols_matches_hand_computation() {
        // x = 0,1,2 ; y = 0,2,1: slope 1/2, intercept 1/2, residuals -1/2, 1, -1/2.
        let fit = ols_fit(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        // s^2 = 1.5 / 1, Sxx = 2 -> se = sqrt(0.75).
        assert!((fit.slope_se - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(weighted_fit(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(weighted_fit(&[1.0, 1.0], &[1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(weighted_fit(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let data = [1, 2, 3, 4, 5];
        let a = Bootstrap::new(7).resample(&data);
        let b = Bootstrap::new(7).resample(&data);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| data.contains(x)));
        let mut reps = vec![3.0, f64::NAN, 1.0, 2.0];
        assert_eq!(Bootstrap::percentile_interval(&mut reps, 0.5), (1.5, 2.5));
    }

    #[test]
    fn correlation_examples() {
        let (r, _) = correlation(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let (r, se) = correlation(&[(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(r, 0.0);
        assert!((se - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(correlation(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_none());
    }
}
