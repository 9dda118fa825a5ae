//! Ensemble reducers and the small amount of hypothesis-testing machinery
//! the checks need.
//!
//! All sums go through [`pairwise_sum`], whose tree shape depends only on the
//! slice length. Combined with per-path random streams this makes every
//! ensemble statistic independent of how many worker threads produced the
//! samples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

const PAIRWISE_LEAF: usize = 32;

/// Sum with a fixed binary-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn pairwise_sum_complex(zs: &[Complex64]) -> Complex64 {
    if zs.len() <= PAIRWISE_LEAF {
        zs.iter().sum()
    } else {
        let mid = zs.len() / 2;
        pairwise_sum_complex(&zs[..mid]) + pairwise_sum_complex(&zs[mid..])
    }
}

/// Sample mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN, std_error: f64::NAN };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let variance = if n > 1 {
            let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            pairwise_sum(&sq) / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, variance, std_error: (variance / n as f64).sqrt() }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Moments of a complex sample. `variance` is `E|z - mean|^2`, so the
/// standard error bounds the modulus of the mean's error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMoments {
    pub n: usize,
    pub mean: Complex64,
    pub variance: f64,
    pub std_error: f64,
}

impl ComplexMoments {
    pub fn of(zs: &[Complex64]) -> Self {
        let n = zs.len();
        if n == 0 {
            let nan = f64::NAN;
            return Self { n, mean: Complex64::new(nan, nan), variance: nan, std_error: nan };
        }
        let mean = pairwise_sum_complex(zs) / n as f64;
        let variance = if n > 1 {
            let sq: Vec<f64> = zs.iter().map(|z| (z - mean).norm_sqr()).collect();
            pairwise_sum(&sq) / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, variance, std_error: (variance / n as f64).sqrt() }
    }
}

/// Two-sided 99% acceptance interval for the sample variance of `n` normal
/// draws whose true variance is `sigma2`.
pub fn chi_squared_variance_interval(sigma2: f64, n: usize) -> (f64, f64) {
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).expect("n > 1");
    (sigma2 * chi.inverse_cdf(0.005) / dof, sigma2 * chi.inverse_cdf(0.995) / dof)
}

/// One-sample Kolmogorov–Smirnov statistic against `N(mean, sd^2)`.
pub fn ks_statistic_normal(samples: &[f64], mean: f64, sd: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let dist = Normal::new(mean, sd).expect("sd > 0");
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = Moments::of(xs).mean;
    let my = Moments::of(ys).mean;
    let cov: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let vx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let vy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    pairwise_sum(&cov) / (pairwise_sum(&vx) * pairwise_sum(&vy)).sqrt()
}
