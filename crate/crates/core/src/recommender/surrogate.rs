//! Gaussian-process regression with a fixed squared-exponential kernel.

use super::encoding::EncodedPoint;
use super::{Observation, SearchError};
use crate::recommender::encoding::encode_unchecked;

pub const LENGTH_SCALE: f64 = 0.5;
pub const SIGNAL_STD: f64 = 1.0;
pub const NOISE_VARIANCE: f64 = 1e-6;
/// Diagonal jitter is escalated tenfold from [`NOISE_VARIANCE`] up to this.
pub const MAX_JITTER: f64 = 1e-2;
/// Targets spread less than this are not rescaled.
pub const MIN_TARGET_SCALE: f64 = 1e-12;

pub fn kernel(a: &EncodedPoint, b: &EncodedPoint) -> f64 {
    SIGNAL_STD * SIGNAL_STD * (-a.squared_distance(b) / (2.0 * LENGTH_SCALE * LENGTH_SCALE)).exp()
}

/// Lower Cholesky factor of a row-major `n x n` SPD matrix, or `None`.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` in place.
fn forward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L^T x = y` in place.
fn backward_sub(l: &[f64], n: usize, y: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
}

/// GP posterior over encoded configurations.
///
/// Targets are standardized to zero mean and unit variance before fitting,
/// so the fixed kernel scale applies in those units and the prior mean is
/// the average observed target.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    points: Vec<EncodedPoint>,
    prior_mean: f64,
    target_scale: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GaussianProcess {
    pub fn fit_points(points: &[EncodedPoint], targets: &[f64]) -> Result<Self, SearchError> {
        let n = points.len();
        if n == 0 || n != targets.len() {
            return Err(SearchError::SurrogateFailure(format!("{n} points for {} targets", targets.len())));
        }
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel(&points[i], &points[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        let mut jitter = NOISE_VARIANCE;
        let chol = loop {
            let mut a = gram.clone();
            for i in 0..n {
                a[i * n + i] += jitter;
            }
            if let Some(l) = cholesky(&a, n) {
                break l;
            }
            jitter *= 10.0;
            if jitter > MAX_JITTER * (1.0 + 1e-9) {
                return Err(SearchError::SurrogateFailure("kernel matrix singular even with maximal jitter".into()));
            }
        };
        let prior_mean = targets.iter().sum::<f64>() / n as f64;
        let spread = (targets.iter().map(|y| (y - prior_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let target_scale = if spread > MIN_TARGET_SCALE { spread } else { 1.0 };
        let mut alpha: Vec<f64> = targets.iter().map(|y| (y - prior_mean) / target_scale).collect();
        forward_sub(&chol, n, &mut alpha);
        backward_sub(&chol, n, &mut alpha);
        Ok(Self { points: points.to_vec(), prior_mean, target_scale, chol, alpha, jitter })
    }

    /// Fits to observations; failed runs count as objective 0.
    pub fn fit(observations: &[Observation]) -> Result<Self, SearchError> {
        if observations.iter().all(|o| o.failed) {
            return Err(SearchError::SurrogateFailure("no successful observation to fit".into()));
        }
        let points: Vec<EncodedPoint> = observations.iter().map(|o| encode_unchecked(&o.config)).collect();
        let targets: Vec<f64> = observations.iter().map(Observation::value).collect();
        Self::fit_points(&points, &targets)
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Standard deviation the targets were divided by.
    pub fn target_scale(&self) -> f64 {
        self.target_scale
    }

    /// Diagonal term actually used, `>= NOISE_VARIANCE`.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &EncodedPoint) -> (f64, f64) {
        let n = self.points.len();
        let mut k: Vec<f64> = self.points.iter().map(|p| kernel(p, x)).collect();
        let standardized: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        forward_sub(&self.chol, n, &mut k);
        let reduction: f64 = k.iter().map(|v| v * v).sum();
        let var = (kernel(x, x) - reduction).max(0.0);
        (self.prior_mean + self.target_scale * standardized, self.target_scale * self.target_scale * var)
    }
}
