//! Estimators for the i.i.d. pairs model `Y_i = X_i + σD_i` with the
//! pairing unobserved: a Fourier-free deconvolution CDF estimator,
//! nearest-parent matching, Brown's distance-inversion estimator and the
//! counting estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_sigma, index_range};
use crate::kernels::Kernel;
use crate::model::PointClouds;

/// Nearest parent of every offspring point. Indices refer to the sorted
/// parent array of the clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestMatch {
    pub matched_parent_index: Vec<usize>,
    /// `E_i = |Y_i - X_(i)| / σ`.
    pub distance_scaled: Vec<f64>,
}

pub fn nearest_match(clouds: &PointClouds, sigma: f64) -> Result<NearestMatch> {
    check_sigma(sigma)?;
    let xs = clouds.parents();
    if xs.is_empty() {
        return Err(Error::EmptyParents);
    }
    let ys = clouds.offspring();
    let mut matched = Vec::with_capacity(ys.len());
    let mut dist = Vec::with_capacity(ys.len());
    for &y in ys {
        let right = xs.partition_point(|&x| x < y);
        let mut best = if right == xs.len() { right - 1 } else { right };
        if right > 0 && (y - xs[right - 1]).abs() <= (xs[best] - y).abs() {
            best = right - 1;
        }
        while best > 0 && xs[best - 1] == xs[best] {
            best -= 1;
        }
        matched.push(best);
        dist.push((y - xs[best]).abs() / sigma);
    }
    Ok(NearestMatch {
        matched_parent_index: matched,
        distance_scaled: dist,
    })
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut sample: Vec<f64>) -> Self {
        sample.retain(|x| !x.is_nan());
        sample.sort_by(f64::total_cmp);
        Self { sorted: sample }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sample(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `≤ z`; 0 for an empty sample.
    pub fn eval(&self, z: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&x| x <= z) as f64 / self.sorted.len() as f64
    }
}

/// `F̃(z0) = (1/n) Σ_i Σ_{ℓ≥0} K_{σh}(σz0 - ℓ - Y_i)` with `n = |Y|`.
pub fn dutch_cdf(clouds: &PointClouds, sigma: f64, k: Kernel, z0: f64, h: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let r = match k.support_radius() {
        Some(r) if r <= 0.5 => r,
        _ => {
            return Err(Error::KernelSupport {
                kernel: k.name(),
                reason: "support must lie in [-1/2, 1/2]".into(),
            })
        }
    };
    let ys = clouds.offspring();
    if ys.is_empty() {
        return Err(Error::EmptyOffspring);
    }
    let bw = sigma * h;
    let t = sigma * z0;
    let pad = 1e-9 * (1.0 + bw);
    let lo = (t - ys[ys.len() - 1] - bw * r - pad).ceil().max(0.0);
    let hi = (t - ys[0] + bw * r + pad).floor();
    let mut total = 0.0;
    if hi >= lo {
        for l in (lo as i64)..=(hi as i64) {
            let l = l as f64;
            for i in index_range(ys, t - l - bw * r - pad, t - l + bw * r + pad) {
                total += k.scaled(bw, t - l - ys[i]);
            }
        }
    }
    Ok(total / ys.len() as f64)
}

/// Nearest-parent density estimator `(1/n) Σ_i K_h(z0 - (Y_i - X_(i))/σ)`.
pub fn nearest_parent_density(
    clouds: &PointClouds,
    sigma: f64,
    k: Kernel,
    z0: f64,
    h: f64,
) -> Result<f64> {
    let m = nearest_match(clouds, sigma)?;
    let ys = clouds.offspring();
    if ys.is_empty() {
        return Err(Error::EmptyOffspring);
    }
    let xs = clouds.parents();
    let total: f64 = ys
        .iter()
        .zip(&m.matched_parent_index)
        .map(|(&y, &i)| k.scaled(h, z0 - (y - xs[i]) / sigma))
        .sum();
    Ok(total / ys.len() as f64)
}

/// Brown's estimator `1 - (1 - 2σz0)^{-n+1} (1 - H_n(z0))` from the
/// empirical CDF of scaled nearest-parent distances.
pub fn brown_cdf_from_distances(
    h_n: &EmpiricalCdf,
    sigma: f64,
    n_obs: usize,
    z0: f64,
) -> Result<f64> {
    check_sigma(sigma)?;
    let upper = 1.0 / (2.0 * sigma);
    if !(z0 >= 0.0 && z0 < upper) {
        return Err(Error::Domain { z0, upper });
    }
    let tail = 1.0 - h_n.eval(z0);
    if tail == 0.0 {
        return Ok(1.0);
    }
    let factor = (1.0 - 2.0 * sigma * z0).powf(1.0 - n_obs as f64);
    Ok(1.0 - factor * tail)
}

pub fn brown_cdf(clouds: &PointClouds, sigma: f64, n_obs: usize, z0: f64) -> Result<f64> {
    let m = nearest_match(clouds, sigma)?;
    brown_cdf_from_distances(&EmpiricalCdf::new(m.distance_scaled), sigma, n_obs, z0)
}

fn require_pairs(clouds: &PointClouds) -> Result<usize> {
    let (p, o) = (clouds.parents().len(), clouds.offspring().len());
    if p != o {
        return Err(Error::SizeMismatch {
            parents: p,
            offspring: o,
        });
    }
    if p == 0 {
        return Err(Error::EmptyOffspring);
    }
    Ok(p)
}

/// Counting estimator `(1/n) Σ_{i,j} 1{|X_j - Y_i| ≤ σz0} - 2σ(n-1)z0`.
pub fn counting_cdf(clouds: &PointClouds, sigma: f64, z0: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let n = require_pairs(clouds)?;
    let r = sigma * z0;
    let xs = clouds.parents();
    let mut count = 0usize;
    for &y in clouds.offspring() {
        // The predicate |x - y| ≤ r is monotone on each side of y, so the
        // window boundaries reproduce the double loop exactly.
        let lo = xs.partition_point(|&x| x < y && (x - y).abs() > r);
        let hi = xs.partition_point(|&x| x <= y || (x - y).abs() <= r);
        count += hi.saturating_sub(lo);
    }
    Ok(count as f64 / n as f64 - 2.0 * sigma * (n as f64 - 1.0) * z0)
}

/// Literal double loop for [`counting_cdf`].
pub fn counting_cdf_naive(clouds: &PointClouds, sigma: f64, z0: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let n = require_pairs(clouds)?;
    let r = sigma * z0;
    let mut count = 0usize;
    for &y in clouds.offspring() {
        for &x in clouds.parents() {
            if (x - y).abs() <= r {
                count += 1;
            }
        }
    }
    Ok(count as f64 / n as f64 - 2.0 * sigma * (n as f64 - 1.0) * z0)
}

/// Counting density estimator
/// `(1/n) Σ_{i,j} K_h(z0 - |X_j - Y_i|/σ) - 2σ(n-1)` with the rectangular kernel.
pub fn counting_density(clouds: &PointClouds, sigma: f64, h: f64, z0: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let n = require_pairs(clouds)?;
    let k = Kernel::Rectangular;
    let xs = clouds.parents();
    let reach = sigma * (z0.abs() + h / 2.0);
    let pad = 1e-12 + 1e-9 * reach;
    let mut total = 0.0;
    for &y in clouds.offspring() {
        for i in index_range(xs, y - reach - pad, y + reach + pad) {
            total += k.scaled(h, z0 - (xs[i] - y).abs() / sigma);
        }
    }
    Ok(total / n as f64 - 2.0 * sigma * (n as f64 - 1.0))
}
