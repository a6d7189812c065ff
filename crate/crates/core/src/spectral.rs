//! Spectral deconvolution for parent laws with a nonvanishing
//! characteristic function.
//!
//! The estimator averages the weight function
//! `w(x) = (1/2π) ∫_{-1/h1}^{1/h1} e^{-iux} FK(h1 u) / φ_p(u/σ) du`
//! over the rescaled offspring positions. The integrand is tabulated once
//! on trapezoid nodes ([`SpectralWeights`]) and then evaluated at every
//! `z0 - Y_j/σ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{Estimate, Flags};
use crate::kernels::Kernel;
use crate::model::{ModelParams, PointClouds};
use crate::simulation::ParentLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Illposedness {
    /// `|φ_p(u)| ≍ (1 + |u|)^{-t}`.
    Mild { t: f64 },
    /// `|φ_p(u)| ≍ exp(-γ|u|^β)`.
    Severe { gamma: f64, beta: f64 },
}

/// Parent distributions on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParentDistribution {
    /// Point mass at 0, `φ ≡ 1`. Diagnostic only.
    Identity,
    /// `1_{[0,1]}`; rejected by [`spectral_deconv`].
    Uniform,
    Laplace {
        location: f64,
        scale: f64,
    },
    Gaussian {
        location: f64,
        sd: f64,
    },
}

impl ParentDistribution {
    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(
                "b",
                format!("Laplace scale must be positive, got {scale}"),
            ));
        }
        Ok(Self::Laplace { location, scale })
    }

    pub fn gaussian(location: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(invalid(
                "sd",
                format!("Gaussian sd must be positive, got {sd}"),
            ));
        }
        Ok(Self::Gaussian { location, sd })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Uniform => "uniform",
            Self::Laplace { .. } => "laplace",
            Self::Gaussian { .. } => "gaussian",
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Self::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Laplace { location, scale } => {
                (-(x - location).abs() / scale).exp() / (2.0 * scale)
            }
            Self::Gaussian { location, sd } => {
                let z = (x - location) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
        }
    }

    /// `φ_p(u) = E e^{iuX}`.
    pub fn char_fn(&self, u: f64) -> Complex64 {
        match *self {
            Self::Identity => Complex64::new(1.0, 0.0),
            Self::Uniform => {
                if u == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    (Complex64::new(0.0, u).exp() - 1.0) / Complex64::new(0.0, u)
                }
            }
            Self::Laplace { location, scale } => {
                Complex64::from_polar(1.0, u * location) / (1.0 + scale * scale * u * u)
            }
            Self::Gaussian { location, sd } => {
                Complex64::from_polar((-0.5 * sd * sd * u * u).exp(), u * location)
            }
        }
    }

    /// `None` for the uniform law, whose characteristic function has zeros.
    pub fn illposedness(&self) -> Option<Illposedness> {
        match *self {
            Self::Identity => Some(Illposedness::Mild { t: 0.0 }),
            Self::Uniform => None,
            Self::Laplace { .. } => Some(Illposedness::Mild { t: 2.0 }),
            Self::Gaussian { sd, .. } => Some(Illposedness::Severe {
                gamma: sd * sd / 2.0,
                beta: 2.0,
            }),
        }
    }

    /// Sampling law for the simulator; `None` for the point mass.
    pub fn law(&self) -> Option<ParentLaw> {
        match *self {
            Self::Identity => None,
            Self::Uniform => Some(ParentLaw::Uniform),
            Self::Laplace { location, scale } => Some(ParentLaw::Laplace { location, scale }),
            Self::Gaussian { location, sd } => Some(ParentLaw::Gaussian { location, sd }),
        }
    }
}

impl fmt::Display for ParentDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity | Self::Uniform => f.write_str(self.name()),
            Self::Laplace { location, scale } => write!(f, "laplace:loc={location},b={scale}"),
            Self::Gaussian { location, sd } => write!(f, "gaussian:loc={location},sd={sd}"),
        }
    }
}

/// Parses `name[:key=value,...]`, e.g. `laplace:b=0.1` or
/// `gaussian:loc=0.5,sd=0.2`. The location defaults to `0.5`.
impl FromStr for ParentDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut loc = 0.5;
        let mut scale = None;
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("`{v}` is not a number")))?;
            match k.trim() {
                "loc" | "location" => loc = v,
                "b" | "scale" | "sd" => scale = Some(v),
                other => return Err(Error::Parse(format!("unknown parent parameter `{other}`"))),
            }
        }
        match name.trim() {
            "identity" => Ok(Self::Identity),
            "uniform" => Ok(Self::Uniform),
            "laplace" => Self::laplace(loc, scale.unwrap_or(0.1)),
            "gaussian" | "normal" => Self::gaussian(loc, scale.unwrap_or(0.1)),
            other => Err(Error::Parse(format!(
                "unknown parent distribution `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub quadrature_nodes: usize,
    pub min_charfn_modulus: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            quadrature_nodes: 4096,
            min_charfn_modulus: 1e-12,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quadrature_nodes < 64 {
            return Err(invalid("quadrature_nodes", "must be at least 64"));
        }
        if self.min_charfn_modulus.is_nan() || self.min_charfn_modulus <= 0.0 {
            return Err(invalid("min_charfn_modulus", "must be positive"));
        }
        Ok(())
    }
}

/// Tabulated `(trapezoid weight) · FK(h1 u_k) / φ_p(u_k/σ) / (2π)` on the
/// nodes `u_k` of `[-1/h1, 1/h1]`.
#[derive(Debug, Clone)]
pub struct SpectralWeights {
    u0: f64,
    du: f64,
    coefficients: Vec<Complex64>,
    abs_mass: f64,
    pub capped: bool,
}

/// Relative size of the imaginary part tolerated in a weight value.
pub const IMAG_TOL: f64 = 1e-8;

impl SpectralWeights {
    pub fn new(
        parent: &ParentDistribution,
        k: Kernel,
        h1: f64,
        sigma: f64,
        cfg: &SpectralConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(h1 > 0.0 && h1.is_finite()) {
            return Err(invalid("h1", format!("must be positive, got {h1}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !k.has_fourier() {
            return Err(Error::MissingFourier { kernel: k.name() });
        }
        let severe = match parent.illposedness() {
            None => return Err(Error::UnsupportedParent(parent.name().to_string())),
            Some(Illposedness::Severe { .. }) => true,
            Some(Illposedness::Mild { .. }) => false,
        };
        let m = cfg.quadrature_nodes;
        let u0 = -1.0 / h1;
        let du = 2.0 / (h1 * (m - 1) as f64);
        let mut capped = false;
        let mut coefficients = Vec::with_capacity(m);
        for idx in 0..m {
            let u = u0 + du * idx as f64;
            let fk = k.fourier(h1 * u).unwrap_or(0.0);
            let trap = if idx == 0 || idx == m - 1 { 0.5 } else { 1.0 };
            let phi = parent.char_fn(u / sigma);
            let modulus = phi.norm();
            let inv = if modulus >= cfg.min_charfn_modulus {
                phi.inv()
            } else if severe {
                capped = true;
                Complex64::from_polar(1.0 / cfg.min_charfn_modulus, -phi.arg())
            } else {
                return Err(Error::IllPosed { u, modulus });
            };
            coefficients.push(inv * (trap * du * fk / (2.0 * PI)));
        }
        let abs_mass = coefficients.iter().map(|c| c.norm()).sum();
        Ok(Self {
            u0,
            du,
            coefficients,
            abs_mass,
            capped,
        })
    }

    /// `w(x)`; errors if the quadrature produces a non-negligible
    /// imaginary part.
    pub fn eval(&self, x: f64) -> Result<f64> {
        // e^{-i u_k x} advanced by a constant rotation.
        let mut phase = Complex64::from_polar(1.0, -self.u0 * x);
        let step = Complex64::from_polar(1.0, -self.du * x);
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.coefficients.iter().enumerate() {
            if idx % 256 == 0 {
                phase = Complex64::from_polar(1.0, -(self.u0 + self.du * idx as f64) * x);
            }
            acc += c * phase;
            phase *= step;
        }
        if acc.im.abs() > IMAG_TOL * acc.re.abs().max(self.abs_mass) {
            return Err(Error::ComplexWeight {
                real: acc.re,
                imag: acc.im,
            });
        }
        Ok(acc.re)
    }
}

/// `(1/(nλμ)) Σ_j w(z0 - Y_j/σ)`.
pub fn spectral_deconv(
    clouds: &PointClouds,
    params: &ModelParams,
    parent: &ParentDistribution,
    k: Kernel,
    z0: f64,
    h1: f64,
    cfg: &SpectralConfig,
) -> Result<Estimate> {
    params.validate()?;
    let weights = SpectralWeights::new(parent, k, h1, params.sigma, cfg)?;
    spectral_deconv_with(clouds, params, &weights, z0)
}

/// [`spectral_deconv`] with precomputed weights, for repeated evaluation.
pub fn spectral_deconv_with(
    clouds: &PointClouds,
    params: &ModelParams,
    weights: &SpectralWeights,
    z0: f64,
) -> Result<Estimate> {
    let mut total = 0.0;
    for &y in clouds.offspring() {
        total += weights.eval(z0 - y / params.sigma)?;
    }
    let mut flags = Flags::for_z0(z0);
    flags.charfn_capped = weights.capped;
    Ok(Estimate {
        value: total / (params.parent_intensity() * params.mu),
        flags,
    })
}

/// Kernel density estimate `(1/(nλμ)) Σ_j K_{h1}(z0 - Y_j/σ)` of the
/// rescaled offspring, evaluated directly in space.
pub fn kde_rescaled(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    h1: f64,
) -> Result<f64> {
    params.validate()?;
    let total: f64 = clouds
        .offspring()
        .iter()
        .map(|&y| k.scaled(h1, z0 - y / params.sigma))
        .sum();
    Ok(total / (params.parent_intensity() * params.mu))
}

/// Rate-optimal `h1` for smoothness `s`: `(nσ^{2t-1})^{-1/(2s+2t+1)}` in the
/// mildly ill-posed case and `σ^{-1} ((1/(4γ)) log n)^{-1/β}` in the
/// severely ill-posed case.
pub fn spectral_bandwidth(
    params: &ModelParams,
    s: f64,
    parent: &ParentDistribution,
) -> Result<f64> {
    params.validate()?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    let n = params.n_f64();
    let sigma = params.sigma;
    match parent.illposedness() {
        None => Err(Error::UnsupportedParent(parent.name().to_string())),
        Some(Illposedness::Mild { t }) => {
            Ok((n * sigma.powf(2.0 * t - 1.0)).powf(-1.0 / (2.0 * s + 2.0 * t + 1.0)))
        }
        Some(Illposedness::Severe { gamma, beta }) => {
            let base = n.ln() / (4.0 * gamma);
            if base <= 0.0 {
                return Err(invalid("n", "the severe-case bandwidth needs n > 1"));
            }
            Ok(base.powf(-1.0 / beta) / sigma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{bandlimited_kernel, paper_kernel};
    use approx::assert_abs_diff_eq;

    #[test]
    fn parsing() {
        let p: ParentDistribution = "laplace:b=0.1".parse().unwrap();
        assert_eq!(
            p,
            ParentDistribution::Laplace {
                location: 0.5,
                scale: 0.1
            }
        );
        let p: ParentDistribution = "gaussian:loc=0,sd=0.2".parse().unwrap();
        assert_eq!(
            p,
            ParentDistribution::Gaussian {
                location: 0.0,
                sd: 0.2
            }
        );
        assert_eq!(p.to_string().parse::<ParentDistribution>().unwrap(), p);
        assert!("cauchy".parse::<ParentDistribution>().is_err());
        assert!("laplace:b=-1".parse::<ParentDistribution>().is_err());
        assert!("laplace:q=1".parse::<ParentDistribution>().is_err());
    }

    #[test]
    fn characteristic_functions() {
        for p in [
            ParentDistribution::laplace(0.3, 0.2).unwrap(),
            ParentDistribution::gaussian(0.5, 0.1).unwrap(),
            ParentDistribution::Uniform,
            ParentDistribution::Identity,
        ] {
            assert_abs_diff_eq!(p.char_fn(0.0).re, 1.0, epsilon = 1e-15);
            for u in [0.3, 2.0, 17.0] {
                let (a, b) = (p.char_fn(u), p.char_fn(-u));
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-14);
                assert_abs_diff_eq!(a.im, -b.im, epsilon = 1e-14);
            }
        }
        // Zero of the uniform characteristic function at 2π.
        assert!(ParentDistribution::Uniform.char_fn(2.0 * PI).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::new(10, 1.0, 1.0, 0.5).unwrap();
        let c = PointClouds::empty();
        let cfg = SpectralConfig::default();
        let lap = ParentDistribution::laplace(0.5, 0.1).unwrap();
        assert!(matches!(
            spectral_deconv(
                &c,
                &p,
                &ParentDistribution::Uniform,
                bandlimited_kernel(),
                0.0,
                0.5,
                &cfg
            ),
            Err(Error::UnsupportedParent(_))
        ));
        assert!(matches!(
            spectral_deconv(&c, &p, &lap, paper_kernel(), 0.0, 0.5, &cfg),
            Err(Error::MissingFourier { .. })
        ));
        let strict = SpectralConfig {
            min_charfn_modulus: 0.5,
            ..cfg
        };
        assert!(matches!(
            spectral_deconv(&c, &p, &lap, bandlimited_kernel(), 0.0, 0.05, &strict),
            Err(Error::IllPosed { .. })
        ));
        let g = ParentDistribution::gaussian(0.5, 1.0).unwrap();
        let e = spectral_deconv(&c, &p, &g, bandlimited_kernel(), 0.0, 0.05, &strict).unwrap();
        assert!(e.flags.charfn_capped);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn identity_parent_is_a_kde() {
        let p = ModelParams::new(5, 1.0, 1.0, 0.5).unwrap();
        let c = PointClouds::new_unrestricted(vec![0.0], vec![-0.2, 0.1, 0.15, 0.3, 0.9]).unwrap();
        let k = bandlimited_kernel();
        for z0 in [-0.3, 0.0, 0.2] {
            let a = spectral_deconv(
                &c,
                &p,
                &ParentDistribution::Identity,
                k,
                z0,
                0.4,
                &SpectralConfig::default(),
            )
            .unwrap()
            .value;
            let b = kde_rescaled(&c, &p, k, z0, 0.4).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn bandwidth_values() {
        let lap = ParentDistribution::laplace(0.5, 0.1).unwrap();
        let p = ModelParams::new(10_000, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            spectral_bandwidth(&p, 2.0, &lap).unwrap(),
            10_000f64.powf(-1.0 / 9.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            spectral_bandwidth(&p, 2.0, &lap).unwrap(),
            0.3594,
            epsilon = 1e-4
        );
        let g = ParentDistribution::gaussian(0.0, 1.0).unwrap();
        let p = ModelParams::new(8f64.exp().round() as u64, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            spectral_bandwidth(&p, 2.0, &g).unwrap(),
            0.5,
            epsilon = 1e-4
        );
    }
}
