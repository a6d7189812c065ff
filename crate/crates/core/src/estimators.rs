//! Point-process estimators of the dispersal density across scales.
//!
//! All estimators act on sorted [`PointClouds`]. Whenever the kernel has
//! compact support the double sums over `(X_i, Y_j)` pairs are evaluated
//! with binary-searched windows: points deep inside the flat top of the
//! kernel are counted, points in the transition band are evaluated with
//! exactly the same arithmetic as the naive loop. The `*_naive` functions
//! are the literal `O(|X||Y|)` definitions and serve as references.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::model::{DispersalModel, ModelParams, PointClouds};
use crate::quad::integrate_with_breaks;

/// Default multiplicative constant of the bandwidth rules.
pub const DEFAULT_BANDWIDTH_CONSTANT: f64 = 0.7;
/// Absolute tolerance of the bias oracle quadratures.
pub const BIAS_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h1: f64,
    pub h2: f64,
}

impl Bandwidths {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        if !(h1 > 0.0 && h1.is_finite()) {
            return Err(invalid(
                "h1",
                format!("must be positive and finite, got {h1}"),
            ));
        }
        if !(h2 > 0.0 && h2.is_finite()) {
            return Err(invalid(
                "h2",
                format!("must be positive and finite, got {h2}"),
            ));
        }
        Ok(Self { h1, h2 })
    }
}

/// Soft precondition violations attached to an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// A bandwidth lies outside the range covered by the theory.
    pub bandwidth_out_of_range: bool,
    /// `z0` lies outside `(-1/2, 1/2)`.
    pub z0_exterior: bool,
    /// `1/|φ_p|` was capped in a severely ill-posed spectral estimate.
    pub charfn_capped: bool,
}

impl Flags {
    pub fn is_clean(&self) -> bool {
        *self == Flags::default()
    }

    pub fn merge(self, other: Flags) -> Flags {
        Flags {
            bandwidth_out_of_range: self.bandwidth_out_of_range || other.bandwidth_out_of_range,
            z0_exterior: self.z0_exterior || other.z0_exterior,
            charfn_capped: self.charfn_capped || other.charfn_capped,
        }
    }

    /// `ok`, or a `;`-separated list of the raised flags.
    pub fn tag(&self) -> String {
        let mut parts = Vec::new();
        if self.bandwidth_out_of_range {
            parts.push("bandwidth_out_of_range");
        }
        if self.z0_exterior {
            parts.push("z0_exterior");
        }
        if self.charfn_capped {
            parts.push("charfn_capped");
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join(";")
        }
    }

    pub(crate) fn for_z0(z0: f64) -> Flags {
        Flags {
            z0_exterior: !(z0 > -0.5 && z0 < 0.5),
            ..Flags::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub flags: Flags,
}

/// Which point estimator a bandwidth rule or sweep refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorId {
    F1,
    F2,
    Dec,
    Int,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 4] = [
        EstimatorId::F1,
        EstimatorId::F2,
        EstimatorId::Dec,
        EstimatorId::Int,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::F1 => "f1",
            EstimatorId::F2 => "f2",
            EstimatorId::Dec => "dec",
            EstimatorId::Int => "int",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(EstimatorId::F1),
            "f2" => Ok(EstimatorId::F2),
            "dec" => Ok(EstimatorId::Dec),
            "int" => Ok(EstimatorId::Int),
            other => Err(Error::Parse(format!(
                "unknown estimator `{other}` (expected f1, f2, dec or int)"
            ))),
        }
    }
}

impl std::fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Choice of the large bandwidth in the small-scale estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum H1Mode {
    /// `h1 = 1/(2σ)`.
    Theoretical,
    /// `h1 = max(4, 1/σ - 1.1 h2)`.
    #[default]
    Practical,
}

impl H1Mode {
    pub fn h1(&self, sigma: f64, h2: f64) -> f64 {
        match self {
            H1Mode::Theoretical => 1.0 / (2.0 * sigma),
            H1Mode::Practical => (1.0 / sigma - 1.1 * h2).max(4.0),
        }
    }
}

/// Indices of `sorted` with `lo <= x <= hi`.
pub(crate) fn index_range(sorted: &[f64], lo: f64, hi: f64) -> Range<usize> {
    let start = sorted.partition_point(|&x| x < lo);
    let end = sorted.partition_point(|&x| x <= hi).max(start);
    start..end
}

/// Splits the points whose kernel argument `(x - center) / scale` could be
/// nonzero into a core on which the kernel is certainly on its flat top and
/// the remaining band. Both ranges are padded so that rounding in the
/// caller's argument formula cannot move a point across them.
struct Window {
    outer: Range<usize>,
    flat: Range<usize>,
}

impl Window {
    fn new(sorted: &[f64], center: f64, scale: f64, support: f64, flat: f64) -> Self {
        let pad = 1e-12 * (1.0 + center.abs()) + 1e-9 * scale * support;
        let outer = index_range(
            sorted,
            center - scale * support - pad,
            center + scale * support + pad,
        );
        let half = scale * flat - pad;
        let flat = if half > 0.0 {
            index_range(sorted, center - half, center + half)
        } else {
            outer.start..outer.start
        };
        Self { outer, flat }
    }

    fn band(&self) -> impl Iterator<Item = usize> {
        (self.outer.start..self.flat.start).chain(self.flat.end..self.outer.end)
    }
}

fn compact(k: Kernel) -> Option<(f64, f64)> {
    Some((k.support_radius()?, k.flat_radius()?))
}

/// `Σ_i K(z0/h - (y - X_i)/(σh))`.
fn inner_sum(k: Kernel, parents: &[f64], y: f64, sigma: f64, z0: f64, h: f64) -> f64 {
    let arg = |x: f64| z0 / h - (y - x) / (sigma * h);
    match compact(k) {
        Some((support, flat)) => {
            let w = Window::new(parents, y - sigma * z0, sigma * h, support, flat);
            let mut s = w.flat.len() as f64;
            for i in w.band() {
                s += k.value(arg(parents[i]));
            }
            s
        }
        None => parents.iter().map(|&x| k.value(arg(x))).sum(),
    }
}

/// Offspring indices with a possibly nonzero `K'(z0/h1 - Y_j/(σh1))`.
fn derivative_support(k: Kernel, offspring: &[f64], sigma: f64, z0: f64, h1: f64) -> Vec<usize> {
    match compact(k) {
        Some((support, flat)) => Window::new(offspring, sigma * z0, sigma * h1, support, flat)
            .band()
            .collect(),
        None => (0..offspring.len()).collect(),
    }
}

#[inline]
fn outer_arg(y: f64, sigma: f64, z0: f64, h1: f64) -> f64 {
    z0 / h1 - y / (sigma * h1)
}

/// `f̂_{h1,h2}(z0) = (1/(nλμσh1)) Σ_{i,j} K'(z0/h1 - Y_j/(σh1)) K(z0/h2 - (Y_j - X_i)/(σh2))`.
pub fn joint_statistic(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    bw: Bandwidths,
) -> Result<f64> {
    k.require_differentiable()?;
    params.validate()?;
    let (sigma, h1, h2) = (params.sigma, bw.h1, bw.h2);
    let (xs, ys) = (clouds.parents(), clouds.offspring());
    let mut total = 0.0;
    for j in derivative_support(k, ys, sigma, z0, h1) {
        let d = k.derivative(outer_arg(ys[j], sigma, z0, h1));
        if d != 0.0 {
            total += d * inner_sum(k, xs, ys[j], sigma, z0, h2);
        }
    }
    Ok(total / (joint_norm(params) * sigma * h1))
}

/// Literal double loop for [`joint_statistic`].
pub fn joint_statistic_naive(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    bw: Bandwidths,
) -> Result<f64> {
    k.require_differentiable()?;
    params.validate()?;
    let (sigma, h1, h2) = (params.sigma, bw.h1, bw.h2);
    let mut total = 0.0;
    for &y in clouds.offspring() {
        let d = k.derivative(outer_arg(y, sigma, z0, h1));
        let mut inner = 0.0;
        for &x in clouds.parents() {
            inner += k.value(z0 / h2 - (y - x) / (sigma * h2));
        }
        total += d * inner;
    }
    Ok(total / (joint_norm(params) * sigma * h1))
}

fn joint_norm(p: &ModelParams) -> f64 {
    p.parent_intensity() * p.mu
}

/// `(1/(nλμ)) Σ_{i,j} ψ1(Y_j) ψ2((Y_j - X_i)/σ)`, whose expectation is
/// [`BiasOracle::expected_statistic`].
pub fn normalized_statistic(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    bw: Bandwidths,
) -> Result<f64> {
    Ok(joint_statistic(clouds, params, k, z0, bw)? / (bw.h1 * bw.h2))
}

/// Large-scale (deconvolution) estimator with `h2 = 8/σ`.
pub fn f_hat_1(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    h1: f64,
) -> Result<Estimate> {
    params.validate()?;
    let bw = Bandwidths::new(h1, 8.0 / params.sigma)?;
    let value = joint_statistic(clouds, params, k, z0, bw)? / (params.parent_intensity() * h1);
    let mut flags = Flags::for_z0(z0);
    flags.bandwidth_out_of_range = !(h1 >= 1.0 / (params.sigma * params.n_f64()) && h1 <= 1.0);
    Ok(Estimate { value, flags })
}

/// [`f_hat_1`] written out as
/// `(1/(σnλμh1²)) Σ_j K'(·) · (1/(nλ)) Σ_i K(σz0/8 - (Y_j - X_i)/8)`.
pub fn f_hat_1_expanded(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    h1: f64,
) -> Result<f64> {
    k.require_differentiable()?;
    params.validate()?;
    let sigma = params.sigma;
    let nl = params.parent_intensity();
    let mut total = 0.0;
    for &y in clouds.offspring() {
        let d = k.derivative(outer_arg(y, sigma, z0, h1));
        if d == 0.0 {
            continue;
        }
        let inner: f64 = clouds
            .parents()
            .iter()
            .map(|&x| k.value(sigma * z0 / 8.0 - (y - x) / 8.0))
            .sum();
        total += d * inner / nl;
    }
    Ok(total / (sigma * nl * params.mu * h1 * h1))
}

/// Small-scale (direct) estimator
/// `(1/h2) f̂_{h1,h2}(z0) - σnλ` with `h1` chosen by `mode`.
pub fn f_hat_2(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    h2: f64,
    mode: H1Mode,
) -> Result<Estimate> {
    params.validate()?;
    if params.sigma >= 0.125 {
        return Err(Error::SmallScalePrecondition {
            sigma: params.sigma,
        });
    }
    let bw = Bandwidths::new(mode.h1(params.sigma, h2), h2)?;
    let value =
        joint_statistic(clouds, params, k, z0, bw)? / h2 - params.sigma * params.parent_intensity();
    let mut flags = Flags::for_z0(z0);
    flags.bandwidth_out_of_range = h2 > 1.0;
    Ok(Estimate { value, flags })
}

/// Pure deconvolution estimator, normalised by the observed `|Y|`.
pub fn f_hat_dec(
    clouds: &PointClouds,
    params: &ModelParams,
    k: Kernel,
    z0: f64,
    h1: f64,
) -> Result<Estimate> {
    k.require_differentiable()?;
    params.validate()?;
    let ys = clouds.offspring();
    if ys.is_empty() {
        return Err(Error::EmptyOffspring);
    }
    let sigma = params.sigma;
    let total: f64 = derivative_support(k, ys, sigma, z0, h1)
        .into_iter()
        .map(|j| k.derivative(outer_arg(ys[j], sigma, z0, h1)))
        .sum();
    let value = total / (sigma * h1 * h1 * ys.len() as f64);
    let mut flags = Flags::for_z0(z0);
    flags.bandwidth_out_of_range = !(h1 >= 1.0 / (sigma * params.n_f64()) && h1 <= 1.0);
    Ok(Estimate { value, flags })
}

/// Interaction estimator `(1/|Y|) Σ_{i,j} (1/h2) K(z0/h2 - (Y_j - X_i)/(σh2))`.
pub fn f_hat_int(
    clouds: &PointClouds,
    sigma: f64,
    k: Kernel,
    z0: f64,
    h2: f64,
) -> Result<Estimate> {
    let ys = clouds.offspring();
    if ys.is_empty() {
        return Err(Error::EmptyOffspring);
    }
    check_sigma(sigma)?;
    let total: f64 = ys
        .iter()
        .map(|&y| inner_sum(k, clouds.parents(), y, sigma, z0, h2))
        .sum();
    let mut flags = Flags::for_z0(z0);
    flags.bandwidth_out_of_range = !(h2 > 0.0 && h2 <= 1.0);
    Ok(Estimate {
        value: total / (h2 * ys.len() as f64),
        flags,
    })
}

/// Literal double loop for [`f_hat_int`].
pub fn f_hat_int_naive(
    clouds: &PointClouds,
    sigma: f64,
    k: Kernel,
    z0: f64,
    h2: f64,
) -> Result<f64> {
    let ys = clouds.offspring();
    if ys.is_empty() {
        return Err(Error::EmptyOffspring);
    }
    check_sigma(sigma)?;
    let mut total = 0.0;
    for &y in ys {
        let mut inner = 0.0;
        for &x in clouds.parents() {
            inner += k.value(z0 / h2 - (y - x) / (sigma * h2));
        }
        total += inner;
    }
    Ok(total / (h2 * ys.len() as f64))
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid("sigma", format!("must be positive, got {sigma}")))
    }
}

/// Bandwidths from the rate-optimal rules with constant `c`:
/// `h1 = c (nσ)^{-1/(2s+3)}` and `h2 = c min(n, 1/σ)^{-1/(2s+1)}`.
///
/// The unused bandwidth of each estimator is filled with the value the
/// estimator would use internally: `8/σ` for `f1`/`dec`, the practical
/// `max(4, 1/σ - 1.1 h2)` for `f2`/`int`.
pub fn bandwidth_rule(
    params: &ModelParams,
    s: f64,
    c: f64,
    estimator: EstimatorId,
) -> Result<Bandwidths> {
    params.validate()?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    let n = params.n_f64();
    let sigma = params.sigma;
    match estimator {
        EstimatorId::F1 | EstimatorId::Dec => {
            Bandwidths::new(c * (n * sigma).powf(-1.0 / (2.0 * s + 3.0)), 8.0 / sigma)
        }
        EstimatorId::F2 | EstimatorId::Int => {
            let h2 = c * n.min(1.0 / sigma).powf(-1.0 / (2.0 * s + 1.0));
            Bandwidths::new(H1Mode::Practical.h1(sigma, h2), h2)
        }
    }
}

/// Closed-form statements that hold in particular bandwidth regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `σh2 ≥ 8`, `h1 ≤ h2/8`: `U ≈ f(z0)/(σh2)`.
    LargeH2,
    /// `h1 ∈ [4, 1/σ)`, `h2 ≤ 1/σ - h1`, `σ < 1/4`: `U = 1/h1`.
    ExactU,
    /// `h2 ≤ h1/4`, `h1 + h2 < 1/σ`: `V ≈ f(z0)/h1`.
    SmallH2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub regime: Regime,
    pub closed_form: f64,
    pub computed: f64,
}

impl RegimeCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.computed - self.closed_form).abs()
    }
}

/// Quadrature values of the two terms of
/// `E[(1/(nλμ)) Σ ψ1 ψ2] = σnλ U + V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOracle {
    pub u_sigma: f64,
    pub v_sigma: f64,
    pub expected_statistic: f64,
    pub checks: Vec<RegimeCheck>,
}

fn shifted_junctions(k: Kernel, scale: f64, offset: f64) -> impl Iterator<Item = f64> {
    // Points v with scale * v + offset equal to a kernel junction.
    k.junctions().into_iter().map(move |j| (j - offset) / scale)
}

pub fn bias_oracle(
    params: &ModelParams,
    model: &DispersalModel,
    k: Kernel,
    z0: f64,
    bw: Bandwidths,
) -> Result<BiasOracle> {
    params.validate()?;
    k.require_differentiable()?;
    let r = k.support_radius().ok_or_else(|| Error::KernelSupport {
        kernel: k.name(),
        reason: "the bias oracle integrates over the kernel support".into(),
    })?;
    let (sigma, h1, h2) = (params.sigma, bw.h1, bw.h2);
    let inv = 1.0 / sigma;

    // U in the variable v = z0/h1 - y/(σh1).
    let u_integrand = |v: f64| {
        let d = k.derivative(v);
        if d == 0.0 {
            return 0.0;
        }
        let kernel_mass = k.antiderivative((h1 * v + inv) / h2) - k.antiderivative(h1 * v / h2);
        let cluster_mass = model.cdf(z0 - h1 * v) - model.cdf(z0 - h1 * v - inv);
        d * kernel_mass * cluster_mass
    };
    let mut breaks: Vec<f64> = k.junctions();
    breaks.extend(shifted_junctions(k, h1 / h2, 0.0));
    breaks.extend(shifted_junctions(k, h1 / h2, inv / h2));
    for edge in [-0.5, 0.5] {
        breaks.push((z0 - edge) / h1);
        breaks.push((z0 - edge - inv) / h1);
    }
    for b in model.breakpoints() {
        breaks.push((z0 - b) / h1);
        breaks.push((z0 - b - inv) / h1);
    }
    let breaks: Vec<f64> = breaks
        .into_iter()
        .map(|b| b.clamp(-r, r))
        .chain([-r, r])
        .collect();
    let u_sigma = integrate_with_breaks(u_integrand, &breaks, BIAS_QUAD_TOL)?.value / h1;

    // V in the displacement variable z.
    let v_integrand = |z: f64| {
        let f = model.density(z);
        if f == 0.0 {
            return 0.0;
        }
        let psi1_mass = (k.value((z0 - z) / h1) - k.value((z0 - z - inv) / h1)) / h1;
        psi1_mass * k.value((z0 - z) / h2) / h2 * f
    };
    let mut breaks: Vec<f64> = vec![-0.5, 0.5];
    breaks.extend(model.breakpoints().iter().copied());
    for j in k.junctions() {
        breaks.push(z0 - h1 * j);
        breaks.push(z0 - inv - h1 * j);
        breaks.push(z0 - h2 * j);
    }
    let breaks: Vec<f64> = breaks.into_iter().map(|b| b.clamp(-0.5, 0.5)).collect();
    let v_sigma = integrate_with_breaks(v_integrand, &breaks, BIAS_QUAD_TOL)?.value;

    let f0 = model.density(z0);
    let mut checks = Vec::new();
    if sigma * h2 >= 8.0 && h1 <= h2 / 8.0 {
        checks.push(RegimeCheck {
            regime: Regime::LargeH2,
            closed_form: f0 / (sigma * h2),
            computed: u_sigma,
        });
    }
    if (4.0..inv).contains(&h1) && h2 <= inv - h1 && sigma < 0.25 {
        checks.push(RegimeCheck {
            regime: Regime::ExactU,
            closed_form: 1.0 / h1,
            computed: u_sigma,
        });
    }
    if h2 <= h1 / 4.0 && h1 + h2 < inv {
        checks.push(RegimeCheck {
            regime: Regime::SmallH2,
            closed_form: f0 / h1,
            computed: v_sigma,
        });
    }

    Ok(BiasOracle {
        u_sigma,
        v_sigma,
        expected_statistic: sigma * params.parent_intensity() * u_sigma + v_sigma,
        checks,
    })
}
