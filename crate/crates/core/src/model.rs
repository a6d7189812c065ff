//! Shared domain types: dispersal models, model parameters, point clouds
//! and evaluation points.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_with_breaks};
use crate::seed::SeedSpec;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Bisection tolerance of the inverse-CDF sampler.
pub const QUANTILE_TOL: f64 = 1e-12;

/// A dispersal density `f` supported in `[-1/2, 1/2]`, with its CDF and an
/// inverse-CDF sampler.
#[derive(Clone)]
pub struct DispersalModel {
    name: String,
    density: RealFn,
    cdf: RealFn,
    char_fn: Option<ComplexFn>,
    /// Points in `[-1/2, 1/2]` where the density is not smooth.
    breakpoints: Vec<f64>,
}

impl fmt::Debug for DispersalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersalModel")
            .field("name", &self.name)
            .field("has_char_fn", &self.char_fn.is_some())
            .finish()
    }
}

impl DispersalModel {
    pub fn new(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            density: Arc::new(density),
            cdf: Arc::new(cdf),
            char_fn: None,
            breakpoints: vec![-0.5, 0.5],
        }
    }

    pub fn with_char_fn(
        mut self,
        char_fn: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.char_fn = Some(Arc::new(char_fn));
        self
    }

    pub fn with_breakpoints(mut self, points: &[f64]) -> Self {
        self.breakpoints.extend_from_slice(points);
        self.breakpoints.sort_by(f64::total_cmp);
        self.breakpoints.dedup();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `f(z)`; zero outside `[-1/2, 1/2]`.
    pub fn density(&self, z: f64) -> f64 {
        if z.abs() > 0.5 {
            0.0
        } else {
            (self.density)(z)
        }
    }

    /// `F(z)`, clamped to 0 below the support and 1 above it.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= -0.5 {
            0.0
        } else if z >= 0.5 {
            1.0
        } else {
            (self.cdf)(z)
        }
    }

    /// Fourier transform `∫ e^{iuz} f(z) dz`, when the model provides one.
    pub fn char_fn(&self, u: f64) -> Option<Complex64> {
        self.char_fn.as_ref().map(|c| c(u))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Inverse CDF by bisection on `[-1/2, 1/2]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (-0.5_f64, 0.5_f64);
        while hi - lo > QUANTILE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Draws `D ~ f` from one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `∫ g(z) f(z) dz` over the support.
    pub fn expect(&self, g: impl Fn(f64) -> f64, abs_tol: f64) -> Result<f64> {
        Ok(integrate_with_breaks(|z| g(z) * self.density(z), &self.breakpoints, abs_tol)?.value)
    }
}

/// The shifted Beta(2,3) density `f(z) = 12 (1/2 + z)(1/2 - z)^2` on `[-1/2, 1/2]`.
pub fn make_beta23_model() -> DispersalModel {
    fn density(z: f64) -> f64 {
        let (a, b) = (0.5 + z, 0.5 - z);
        12.0 * a * b * b
    }
    DispersalModel::new("beta23", density, |z| {
        let x = z + 0.5;
        x * x * (6.0 - 8.0 * x + 3.0 * x * x)
    })
    .with_char_fn(|u| {
        let re = integrate(|z| (u * z).cos() * density(z), -0.5, 0.5, 1e-13).map(|r| r.value);
        let im = integrate(|z| (u * z).sin() * density(z), -0.5, 0.5, 1e-13).map(|r| r.value);
        Complex64::new(re.unwrap_or(f64::NAN), im.unwrap_or(f64::NAN))
    })
}

/// Uniform dispersal on `[-1/2, 1/2]`.
pub fn make_uniform_model() -> DispersalModel {
    DispersalModel::new("uniform", |_| 1.0, |z| z + 0.5).with_char_fn(|u| {
        if u == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new((u / 2.0).sin() / (u / 2.0), 0.0)
        }
    })
}

/// Looks up a built-in dispersal model by name.
pub fn model_by_name(name: &str) -> Result<DispersalModel> {
    match name {
        "beta23" | "beta" => Ok(make_beta23_model()),
        "uniform" => Ok(make_uniform_model()),
        other => Err(invalid(
            "model",
            format!("unknown dispersal model `{other}`"),
        )),
    }
}

/// Outcome of [`validate_model`]. Violations are reported, never raised.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDiagnostics {
    pub integral: f64,
    pub max_density: f64,
    pub support_ok: bool,
    pub cdf_ok: bool,
    pub quadrature_mean: f64,
    pub sample_mean: f64,
    pub sample_std_error: f64,
    pub violations: Vec<String>,
}

impl ModelDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const VALIDATION_DRAWS: usize = 100_000;

/// Checks normalisation, support, CDF shape and sampler moments of a model.
pub fn validate_model(model: &DispersalModel, seed: SeedSpec) -> ModelDiagnostics {
    let mut violations = Vec::new();
    let integral = model.expect(|_| 1.0, 1e-12).unwrap_or(f64::NAN);
    if integral.is_nan() || (integral - 1.0).abs() > 1e-8 {
        violations.push(format!("density integrates to {integral}, expected 1"));
    }

    let grid: Vec<f64> = (0..=2000).map(|k| -0.5 + k as f64 / 2000.0).collect();
    let max_density = grid.iter().map(|&z| model.density(z)).fold(0.0, f64::max);
    let negative = grid.iter().any(|&z| (model.density)(z) < 0.0);
    if negative {
        violations.push("density is negative somewhere on [-1/2, 1/2]".into());
    }
    let outside = [-0.75, -0.5 - 1e-9, 0.5 + 1e-9, 0.75];
    let support_ok = outside.iter().all(|&z| model.density(z) == 0.0);
    if !support_ok {
        violations.push("density does not vanish outside [-1/2, 1/2]".into());
    }

    let monotone = grid.windows(2).all(|w| model.cdf(w[0]) <= model.cdf(w[1]));
    let cdf_ok =
        monotone && (model.cdf)(-0.5).abs() <= 1e-10 && ((model.cdf)(0.5) - 1.0).abs() <= 1e-10;
    if !cdf_ok {
        violations.push("cdf is not a distribution function on [-1/2, 1/2]".into());
    }

    let quadrature_mean = model.expect(|z| z, 1e-12).unwrap_or(f64::NAN);
    let mut rng = seed.rng();
    let draws: Vec<f64> = (0..VALIDATION_DRAWS)
        .map(|_| model.sample(&mut rng))
        .collect();
    if draws.iter().any(|d| d.abs() > 0.5) {
        violations.push("sampler produced a draw outside [-1/2, 1/2]".into());
    }
    let m = draws.len() as f64;
    let sample_mean = draws.iter().sum::<f64>() / m;
    let var = draws.iter().map(|d| (d - sample_mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sample_std_error = (var / m).sqrt();
    let deviation = (sample_mean - quadrature_mean).abs();
    if integral > 0.0 && (deviation.is_nan() || deviation > 3.0 * sample_std_error.max(1e-12)) {
        violations.push(format!(
            "sampler mean {sample_mean} differs from quadrature mean {quadrature_mean} by more than 3 standard errors"
        ));
    }

    ModelDiagnostics {
        integral,
        max_density,
        support_ok,
        cdf_ok,
        quadrature_mean,
        sample_mean,
        sample_std_error,
        violations,
    }
}

/// Intensity and scale parameters `(n, λ, μ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u64,
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(n: u64, lambda: f64, mu: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            n,
            lambda,
            mu,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("must be positive, got {}", self.lambda),
            ));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("must be positive, got {}", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(invalid(
                "sigma",
                format!("must lie in (0, 1], got {}", self.sigma),
            ));
        }
        Ok(())
    }

    /// Copy with a different dispersal scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.n, self.lambda, self.mu, sigma)
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    /// Expected number of parents `nλ`.
    pub fn parent_intensity(&self) -> f64 {
        self.n as f64 * self.lambda
    }
}

/// Canonical estimate `λ̂ = |X| / n` of the parent rate.
pub fn estimate_lambda(clouds: &PointClouds, n: u64) -> f64 {
    clouds.parents().len() as f64 / n as f64
}

/// Observed parent positions `X` and offspring positions `Y`, both sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointClouds {
    parents: Vec<f64>,
    offspring: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parentage: Option<Vec<usize>>,
}

fn sort_positions(v: &mut [f64]) {
    v.sort_by(f64::total_cmp);
}

impl PointClouds {
    /// Builds clouds from positions in any order; parents must lie in `[0, 1]`.
    pub fn new(mut parents: Vec<f64>, mut offspring: Vec<f64>) -> Result<Self> {
        check_finite(&parents, "parent")?;
        check_finite(&offspring, "offspring")?;
        if let Some(x) = parents.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidClouds(format!(
                "parent position {x} outside [0, 1]"
            )));
        }
        sort_positions(&mut parents);
        sort_positions(&mut offspring);
        Ok(Self {
            parents,
            offspring,
            parentage: None,
        })
    }

    /// Like [`PointClouds::new`] but parents may lie anywhere on the line
    /// (non-uniform parent laws).
    pub fn new_unrestricted(mut parents: Vec<f64>, mut offspring: Vec<f64>) -> Result<Self> {
        check_finite(&parents, "parent")?;
        check_finite(&offspring, "offspring")?;
        sort_positions(&mut parents);
        sort_positions(&mut offspring);
        Ok(Self {
            parents,
            offspring,
            parentage: None,
        })
    }

    /// Sorts simulated clouds while keeping `parent_of[j]` pointing at the
    /// parent of offspring `j` in the sorted arrays.
    pub(crate) fn from_simulation(
        parents: Vec<f64>,
        offspring: Vec<f64>,
        parent_of: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(offspring.len(), parent_of.len());
        let mut porder: Vec<usize> = (0..parents.len()).collect();
        porder.sort_by(|&a, &b| parents[a].total_cmp(&parents[b]).then(a.cmp(&b)));
        let mut rank = vec![0usize; parents.len()];
        for (r, &i) in porder.iter().enumerate() {
            rank[i] = r;
        }
        let sorted_parents: Vec<f64> = porder.iter().map(|&i| parents[i]).collect();

        let mut oorder: Vec<usize> = (0..offspring.len()).collect();
        oorder.sort_by(|&a, &b| offspring[a].total_cmp(&offspring[b]).then(a.cmp(&b)));
        let sorted_offspring = oorder.iter().map(|&j| offspring[j]).collect();
        let parentage = oorder.iter().map(|&j| rank[parent_of[j]]).collect();
        Self {
            parents: sorted_parents,
            offspring: sorted_offspring,
            parentage: Some(parentage),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parents(&self) -> &[f64] {
        &self.parents
    }

    pub fn offspring(&self) -> &[f64] {
        &self.offspring
    }

    /// True parent index (into [`PointClouds::parents`]) of each offspring,
    /// known only for simulated data.
    pub fn parentage(&self) -> Option<&[usize]> {
        self.parentage.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty() && self.offspring.is_empty()
    }

    /// Drops the simulator's parentage record (it is never observable).
    pub fn without_parentage(mut self) -> Self {
        self.parentage = None;
        self
    }

    /// Checks the sortedness, domain and parentage invariants.
    pub fn check_invariants(&self, parents_in_unit_interval: bool) -> Result<()> {
        if !self.parents.windows(2).all(|w| w[0] <= w[1])
            || !self.offspring.windows(2).all(|w| w[0] <= w[1])
        {
            return Err(Error::InvalidClouds("positions are not sorted".into()));
        }
        if parents_in_unit_interval && self.parents.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidClouds("parent outside [0, 1]".into()));
        }
        if let Some(p) = &self.parentage {
            if p.len() != self.offspring.len() || p.iter().any(|&i| i >= self.parents.len()) {
                return Err(Error::InvalidClouds(
                    "parentage inconsistent with clouds".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::InvalidClouds(format!(
            "{what} position {x} is not finite"
        ))),
        None => Ok(()),
    }
}

/// Estimation point `z0`, flagged when outside the open interval `(-1/2, 1/2)`
/// covered by the theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub z0: f64,
    pub interior: bool,
}

impl EvalPoint {
    pub fn new(z0: f64) -> Self {
        Self {
            z0,
            interior: z0 > -0.5 && z0 < 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta23_point_values() {
        let m = make_beta23_model();
        assert_eq!(m.density(-0.5), 0.0);
        assert_abs_diff_eq!(m.density(0.0), 1.5, epsilon = 1e-15);
        assert_eq!(m.density(0.7), 0.0);
        assert_abs_diff_eq!(m.cdf(0.0), 0.6875, epsilon = 1e-15);
        assert_eq!(m.cdf(-0.5), 0.0);
        assert_abs_diff_eq!(m.cdf(0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn beta23_integrates_to_one() {
        let m = make_beta23_model();
        let total = integrate(|z| m.density(z), -0.5, 0.5, 1e-13).unwrap().value;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn beta23_cdf_matches_integrated_density() {
        let m = make_beta23_model();
        for k in 0..=20 {
            let z = -0.5 + k as f64 / 20.0;
            let q = integrate(|t| m.density(t), -0.5, z, 1e-13).unwrap().value;
            assert_abs_diff_eq!(m.cdf(z), q, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta23_char_fn_at_zero_and_mean() {
        let m = make_beta23_model();
        let c0 = m.char_fn(0.0).unwrap();
        assert_abs_diff_eq!(c0.re, 1.0, epsilon = 1e-12);
        // d/du phi(0) = i E[D] = -0.1 i
        let eps = 1e-4;
        let d = (m.char_fn(eps).unwrap() - m.char_fn(-eps).unwrap()) / (2.0 * eps);
        assert_abs_diff_eq!(d.im, -0.1, epsilon = 1e-7);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let m = make_beta23_model();
        for &u in &[1e-6, 0.1, 0.5, 0.6875, 0.99] {
            assert_abs_diff_eq!(m.cdf(m.quantile(u)), u, epsilon = 1e-11);
        }
        assert_abs_diff_eq!(m.quantile(0.6875), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn validate_beta23() {
        let d = validate_model(&make_beta23_model(), SeedSpec::new(1, 0));
        assert!(d.is_valid(), "{:?}", d.violations);
        assert_abs_diff_eq!(d.integral, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(d.quadrature_mean, -0.1, epsilon = 1e-12);
        assert!((d.sample_mean + 0.1).abs() <= 3.0 * d.sample_std_error);
        assert_abs_diff_eq!(d.max_density, 16.0 / 9.0, epsilon = 1e-5);
    }

    #[test]
    fn validate_flags_zero_density() {
        let zero = DispersalModel::new("zero", |_| 0.0, |z| z + 0.5);
        let d = validate_model(&zero, SeedSpec::new(1, 0));
        assert_eq!(d.integral, 0.0);
        assert!(!d.is_valid());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(10, 1.0, 1.0, 0.5).is_ok());
        assert!(ModelParams::new(0, 1.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(10, 0.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(10, 1.0, -1.0, 0.5).is_err());
        assert!(ModelParams::new(10, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(10, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn clouds_sort_and_reject_bad_parents() {
        let c = PointClouds::new(vec![0.9, 0.1, 0.5], vec![1.2, -0.1]).unwrap();
        assert_eq!(c.parents(), &[0.1, 0.5, 0.9]);
        assert_eq!(c.offspring(), &[-0.1, 1.2]);
        assert!(PointClouds::new(vec![1.5], vec![]).is_err());
        assert!(PointClouds::new(vec![0.5], vec![f64::NAN]).is_err());
        assert!(PointClouds::new_unrestricted(vec![1.5, -2.0], vec![]).is_ok());
    }

    #[test]
    fn simulation_sorting_keeps_parentage() {
        let parents = vec![0.8, 0.2, 0.5];
        let offspring = vec![0.81, 0.49, 0.21, 0.79];
        let parent_of = vec![0, 2, 1, 0];
        let c = PointClouds::from_simulation(parents, offspring, parent_of);
        c.check_invariants(true).unwrap();
        let p = c.parentage().unwrap();
        for (j, &y) in c.offspring().iter().enumerate() {
            assert!((y - c.parents()[p[j]]).abs() < 0.02);
        }
    }

    #[test]
    fn eval_point_interior_flag() {
        assert!(EvalPoint::new(0.0).interior);
        assert!(!EvalPoint::new(0.5).interior);
        assert!(!EvalPoint::new(-0.7).interior);
    }
}
