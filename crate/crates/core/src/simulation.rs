//! Simulators for the Cox offspring model, the one-to-one model and the
//! i.i.d.-pairs model, plus analytic cross-moment oracles.
//!
//! Every simulator first draws σ-free primitives ([`ClusterDraw`]: parent
//! positions, offspring counts, standardised displacements `D ~ f`) from a
//! seeded stream and only then places offspring at `X + σD`. Realising the
//! same draw at several σ gives common random numbers across a scale grid.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DispersalModel, ModelParams, PointClouds};
use crate::quad::integrate_with_breaks;
use crate::seed::SeedSpec;

/// Absolute tolerance of the moment-oracle quadratures.
pub const MOMENT_QUAD_TOL: f64 = 1e-9;

/// Law of a single parent position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParentLaw {
    /// Uniform on `[0, 1]` (the homogeneous model).
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

impl ParentLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ParentLaw::Uniform => rng.random::<f64>(),
            ParentLaw::Laplace { location, scale } => {
                // Inverse CDF of the Laplace law from one uniform in (-1/2, 1/2).
                let u: f64 = rng.random::<f64>() - 0.5;
                location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            ParentLaw::Gaussian { location, sd } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                location + sd * z
            }
        }
    }

    fn in_unit_interval(&self) -> bool {
        matches!(self, ParentLaw::Uniform)
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize
}

/// σ-free randomness of one realisation: parent positions, the parent of
/// each offspring and its standardised displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDraw {
    parents: Vec<f64>,
    parent_of: Vec<usize>,
    displacements: Vec<f64>,
    parents_in_unit_interval: bool,
}

impl ClusterDraw {
    /// Poisson(`parent_mean`) parents, each with Poisson(`mu`) children.
    pub fn cox(
        parent_mean: f64,
        mu: f64,
        model: &DispersalModel,
        law: ParentLaw,
        seed: SeedSpec,
    ) -> Self {
        let mut rng = seed.rng();
        let k = poisson(parent_mean, &mut rng);
        let mut parents = Vec::with_capacity(k);
        let mut parent_of = Vec::new();
        let mut displacements = Vec::new();
        for i in 0..k {
            parents.push(law.sample(&mut rng));
            let children = poisson(mu, &mut rng);
            for _ in 0..children {
                parent_of.push(i);
                displacements.push(model.sample(&mut rng));
            }
        }
        Self {
            parents,
            parent_of,
            displacements,
            parents_in_unit_interval: law.in_unit_interval(),
        }
    }

    /// Poisson(`parent_mean`) parents with exactly one child each.
    pub fn one_to_one(
        parent_mean: f64,
        model: &DispersalModel,
        law: ParentLaw,
        seed: SeedSpec,
    ) -> Self {
        let mut rng = seed.rng();
        let k = poisson(parent_mean, &mut rng);
        Self::pairs(k, model, law, &mut rng)
    }

    /// Exactly `n` uniform parents with one child each.
    pub fn iid_pairs(n: usize, model: &DispersalModel, seed: SeedSpec) -> Self {
        Self::pairs(n, model, ParentLaw::Uniform, &mut seed.rng())
    }

    fn pairs<R: Rng + ?Sized>(
        k: usize,
        model: &DispersalModel,
        law: ParentLaw,
        rng: &mut R,
    ) -> Self {
        let mut parents = Vec::with_capacity(k);
        let mut displacements = Vec::with_capacity(k);
        for _ in 0..k {
            parents.push(law.sample(rng));
            displacements.push(model.sample(rng));
        }
        Self {
            parents,
            parent_of: (0..k).collect(),
            displacements,
            parents_in_unit_interval: law.in_unit_interval(),
        }
    }

    pub fn parent_count(&self) -> usize {
        self.parents.len()
    }

    pub fn offspring_count(&self) -> usize {
        self.displacements.len()
    }

    /// Places offspring at `X + σD`. `σ = 0` is accepted as a diagnostic
    /// degenerate case.
    pub fn realize(&self, sigma: f64) -> PointClouds {
        assert!(
            sigma >= 0.0 && sigma.is_finite(),
            "sigma must be finite and nonnegative"
        );
        let offspring = self
            .parent_of
            .iter()
            .zip(&self.displacements)
            .map(|(&i, &d)| self.parents[i] + sigma * d)
            .collect();
        let clouds =
            PointClouds::from_simulation(self.parents.clone(), offspring, self.parent_of.clone());
        debug_assert!(clouds
            .check_invariants(self.parents_in_unit_interval)
            .is_ok());
        clouds
    }
}

/// Cox model: `Poisson(nλ)` uniform parents, each emitting `Poisson(μ)`
/// children at `X_i + σD`.
pub fn sample_cox(params: &ModelParams, model: &DispersalModel, seed: SeedSpec) -> PointClouds {
    ClusterDraw::cox(
        params.parent_intensity(),
        params.mu,
        model,
        ParentLaw::Uniform,
        seed,
    )
    .realize(params.sigma)
}

/// Cox model with a general parent law on the line.
pub fn sample_cox_with_parents(
    params: &ModelParams,
    model: &DispersalModel,
    law: ParentLaw,
    seed: SeedSpec,
) -> PointClouds {
    ClusterDraw::cox(params.parent_intensity(), params.mu, model, law, seed).realize(params.sigma)
}

/// One-to-one model: `Poisson(nλ)` uniform parents, one child each.
pub fn sample_one_to_one(
    params: &ModelParams,
    model: &DispersalModel,
    seed: SeedSpec,
) -> PointClouds {
    ClusterDraw::one_to_one(params.parent_intensity(), model, ParentLaw::Uniform, seed)
        .realize(params.sigma)
}

/// I.i.d. pairs: exactly `n` uniform parents and `Y_i = X_i + σD_i`.
pub fn sample_iid_pairs(
    n: usize,
    sigma: f64,
    model: &DispersalModel,
    seed: SeedSpec,
) -> Result<PointClouds> {
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(invalid("sigma", format!("must lie in (0, 1], got {sigma}")));
    }
    Ok(ClusterDraw::iid_pairs(n, model, seed).realize(sigma))
}

/// Closed interval `[lo, hi]`; `lo == hi` is the empty (null) set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(
                "interval",
                format!("[{lo}, {hi}] is not a bounded interval"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn overlaps(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

/// Query `(A, B)` for `E[M(A) N(B)]`, with `A ⊂ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuery {
    pub a: Interval,
    pub b: Interval,
}

impl MomentQuery {
    pub fn new(a: Interval, b: Interval) -> Result<Self> {
        if a.lo < 0.0 || a.hi > 1.0 {
            return Err(invalid(
                "A",
                format!("[{}, {}] is not inside [0, 1]", a.lo, a.hi),
            ));
        }
        Ok(Self { a, b })
    }
}

/// `P_B(x) = ∫_B f_σ(y - x) dy`.
fn mass_in(model: &DispersalModel, sigma: f64, b: Interval, x: f64) -> f64 {
    model.cdf((b.hi - x) / sigma) - model.cdf((b.lo - x) / sigma)
}

fn reach_breaks(a: Interval, sigma: f64, bs: &[Interval]) -> Vec<f64> {
    let mut pts = vec![a.lo, a.hi];
    for b in bs {
        for edge in [b.lo, b.hi] {
            for k in [-0.5, 0.5] {
                let x = edge + k * sigma;
                if a.contains(x) {
                    pts.push(x);
                }
            }
        }
    }
    pts
}

/// `Q_σ(A, B) = ∫_A ∫_B f_σ(y - x) dy dx`.
pub fn q_sigma(model: &DispersalModel, sigma: f64, a: Interval, b: Interval) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    // x only matters where B is within reach of x ± σ/2.
    let lo = a.lo.max(b.lo - 0.5 * sigma);
    let hi = a.hi.min(b.hi + 0.5 * sigma);
    if lo >= hi {
        return Ok(0.0);
    }
    let clip = Interval { lo, hi };
    let r = integrate_with_breaks(
        |x| mass_in(model, sigma, b, x),
        &reach_breaks(clip, sigma, &[b]),
        MOMENT_QUAD_TOL,
    )?;
    Ok(r.value)
}

/// `Q²_σ(A, B1, B2) = ∫_A P_{B1}(x) P_{B2}(x) dx`.
pub fn q2_sigma(
    model: &DispersalModel,
    sigma: f64,
    a: Interval,
    b1: Interval,
    b2: Interval,
) -> Result<f64> {
    if a.is_empty() || b1.is_empty() || b2.is_empty() {
        return Ok(0.0);
    }
    let lo = a.lo.max(b1.lo - 0.5 * sigma).max(b2.lo - 0.5 * sigma);
    let hi = a.hi.min(b1.hi + 0.5 * sigma).min(b2.hi + 0.5 * sigma);
    if lo >= hi {
        return Ok(0.0);
    }
    let clip = Interval { lo, hi };
    let r = integrate_with_breaks(
        |x| mass_in(model, sigma, b1, x) * mass_in(model, sigma, b2, x),
        &reach_breaks(clip, sigma, &[b1, b2]),
        MOMENT_QUAD_TOL,
    )?;
    Ok(r.value)
}

/// `E[N(B)] = nλμ Q_σ([0,1], B)`.
pub fn expected_n(params: &ModelParams, model: &DispersalModel, b: Interval) -> Result<f64> {
    Ok(params.parent_intensity() * params.mu * q_sigma(model, params.sigma, Interval::unit(), b)?)
}

/// `E[M(A) N(B)] = n²λ²μ|A| Q_σ([0,1], B) + nλμ Q_σ(A, B)` for the Cox model.
pub fn expected_mn(params: &ModelParams, model: &DispersalModel, q: &MomentQuery) -> Result<f64> {
    let nl = params.parent_intensity();
    let whole = q_sigma(model, params.sigma, Interval::unit(), q.b)?;
    let local = q_sigma(model, params.sigma, q.a, q.b)?;
    Ok(nl * nl * params.mu * q.a.len() * whole + nl * params.mu * local)
}

/// `E[N(B1) N(B2)] = E[N(B1)] E[N(B2)] + nλμ² Q²_σ([0,1], B1, B2)` for
/// disjoint `B1`, `B2`.
pub fn expected_nn(
    params: &ModelParams,
    model: &DispersalModel,
    b1: Interval,
    b2: Interval,
) -> Result<f64> {
    if b1.overlaps(&b2) {
        return Err(Error::OverlappingIntervals {
            b1_lo: b1.lo,
            b1_hi: b1.hi,
            b2_lo: b2.lo,
            b2_hi: b2.hi,
        });
    }
    let e1 = expected_n(params, model, b1)?;
    let e2 = expected_n(params, model, b2)?;
    let q2 = q2_sigma(model, params.sigma, Interval::unit(), b1, b2)?;
    Ok(e1 * e2 + params.parent_intensity() * params.mu * params.mu * q2)
}

/// Counts of points in `[lo, hi]` of a sorted slice.
pub fn count_in(sorted: &[f64], iv: Interval) -> usize {
    let lo = sorted.partition_point(|&x| x < iv.lo);
    let hi = sorted.partition_point(|&x| x <= iv.hi);
    hi.saturating_sub(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_beta23_model;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams::new(50, 1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn zero_intensity_gives_empty_clouds() {
        let m = make_beta23_model();
        let c =
            ClusterDraw::cox(0.0, 1.0, &m, ParentLaw::Uniform, SeedSpec::new(1, 1)).realize(0.1);
        assert!(c.is_empty());
        let c =
            ClusterDraw::one_to_one(0.0, &m, ParentLaw::Uniform, SeedSpec::new(1, 1)).realize(0.1);
        assert!(c.is_empty());
    }

    #[test]
    fn same_seed_same_clouds() {
        let m = make_beta23_model();
        let s = SeedSpec::new(3, 17);
        assert_eq!(sample_cox(&params(), &m, s), sample_cox(&params(), &m, s));
        assert_eq!(
            sample_iid_pairs(20, 0.3, &m, s).unwrap(),
            sample_iid_pairs(20, 0.3, &m, s).unwrap()
        );
        assert_ne!(
            sample_cox(&params(), &m, s),
            sample_cox(&params(), &m, SeedSpec::new(3, 18))
        );
    }

    #[test]
    fn one_to_one_is_a_bijection() {
        let m = make_beta23_model();
        for r in 0..20 {
            let c = sample_one_to_one(&params(), &m, SeedSpec::new(5, r));
            assert_eq!(c.parents().len(), c.offspring().len());
            let mut p = c.parentage().unwrap().to_vec();
            p.sort_unstable();
            assert!(p.iter().enumerate().all(|(i, &j)| i == j));
        }
    }

    #[test]
    fn zero_sigma_reproduces_parents() {
        let m = make_beta23_model();
        let c =
            ClusterDraw::one_to_one(30.0, &m, ParentLaw::Uniform, SeedSpec::new(2, 2)).realize(0.0);
        assert_eq!(c.parents(), c.offspring());
    }

    #[test]
    fn iid_pairs_single() {
        let m = make_beta23_model();
        let c = sample_iid_pairs(1, 0.2, &m, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(c.parents().len(), 1);
        assert_eq!(c.offspring().len(), 1);
        assert!((c.offspring()[0] - c.parents()[0]).abs() <= 0.1);
        assert!(sample_iid_pairs(0, 0.2, &m, SeedSpec::new(1, 0)).is_err());
        assert!(sample_iid_pairs(5, 0.0, &m, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn offspring_stay_within_reach() {
        let m = make_beta23_model();
        let p = ModelParams::new(200, 1.0, 2.0, 0.4).unwrap();
        for r in 0..20 {
            let c = sample_cox(&p, &m, SeedSpec::new(8, r));
            assert!(c.offspring().iter().all(|&y| (-0.2..=1.2).contains(&y)));
        }
    }

    #[test]
    fn laplace_parent_law_moments() {
        let law = ParentLaw::Laplace {
            location: 0.5,
            scale: 0.1,
        };
        let mut rng = SeedSpec::new(4, 4).rng();
        let xs: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 4.0 * (0.02f64 / 200_000.0).sqrt());
        assert_abs_diff_eq!(var, 0.02, epsilon = 0.001);
    }

    #[test]
    fn q_sigma_total_mass() {
        let m = make_beta23_model();
        let b = Interval::new(-0.1, 1.1).unwrap();
        assert_abs_diff_eq!(
            q_sigma(&m, 0.1, Interval::unit(), b).unwrap(),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn expected_mn_whole_domain() {
        let m = make_beta23_model();
        let p = params();
        let q = MomentQuery::new(Interval::unit(), Interval::new(-0.05, 1.05).unwrap()).unwrap();
        assert_abs_diff_eq!(
            expected_mn(&p, &m, &q).unwrap(),
            2500.0 + 50.0,
            epsilon = 1e-6
        );
        let q = MomentQuery::new(
            Interval::new(0.0, 0.0).unwrap(),
            Interval::new(0.2, 0.4).unwrap(),
        )
        .unwrap();
        assert_eq!(expected_mn(&p, &m, &q).unwrap(), 0.0);
    }

    #[test]
    fn expected_nn_far_apart_factorises() {
        let m = make_beta23_model();
        let p = params();
        let b1 = Interval::new(0.1, 0.2).unwrap();
        let b2 = Interval::new(0.35, 0.45).unwrap();
        let e = expected_n(&p, &m, b1).unwrap() * expected_n(&p, &m, b2).unwrap();
        assert_abs_diff_eq!(expected_nn(&p, &m, b1, b2).unwrap(), e, epsilon = 1e-12);
    }

    #[test]
    fn expected_nn_empty_and_overlap() {
        let m = make_beta23_model();
        let p = params();
        let b1 = Interval::new(0.1, 0.3).unwrap();
        assert_eq!(
            expected_nn(&p, &m, b1, Interval::new(0.5, 0.5).unwrap()).unwrap(),
            0.0
        );
        assert!(matches!(
            expected_nn(&p, &m, b1, Interval::new(0.2, 0.4).unwrap()),
            Err(Error::OverlappingIntervals { .. })
        ));
    }

    #[test]
    fn moment_query_requires_a_in_unit_interval() {
        assert!(MomentQuery::new(Interval::new(-0.1, 0.5).unwrap(), Interval::unit()).is_err());
        assert!(Interval::new(0.5, 0.1).is_err());
    }
}
