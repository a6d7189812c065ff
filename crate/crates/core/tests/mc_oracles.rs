//! Monte Carlo and quadrature oracles for the simulators and estimators.

mod common;

use approx::assert_abs_diff_eq;
use dispersal::estimators::{
    bandwidth_rule, bias_oracle, f_hat_1, f_hat_2, f_hat_dec, f_hat_int, Bandwidths, EstimatorId,
    H1Mode,
};
use dispersal::experiments::{run_mc, summarize, McConfig};
use dispersal::iid::{
    brown_cdf, counting_cdf, counting_density, dutch_cdf, nearest_parent_density,
};
use dispersal::kernels::{paper_kernel, rect_kernel, Kernel};
use dispersal::model::{make_beta23_model, validate_model, ModelParams};
use dispersal::seed::SeedSpec;
use dispersal::simulation::{
    count_in, expected_mn, expected_nn, sample_cox, sample_cox_with_parents, sample_iid_pairs,
    sample_one_to_one, Interval, MomentQuery, ParentLaw,
};
use dispersal::spectral::{
    spectral_deconv_with, ParentDistribution, SpectralConfig, SpectralWeights,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{beta_density, mean_se, replicates, simpson};

const F0: f64 = 1.5;

fn rmse(values: &[f64], truth: f64) -> f64 {
    summarize(values, truth).3
}

#[test]
fn validate_beta_model() {
    let d = validate_model(&make_beta23_model(), SeedSpec::new(3, 0));
    assert!(d.is_valid(), "{:?}", d.violations);
    assert_abs_diff_eq!(d.integral, 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(d.quadrature_mean, -0.1, epsilon = 1e-10);
    assert!((d.sample_mean + 0.1).abs() <= 3.0 * d.sample_std_error);
}

#[test]
fn cox_offspring_total_mean() {
    let p = ModelParams::new(50, 1.0, 1.7, 0.1).unwrap();
    let model = make_beta23_model();
    let sizes = replicates(None, 10_000, |r| {
        sample_cox(&p, &model, SeedSpec::new(11, r))
            .offspring()
            .len() as f64
    });
    let (m, se) = mean_se(&sizes);
    assert!((m - 85.0).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn cox_conditional_offspring_poisson() {
    // Given k parents, N ~ Poisson(μk); the dispersion statistic
    // Σ (N - μk)² / (μk) is approximately χ² with one degree per replicate.
    let mu = 2.5;
    let p = ModelParams::new(20, 1.0, mu, 0.3).unwrap();
    let model = make_beta23_model();
    let pairs = replicates(None, 10_000, |r| {
        let c = sample_cox(&p, &model, SeedSpec::new(12, r));
        (c.parents().len(), c.offspring().len())
    });
    let mut stat = 0.0;
    let mut dof = 0usize;
    for &(k, n) in &pairs {
        if k == 0 {
            assert_eq!(n, 0);
            continue;
        }
        let m = mu * k as f64;
        stat += (n as f64 - m).powi(2) / m;
        dof += 1;
    }
    let chi = ChiSquared::new(dof as f64).unwrap();
    let q = chi.cdf(stat);
    assert!(
        (0.0005..=0.9995).contains(&q),
        "dispersion statistic {stat} on {dof} dof, cdf {q}"
    );

    let one = sample_one_to_one(&p, &model, SeedSpec::new(12, 0));
    assert_eq!(one.parents().len(), one.offspring().len());
}

#[test]
fn iid_displacements_match_cdf() {
    let model = make_beta23_model();
    let sigma = 0.01;
    let c = sample_iid_pairs(100_000, sigma, &model, SeedSpec::new(13, 0)).unwrap();
    let parents = c.parents();
    let mut d: Vec<f64> = c
        .offspring()
        .iter()
        .zip(c.parentage().unwrap())
        .map(|(y, &i)| (y - parents[i]) / sigma)
        .collect();
    d.sort_by(f64::total_cmp);
    let m = d.len() as f64;
    let sup = d
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = common::beta_cdf(z);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max);
    assert!(sup < 0.01, "sup-norm {sup}");
}

#[test]
fn moment_examples_within_three_se() {
    let model = make_beta23_model();
    let p = ModelParams::new(50, 1.0, 1.0, 0.1).unwrap();
    let a = Interval::new(0.0, 0.5).unwrap();
    let b = Interval::new(0.2, 0.4).unwrap();
    let b1 = Interval::new(0.2, 0.3).unwrap();
    let b2 = Interval::new(0.35, 0.45).unwrap();
    let mn = expected_mn(&p, &model, &MomentQuery::new(a, b).unwrap()).unwrap();
    let nn = expected_nn(&p, &model, b1, b2).unwrap();
    let draws = replicates(None, 100_000, |r| {
        let c = sample_cox(&p, &model, SeedSpec::new(14, r));
        (
            count_in(c.parents(), a) as f64 * count_in(c.offspring(), b) as f64,
            count_in(c.offspring(), b1) as f64 * count_in(c.offspring(), b2) as f64,
        )
    });
    let (m1, s1) = mean_se(&draws.iter().map(|d| d.0).collect::<Vec<_>>());
    let (m2, s2) = mean_se(&draws.iter().map(|d| d.1).collect::<Vec<_>>());
    assert!((m1 - mn).abs() <= 3.0 * s1, "MN {mn} vs {m1} ± {s1}");
    assert!((m2 - nn).abs() <= 3.0 * s2, "NN {nn} vs {m2} ± {s2}");
}

fn cox_values(
    n: u64,
    tau: f64,
    reps: usize,
    seed: u64,
    f: impl Fn(&dispersal::model::PointClouds, &ModelParams) -> f64 + Sync + Send,
) -> Vec<f64> {
    let model = make_beta23_model();
    let p = ModelParams::new(n, 1.0, 1.0, (n as f64).powf(tau)).unwrap();
    replicates(None, reps, |r| {
        f(&sample_cox(&p, &model, SeedSpec::new(seed, r)), &p)
    })
}

#[test]
fn large_scale_estimators() {
    let h1 = |p: &ModelParams| bandwidth_rule(p, 2.0, 0.7, EstimatorId::F1).unwrap().h1;
    let k = paper_kernel();
    let f1 = cox_values(1000, -0.05, 500, 15, |c, p| {
        f_hat_1(c, p, k, 0.0, h1(p)).unwrap().value
    });
    let dec = cox_values(1000, -0.05, 500, 15, |c, p| {
        f_hat_dec(c, p, k, 0.0, h1(p)).unwrap().value
    });
    let (m, _) = mean_se(&f1);
    assert!((m - F0).abs() <= 0.35, "f1 mean {m}");
    let (r1, rd) = (rmse(&f1, F0), rmse(&dec, F0));
    assert!((r1 - rd).abs() / r1 < 0.25, "rmse f1 {r1}, dec {rd}");
}

#[test]
fn small_scale_estimator() {
    let k = paper_kernel();
    let values = cox_values(1000, -0.95, 500, 16, |c, p| {
        let h2 = bandwidth_rule(p, 2.0, 0.7, EstimatorId::F2).unwrap().h2;
        f_hat_2(c, p, k, 0.0, h2, H1Mode::Practical).unwrap().value
    });
    let (m, _) = mean_se(&values);
    assert!((m - F0).abs() <= 0.35, "f2 mean {m}");
}

fn iid_values(
    n: usize,
    sigma: f64,
    reps: usize,
    seed: u64,
    f: impl Fn(&dispersal::model::PointClouds) -> f64 + Sync + Send,
) -> Vec<f64> {
    let model = make_beta23_model();
    replicates(None, reps, |r| {
        f(&sample_iid_pairs(n, sigma, &model, SeedSpec::new(seed, r)).unwrap())
    })
}

#[test]
fn interaction_estimator_on_pairs() {
    let n = 1000usize;
    let sigma = (n as f64).powf(-1.5);
    let h2 = (n as f64).powf(-0.2);
    let values = iid_values(n, sigma, 300, 17, |c| {
        f_hat_int(c, sigma, paper_kernel(), 0.0, h2).unwrap().value
    });
    let (m, _) = mean_se(&values);
    assert!((m - F0).abs() <= 0.2, "int mean {m}");
}

#[test]
fn nearest_parent_degrades_with_scale() {
    let n = 1000usize;
    let h = (n as f64).powf(-0.2);
    let run = |tau: f64| {
        let sigma = (n as f64).powf(tau);
        rmse(
            &iid_values(n, sigma, 200, 18, |c| {
                nearest_parent_density(c, sigma, paper_kernel(), 0.0, h).unwrap()
            }),
            F0,
        )
    };
    let (small, large) = (run(-2.0), run(-0.9));
    assert!(small < large, "rmse {small} at n^-2 vs {large} at n^-0.9");
}

#[test]
fn dutch_cdf_mean() {
    let (n, sigma) = (10_000usize, 0.5);
    let h = (sigma * n as f64).powf(-0.2);
    let values = iid_values(n, sigma, 200, 19, |c| {
        dutch_cdf(c, sigma, rect_kernel(), 0.0, h).unwrap()
    });
    let (m, _) = mean_se(&values);
    assert!((m - 0.6875).abs() <= 0.05, "dutch mean {m}");
}

/// Frozen constant of the Brown variance guard: the ratio fitted once on
/// seed 20 was 0.0686, rounded up with headroom.
const BROWN_C: f64 = 0.1;

#[test]
fn brown_variance_guard() {
    let n = 1000usize;
    let sigma = 1.0 / n as f64;
    let z0 = 0.25;
    let values = iid_values(n, sigma, 1000, 20, |c| brown_cdf(c, sigma, n, z0).unwrap());
    let var = common::sample_variance(&values);
    let scale = (1.0 / n as f64 + sigma) * (4.5 * sigma * z0 * n as f64).exp();
    assert!(
        var <= BROWN_C * scale,
        "variance {var}, ratio {}",
        var / scale
    );
}

/// `G(z) = P(|D| ≤ z)` by quadrature of the density.
fn g_cdf(z: f64) -> f64 {
    simpson(beta_density, -z, z, 2000)
}

#[test]
fn counting_cdf_mean() {
    let (n, sigma, z0) = (1000usize, 1e-4, 0.25);
    let values = iid_values(n, sigma, 1000, 21, |c| counting_cdf(c, sigma, z0).unwrap());
    let (m, se) = mean_se(&values);
    let truth = g_cdf(z0);
    assert_abs_diff_eq!(
        truth,
        common::beta_cdf(0.25) - common::beta_cdf(-0.25),
        epsilon = 1e-12
    );
    assert!((m - truth).abs() <= 4.0 * se, "{m} ± {se} vs {truth}");
}

#[test]
fn counting_density_mean() {
    let (n, sigma, z0) = (1000usize, 1e-4, 0.25);
    let h = (n as f64).powf(-0.2);
    let values = iid_values(n, sigma, 1000, 22, |c| {
        counting_density(c, sigma, h, z0).unwrap()
    });
    let (m, se) = mean_se(&values);
    // Density of |D| and its rectangular-kernel smoothing at bandwidth h.
    let g = |z: f64| beta_density(z) + beta_density(-z);
    let smoothed = simpson(g, z0 - h / 2.0, z0 + h / 2.0, 2000) / h;
    assert_abs_diff_eq!(g(z0), 2.25, epsilon = 1e-12);
    assert_abs_diff_eq!(smoothed, 2.25 - h * h, epsilon = 1e-9);
    assert!(
        (m - smoothed).abs() <= 4.0 * se,
        "{m} ± {se} vs K_h*g = {smoothed}"
    );
}

#[test]
fn interaction_regime_bias_shrinks_linearly() {
    let model = make_beta23_model();
    let p = ModelParams::new(200, 1.0, 1.0, 0.05).unwrap();
    let h1 = 8.0;
    let errors: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&h2| {
            let o = bias_oracle(
                &p,
                &model,
                paper_kernel(),
                0.0,
                Bandwidths::new(h1, h2).unwrap(),
            )
            .unwrap();
            (h1 * o.v_sigma - F0).abs()
        })
        .collect();
    let c = errors[0];
    assert!(
        errors[1] <= c * 0.5 + 1e-12 && errors[2] <= c * 0.25 + 1e-12,
        "{errors:?}"
    );
}

#[test]
fn v_sigma_bound() {
    let model = make_beta23_model();
    let f_sup = 16.0 / 9.0;
    let k_prime_l1 = 2.0;
    for (sigma, h1, h2, z0) in [
        (0.05, 4.0, 1.0, 0.0),
        (0.2, 0.2, 40.0, 0.1),
        (0.01, 10.0, 0.3, -0.3),
        (1.0, 0.5, 0.5, 0.4),
    ] {
        let p = ModelParams::new(100, 1.0, 1.0, sigma).unwrap();
        let o = bias_oracle(
            &p,
            &model,
            paper_kernel(),
            z0,
            Bandwidths::new(h1, h2).unwrap(),
        )
        .unwrap();
        assert!(
            o.v_sigma.abs() <= f_sup * k_prime_l1 / h1 + 1e-12,
            "{sigma} {h1} {h2}: {}",
            o.v_sigma
        );
        assert_abs_diff_eq!(
            o.expected_statistic,
            sigma * 100.0 * o.u_sigma + o.v_sigma,
            epsilon = 0.0
        );
    }
}

#[test]
fn scale_sweep_coarse_trend() {
    let n = 1000;
    let p = ModelParams::new(n, 1.0, 1.0, 1.0).unwrap();
    let mut cfg = McConfig::new(
        p,
        make_beta23_model(),
        McConfig::tau_grid(n, &[-1.0, -0.6, -0.2]),
    );
    cfg.estimators = vec![EstimatorId::F1, EstimatorId::F2];
    cfg.master_seed = 23;
    let rows = run_mc(&cfg).unwrap();
    let series = |e: &str| {
        rows.iter()
            .filter(|r| r.estimator == e)
            .map(|r| r.rmse)
            .collect::<Vec<_>>()
    };
    let f1 = series("f1");
    assert!(f1.windows(2).all(|w| w[1] <= w[0]), "f1 {f1:?}");
    let f2: Vec<f64> = series("f2").into_iter().filter(|v| v.is_finite()).collect();
    assert!(f2.windows(2).all(|w| w[1] >= w[0]), "f2 {f2:?}");
    for r in &rows {
        assert!(
            !r.is_valid()
                || (r.rmse.powi(2) - (r.bias.powi(2) + r.variance)).abs() <= 1e-10 * r.rmse.powi(2)
        );
    }
}

/// Laplace(0.5, 0.1) parent, n = 2000, σ = 0.5, h1 = 0.5.
fn spectral_setup(nodes: usize) -> (SpectralWeights, ModelParams, f64) {
    let parent = ParentDistribution::laplace(0.5, 0.1).unwrap();
    let p = ModelParams::new(2000, 1.0, 1.0, 0.5).unwrap();
    let cfg = SpectralConfig {
        quadrature_nodes: nodes,
        ..SpectralConfig::default()
    };
    let h1 = 0.5;
    (
        SpectralWeights::new(&parent, Kernel::BandLimited, h1, p.sigma, &cfg).unwrap(),
        p,
        h1,
    )
}

#[test]
fn spectral_weight_mass() {
    let (w, p, h1) = spectral_setup(4096);
    let centre = 0.5 / p.sigma;
    let r = 400.0 * h1;
    let mass = simpson(|x| w.eval(x).unwrap(), -centre - r, centre + r, 40_000);
    assert!((mass - 1.0).abs() <= 1e-4, "mass {mass}");
}

#[test]
fn spectral_node_doubling() {
    let (w1, p, _) = spectral_setup(4096);
    let (w2, _, _) = spectral_setup(8192);
    let clouds = sample_cox_with_parents(
        &p,
        &make_beta23_model(),
        ParentLaw::Laplace {
            location: 0.5,
            scale: 0.1,
        },
        SeedSpec::new(24, 0),
    );
    let a = spectral_deconv_with(&clouds, &p, &w1, 0.0).unwrap().value;
    let b = spectral_deconv_with(&clouds, &p, &w2, 0.0).unwrap().value;
    assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
}
