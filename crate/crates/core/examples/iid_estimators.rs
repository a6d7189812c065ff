//! Estimators for the i.i.d. pair model: nearest-parent matching, the
//! nearest-parent density, Brown's and the counting CDF estimators, the
//! counting density and the CDF deconvolution estimator.
//!
//! ```text
//! cargo run --release --example iid_estimators
//! ```

use dispersal::iid::{
    brown_cdf, counting_cdf, counting_density, dutch_cdf, nearest_match, nearest_parent_density,
};
use dispersal::kernels::{paper_kernel, rect_kernel};
use dispersal::model::make_beta23_model;
use dispersal::seed::SeedSpec;
use dispersal::simulation::sample_iid_pairs;

fn main() -> dispersal::Result<()> {
    let model = make_beta23_model();
    let n = 1000usize;
    let z0 = 0.25;
    let g = model.cdf(z0) - model.cdf(-z0);
    println!(
        "G(0.25) = P(|D| <= 0.25) = {g:.4}, f(0) = {}",
        model.density(0.0)
    );
    println!(
        "{:>7} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "log10 s", "mismatch", "nearest", "brown", "counting", "count-dns"
    );
    for lg in [-5.0, -4.0, -3.0, -2.5, -2.0] {
        let sigma = 10f64.powf(lg);
        let c = sample_iid_pairs(n, sigma, &model, SeedSpec::new(5, 0))?;
        let m = nearest_match(&c, sigma)?;
        let truth = c.parentage().expect("simulated");
        let mismatch = m
            .matched_parent_index
            .iter()
            .zip(truth)
            .filter(|(a, b)| c.parents()[**a] != c.parents()[**b])
            .count() as f64
            / n as f64;
        let h = (n as f64).powf(-0.2);
        let brown = brown_cdf(&c, sigma, n, z0)
            .map(|v| format!("{v:9.4}"))
            .unwrap_or_else(|_| "n/a".into());
        println!(
            "{lg:>7.1} {mismatch:9.4} {:9.4} {brown:>9} {:9.4} {:9.4}",
            nearest_parent_density(&c, sigma, paper_kernel(), 0.0, h)?,
            counting_cdf(&c, sigma, z0)?,
            counting_density(&c, sigma, h, z0)?,
        );
    }

    let sigma = 0.5;
    let c = sample_iid_pairs(10_000, sigma, &model, SeedSpec::new(6, 0))?;
    let h = (sigma * 10_000.0f64).powf(-0.2);
    println!(
        "CDF deconvolution at sigma = 0.5: F(0) ~ {:.4} (exact 0.6875)",
        dutch_cdf(&c, sigma, rect_kernel(), 0.0, h)?
    );
    Ok(())
}
