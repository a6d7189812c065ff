//! Tabulates the minimax rate `r_n(σ)` across scales `σ = n^τ` and its four
//! regimes, and shows the bandwidth rules at the same points.
//!
//! ```text
//! cargo run --example rate_curve -- [s] [n]
//! ```

use dispersal::estimators::{bandwidth_rule, EstimatorId};
use dispersal::experiments::{rate_boundaries, rate_fn, rate_regime, RateParams};
use dispersal::model::ModelParams;

fn main() -> dispersal::Result<()> {
    let mut args = std::env::args().skip(1);
    let s: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2.0);
    let n: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);
    let ln = (n as f64).ln();
    let b = rate_boundaries(s, n);
    println!(
        "s = {s}, n = {n}; regime boundaries at tau = {:.3?}",
        b.map(|x| x.ln() / ln)
    );
    println!(
        "{:>6} {:>7} {:>10} {:>10} {:>8} {:>8}",
        "tau", "regime", "rate", "log_n r", "h1(f1)", "h2(f2)"
    );
    for i in 0..=20 {
        let tau = -2.0 + 0.1 * i as f64;
        let sigma = (n as f64).powf(tau);
        let rp = RateParams::new(s, n, sigma)?;
        let r = rate_fn(&rp);
        let p = ModelParams::new(n, 1.0, 1.0, sigma)?;
        println!(
            "{tau:>6.1} {:>7} {r:>10.5} {:>10.4} {:>8.4} {:>8.4}",
            rate_regime(&rp),
            r.ln() / ln,
            bandwidth_rule(&p, s, 0.7, EstimatorId::F1)?.h1,
            bandwidth_rule(&p, s, 0.7, EstimatorId::F2)?.h2,
        );
    }
    Ok(())
}
