//! Analytic cross moments E[M(A)N(B)] and E[N(B1)N(B2)] of the Cox model
//! against Monte Carlo means.
//!
//! ```text
//! cargo run --release --example moment_oracles
//! ```

use dispersal::model::{make_beta23_model, ModelParams};
use dispersal::seed::SeedSpec;
use dispersal::simulation::{
    count_in, expected_mn, expected_nn, sample_cox, Interval, MomentQuery,
};

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn main() -> dispersal::Result<()> {
    let model = make_beta23_model();
    let p = ModelParams::new(50, 1.0, 1.0, 0.1)?;
    let (a, b) = (Interval::new(0.0, 0.5)?, Interval::new(0.2, 0.4)?);
    let (b1, b2) = (Interval::new(0.2, 0.3)?, Interval::new(0.35, 0.45)?);
    let mn = expected_mn(&p, &model, &MomentQuery::new(a, b)?)?;
    let nn = expected_nn(&p, &model, b1, b2)?;

    let reps = 50_000;
    let (mut x, mut y) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for r in 0..reps as u64 {
        let c = sample_cox(&p, &model, SeedSpec::new(1, r));
        x.push(count_in(c.parents(), a) as f64 * count_in(c.offspring(), b) as f64);
        y.push(count_in(c.offspring(), b1) as f64 * count_in(c.offspring(), b2) as f64);
    }
    for (name, exact, v) in [("E[M(A)N(B)]", mn, &x), ("E[N(B1)N(B2)]", nn, &y)] {
        let (m, se) = mean_se(v);
        println!(
            "{name:>14}: analytic {exact:.4}, MC {m:.4} ± {se:.4}, z = {:+.2}",
            (m - exact) / se
        );
    }
    Ok(())
}
