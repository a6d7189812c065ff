//! Evaluates the four point estimators of `f(0)` on single Cox samples
//! across dispersal scales, with the default bandwidth rules, and compares
//! the mean of the normalized joint statistic with its quadrature oracle.
//!
//! ```text
//! cargo run --release --example estimate_across_scales
//! ```

use dispersal::estimators::{
    bandwidth_rule, bias_oracle, f_hat_1, f_hat_2, f_hat_dec, f_hat_int, normalized_statistic,
    Bandwidths, EstimatorId, H1Mode,
};
use dispersal::kernels::paper_kernel;
use dispersal::model::{make_beta23_model, ModelParams};
use dispersal::seed::SeedSpec;
use dispersal::simulation::sample_cox;

fn main() -> dispersal::Result<()> {
    let model = make_beta23_model();
    let k = paper_kernel();
    let n = 1000u64;
    println!("true f(0) = {}", model.density(0.0));
    println!(
        "{:>6} {:>9} {:>9} {:>9} {:>9}",
        "tau", "f1", "f2", "dec", "int"
    );
    for tau in [-2.0, -1.5, -1.0, -0.6, -0.3, 0.0] {
        let p = ModelParams::new(n, 1.0, 1.0, (n as f64).powf(tau))?;
        let c = sample_cox(&p, &model, SeedSpec::new(11, 0));
        let h1 = bandwidth_rule(&p, 2.0, 0.7, EstimatorId::F1)?.h1;
        let h2 = bandwidth_rule(&p, 2.0, 0.7, EstimatorId::F2)?.h2;
        let f1 = f_hat_1(&c, &p, k, 0.0, h1)?;
        let f2 = f_hat_2(&c, &p, k, 0.0, h2, H1Mode::Practical).map(|e| format!("{:9.4}", e.value));
        let dec = f_hat_dec(&c, &p, k, 0.0, h1)?;
        let int = f_hat_int(&c, p.sigma, k, 0.0, h2)?;
        println!(
            "{tau:>6.1} {:9.4} {:>9} {:9.4} {:9.4}   [{}]",
            f1.value,
            f2.unwrap_or_else(|_| "n/a".into()),
            dec.value,
            int.value,
            f1.flags.tag()
        );
    }

    let p = ModelParams::new(200, 1.0, 1.0, 0.05)?;
    let bw = Bandwidths::new(4.0, 1.0)?;
    let oracle = bias_oracle(&p, &model, k, 0.0, bw)?;
    let reps = 2000;
    let mean = (0..reps)
        .map(|r| {
            normalized_statistic(
                &sample_cox(&p, &model, SeedSpec::new(12, r)),
                &p,
                k,
                0.0,
                bw,
            )
        })
        .sum::<dispersal::Result<f64>>()?
        / reps as f64;
    println!(
        "decomposition: U = {:.6}, V = {:.6}, expected statistic {:.5}, MC mean over {reps} samples {mean:.5}",
        oracle.u_sigma, oracle.v_sigma, oracle.expected_statistic
    );
    Ok(())
}
