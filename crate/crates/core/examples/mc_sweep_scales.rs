//! Monte Carlo sweep of the four point estimators across dispersal scales
//! `σ = n^τ`, printing `log_n rmse` per cell and writing the results CSV
//! and an SVG plot to the temp directory.
//!
//! ```text
//! cargo run --release --example mc_sweep_scales -- [replicates] [n]
//! ```

use std::time::Instant;

use dispersal::experiments::{results_csv_string, results_svg, run_mc, McConfig};
use dispersal::model::{make_beta23_model, ModelParams};

fn main() -> dispersal::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicates: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let n: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);

    let taus: Vec<f64> = (0..=10).map(|i| -2.0 + 0.2 * i as f64).collect();
    let params = ModelParams::new(n, 1.0, 1.0, 1.0)?;
    let mut cfg = McConfig::new(params, make_beta23_model(), McConfig::tau_grid(n, &taus));
    cfg.replicates = replicates;
    cfg.master_seed = 2024;

    let start = Instant::now();
    let rows = run_mc(&cfg)?;
    println!(
        "{} replicates, n = {n}, {:.1?}",
        replicates,
        start.elapsed()
    );
    println!(
        "{:>6} {:>5} {:>10} {:>10} {:>10}  flag",
        "tau", "est", "mean", "rmse", "log_n rmse"
    );
    for r in &rows {
        println!(
            "{:>6.2} {:>5} {:>10.4} {:>10.4} {:>10.3}  {}",
            r.tau,
            r.estimator,
            r.mean,
            r.rmse,
            r.rmse.ln() / (n as f64).ln(),
            r.flag
        );
    }

    let dir = std::env::temp_dir();
    std::fs::write(dir.join("dispersal_sweep.csv"), results_csv_string(&rows)?)?;
    std::fs::write(dir.join("dispersal_sweep.svg"), results_svg(&rows, cfg.s))?;
    println!("wrote {}", dir.join("dispersal_sweep.{csv,svg}").display());
    Ok(())
}
