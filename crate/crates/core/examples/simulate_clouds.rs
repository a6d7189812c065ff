//! Draws parent/offspring clouds from the three models (Cox, one-to-one,
//! i.i.d. pairs) at a few dispersal scales and prints their sizes and the
//! first few positions.
//!
//! ```text
//! cargo run --example simulate_clouds
//! ```

use dispersal::model::{make_beta23_model, validate_model, ModelParams};
use dispersal::seed::SeedSpec;
use dispersal::simulation::{
    sample_cox, sample_iid_pairs, sample_one_to_one, ClusterDraw, ParentLaw,
};

fn preview(v: &[f64]) -> String {
    v.iter()
        .take(4)
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> dispersal::Result<()> {
    let model = make_beta23_model();
    let diag = validate_model(&model, SeedSpec::new(0, 0));
    println!(
        "{}: integral {:.10}, sample mean {:.4} (exact -0.1)",
        model.name(),
        diag.integral,
        diag.sample_mean
    );

    for sigma in [1e-4, 0.05, 1.0] {
        let p = ModelParams::new(100, 1.0, 2.0, sigma)?;
        let seed = SeedSpec::new(7, 0);
        let cox = sample_cox(&p, &model, seed);
        let one = sample_one_to_one(&p, &model, seed);
        let iid = sample_iid_pairs(100, sigma, &model, seed)?;
        println!("sigma = {sigma}");
        println!(
            "  cox      |X| = {:3}, |Y| = {:3}, Y: {}",
            cox.parents().len(),
            cox.offspring().len(),
            preview(cox.offspring())
        );
        println!(
            "  one2one  |X| = {:3}, |Y| = {:3}, Y: {}",
            one.parents().len(),
            one.offspring().len(),
            preview(one.offspring())
        );
        println!(
            "  iid      |X| = {:3}, |Y| = {:3}, Y: {}",
            iid.parents().len(),
            iid.offspring().len(),
            preview(iid.offspring())
        );
    }

    // One draw of the random primitives, realised at several scales.
    let draw = ClusterDraw::cox(100.0, 1.0, &model, ParentLaw::Uniform, SeedSpec::new(7, 1));
    for sigma in [0.001, 0.1, 1.0] {
        let c = draw.realize(sigma);
        println!(
            "shared draw at sigma = {sigma}: Y: {}",
            preview(c.offspring())
        );
    }
    Ok(())
}
