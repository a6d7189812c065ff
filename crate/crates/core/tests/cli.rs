use std::path::Path;
use std::process::{Command, Output};

use dispersal::io::{read_clouds_file, SimulationSidecar};
use dispersal::model::make_beta23_model;
use dispersal::seed::SeedSpec;
use dispersal::simulation::sample_cox;

fn dispersal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispersal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rates_example() {
    let o = dispersal(&["rates", "--s", "1", "--n", "1000", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,n,sigma,tau,regime,rate"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rate: f64 = row[5].parse().unwrap();
    assert!((rate - 1000f64.powf(-0.2)).abs() < 1e-12);
    assert!((rate - 0.2512).abs() < 1e-4);
}

#[test]
fn simulate_empty_clouds() {
    let o = dispersal(&[
        "simulate", "--n", "10", "--lambda", "0.0001", "--mu", "1", "--sigma", "0.1", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "kind,position\n");
    assert!(stderr(&o).contains("seed: 7"));
}

#[test]
fn simulate_round_trip_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clouds.csv");
    let args = [
        "simulate",
        "--n",
        "200",
        "--sigma",
        "0.05",
        "--seed",
        "42",
        "--out",
        path_str(&out),
    ];
    let o = dispersal(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let read = read_clouds_file(&out).unwrap();
    let p = dispersal::model::ModelParams::new(200, 1.0, 1.0, 0.05).unwrap();
    let direct = sample_cox(&p, &make_beta23_model(), SeedSpec::new(42, 0)).without_parentage();
    assert_eq!(read, direct);

    let meta: SimulationSidecar =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(meta.seed, 42);
    assert_eq!(meta.model, "cox");
    assert_eq!(meta.offspring, direct.offspring().len());
    assert!(chrono::DateTime::parse_from_rfc3339(&meta.created_at).is_ok());

    // Rerunning reproduces the clouds byte for byte; only the sidecar time may differ.
    let first = std::fs::read(&out).unwrap();
    let o = dispersal(&args);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn estimate_reads_simulated_clouds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = dispersal(&[
        "simulate",
        "--n",
        "1000",
        "--sigma",
        "0.5",
        "--seed",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = dispersal(&[
        "estimate",
        "--clouds",
        path_str(&out),
        "--n",
        "1000",
        "--sigma",
        "0.5",
        "--method",
        "f1,dec",
        "--h1",
        "0.3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("method,n,lambda,mu,sigma,z0,h1,h2,value,flag")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "f1");
    let v: f64 = rows[0][8].parse().unwrap();
    assert!(v.is_finite() && v > 0.0 && v < 4.0, "{v}");
}

#[test]
fn mc_sweep_is_reproducible_across_threads() {
    let base = [
        "mc-sweep",
        "--n",
        "200",
        "--taus",
        "-1.5,-0.5,0",
        "--replicates",
        "10",
        "--seed",
        "9",
    ];
    let runs: Vec<String> = ["1", "3"]
        .iter()
        .map(|t| {
            let mut args = base.to_vec();
            args.extend(["--threads", t]);
            let o = dispersal(&args);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            assert!(stderr(&o).contains("seed: 9"));
            stdout(&o)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].starts_with(
        "estimator,n,lambda,mu,sigma,tau,z0,h1,h2,replicates,mean,bias,variance,rmse,flag,seed\n"
    ));
    assert_eq!(runs[0].lines().count(), 1 + 3 * 4);
}

#[test]
fn mc_sweep_config_file_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"n": 300, "taus": [-1.0, 0.0], "replicates": 5, "estimators": ["f1"], "seed": 4}"#,
    )
    .unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dispersal(&[
        "mc-sweep",
        "--config",
        path_str(&cfg),
        "--replicates",
        "6",
        "--format",
        "svg",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(
        csv.lines().nth(1).unwrap().contains(",6,"),
        "flag should override config: {csv}"
    );
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn moment_check_reports_z_scores() {
    let o = dispersal(&[
        "moment-check",
        "--n",
        "20",
        "--sigma",
        "0.2",
        "--replicates",
        "2000",
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("quantity,analytic,mc_mean,std_error,z_score\n"));
    for line in text.lines().skip(1) {
        let z: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(z.abs() < 5.0, "{line}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(dispersal(&["rates", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        dispersal(&["simulate", "--n", "10", "--sigma", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dispersal(&["estimate", "--sigma", "0.1"]).status.code(),
        Some(2)
    );
    let o = dispersal(&[
        "estimate",
        "--clouds",
        "/nonexistent/clouds.csv",
        "--sigma",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(dispersal(&["--help"]).status.code(), Some(0));
}
