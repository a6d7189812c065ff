//! Command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and maps errors to exit codes: `0` success, `2` invalid
//! input, `3` runtime failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    bandwidth_rule, f_hat_1, f_hat_2, f_hat_dec, f_hat_int, EstimatorId, Flags, H1Mode,
};
use crate::experiments::{
    rate_fn, rate_regime, results_svg, run_mc, thread_pool, write_results_csv, GridPoint, McConfig,
    RateParams,
};
use crate::iid::{brown_cdf, counting_cdf, counting_density, dutch_cdf, nearest_parent_density};
use crate::io::{read_clouds_file, sidecar_path, write_clouds_csv, SimulationSidecar};
use crate::kernels::Kernel;
use crate::model::{model_by_name, ModelParams, PointClouds};
use crate::seed::SeedSpec;
use crate::simulation::{
    count_in, expected_mn, expected_n, expected_nn, sample_iid_pairs, ClusterDraw, Interval,
    MomentQuery, ParentLaw,
};
use crate::spectral::{spectral_bandwidth, spectral_deconv, ParentDistribution, SpectralConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Seed used when none is given; always echoed.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "dispersal",
    version,
    about = "Dispersal densities from parent and offspring point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate parent/offspring clouds and write them as CSV.
    Simulate(Settings),
    /// Evaluate estimators on a clouds file.
    Estimate(Settings),
    /// Monte Carlo sweep over dispersal scales sigma = n^tau.
    McSweep(Settings),
    /// Tabulate the minimax rate.
    Rates(Settings),
    /// Compare analytic cross-moments with Monte Carlo means.
    MomentCheck(Settings),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cox,
    One2one,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Every option of every subcommand. A JSON config file has the same keys
/// as the long flags (with `_` for `-`); flags override the file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Size parameter n.
    #[arg(long)]
    pub n: Option<u64>,
    /// Parent rate lambda (parents ~ Poisson(n lambda)).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean number of offspring per parent.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Dispersal scale sigma in (0, 1].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation point.
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<f64>,
    /// Estimator(s), comma separated: f1, f2, dec, int, spectral, dutch,
    /// nearest, brown, counting, counting-density.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub h1: Option<f64>,
    #[arg(long)]
    pub h2: Option<f64>,
    /// Smoothness used by the bandwidth rules and the rate.
    #[arg(long)]
    pub s: Option<f64>,
    /// Bandwidth constant.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Parent law, e.g. `uniform`, `laplace:b=0.1`, `gaussian:loc=0.5,sd=0.2`.
    #[arg(long)]
    pub parent: Option<String>,
    /// Dispersal density: beta23 (default) or uniform.
    #[arg(long)]
    pub density: Option<String>,
    /// JSON file with default values for these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Input clouds CSV for `estimate`.
    #[arg(long)]
    pub clouds: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Exponents tau with sigma = n^tau, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub taus: Option<Vec<f64>>,
    /// Estimators for `mc-sweep`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// `practical` or `theoretical` choice of h1 in f2.
    #[arg(long)]
    pub h1_mode: Option<String>,
    /// Worker threads (overrides DISPERSAL_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Intervals `lo,hi` for `moment-check`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b2: Option<String>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f),)* config: $top.config }
    };
}

impl Settings {
    fn resolve(self) -> Result<Settings> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base: Settings = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Ok(overlay!(
            self, base, n, lambda, mu, sigma, seed, z0, method, h1, h2, s, c, model, parent,
            density, out, format, clouds, replicates, taus, estimators, h1_mode, threads, a, b, b2
        ))
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn require_n(&self) -> Result<u64> {
        self.n.ok_or_else(|| invalid("n", "required (--n)"))
    }

    fn params(&self, sigma: f64) -> Result<ModelParams> {
        ModelParams::new(
            self.require_n()?,
            self.lambda.unwrap_or(1.0),
            self.mu.unwrap_or(1.0),
            sigma,
        )
    }

    fn sigma(&self) -> Result<f64> {
        self.sigma
            .ok_or_else(|| invalid("sigma", "required (--sigma)"))
    }

    fn parent(&self) -> Result<ParentDistribution> {
        self.parent.as_deref().unwrap_or("uniform").parse()
    }

    fn h1_mode(&self) -> Result<H1Mode> {
        match self.h1_mode.as_deref().unwrap_or("practical") {
            "practical" => Ok(H1Mode::Practical),
            "theoretical" => Ok(H1Mode::Theoretical),
            other => Err(Error::Parse(format!("unknown h1 mode `{other}`"))),
        }
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

fn parse_interval(s: &str) -> Result<Interval> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("interval `{s}` must be `lo,hi`")))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("`{v}` is not a number")))
    };
    Interval::new(p(lo)?, p(hi)?)
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_VALIDATION
                }
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(s) => s.resolve().and_then(|s| simulate(&s, stdout, stderr)),
        Command::Estimate(s) => s.resolve().and_then(|s| estimate(&s, stdout, stderr)),
        Command::McSweep(s) => s.resolve().and_then(|s| mc_sweep(&s, stdout, stderr)),
        Command::Rates(s) => s.resolve().and_then(|s| rates(&s, stdout)),
        Command::MomentCheck(s) => s.resolve().and_then(|s| moment_check(&s, stdout, stderr)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Sends `body` to `--out` or, without it, to stdout.
fn emit(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(p) => {
            let mut f = create(p)?;
            body(&mut f)?;
            f.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn simulate(s: &Settings, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let seed = s.seed();
    writeln!(stderr, "seed: {seed}")?;
    let params = s.params(s.sigma()?)?;
    let dispersal = s.density.as_deref().unwrap_or("beta23");
    let model = model_by_name(dispersal)?;
    let kind = s.model.unwrap_or(ModelKind::Cox);
    let parent = s.parent()?;
    let law = parent
        .law()
        .ok_or_else(|| invalid("parent", "the identity parent cannot be simulated"))?;
    let spec = SeedSpec::new(seed, 0);
    let clouds = match kind {
        ModelKind::Cox => ClusterDraw::cox(params.parent_intensity(), params.mu, &model, law, spec)
            .realize(params.sigma),
        ModelKind::One2one => ClusterDraw::one_to_one(params.parent_intensity(), &model, law, spec)
            .realize(params.sigma),
        ModelKind::Iid => {
            if law != ParentLaw::Uniform {
                return Err(invalid("parent", "the iid model uses uniform parents"));
            }
            sample_iid_pairs(params.n as usize, params.sigma, &model, spec)?
        }
    };
    write_simulation(s, clouds, seed, kind, dispersal, &parent, params, stdout)
}

#[allow(clippy::too_many_arguments)]
fn write_simulation(
    s: &Settings,
    clouds: PointClouds,
    seed: u64,
    kind: ModelKind,
    dispersal: &str,
    parent: &ParentDistribution,
    params: ModelParams,
    stdout: &mut dyn Write,
) -> Result<()> {
    let clouds = clouds.without_parentage();
    match s.format() {
        Format::Csv => emit(s.out.as_deref(), stdout, |w| write_clouds_csv(&clouds, w))?,
        Format::Json => emit(s.out.as_deref(), stdout, |w| {
            serde_json::to_writer_pretty(&mut *w, &clouds)?;
            writeln!(w)?;
            Ok(())
        })?,
        Format::Svg => return Err(invalid("format", "simulate writes csv or json")),
    }
    if let Some(out) = &s.out {
        let kind = serde_json::to_value(kind)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        let meta =
            SimulationSidecar::new(seed, &kind, dispersal, &parent.to_string(), params, &clouds);
        let mut f = create(&sidecar_path(out))?;
        serde_json::to_writer_pretty(&mut f, &meta)?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    method: String,
    n: u64,
    lambda: f64,
    mu: f64,
    sigma: f64,
    z0: f64,
    h1: f64,
    h2: f64,
    value: f64,
    flag: String,
}

fn estimate(s: &Settings, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let path = s
        .clouds
        .as_ref()
        .ok_or_else(|| invalid("clouds", "required (--clouds FILE)"))?;
    let clouds = read_clouds_file(path)?;
    let sigma = s.sigma()?;
    let n = match s.n {
        Some(n) => n,
        None => {
            let n = clouds.parents().len().max(1) as u64;
            writeln!(stderr, "n not given; using n = |X| = {n}")?;
            n
        }
    };
    let params = ModelParams::new(n, s.lambda.unwrap_or(1.0), s.mu.unwrap_or(1.0), sigma)?;
    let z0 = s.z0.unwrap_or(0.0);
    let sm = s.s.unwrap_or(2.0);
    let c = s.c.unwrap_or(crate::estimators::DEFAULT_BANDWIDTH_CONSTANT);
    let mode = s.h1_mode()?;
    let k = Kernel::Paper;
    let methods = s.method.as_deref().unwrap_or("f1");
    let nf = n as f64;
    let mut rows = Vec::new();
    for m in methods.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        let (h1, h2, value, flags) = match m {
            "f1" | "f2" | "dec" | "int" => {
                let id = EstimatorId::from_name(m)?;
                let mut bw = bandwidth_rule(&params, sm, c, id)?;
                if let Some(h) = s.h1 {
                    bw.h1 = h;
                }
                if let Some(h) = s.h2 {
                    bw.h2 = h;
                    if id == EstimatorId::F2 && s.h1.is_none() {
                        bw.h1 = mode.h1(sigma, h);
                    }
                }
                let e = match id {
                    EstimatorId::F1 => f_hat_1(&clouds, &params, k, z0, bw.h1)?,
                    EstimatorId::F2 => {
                        if s.h1.is_some() {
                            return Err(invalid("h1", "f2 derives h1 from h2; use --h1-mode"));
                        }
                        let e = f_hat_2(&clouds, &params, k, z0, bw.h2, mode)?;
                        bw.h1 = mode.h1(sigma, bw.h2);
                        e
                    }
                    EstimatorId::Dec => f_hat_dec(&clouds, &params, k, z0, bw.h1)?,
                    EstimatorId::Int => f_hat_int(&clouds, sigma, k, z0, bw.h2)?,
                };
                (bw.h1, bw.h2, e.value, e.flags)
            }
            "spectral" => {
                let parent = s.parent()?;
                let h1 = match s.h1 {
                    Some(h) => h,
                    None => spectral_bandwidth(&params, sm, &parent)?,
                };
                let e = spectral_deconv(
                    &clouds,
                    &params,
                    &parent,
                    Kernel::BandLimited,
                    z0,
                    h1,
                    &SpectralConfig::default(),
                )?;
                (h1, f64::NAN, e.value, e.flags)
            }
            "dutch" => {
                let h =
                    s.h2.unwrap_or_else(|| (sigma * nf).powf(-1.0 / (2.0 * sm + 1.0)));
                let v = dutch_cdf(&clouds, sigma, Kernel::Rectangular, z0, h)?;
                (f64::NAN, h, v, Flags::default())
            }
            "nearest" => {
                let h = s.h2.unwrap_or_else(|| nf.powf(-1.0 / (2.0 * sm + 1.0)));
                let v = nearest_parent_density(&clouds, sigma, k, z0, h)?;
                (f64::NAN, h, v, Flags::default())
            }
            "brown" => {
                let v = brown_cdf(&clouds, sigma, clouds.offspring().len(), z0)?;
                (f64::NAN, f64::NAN, v, Flags::default())
            }
            "counting" => (
                f64::NAN,
                f64::NAN,
                counting_cdf(&clouds, sigma, z0)?,
                Flags::default(),
            ),
            "counting-density" => {
                let h = s.h2.unwrap_or_else(|| nf.powf(-1.0 / (2.0 * sm + 1.0)));
                (
                    f64::NAN,
                    h,
                    counting_density(&clouds, sigma, h, z0)?,
                    Flags::default(),
                )
            }
            other => return Err(Error::Parse(format!("unknown method `{other}`"))),
        };
        rows.push(EstimateRow {
            method: m.to_string(),
            n,
            lambda: params.lambda,
            mu: params.mu,
            sigma,
            z0,
            h1,
            h2,
            value,
            flag: flags.tag(),
        });
    }
    match s.format() {
        Format::Csv => emit(s.out.as_deref(), stdout, |w| {
            let mut cw = csv::Writer::from_writer(w);
            for r in &rows {
                cw.serialize(r)?;
            }
            if rows.is_empty() {
                cw.write_record([
                    "method", "n", "lambda", "mu", "sigma", "z0", "h1", "h2", "value", "flag",
                ])?;
            }
            cw.flush()?;
            Ok(())
        }),
        Format::Json => emit(s.out.as_deref(), stdout, |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
        Format::Svg => Err(invalid("format", "estimate writes csv or json")),
    }
}

/// Grid exponents of the numerical study.
pub const DEFAULT_TAUS: [f64; 11] = [
    -2.0, -1.8, -1.6, -1.4, -1.2, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0,
];

fn sweep_config(s: &Settings) -> Result<McConfig> {
    let n = s.require_n()?;
    let params = s.params(1.0)?;
    let model = model_by_name(s.density.as_deref().unwrap_or("beta23"))?;
    let grid = match (&s.taus, s.sigma) {
        (Some(t), _) => McConfig::tau_grid(n, t),
        (None, Some(sigma)) => vec![GridPoint::from_sigma(n, sigma)],
        (None, None) => McConfig::tau_grid(n, &DEFAULT_TAUS),
    };
    let mut cfg = McConfig::new(params, model, grid);
    if let Some(e) = &s.estimators.clone().or_else(|| {
        s.method
            .as_ref()
            .map(|m| m.split(',').map(String::from).collect())
    }) {
        cfg.estimators = e
            .iter()
            .map(|x| EstimatorId::from_name(x.trim()))
            .collect::<Result<_>>()?;
    }
    cfg.z0 = s.z0.unwrap_or(0.0);
    cfg.replicates = s.replicates.unwrap_or(100);
    cfg.master_seed = s.seed();
    cfg.s = s.s.unwrap_or(2.0);
    cfg.c = s.c.unwrap_or(crate::estimators::DEFAULT_BANDWIDTH_CONSTANT);
    cfg.h1_mode = s.h1_mode()?;
    cfg.threads = s.threads;
    cfg.validate()?;
    Ok(cfg)
}

fn mc_sweep(s: &Settings, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = sweep_config(s)?;
    writeln!(stderr, "seed: {}", cfg.master_seed)?;
    let rows = run_mc(&cfg)?;
    match s.format() {
        Format::Csv => emit(s.out.as_deref(), stdout, |w| write_results_csv(&rows, w)),
        Format::Json => emit(s.out.as_deref(), stdout, |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
        Format::Svg => {
            let svg = results_svg(&rows, cfg.s);
            match &s.out {
                Some(out) => {
                    emit(Some(out), stdout, |w| write_results_csv(&rows, w))?;
                    let svg_path = out.with_extension("svg");
                    std::fs::write(&svg_path, svg)
                        .map_err(|e| Error::Io(format!("{}: {e}", svg_path.display())))?;
                    Ok(())
                }
                None => Ok(stdout.write_all(svg.as_bytes())?),
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct RateRow {
    s: f64,
    n: u64,
    sigma: f64,
    tau: f64,
    regime: usize,
    rate: f64,
}

fn rates(s: &Settings, stdout: &mut dyn Write) -> Result<()> {
    let n = s.require_n()?;
    let sm = s.s.unwrap_or(2.0);
    let grid = match (&s.taus, s.sigma) {
        (Some(t), _) => McConfig::tau_grid(n, t),
        (None, Some(sigma)) => vec![GridPoint::from_sigma(n, sigma)],
        (None, None) => McConfig::tau_grid(n, &DEFAULT_TAUS),
    };
    let mut rows = Vec::with_capacity(grid.len());
    for g in grid {
        let rp = RateParams::new(sm, n, g.sigma)?;
        rows.push(RateRow {
            s: sm,
            n,
            sigma: g.sigma,
            tau: g.tau,
            regime: rate_regime(&rp) + 1,
            rate: rate_fn(&rp),
        });
    }
    match s.format() {
        Format::Csv => emit(s.out.as_deref(), stdout, |w| {
            let mut cw = csv::Writer::from_writer(w);
            for r in &rows {
                cw.serialize(r)?;
            }
            cw.flush()?;
            Ok(())
        }),
        Format::Json => emit(s.out.as_deref(), stdout, |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
        Format::Svg => Err(invalid("format", "rates writes csv or json")),
    }
}

#[derive(Debug, Serialize)]
struct MomentRow {
    quantity: String,
    analytic: f64,
    mc_mean: f64,
    std_error: f64,
    z_score: f64,
}

fn moment_check(s: &Settings, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let seed = s.seed();
    writeln!(stderr, "seed: {seed}")?;
    let params = s.params(s.sigma()?)?;
    let model = model_by_name(s.density.as_deref().unwrap_or("beta23"))?;
    let a = parse_interval(s.a.as_deref().unwrap_or("0,0.5"))?;
    let b = parse_interval(s.b.as_deref().unwrap_or("0.25,0.75"))?;
    let b2 = parse_interval(s.b2.as_deref().unwrap_or("0.8,1.0"))?;
    let reps = s.replicates.unwrap_or(10_000);
    if reps < 2 {
        return Err(invalid("replicates", "must be at least 2"));
    }
    let q = MomentQuery::new(a, b)?;
    let analytic = [
        expected_n(&params, &model, b)?,
        expected_mn(&params, &model, &q)?,
        expected_nn(&params, &model, b, b2)?,
    ];
    let pool = thread_pool(s.threads)?;
    let samples: Vec<[f64; 3]> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let c =
                    crate::simulation::sample_cox(&params, &model, SeedSpec::new(seed, r as u64));
                let nb = count_in(c.offspring(), b) as f64;
                let ma = count_in(c.parents(), a) as f64;
                let nb2 = count_in(c.offspring(), b2) as f64;
                [nb, ma * nb, nb * nb2]
            })
            .collect()
    });
    let names = [
        format!("E[N([{},{}])]", b.lo, b.hi),
        format!("E[M([{},{}])N([{},{}])]", a.lo, a.hi, b.lo, b.hi),
        format!("E[N([{},{}])N([{},{}])]", b.lo, b.hi, b2.lo, b2.hi),
    ];
    let m = reps as f64;
    let mut rows = Vec::new();
    for k in 0..3 {
        let mean = samples.iter().map(|x| x[k]).sum::<f64>() / m;
        let var = samples.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        rows.push(MomentRow {
            quantity: names[k].clone(),
            analytic: analytic[k],
            mc_mean: mean,
            std_error: se,
            z_score: if se > 0.0 {
                (mean - analytic[k]) / se
            } else {
                0.0
            },
        });
    }
    match s.format() {
        Format::Csv => emit(s.out.as_deref(), stdout, |w| {
            let mut cw = csv::Writer::from_writer(w);
            for r in &rows {
                cw.serialize(r)?;
            }
            cw.flush()?;
            Ok(())
        }),
        Format::Json => emit(s.out.as_deref(), stdout, |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }),
        Format::Svg => Err(invalid("format", "moment-check writes csv or json")),
    }
}
