//! Minimax rates, the Monte Carlo sweep over dispersal scales and result
//! export.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    bandwidth_rule, f_hat_1, f_hat_2, f_hat_dec, f_hat_int, Bandwidths, Estimate, EstimatorId,
    H1Mode, DEFAULT_BANDWIDTH_CONSTANT,
};
use crate::kernels::Kernel;
use crate::model::{DispersalModel, ModelParams, PointClouds};
use crate::seed::SeedSpec;
use crate::simulation::{ClusterDraw, ParentLaw};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DISPERSAL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub s: f64,
    pub n: u64,
    pub sigma: f64,
}

impl RateParams {
    pub fn new(s: f64, n: u64, sigma: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("s", format!("must be positive, got {s}")));
        }
        if n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(invalid("sigma", format!("must lie in (0, 1], got {sigma}")));
        }
        Ok(Self { s, n, sigma })
    }
}

/// The three scales separating the four rate regimes, increasing:
/// `1/n`, `n^{-(2s+1)/(2s+2)}`, `n^{-(4s+3)/(6s+6)}`.
pub fn rate_boundaries(s: f64, n: u64) -> [f64; 3] {
    let n = n as f64;
    [
        1.0 / n,
        n.powf(-(2.0 * s + 1.0) / (2.0 * s + 2.0)),
        n.powf(-(4.0 * s + 3.0) / (6.0 * s + 6.0)),
    ]
}

/// Index `0..4` of the regime containing `σ`.
pub fn rate_regime(rp: &RateParams) -> usize {
    let b = rate_boundaries(rp.s, rp.n);
    if rp.sigma <= b[0] {
        0
    } else if rp.sigma < b[1] {
        1
    } else if rp.sigma < b[2] {
        2
    } else {
        3
    }
}

/// The branch of the rate for regime `regime`, evaluated at any `σ`.
pub fn rate_branch(regime: usize, s: f64, n: u64, sigma: f64) -> f64 {
    let n = n as f64;
    match regime {
        0 => n.powf(-s / (2.0 * s + 1.0)),
        1 => sigma.powf(s / (2.0 * s + 1.0)),
        2 => sigma * n.sqrt(),
        _ => (n * sigma).powf(-s / (2.0 * s + 3.0)),
    }
}

/// Minimax rate `r_n(σ)`.
pub fn rate_fn(rp: &RateParams) -> f64 {
    rate_branch(rate_regime(rp), rp.s, rp.n, rp.sigma)
}

/// A grid point of a sweep; `tau` is `log_n σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub sigma: f64,
    pub tau: f64,
}

impl GridPoint {
    pub fn from_tau(n: u64, tau: f64) -> Self {
        Self {
            sigma: (n as f64).powf(tau),
            tau,
        }
    }

    pub fn from_sigma(n: u64, sigma: f64) -> Self {
        Self {
            sigma,
            tau: sigma.ln() / (n as f64).ln(),
        }
    }
}

/// Monte Carlo sweep settings. The `sigma` field of `params` is ignored.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub params: ModelParams,
    pub model: DispersalModel,
    pub estimators: Vec<EstimatorId>,
    pub grid: Vec<GridPoint>,
    pub z0: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub s: f64,
    pub c: f64,
    pub h1_mode: H1Mode,
    pub kernel: Kernel,
    /// Worker threads; `None` defers to `DISPERSAL_THREADS`, then rayon's default.
    pub threads: Option<usize>,
}

impl McConfig {
    /// Defaults: all four estimators, `z0 = 0`, 100 replicates, seed 1,
    /// `s = 2`, `c = 0.7`, practical `h1` in `f2`, the flat-top kernel.
    pub fn new(params: ModelParams, model: DispersalModel, grid: Vec<GridPoint>) -> Self {
        Self {
            params,
            model,
            estimators: EstimatorId::ALL.to_vec(),
            grid,
            z0: 0.0,
            replicates: 100,
            master_seed: 1,
            s: 2.0,
            c: DEFAULT_BANDWIDTH_CONSTANT,
            h1_mode: H1Mode::Practical,
            kernel: Kernel::Paper,
            threads: None,
        }
    }

    /// The grid `σ = n^τ` for the given exponents.
    pub fn tau_grid(n: u64, taus: &[f64]) -> Vec<GridPoint> {
        taus.iter().map(|&t| GridPoint::from_tau(n, t)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(invalid("replicates", "must be at least 2"));
        }
        if self.grid.is_empty() {
            return Err(invalid("grid", "must contain at least one scale"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "must name at least one estimator"));
        }
        for g in &self.grid {
            self.params.with_sigma(g.sigma)?;
        }
        if !(self.s > 0.0 && self.c > 0.0) {
            return Err(invalid("s", "s and c must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResultRow {
    pub estimator: String,
    pub n: u64,
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub z0: f64,
    pub h1: f64,
    pub h2: f64,
    pub replicates: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub rmse: f64,
    pub flag: String,
    pub seed: u64,
}

impl McResultRow {
    /// Whether the row carries usable statistics.
    pub fn is_valid(&self) -> bool {
        self.rmse.is_finite()
    }
}

/// Exact header of the results CSV.
pub const RESULTS_HEADER: &str =
    "estimator,n,lambda,mu,sigma,tau,z0,h1,h2,replicates,mean,bias,variance,rmse,flag,seed";

fn evaluate(
    id: EstimatorId,
    clouds: &PointClouds,
    p: &ModelParams,
    k: Kernel,
    z0: f64,
    bw: Bandwidths,
    mode: H1Mode,
) -> Result<Estimate> {
    match id {
        EstimatorId::F1 => f_hat_1(clouds, p, k, z0, bw.h1),
        EstimatorId::F2 => f_hat_2(clouds, p, k, z0, bw.h2, mode),
        EstimatorId::Dec => f_hat_dec(clouds, p, k, z0, bw.h1),
        EstimatorId::Int => f_hat_int(clouds, p.sigma, k, z0, bw.h2),
    }
}

/// Bandwidths a sweep uses for one cell.
pub fn cell_bandwidths(cfg: &McConfig, id: EstimatorId, sigma: f64) -> Result<Bandwidths> {
    let p = cfg.params.with_sigma(sigma)?;
    let bw = bandwidth_rule(&p, cfg.s, cfg.c, id)?;
    Ok(match (id, cfg.h1_mode) {
        (EstimatorId::F2, H1Mode::Theoretical) => Bandwidths {
            h1: H1Mode::Theoretical.h1(sigma, bw.h2),
            h2: bw.h2,
        },
        _ => bw,
    })
}

pub(crate) fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.or(from_env).filter(|&t| t > 0) {
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Io(e.to_string()))
}

type Cell = std::result::Result<Estimate, String>;

/// Runs the sweep. Replicate `r` draws its parents, offspring counts and
/// standardised displacements from stream `r` of `master_seed` once and
/// reuses them at every grid scale. Rows are ordered by grid point, then by
/// estimator in configuration order.
pub fn run_mc(cfg: &McConfig) -> Result<Vec<McResultRow>> {
    cfg.validate()?;
    let truth = cfg.model.density(cfg.z0);
    let mut bandwidths = Vec::with_capacity(cfg.grid.len());
    for g in &cfg.grid {
        let row: Vec<Bandwidths> = cfg
            .estimators
            .iter()
            .map(|&id| cell_bandwidths(cfg, id, g.sigma))
            .collect::<Result<_>>()?;
        bandwidths.push(row);
    }
    let params: Vec<ModelParams> = cfg
        .grid
        .iter()
        .map(|g| cfg.params.with_sigma(g.sigma))
        .collect::<Result<_>>()?;

    let pool = thread_pool(cfg.threads)?;
    let results: Vec<Vec<Vec<Cell>>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = SeedSpec::new(cfg.master_seed, r as u64);
                let draw = ClusterDraw::cox(
                    cfg.params.parent_intensity(),
                    cfg.params.mu,
                    &cfg.model,
                    ParentLaw::Uniform,
                    seed,
                );
                params
                    .iter()
                    .zip(&bandwidths)
                    .map(|(p, bws)| {
                        let clouds = draw.realize(p.sigma);
                        cfg.estimators
                            .iter()
                            .zip(bws)
                            .map(|(&id, &bw)| {
                                evaluate(id, &clouds, p, cfg.kernel, cfg.z0, bw, cfg.h1_mode)
                                    .map_err(|e| e.to_string())
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    });

    let mut rows = Vec::new();
    for (g_idx, g) in cfg.grid.iter().enumerate() {
        for (e_idx, &id) in cfg.estimators.iter().enumerate() {
            let cells = results.iter().map(|rep| &rep[g_idx][e_idx]);
            rows.push(aggregate(
                cfg,
                g,
                id,
                bandwidths[g_idx][e_idx],
                truth,
                cells,
            ));
        }
    }
    Ok(rows)
}

fn aggregate<'a>(
    cfg: &McConfig,
    g: &GridPoint,
    id: EstimatorId,
    bw: Bandwidths,
    truth: f64,
    cells: impl Iterator<Item = &'a Cell>,
) -> McResultRow {
    let mut values = Vec::with_capacity(cfg.replicates);
    let mut flags = crate::estimators::Flags::default();
    let mut error: Option<&str> = None;
    let mut failures = 0usize;
    for c in cells {
        match c {
            Ok(e) => {
                values.push(e.value);
                flags = flags.merge(e.flags);
            }
            Err(msg) => {
                failures += 1;
                error.get_or_insert(msg.as_str());
            }
        }
    }
    let (mean, bias, variance, rmse) = summarize(&values, truth);
    let flag = match error {
        None => flags.tag(),
        Some(msg) => {
            let msg: String = msg
                .chars()
                .map(|ch| if ch == ',' { ';' } else { ch })
                .collect();
            format!("failed({failures}): {msg}")
        }
    };
    McResultRow {
        estimator: id.name().to_string(),
        n: cfg.params.n,
        lambda: cfg.params.lambda,
        mu: cfg.params.mu,
        sigma: g.sigma,
        tau: g.tau,
        z0: cfg.z0,
        h1: bw.h1,
        h2: bw.h2,
        replicates: values.len(),
        mean,
        bias,
        variance,
        rmse,
        flag,
        seed: cfg.master_seed,
    }
}

/// Mean, bias, (population) variance and `rmse = sqrt(bias² + variance)`.
pub fn summarize(values: &[f64], truth: f64) -> (f64, f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let bias = mean - truth;
    (mean, bias, variance, (bias * bias + variance).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlopeAxis {
    LogN,
    LogSigma,
}

/// Least-squares slope of `log rmse` against `log n` or `log σ`.
pub fn fit_slope(rows: &[McResultRow], axis: SlopeAxis) -> Result<f64> {
    if rows.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 rows, got {}",
            rows.len()
        )));
    }
    let mut pts = Vec::with_capacity(rows.len());
    for r in rows {
        if !(r.rmse > 0.0 && r.rmse.is_finite()) {
            return Err(Error::Degenerate(format!(
                "rmse must be positive, got {}",
                r.rmse
            )));
        }
        let x = match axis {
            SlopeAxis::LogN => (r.n as f64).ln(),
            SlopeAxis::LogSigma => r.sigma.ln(),
        };
        pts.push((x, r.rmse.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 * m {
        return Err(Error::Degenerate("covariate is constant".into()));
    }
    Ok(sxy / sxx)
}

/// Writes rows under [`RESULTS_HEADER`].
pub fn write_results_csv<W: Write>(rows: &[McResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(RESULTS_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn results_csv_string(rows: &[McResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<McResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::Parse(format!(
            "unexpected results header `{}`",
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Polyline plot of `log_n rmse` against `log_n σ`, one line per
/// estimator, with the minimax rate for smoothness `s` as a dashed
/// reference.
pub fn results_svg(rows: &[McResultRow], s: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let valid: Vec<&McResultRow> = rows
        .iter()
        .filter(|r| r.is_valid() && r.rmse > 0.0)
        .collect();
    let n = rows.first().map(|r| r.n).unwrap_or(2).max(2);
    let ln_n = (n as f64).ln();
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &valid {
        let pt = (r.tau, r.rmse.ln() / ln_n);
        match series.iter_mut().find(|(name, _)| *name == r.estimator) {
            Some((_, pts)) => pts.push(pt),
            None => series.push((r.estimator.clone(), vec![pt])),
        }
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.tau);
        x1 = x1.max(r.tau);
    }
    if !x0.is_finite() {
        (x0, x1) = (-2.0, 0.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    let reference: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let tau = x0 + (x1 - x0) * i as f64 / 200.0;
            let sigma = (n as f64).powf(tau).min(1.0);
            (tau, rate_fn(&RateParams { s, n, sigma }).ln() / ln_n)
        })
        .collect();
    let all_y = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.1))
        .chain(reference.iter().map(|q| q.1));
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in all_y {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let poly = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += &format!(
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = H - M,
        r = W - M
    );
    svg += &format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">log_n(sigma)</text>\n",
        W / 2.0,
        H - 12.0
    );
    svg += &format!(
        "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">log_n(rmse)</text>\n",
        H / 2.0,
        H / 2.0
    );
    for (i, t) in [x0, x1].iter().enumerate() {
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"10\" text-anchor=\"{}\">{:.2}</text>\n",
            sx(*t),
            H - M + 14.0,
            if i == 0 { "start" } else { "end" },
            t
        );
    }
    for t in [y0, y1] {
        svg += &format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{:.2}</text>\n",
            M - 4.0,
            sy(t),
            t
        );
    }
    svg += &format!(
        "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" points=\"{}\"/>\n",
        poly(&reference)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            poly(pts)
        );
        svg += &format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            W - M - 40.0,
            M + 14.0 * (i as f64 + 1.0)
        );
    }
    svg += &format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"gray\">rate</text>\n",
        W - M - 40.0,
        M + 14.0 * (series.len() as f64 + 1.0)
    );
    svg += "</svg>\n";
    svg
}
