//! `bufferloss`: packet-level simulation of a finite buffer near criticality,
//! closed-form loss statistics for the matching reflected drift–diffusion,
//! and comparison harnesses between the two.
//!
//! Exit codes: 0 success (all comparison rows pass), 1 runtime or comparison
//! failure, 2 invalid input. Errors are single lines on stderr.

mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use bufferloss::loss::{
    classify_regime, conditional_loss_moment, loss_correlator, loss_moment, loss_pdf,
    loss_product_moment, loss_variance_longtime, mean_idleness, mean_loss, prob_any_loss,
    CorrMethod, CorrRegime, CorrelatorRequest, LossMomentRequest, LossPdf, LossPdfPoint,
    MomentMethod, PdfMethod,
};
use bufferloss::propagator::{
    boundary_return_laplace, stationary_cdf, stationary_density, PropagatorParams,
};
use bufferloss::sim::{
    aggregate_windows, batched_mean_se, loss_window_correlation, run, run_ensemble,
    windowed_loss_moments, RunSummary, WindowSeries, RNG_NAME,
};

use config::{defaults, tightened, ComparisonSpec, ConfigError, Experiment};
use output::{float, LagRow, ReportRow};

#[derive(Parser)]
#[command(name = "bufferloss", version, about = "Finite-buffer packet loss near criticality")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one packet-level simulation; write summary.csv and windows.csv
    Simulate(ConfigArg),
    /// Run an ensemble and compare pooled statistics against the closed forms
    Compare(ConfigArg),
    /// Sweep loss–loss window correlations over the configured lag grid
    Correlate(ConfigArg),
    /// Evaluate one closed-form statistic
    #[command(subcommand)]
    Analytic(Stat),
    /// Print version, core library, and generator identifiers
    Version,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the JSON experiment configuration
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MomentMethodArg {
    Convolution,
    LaplaceInversion,
    Asymptotic,
}

impl From<MomentMethodArg> for MomentMethod {
    fn from(m: MomentMethodArg) -> Self {
        match m {
            MomentMethodArg::Convolution => MomentMethod::Convolution,
            MomentMethodArg::LaplaceInversion => MomentMethod::LaplaceInversion,
            MomentMethodArg::Asymptotic => MomentMethod::Asymptotic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PdfMethodArg {
    Inversion,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Boundary {
    /// The loss boundary (buffer full)
    Full,
    /// The idle boundary (buffer empty); evaluated via the drift mirror
    Empty,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrMethodArg {
    Quadrature,
    Asymptotic,
}

#[derive(Subcommand)]
enum Stat {
    /// Stationary occupancy density p(ell; v)
    StationaryDensity {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        ell: f64,
    },
    /// Stationary occupancy CDF at ell
    StationaryCdf {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        ell: f64,
    },
    /// Mean lost traffic over a window of reduced length tau, stationary start
    MeanLoss {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Mean idle deficit over a window of reduced length tau, stationary start
    MeanIdleness {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
    },
    /// k-th moment of the window loss, stationary start
    LossMoment {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long, value_enum, default_value = "laplace-inversion")]
        method: MomentMethodArg,
    },
    /// k-th moment of the window loss conditioned on the starting occupancy
    ConditionalLossMoment {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        ell: f64,
    },
    /// Occupancy propagator density w(end <- start; tau)
    Propagator {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        end: f64,
    },
    /// Boundary-return density: Laplace domain with --eps, time domain with --tau
    BoundaryReturn {
        #[arg(long, value_enum)]
        which: Boundary,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Density (or long-time atom) of the window-loss amount at x
    LossPdf {
        #[arg(long)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long, value_enum, default_value = "inversion")]
        method: PdfMethodArg,
    },
    /// Probability that a window of reduced length tau loses anything
    ProbAnyLoss {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Long-window variance of the window loss (tau >= 10)
    LossVariance {
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Covariance of losses in two windows; t-sep is end-to-start, original units
    Correlator {
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long)]
        t_sep: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long, value_enum, default_value = "quadrature")]
        method: CorrMethodArg,
    },
}

/// Exit-code-carrying error: invalid input (2) or runtime failure (1).
enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.0)
    }
}

/// Parameter rejections are invalid input; convergence, regime, and data
/// shortfalls are runtime failures.
impl From<bufferloss::Error> for CliError {
    fn from(e: bufferloss::Error) -> Self {
        match e {
            bufferloss::Error::InvalidParameter { .. } | bufferloss::Error::DeltaInitial => {
                CliError::Invalid(format!("invalid input: {e}"))
            }
            _ => CliError::Runtime(format!("runtime failure: {e}")),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(format!("runtime failure: {e:#}"))
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(&a.config),
        Cmd::Compare(a) => cmd_compare(&a.config),
        Cmd::Correlate(a) => cmd_correlate(&a.config),
        Cmd::Analytic(stat) => cmd_analytic(stat).map(|()| true),
        Cmd::Version => {
            println!("bufferloss {} (rng {RNG_NAME})", env!("CARGO_PKG_VERSION"));
            Ok(true)
        }
    }
}

// --- simulate -------------------------------------------------------------

fn cmd_simulate(path: &Path) -> Result<bool, CliError> {
    let exp = config::load(path)?;
    let (summary, series) = run(&exp.run_config(0)).map_err(CliError::from)?;
    std::fs::create_dir_all(&exp.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", exp.output_dir.display())))?;
    let summary_path = exp.output_dir.join("summary.csv");
    let windows_path = exp.output_dir.join("windows.csv");
    output::write_summary(&summary_path, &summary, &exp.config_hash)?;
    output::write_windows(&windows_path, &series)?;
    println!(
        "simulated {} time units (warmup {}): {} packets arrived, {} dropped",
        summary.duration, summary.warmup, summary.packets_arrived, summary.packets_dropped
    );
    println!(
        "lost traffic {:.6e}, idle deficit {:.6e}, conservation residual {:.3e} (budget {:.3e})",
        summary.lost_traffic,
        summary.idle_deficit,
        summary.conservation_residual,
        summary.conservation_tol
    );
    println!("wrote {} and {}", summary_path.display(), windows_path.display());
    Ok(true)
}

// --- compare ----------------------------------------------------------------

/// A comparison row resolved against defaults before any simulation runs.
struct Planned {
    name: String,
    factor: usize,
    tolerance: f64,
    spec: ComparisonSpec,
}

fn plan_comparisons(exp: &Experiment) -> Result<Vec<Planned>, ConfigError> {
    let w = exp.cfg.run.window;
    exp.cfg
        .comparisons
        .iter()
        .map(|spec| {
            let (name, factor, tolerance) = match *spec {
                ComparisonSpec::OccupancyKs { threshold } => {
                    let default = if exp.fp.v.abs() < 1e-9 {
                        defaults::KS_CRITICAL
                    } else {
                        defaults::KS_DRIFTED
                    };
                    ("occupancy-ks".to_string(), 1, tightened(threshold, default, "occupancy-ks threshold")?)
                }
                ComparisonSpec::MeanLoss { window, max_z } => {
                    let factor = exp.window_factor(window)?;
                    (
                        format!("mean-loss@w={}", factor as f64 * w),
                        factor,
                        tightened(max_z, defaults::MAX_Z, "mean-loss max_z")?,
                    )
                }
                ComparisonSpec::MeanIdleness { window, max_z } => {
                    let factor = exp.window_factor(window)?;
                    (
                        format!("mean-idleness@w={}", factor as f64 * w),
                        factor,
                        tightened(max_z, defaults::MAX_Z, "mean-idleness max_z")?,
                    )
                }
                ComparisonSpec::VarianceRatio { window, rel_tol } => {
                    let factor = exp.window_factor(window)?;
                    let tau_w = exp.fp.tau_of_t(factor as f64 * w);
                    if tau_w < 10.0 {
                        return Err(ConfigError(format!(
                            "config invalid: variance-ratio window {} gives tau = {tau_w:.3}; \
                             the long-window law needs tau >= 10",
                            factor as f64 * w
                        )));
                    }
                    (
                        format!("variance-ratio@w={}", factor as f64 * w),
                        factor,
                        tightened(rel_tol, defaults::VARIANCE_REL, "variance-ratio rel_tol")?,
                    )
                }
                ComparisonSpec::AnyLossFraction { window, max_z } => {
                    let factor = exp.window_factor(window)?;
                    (
                        format!("any-loss-fraction@w={}", factor as f64 * w),
                        factor,
                        tightened(max_z, defaults::MAX_Z, "any-loss-fraction max_z")?,
                    )
                }
            };
            Ok(Planned { name, factor, tolerance, spec: *spec })
        })
        .collect()
}

/// Pool independent per-stream estimates: mean value, joint standard error.
fn pool(estimates: &[(f64, f64)]) -> (f64, f64) {
    let n = estimates.len() as f64;
    let value = estimates.iter().map(|e| e.0).sum::<f64>() / n;
    let se = estimates.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt() / n;
    (value, se)
}

/// KS distance of the streams' merged time-weighted occupancy histogram
/// against the stationary CDF (equal-duration streams: plain average).
fn merged_ks(members: &[(RunSummary, WindowSeries)], v: f64) -> f64 {
    let bins = members[0].0.histogram.len();
    let inv = 1.0 / members.len() as f64;
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    for k in 0..bins {
        cum += members.iter().map(|(s, _)| s.histogram[k]).sum::<f64>() * inv;
        let edge = (k + 1) as f64 / bins as f64;
        d = d.max((cum - stationary_cdf(v, edge)).abs());
    }
    d
}

fn cmd_compare(path: &Path) -> Result<bool, CliError> {
    let exp = config::load(path)?;
    if exp.cfg.comparisons.is_empty() {
        return Err(invalid(
            "config invalid: comparison plan is empty; list at least one statistic under \"comparisons\"",
        ));
    }
    let planned = plan_comparisons(&exp)?;
    let streams = exp.streams_or(16);
    let members = run_ensemble(&exp.run_config(0), streams).map_err(CliError::from)?;
    let w = exp.cfg.run.window;
    let v = exp.fp.v;

    let mut rows = Vec::with_capacity(planned.len());
    for p in &planned {
        let tau_w = exp.fp.tau_of_t(p.factor as f64 * w);
        let row = match p.spec {
            ComparisonSpec::OccupancyKs { .. } => {
                let ks = merged_ks(&members, v);
                ReportRow {
                    name: p.name.clone(),
                    analytic: 0.0,
                    simulated: ks,
                    se: 0.0,
                    score: ks,
                    tolerance: p.tolerance,
                    pass: ks <= p.tolerance,
                }
            }
            ComparisonSpec::MeanLoss { .. } | ComparisonSpec::MeanIdleness { .. } => {
                let idle = matches!(p.spec, ComparisonSpec::MeanIdleness { .. });
                let mut ests = Vec::with_capacity(members.len());
                for (_, series) in &members {
                    let agg = aggregate_windows(series, p.factor)?;
                    let m = if idle {
                        bufferloss::sim::idleness_series(&agg, 1)?
                    } else {
                        windowed_loss_moments(&agg, 1)?
                    };
                    ests.push((m.value, m.se));
                }
                let (value, se) = pool(&ests);
                let analytic =
                    if idle { mean_idleness(tau_w, v)? } else { mean_loss(tau_w, v)? };
                let z = ((value - analytic) / se).abs();
                ReportRow {
                    name: p.name.clone(),
                    analytic,
                    simulated: value,
                    se,
                    score: z,
                    tolerance: p.tolerance,
                    pass: z <= p.tolerance,
                }
            }
            ComparisonSpec::VarianceRatio { .. } => {
                let mut all = Vec::new();
                for (_, series) in &members {
                    all.extend(aggregate_windows(series, p.factor)?.lost);
                }
                let n = all.len() as f64;
                let mean = all.iter().sum::<f64>() / n;
                let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
                let ratio = var / mean;
                let analytic = loss_variance_longtime(tau_w, v)? / mean_loss(tau_w, v)?;
                let score = (ratio / analytic - 1.0).abs();
                ReportRow {
                    name: p.name.clone(),
                    analytic,
                    simulated: ratio,
                    // Gaussian approximation of the sampling error; informational
                    se: ratio * (2.0 / (n - 1.0)).sqrt(),
                    score,
                    tolerance: p.tolerance,
                    pass: score <= p.tolerance,
                }
            }
            ComparisonSpec::AnyLossFraction { .. } => {
                let mut ests = Vec::with_capacity(members.len());
                for (_, series) in &members {
                    let agg = aggregate_windows(series, p.factor)?;
                    let flags: Vec<f64> =
                        agg.lost.iter().map(|&l| f64::from(l > 0.0)).collect();
                    let (mean, se, _) = batched_mean_se(&flags);
                    ests.push((mean, se));
                }
                let (value, se) = pool(&ests);
                let analytic = prob_any_loss(tau_w, v)?;
                let z = ((value - analytic) / se).abs();
                ReportRow {
                    name: p.name.clone(),
                    analytic,
                    simulated: value,
                    se,
                    score: z,
                    tolerance: p.tolerance,
                    pass: z <= p.tolerance,
                }
            }
        };
        rows.push(row);
    }

    std::fs::create_dir_all(&exp.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", exp.output_dir.display())))?;
    let report_path = exp.output_dir.join("report.csv");
    output::write_report(&report_path, &rows, &exp.config_hash, exp.base_seed, streams)?;

    for r in &rows {
        println!(
            "{} {:<28} analytic={:.6e} simulated={:.6e} se={:.2e} score={:.3} tol={}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.analytic,
            r.simulated,
            r.se,
            r.score,
            r.tolerance,
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!(
        "{} of {} comparisons passed ({} streams, seed {}); wrote {}",
        rows.len() - failed,
        rows.len(),
        streams,
        exp.base_seed,
        report_path.display()
    );
    Ok(failed == 0)
}

// --- correlate ---------------------------------------------------------------

fn cmd_correlate(path: &Path) -> Result<bool, CliError> {
    let exp = config::load(path)?;
    let corr = exp
        .cfg
        .correlation
        .clone()
        .ok_or_else(|| invalid("config invalid: missing \"correlation\" section"))?;
    if corr.lags.is_empty() {
        return Err(invalid("config invalid: correlation.lags must list at least one lag"));
    }
    let t1 = corr.t1;
    let t2 = corr.t2.unwrap_or(t1);
    let factor1 = exp.window_factor(Some(t1))?;
    let factor2 = exp.window_factor(Some(t2))?;
    let span = exp.cfg.run.duration - exp.warmup;
    for &lag in &corr.lags {
        exp.window_factor(Some(lag))?;
        if lag < t1 {
            return Err(invalid(format!(
                "config invalid: lag {lag} is shorter than t1 = {t1}; lags are start-to-start"
            )));
        }
        if lag + t2 > span {
            return Err(invalid(format!(
                "config invalid: lag {lag} plus t2 = {t2} exceeds the measured span {span}"
            )));
        }
    }

    let streams = exp.streams_or(1);
    let members = run_ensemble(&exp.run_config(0), streams).map_err(CliError::from)?;

    // restored product moment needs the two window means; pool them once
    let (m1a, _) = pool(
        &members
            .iter()
            .map(|(_, s)| {
                let m = windowed_loss_moments(&aggregate_windows(s, factor1)?, 1)?;
                Ok((m.value, m.se))
            })
            .collect::<Result<Vec<_>, bufferloss::Error>>()?,
    );
    let (m1b, _) = pool(
        &members
            .iter()
            .map(|(_, s)| {
                let m = windowed_loss_moments(&aggregate_windows(s, factor2)?, 1)?;
                Ok((m.value, m.se))
            })
            .collect::<Result<Vec<_>, bufferloss::Error>>()?,
    );

    let mut rows = Vec::with_capacity(corr.lags.len());
    for &lag in &corr.lags {
        let ests: Vec<(f64, f64)> = members
            .iter()
            .map(|(_, s)| {
                let e = loss_window_correlation(s, t1, t2, lag)?;
                Ok((e.cov, e.se))
            })
            .collect::<Result<Vec<_>, bufferloss::Error>>()?;
        let (cov, se) = pool(&ests);
        let req = CorrelatorRequest {
            t1,
            t2,
            t_sep: lag - t1,
            sigma2: exp.fp.sigma2,
            v: exp.fp.v,
        };
        let regime = match classify_regime(&req)? {
            CorrRegime::Critical => "critical",
            CorrRegime::Decayed => "decayed",
            CorrRegime::Intermediate => "intermediate",
        };
        rows.push(LagRow {
            t_lag: lag,
            cov,
            se,
            ci: (cov - 1.96 * se, cov + 1.96 * se),
            analytic_cov: loss_correlator(&req, CorrMethod::Quadrature)?,
            product_moment: cov + m1a * m1b,
            analytic_product: loss_product_moment(&req)?,
            regime,
        });
    }

    // log-log slope over the critical-regime sub-grid of the restored product
    // moment rho = cov + m1(t1)·m1(t2), whose kernel centre sits at the lag
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.regime == "critical" && r.product_moment > 0.0)
        .map(|r| (r.t_lag.ln(), r.product_moment.ln(), r.se / r.product_moment))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let xbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let sxx = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum::<f64>();
        let m = pts.iter().map(|p| (p.0 - xbar) * p.1).sum::<f64>() / sxx;
        let var = pts
            .iter()
            .map(|p| {
                let c = (p.0 - xbar) / sxx;
                c * c * p.2 * p.2
            })
            .sum::<f64>();
        Some((m, var.sqrt()))
    } else {
        None
    };

    std::fs::create_dir_all(&exp.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", exp.output_dir.display())))?;
    let corr_path = exp.output_dir.join("correlate.csv");
    output::write_correlation(&corr_path, &rows, slope, &exp.config_hash, exp.base_seed, streams)?;

    for r in &rows {
        println!(
            "T={:<8} cov={:+.6e} se={:.2e} CI=[{:+.3e},{:+.3e}] analytic={:+.6e} regime={}",
            r.t_lag, r.cov, r.se, r.ci.0, r.ci.1, r.analytic_cov, r.regime
        );
    }
    match slope {
        Some((m, se)) => println!(
            "log-log slope over {} critical-regime lags: {m:.4} +/- {se:.4}",
            pts.len()
        ),
        None => println!("# slope omitted: fewer than two critical-regime lags"),
    }
    println!("wrote {}", corr_path.display());
    Ok(true)
}

// --- analytic ----------------------------------------------------------------

fn check_unit(name: &str, x: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("invalid input: {name} = {x} must lie in [0, 1]")))
    }
}

fn cmd_analytic(stat: Stat) -> Result<(), CliError> {
    match stat {
        Stat::StationaryDensity { v, ell } => {
            check_unit("ell", ell)?;
            println!("{}", float(stationary_density(v, ell)));
            println!("# stationary-density v={v} ell={ell}; closed form");
        }
        Stat::StationaryCdf { v, ell } => {
            check_unit("ell", ell)?;
            println!("{}", float(stationary_cdf(v, ell)));
            println!("# stationary-cdf v={v} ell={ell}; closed form");
        }
        Stat::MeanLoss { v, tau } => {
            println!("{}", float(mean_loss(tau, v)?));
            println!("# mean-loss v={v} tau={tau}; stationary-flux closed form");
        }
        Stat::MeanIdleness { v, tau } => {
            println!("{}", float(mean_idleness(tau, v)?));
            println!("# mean-idleness v={v} tau={tau}; drift mirror of mean-loss");
        }
        Stat::LossMoment { k, v, tau, method } => {
            let value = loss_moment(&LossMomentRequest { k, tau, v, method: method.into() })?;
            println!("{}", float(value));
            let name = match method {
                MomentMethodArg::Convolution => "boundary-time convolution",
                MomentMethodArg::LaplaceInversion => "Laplace inversion (fixed Talbot)",
                MomentMethodArg::Asymptotic => "short/long-window asymptotics",
            };
            println!("# loss-moment k={k} v={v} tau={tau}; method: {name}");
        }
        Stat::ConditionalLossMoment { k, v, tau, ell } => {
            check_unit("ell", ell)?;
            println!("{}", float(conditional_loss_moment(k, tau, ell, v)?));
            println!("# conditional-loss-moment k={k} v={v} tau={tau} start={ell}");
        }
        Stat::Propagator { v, tau, start, end } => {
            check_unit("start", start)?;
            check_unit("end", end)?;
            let params = PropagatorParams::new(v).map_err(CliError::from)?;
            println!("{}", float(params.propagator(end, tau, start)?));
            let rep = if tau <= params.tau_crossover { "image sum" } else { "spectral series" };
            println!("# propagator v={v} tau={tau} start={start} end={end}; method: {rep}");
        }
        Stat::BoundaryReturn { which, v, eps, tau } => {
            // the empty boundary of drift v mirrors the full boundary of −v
            let v_eff = match which {
                Boundary::Full => v,
                Boundary::Empty => -v,
            };
            let side = match which {
                Boundary::Full => "full",
                Boundary::Empty => "empty",
            };
            match (eps, tau) {
                (Some(eps), None) => {
                    if !(eps.is_finite() && eps > 0.0) {
                        return Err(invalid("invalid input: eps must be finite and positive"));
                    }
                    let value = boundary_return_laplace(v_eff, Complex64::new(eps, 0.0)).re;
                    println!("{}", float(value));
                    println!("# boundary-return {side} v={v} eps={eps}; Laplace closed form");
                }
                (None, Some(tau)) => {
                    let params = PropagatorParams::new(v_eff).map_err(CliError::from)?;
                    println!("{}", float(params.boundary_return(tau)?));
                    println!("# boundary-return {side} v={v} tau={tau}; time domain");
                }
                _ => {
                    return Err(invalid(
                        "invalid input: boundary-return needs exactly one of --eps or --tau",
                    ))
                }
            }
        }
        Stat::LossPdf { x, v, tau, method } => {
            let m = match method {
                PdfMethodArg::Inversion => PdfMethod::Inversion,
                PdfMethodArg::Asymptotic => PdfMethod::Asymptotic,
            };
            match loss_pdf(&LossPdfPoint { x, tau, v }, m)? {
                LossPdf::Density(f) => {
                    println!("{}", float(f));
                    println!("# loss-pdf density at x={x} v={v} tau={tau}");
                }
                LossPdf::Atom { location, mass } => {
                    println!("{}", float(mass));
                    println!("# loss-pdf: point mass at x={}, not a density", float(location));
                }
            }
        }
        Stat::ProbAnyLoss { v, tau } => {
            println!("{}", float(prob_any_loss(tau, v)?));
            println!("# prob-any-loss v={v} tau={tau}; Laplace inversion of the lossless kernel");
        }
        Stat::LossVariance { v, tau } => {
            println!("{}", float(loss_variance_longtime(tau, v)?));
            println!("# loss-variance v={v} tau={tau}; long-window law");
        }
        Stat::Correlator { t1, t2, t_sep, sigma2, v, method } => {
            let req = CorrelatorRequest { t1, t2, t_sep, sigma2, v };
            let m = match method {
                CorrMethodArg::Quadrature => CorrMethod::Quadrature,
                CorrMethodArg::Asymptotic => CorrMethod::Asymptotic,
            };
            let value = loss_correlator(&req, m)?;
            println!("{}", float(value));
            let regime = match classify_regime(&req)? {
                CorrRegime::Critical => "critical",
                CorrRegime::Decayed => "decayed",
                CorrRegime::Intermediate => "intermediate",
            };
            println!("# correlator t1={t1} t2={t2} t-sep={t_sep} sigma2={sigma2} v={v}; regime: {regime}");
        }
    }
    Ok(())
}
