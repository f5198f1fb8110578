//! CSV artifacts. Column sets are fixed; floats carry 17 significant digits
//! so every value round-trips to the exact f64.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use bufferloss::sim::{RunSummary, WindowSeries};

/// Stamped into every provenance-carrying artifact.
const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `windows.csv`: one row per measurement window, fixed eight-column schema.
/// Provenance for this file lives in the sibling `summary.csv` of the same
/// invocation (the schema below is pinned and carries no hash column).
pub fn write_windows(path: &Path, series: &WindowSeries) -> Result<()> {
    let mut s = String::with_capacity(64 + series.len() * 160);
    s.push_str(
        "window_index,t_start,t_end,lost_traffic,idle_deficit,packets_arrived,packets_dropped,end_occupancy\n",
    );
    for i in 0..series.len() {
        let t_start = series.t0 + i as f64 * series.window;
        s.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            float(t_start),
            float(t_start + series.window),
            float(series.lost[i]),
            float(series.idle[i]),
            series.arrived[i],
            series.dropped[i],
            float(series.end_occ[i]),
        ));
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// `summary.csv`: name/value rows for one run. `conservation_violation` is 0
/// exactly when |residual| stays inside the round-off budget (it always
/// should; the row exists so downstream checks need no tolerance logic).
pub fn write_summary(path: &Path, summary: &RunSummary, config_hash: &str) -> Result<()> {
    let violation = u8::from(summary.conservation_residual.abs() > summary.conservation_tol);
    let rows: Vec<(&str, String)> = vec![
        ("version", VERSION.to_string()),
        ("config_hash", config_hash.to_string()),
        ("rng", summary.rng.to_string()),
        ("seed", summary.seed.to_string()),
        ("stream", summary.stream.to_string()),
        ("duration", float(summary.duration)),
        ("warmup", float(summary.warmup)),
        ("eta0", float(summary.eta0)),
        ("initial_ell", float(summary.initial_ell)),
        ("final_ell", float(summary.final_ell)),
        ("packets_arrived", summary.packets_arrived.to_string()),
        ("packets_dropped", summary.packets_dropped.to_string()),
        ("arrived_traffic", float(summary.arrived_traffic)),
        ("lost_traffic", float(summary.lost_traffic)),
        ("idle_deficit", float(summary.idle_deficit)),
        ("conservation_residual", float(summary.conservation_residual)),
        ("conservation_tol", float(summary.conservation_tol)),
        ("conservation_violation", violation.to_string()),
        ("measured_time", float(summary.measured_time)),
        ("probe_dt", float(summary.probe_dt)),
        ("probe_increments", summary.probe_increments.to_string()),
    ];
    let mut s = String::from("name,value\n");
    for (name, value) in rows {
        s.push_str(&format!("{name},{value}\n"));
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub struct ReportRow {
    pub name: String,
    pub analytic: f64,
    pub simulated: f64,
    pub se: f64,
    /// The number the tolerance judges: |z| for mean statistics, the KS
    /// distance, or the relative deviation for ratio statistics.
    pub score: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `report.csv`: one row per compared statistic plus full provenance.
pub fn write_report(
    path: &Path,
    rows: &[ReportRow],
    config_hash: &str,
    base_seed: u64,
    streams: u64,
) -> Result<()> {
    let mut s = String::from(
        "name,analytic_value,simulated_value,standard_error,score,tolerance,pass,config_hash,base_seed,streams,version\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{config_hash},{base_seed},{streams},{VERSION}\n",
            r.name,
            float(r.analytic),
            float(r.simulated),
            float(r.se),
            float(r.score),
            float(r.tolerance),
            r.pass,
        ));
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub struct LagRow {
    pub t_lag: f64,
    pub cov: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub analytic_cov: f64,
    pub product_moment: f64,
    pub analytic_product: f64,
    pub regime: &'static str,
}

/// `correlate.csv`: one row per lag; the fitted log-log slope columns appear
/// only when the critical-regime sub-grid holds at least two lags.
pub fn write_correlation(
    path: &Path,
    rows: &[LagRow],
    slope: Option<(f64, f64)>,
    config_hash: &str,
    base_seed: u64,
    streams: u64,
) -> Result<()> {
    let mut s = String::from(
        "t_lag,cov,standard_error,ci_low,ci_high,analytic_cov,product_moment,analytic_product_moment,regime",
    );
    if slope.is_some() {
        s.push_str(",slope,slope_se");
    }
    s.push_str(",config_hash,base_seed,streams,version\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            float(r.t_lag),
            float(r.cov),
            float(r.se),
            float(r.ci.0),
            float(r.ci.1),
            float(r.analytic_cov),
            float(r.product_moment),
            float(r.analytic_product),
            r.regime,
        ));
        if let Some((m, se)) = slope {
            s.push_str(&format!(",{},{}", float(m), float(se)));
        }
        s.push_str(&format!(",{config_hash},{base_seed},{streams},{VERSION}\n"));
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}
