//! JSON experiment configuration: schema, validation, environment overrides.
//!
//! `BUFFERLOSS_OUTPUT_DIR` and `BUFFERLOSS_BASE_SEED` override their config
//! fields; nothing else is overridable from the environment.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use bufferloss::sim::{InitialOccupancy, RunConfig};
use bufferloss::traffic::{derive_fp_params, FpParams, GapDist, SizeDist, TrafficModel};

/// A single-line configuration failure; the CLI maps it to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub traffic: TrafficSection,
    pub run: RunSection,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub comparisons: Vec<ComparisonSpec>,
    pub correlation: Option<CorrelationSpec>,
}

/// `eta0` stays optional at the schema layer so its absence is reported with
/// the full field path instead of serde's bare field name.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub inter_arrival: GapDist,
    pub packet_size: SizeDist,
    pub eta0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub duration: f64,
    /// Defaults to ten relaxation times (20/σ²) for fixed starts and to zero
    /// for stationary starts.
    pub warmup: Option<f64>,
    pub window: f64,
    pub base_seed: u64,
    /// Ensemble size; commands that pool statistics default to 16, single-run
    /// commands to 1.
    pub streams: Option<u64>,
    pub initial: Option<InitialSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    StationarySample,
    Fixed { ell: f64 },
}

/// One row of the comparison plan. Omitted windows default to the run window;
/// omitted tolerances default to the pinned numbers in [`Tolerances`] and may
/// only be tightened.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "statistic", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ComparisonSpec {
    OccupancyKs { threshold: Option<f64> },
    MeanLoss { window: Option<f64>, max_z: Option<f64> },
    MeanIdleness { window: Option<f64>, max_z: Option<f64> },
    VarianceRatio { window: Option<f64>, rel_tol: Option<f64> },
    AnyLossFraction { window: Option<f64>, max_z: Option<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    /// First window length; start-to-start lags are measured from it.
    pub t1: f64,
    /// Second window length, defaulting to `t1`.
    pub t2: Option<f64>,
    pub lags: Vec<f64>,
}

/// Default tolerances. `compare` configs may tighten these, never loosen.
pub mod defaults {
    /// KS threshold against the stationary law at the critical point…
    pub const KS_CRITICAL: f64 = 0.01;
    /// …and away from it, where packet-scale discreteness is visible.
    pub const KS_DRIFTED: f64 = 0.02;
    /// Batch-means z-score bound for mean statistics.
    pub const MAX_Z: f64 = 3.0;
    /// Relative tolerance on the long-window variance/mean ratio.
    pub const VARIANCE_REL: f64 = 0.10;
}

/// Fully resolved experiment: validated traffic, derived continuum
/// parameters, environment overrides applied, config bytes fingerprinted.
pub struct Experiment {
    pub cfg: ConfigFile,
    pub traffic: TrafficModel,
    pub fp: FpParams,
    pub warmup: f64,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub config_hash: String,
}

pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let bytes = std::fs::read(path)
        .map_err(|e| fail(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ConfigFile = serde_json::from_slice(&bytes)
        .map_err(|e| fail(format!("config schema violation: {e}")))?;

    let eta0 = cfg
        .traffic
        .eta0
        .ok_or_else(|| fail("config schema violation: missing field traffic.eta0"))?;
    let traffic = TrafficModel::new(cfg.traffic.inter_arrival, cfg.traffic.packet_size, eta0)
        .map_err(|e| fail(format!("config invalid: {e}")))?;
    let fp = derive_fp_params(&traffic).map_err(|e| fail(format!("config invalid: {e}")))?;

    for (name, x) in [("run.duration", cfg.run.duration), ("run.window", cfg.run.window)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(fail(format!("config invalid: {name} must be finite and positive")));
        }
    }
    if let Some(w) = cfg.run.warmup {
        if !(w.is_finite() && w >= 0.0) {
            return Err(fail("config invalid: run.warmup must be finite and non-negative"));
        }
    }
    if let Some(InitialSpec::Fixed { ell }) = cfg.run.initial {
        if !(ell.is_finite() && (0.0..=1.0).contains(&ell)) {
            return Err(fail("config invalid: run.initial.ell must lie in [0, 1]"));
        }
    }
    if cfg.run.streams == Some(0) {
        return Err(fail("config invalid: run.streams must be at least 1"));
    }
    let warmup = cfg.run.warmup.unwrap_or(match cfg.run.initial {
        Some(InitialSpec::Fixed { .. }) => 20.0 / fp.sigma2,
        _ => 0.0,
    });
    if cfg.run.duration - warmup < cfg.run.window {
        return Err(fail(
            "config invalid: run.duration minus warmup must cover at least one window",
        ));
    }

    let base_seed = match std::env::var("BUFFERLOSS_BASE_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            fail(format!("invalid BUFFERLOSS_BASE_SEED {s:?}: not a 64-bit unsigned integer"))
        })?,
        Err(_) => cfg.run.base_seed,
    };
    let output_dir = std::env::var_os("BUFFERLOSS_OUTPUT_DIR")
        .map(PathBuf::from)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let digest = Sha256::digest(&bytes);
    let config_hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

    Ok(Experiment { cfg, traffic, fp, warmup, base_seed, output_dir, config_hash })
}

impl Experiment {
    pub fn run_config(&self, stream: u64) -> RunConfig {
        RunConfig {
            traffic: self.traffic,
            duration: self.cfg.run.duration,
            warmup: self.warmup,
            window: self.cfg.run.window,
            seed: self.base_seed,
            stream,
            initial: match self.cfg.run.initial {
                Some(InitialSpec::Fixed { ell }) => InitialOccupancy::Fixed(ell),
                _ => InitialOccupancy::StationarySample,
            },
        }
    }

    pub fn streams_or(&self, default: u64) -> u64 {
        self.cfg.run.streams.unwrap_or(default)
    }

    /// Aggregation factor for a statistic window, which must be a whole
    /// multiple of the run window.
    pub fn window_factor(&self, target: Option<f64>) -> Result<usize, ConfigError> {
        let w = self.cfg.run.window;
        let t = target.unwrap_or(w);
        let f = t / w;
        if !(f.is_finite() && f.round() >= 1.0 && (f - f.round()).abs() < 1e-9) {
            return Err(fail(format!(
                "config invalid: statistic window {t} is not a whole multiple of run.window {w}"
            )));
        }
        Ok(f.round() as usize)
    }
}

/// Resolve a tolerance against its pinned default: absent means the default,
/// present must tighten it.
pub fn tightened(custom: Option<f64>, default: f64, name: &str) -> Result<f64, ConfigError> {
    match custom {
        None => Ok(default),
        Some(t) if t.is_finite() && (0.0..=default).contains(&t) => Ok(t),
        Some(t) => Err(fail(format!(
            "config invalid: {name} = {t} loosens the default {default}; tolerances may only tighten"
        ))),
    }
}
