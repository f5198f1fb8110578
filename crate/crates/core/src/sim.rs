//! Exact packet-level simulation of the finite buffer, with loss/idleness
//! accounting and windowed estimators mirroring the analytic statistics.
//!
//! Per cycle: the buffer drains at rate 1/η0 for the inter-arrival gap η
//! (idling once empty), then the arriving packet p is admitted iff ℓ + p ≤ 1
//! and discarded whole otherwise. Everything measurable — time-weighted
//! occupancy histogram, per-window losses and idle deficits, coarse-grained
//! occupancy increments — is computed in closed form from the piecewise-linear
//! trajectory between arrivals; there is no sub-stepping anywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::kahan::CompensatedSum;
use crate::propagator::{stationary_cdf, stationary_inverse_cdf};
use crate::traffic::{derive_fp_params, FpParams, TrafficModel};

/// Generator identity recorded in every summary; substreams are
/// (seed, stream-id) pairs so ensemble members are independent and
/// reproducible.
pub const RNG_NAME: &str = "chacha8(seed,stream)";

pub const HISTOGRAM_BINS: usize = 200;

/// Coarse-graining scale for empirical drift/diffusion estimation,
/// in units of the mean inter-arrival gap: η̄ ≪ Δt ≪ relaxation time.
pub const PROBE_GAP_MULTIPLE: f64 = 50.0;

/// Minimum number of off-boundary coarse increments for estimate_fp_params.
pub const MIN_PROBE_INCREMENTS: u64 = 1000;

/// Occupancy band whose increments count as boundary-free.
const PROBE_BAND: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialOccupancy {
    Fixed(f64),
    /// Inverse-CDF draw from the stationary occupancy density (one extra
    /// uniform consumed before the event loop).
    StationarySample,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub traffic: TrafficModel,
    pub duration: f64,
    /// Time discarded before any measurement; totals still cover [0, duration].
    pub warmup: f64,
    /// Measurement window length for the per-window series.
    pub window: f64,
    pub seed: u64,
    /// Substream id; ensemble members differ only here.
    pub stream: u64,
    pub initial: InitialOccupancy,
}

/// Occupancy and clock of the running simulation, in buffer fractions and
/// original time units. 0 ≤ ell ≤ 1 at every renewal epoch.
#[derive(Debug, Clone, Copy)]
pub struct QueueState {
    pub ell: f64,
    pub clock: f64,
}

/// Per-window measurement records over [warmup, warmup + n·window].
#[derive(Debug, Clone)]
pub struct WindowSeries {
    pub window: f64,
    /// Start of the first window (= warmup).
    pub t0: f64,
    /// Traffic discarded within each window (buffer fractions).
    pub lost: Vec<f64>,
    /// Service capacity wasted while empty within each window.
    pub idle: Vec<f64>,
    pub arrived: Vec<u32>,
    pub dropped: Vec<u32>,
    /// Occupancy at the window's closing instant.
    pub end_occ: Vec<f64>,
}

impl WindowSeries {
    pub fn len(&self) -> usize {
        self.lost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lost.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rng: &'static str,
    pub seed: u64,
    pub stream: u64,
    pub duration: f64,
    pub warmup: f64,
    pub eta0: f64,
    pub initial_ell: f64,
    pub final_ell: f64,
    pub packets_arrived: u64,
    pub packets_dropped: u64,
    /// Full-run totals (warmup included), for exact conservation accounting.
    pub arrived_traffic: f64,
    pub lost_traffic: f64,
    pub idle_deficit: f64,
    /// arrived − lost − (duration/η0 − idle) − (final ℓ − initial ℓ).
    pub conservation_residual: f64,
    /// Round-off budget for the residual at this run's traffic volume.
    pub conservation_tol: f64,
    /// Time-weighted occupancy mass over [warmup, duration], 200 bins on
    /// [0,1]; sums to 1 within 1e−12.
    pub histogram: Vec<f64>,
    pub measured_time: f64,
    /// Coarse-increment statistics for drift/diffusion estimation.
    pub probe_dt: f64,
    pub probe_increments: u64,
    pub probe_mean: f64,
    pub probe_m2: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub value: f64,
    pub se: f64,
    pub windows_used: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelationEstimate {
    pub cov: f64,
    pub se: f64,
    /// 95% batch-means confidence interval.
    pub ci: (f64, f64),
    pub pairs: usize,
}

/// 53-bit uniform in (0, 1] — never 0, so log/inverse-CDF samplers are safe.
fn next_unit(rng: &mut ChaCha8Rng) -> f64 {
    let r = rand::RngCore::next_u64(rng);
    ((r >> 11) + 1) as f64 / 9007199254740992.0
}

// --- measurement over the piecewise-linear trajectory -----------------------

struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Self { n: 0, mean: 0.0, m2: 0.0 }
    }

    fn add(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }
}

/// Streaming accumulator fed with linear occupancy pieces
/// (t ∈ [a,b], ℓ(t) = ℓ_a + slope·(t−a)); clips to the measurement period
/// and maintains histogram, windows, and coarse probes in one pass.
struct Measure {
    warmup: f64,
    duration: f64,
    eta0: f64,
    window: f64,
    n_windows: usize,
    lost: Vec<f64>,
    idle: Vec<f64>,
    arrived: Vec<u32>,
    dropped: Vec<u32>,
    end_occ: Vec<f64>,
    /// Next window whose closing boundary is still ahead.
    seal: usize,
    hist: Vec<CompensatedSum>,
    measured_time: CompensatedSum,
    probe_dt: f64,
    next_probe: u64,
    prev_sample: Option<f64>,
    range_min: f64,
    range_max: f64,
    increments: Welford,
}

impl Measure {
    fn new(cfg: &RunConfig) -> Self {
        let span = cfg.duration - cfg.warmup;
        let n_windows = (span / cfg.window).floor() as usize;
        Self {
            warmup: cfg.warmup,
            duration: cfg.duration,
            eta0: cfg.traffic.eta0,
            window: cfg.window,
            n_windows,
            lost: vec![0.0; n_windows],
            idle: vec![0.0; n_windows],
            arrived: vec![0; n_windows],
            dropped: vec![0; n_windows],
            end_occ: vec![0.0; n_windows],
            seal: 0,
            hist: vec![CompensatedSum::default(); HISTOGRAM_BINS],
            measured_time: CompensatedSum::default(),
            probe_dt: PROBE_GAP_MULTIPLE * cfg.traffic.mean_gap(),
            next_probe: 0,
            prev_sample: None,
            range_min: f64::INFINITY,
            range_max: f64::NEG_INFINITY,
            increments: Welford::new(),
        }
    }

    fn window_end(&self, w: usize) -> f64 {
        self.warmup + (w + 1) as f64 * self.window
    }

    fn probe_time(&self, k: u64) -> f64 {
        self.warmup + k as f64 * self.probe_dt
    }

    /// Record an arrival event at time t: count it, and add p to the window's
    /// losses if it was discarded.
    fn arrival(&mut self, t: f64, p: f64, admitted: bool) {
        if t < self.warmup {
            return;
        }
        let w = ((t - self.warmup) / self.window) as usize;
        if w >= self.n_windows {
            return;
        }
        self.arrived[w] += 1;
        if !admitted {
            self.dropped[w] += 1;
            self.lost[w] += p;
        }
    }

    /// Ingest one linear piece of the trajectory.
    fn piece(&mut self, t0: f64, t1: f64, l0: f64, slope: f64) {
        // clip to the measurement period
        let a = t0.max(self.warmup);
        let b = t1.min(self.duration);
        if b <= a {
            return;
        }
        let la = l0 + slope * (a - t0);
        let lb = l0 + slope * (b - t0);
        self.measured_time.add(b - a);

        // histogram: time spent per occupancy bin, exact for linear pieces
        let (lo, hi) = if la <= lb { (la, lb) } else { (lb, la) };
        let bin_of = |l: f64| ((l * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        let (b_lo, b_hi) = (bin_of(lo.max(0.0)), bin_of(hi));
        if b_lo == b_hi || hi - lo < 1e-300 {
            self.hist[b_lo].add(b - a);
        } else {
            let dt = b - a;
            for k in b_lo..=b_hi {
                let seg_lo = lo.max(k as f64 / HISTOGRAM_BINS as f64);
                let seg_hi = hi.min((k + 1) as f64 / HISTOGRAM_BINS as f64);
                if seg_hi > seg_lo {
                    self.hist[k].add(dt * (seg_hi - seg_lo) / (hi - lo));
                }
            }
        }

        // windows: accrue idle capacity pro rata and seal closing boundaries
        if slope == 0.0 && la == 0.0 && self.n_windows > 0 {
            let mut w = (((a - self.warmup) / self.window) as usize).min(self.n_windows - 1);
            loop {
                let ws = self.warmup + w as f64 * self.window;
                let we = ws + self.window;
                let ov = b.min(we) - a.max(ws);
                if ov > 0.0 {
                    self.idle[w] += ov / self.eta0;
                }
                if we >= b || w + 1 >= self.n_windows {
                    break;
                }
                w += 1;
            }
        }
        while self.seal < self.n_windows && self.window_end(self.seal) <= b {
            let tb = self.window_end(self.seal).max(a);
            self.end_occ[self.seal] = l0 + slope * (tb - t0);
            self.seal += 1;
        }

        // coarse probes: sample ℓ on a fixed grid; an increment counts only
        // if the trajectory stayed inside the off-boundary band throughout
        let mut cursor_l = la;
        while self.probe_time(self.next_probe) <= b {
            let tp = self.probe_time(self.next_probe);
            let lp = l0 + slope * (tp.max(a) - t0);
            self.range_min = self.range_min.min(lp.min(cursor_l));
            self.range_max = self.range_max.max(lp.max(cursor_l));
            if let Some(prev) = self.prev_sample {
                if self.range_min >= PROBE_BAND.0 && self.range_max <= PROBE_BAND.1 {
                    self.increments.add(lp - prev);
                }
            }
            self.prev_sample = Some(lp);
            self.range_min = lp;
            self.range_max = lp;
            cursor_l = lp;
            self.next_probe += 1;
        }
        self.range_min = self.range_min.min(lb.min(cursor_l));
        self.range_max = self.range_max.max(lb.max(cursor_l));
    }

    fn finish(mut self, final_ell: f64) -> (Vec<f64>, f64, WindowSeries, f64, Welford) {
        // a closing boundary can land one rounding step past `duration`
        while self.seal < self.n_windows {
            self.end_occ[self.seal] = final_ell;
            self.seal += 1;
        }
        let total = self.measured_time.value();
        let norm = if total > 0.0 { total } else { 1.0 };
        let histogram: Vec<f64> = self.hist.iter().map(|c| c.value() / norm).collect();
        let series = WindowSeries {
            window: self.window,
            t0: self.warmup,
            lost: self.lost,
            idle: self.idle,
            arrived: self.arrived,
            dropped: self.dropped,
            end_occ: self.end_occ,
        };
        (histogram, total, series, self.probe_dt, self.increments)
    }
}

// --- the event loop ----------------------------------------------------------

fn validate(cfg: &RunConfig) -> Result<()> {
    if !(cfg.duration.is_finite() && cfg.warmup.is_finite() && cfg.warmup >= 0.0) {
        return Err(Error::invalid("warmup", "need finite duration > warmup ≥ 0"));
    }
    if cfg.duration <= cfg.warmup {
        return Err(Error::invalid("duration", "must exceed warmup"));
    }
    if !(cfg.window.is_finite() && cfg.window > 0.0) {
        return Err(Error::invalid("window", "must be finite and positive"));
    }
    if let InitialOccupancy::Fixed(l) = cfg.initial {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::invalid("initial", "fixed occupancy must lie in [0, 1]"));
        }
    }
    Ok(())
}

/// Run one simulation. Deterministic given (config, seed, stream): the RNG
/// consumes one uniform for a stationary initial draw (if requested), then
/// exactly two per cycle — gap, then packet size.
pub fn run(cfg: &RunConfig) -> Result<(RunSummary, WindowSeries)> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);

    let initial_ell = match cfg.initial {
        InitialOccupancy::Fixed(l) => l,
        InitialOccupancy::StationarySample => {
            let fp = derive_fp_params(&cfg.traffic)?;
            stationary_inverse_cdf(fp.v, next_unit(&mut rng))
        }
    };

    let eta0 = cfg.traffic.eta0;
    let mut measure = Measure::new(cfg);
    let mut state = QueueState { ell: initial_ell, clock: 0.0 };
    let mut arrived_traffic = CompensatedSum::default();
    let mut lost_traffic = CompensatedSum::default();
    let mut idle_deficit = CompensatedSum::default();
    let mut packets_arrived: u64 = 0;
    let mut packets_dropped: u64 = 0;

    loop {
        let gap = cfg.traffic.inter_arrival.sample(next_unit(&mut rng));
        let t_arr = state.clock + gap;
        let seg_end = t_arr.min(cfg.duration);
        let seg_len = seg_end - state.clock;

        // drain at rate 1/η0, then idle once empty — both in closed form
        let drain_span = state.ell * eta0;
        if seg_len >= drain_span {
            if drain_span > 0.0 {
                measure.piece(state.clock, state.clock + drain_span, state.ell, -1.0 / eta0);
            }
            let idle_len = seg_len - drain_span;
            if idle_len > 0.0 {
                measure.piece(state.clock + drain_span, seg_end, 0.0, 0.0);
                idle_deficit.add(idle_len / eta0);
            }
            state.ell = 0.0;
        } else {
            measure.piece(state.clock, seg_end, state.ell, -1.0 / eta0);
            state.ell = (state.ell - seg_len / eta0).max(0.0);
        }
        state.clock = seg_end;

        if t_arr >= cfg.duration {
            break;
        }

        let p = cfg.traffic.packet_size.sample(next_unit(&mut rng));
        packets_arrived += 1;
        arrived_traffic.add(p);
        let admitted = state.ell + p <= 1.0;
        measure.arrival(state.clock, p, admitted);
        if admitted {
            state.ell += p;
        } else {
            packets_dropped += 1;
            lost_traffic.add(p);
        }
    }

    let final_ell = state.ell;
    let (histogram, measured_time, series, probe_dt, increments) = measure.finish(final_ell);

    let arrived = arrived_traffic.value();
    let lost = lost_traffic.value();
    let idle = idle_deficit.value();
    let served = cfg.duration / eta0 - idle;
    let residual = arrived - lost - served - (final_ell - initial_ell);
    let tol = 64.0 * f64::EPSILON * (arrived + cfg.duration / eta0 + 1.0);

    let summary = RunSummary {
        rng: RNG_NAME,
        seed: cfg.seed,
        stream: cfg.stream,
        duration: cfg.duration,
        warmup: cfg.warmup,
        eta0,
        initial_ell,
        final_ell,
        packets_arrived,
        packets_dropped,
        arrived_traffic: arrived,
        lost_traffic: lost,
        idle_deficit: idle,
        conservation_residual: residual,
        conservation_tol: tol,
        histogram,
        measured_time,
        probe_dt,
        probe_increments: increments.n,
        probe_mean: increments.mean,
        probe_m2: increments.m2,
    };
    Ok((summary, series))
}

/// Run an ensemble over consecutive substreams. Each member is independent
/// and the output order matches the stream order regardless of scheduling.
pub fn run_ensemble(base: &RunConfig, members: u64) -> Result<Vec<(RunSummary, WindowSeries)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..members)
            .map(|i| {
                let cfg = RunConfig { stream: base.stream + i, ..base.clone() };
                scope.spawn(move || run(&cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

// --- estimators ---------------------------------------------------------------

/// Empirical drift and diffusion from coarse-grained occupancy increments
/// away from both boundaries, mapped to the same parameter set the continuum
/// model uses.
///
/// Caveat: on an equilibrated trace, detailed balance forces the
/// band-conditioned mean increment to zero regardless of the true drift, so
/// the drift estimate is only a criticality check (a ≈ 0?), not a way to
/// recover a ≠ 0. The diffusion estimate is unaffected.
pub fn estimate_fp_params(summary: &RunSummary) -> Result<FpParams> {
    let n = summary.probe_increments;
    if n < MIN_PROBE_INCREMENTS {
        return Err(Error::InsufficientData {
            what: "off-boundary occupancy increments",
            detail: format!("have {n}, need ≥ {MIN_PROBE_INCREMENTS}; run longer or widen the band"),
        });
    }
    let a = summary.probe_mean / summary.probe_dt;
    let sigma2 = summary.probe_m2 / (n - 1) as f64 / summary.probe_dt;
    if sigma2 <= 0.0 {
        return Err(Error::invalid("increments", "degenerate increment variance"));
    }
    Ok(FpParams { a, sigma2, v: a / sigma2, criticality: a * summary.eta0 })
}

/// Number of consecutive samples per batch for batch-means standard errors.
const BATCH: usize = 20;

/// Mean and batch-means SE over the leading multiple-of-BATCH prefix.
/// Mean and batch-means standard error over the leading multiple-of-20
/// prefix of `values` (returns the window count actually used). Batching
/// absorbs short-range correlation between consecutive windows.
pub fn batched_mean_se(values: &[f64]) -> (f64, f64, usize) {
    let batches = values.len() / BATCH;
    let used = batches * BATCH;
    let batch_means: Vec<f64> = (0..batches)
        .map(|b| values[b * BATCH..(b + 1) * BATCH].iter().sum::<f64>() / BATCH as f64)
        .collect();
    let mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var_b = batch_means.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>()
        / (batches - 1) as f64;
    (mean, (var_b / batches as f64).sqrt(), used)
}

fn windowed_moments_of(values: &[f64], k: u32) -> Result<MomentEstimate> {
    if !(1..=4).contains(&k) {
        return Err(Error::invalid("k", "windowed moments support k in 1..=4"));
    }
    if values.len() < 100 {
        return Err(Error::InsufficientData {
            what: "measurement windows",
            detail: format!("have {}, need ≥ 100", values.len()),
        });
    }
    let powers: Vec<f64> = values.iter().map(|&x| x.powi(k as i32)).collect();
    let (value, se, used) = batched_mean_se(&powers);
    Ok(MomentEstimate { value, se, windows_used: used })
}

/// Sample k-th raw moment (k ≤ 4) of per-window lost traffic, with
/// batch-means standard error (batches of 20 consecutive windows).
pub fn windowed_loss_moments(series: &WindowSeries, k: u32) -> Result<MomentEstimate> {
    windowed_moments_of(&series.lost, k)
}

/// The same estimator shapes applied to the per-window idle deficit.
pub fn idleness_series(series: &WindowSeries, k: u32) -> Result<MomentEstimate> {
    windowed_moments_of(&series.idle, k)
}

/// Re-bin a window series into windows `factor` times longer (trailing
/// remainder dropped).
pub fn aggregate_windows(series: &WindowSeries, factor: usize) -> Result<WindowSeries> {
    if factor == 0 {
        return Err(Error::invalid("factor", "must be ≥ 1"));
    }
    let n = series.len() / factor;
    let group = |w: usize| (w * factor)..((w + 1) * factor);
    Ok(WindowSeries {
        window: series.window * factor as f64,
        t0: series.t0,
        lost: (0..n).map(|w| series.lost[group(w)].iter().sum()).collect(),
        idle: (0..n).map(|w| series.idle[group(w)].iter().sum()).collect(),
        arrived: (0..n).map(|w| series.arrived[group(w)].iter().sum()).collect(),
        dropped: (0..n).map(|w| series.dropped[group(w)].iter().sum()).collect(),
        end_occ: (0..n).map(|w| series.end_occ[w * factor + factor - 1]).collect(),
    })
}

/// Sample covariance of lost traffic between interval pairs: the first
/// interval spans t1, the second starts T after the first one STARTS
/// (so T = 0 with t1 = t2 = window degenerates to the window variance).
/// All of t1, t2, T must be multiples of the window length. Pair samples
/// tile the series without reuse; the 95% CI comes from batch means.
pub fn loss_window_correlation(
    series: &WindowSeries,
    t1: f64,
    t2: f64,
    t_lag: f64,
) -> Result<CorrelationEstimate> {
    let as_mult = |x: f64, name: &'static str| -> Result<usize> {
        let m = x / series.window;
        let r = m.round();
        if x < 0.0 || (m - r).abs() > 1e-6 * m.abs().max(1.0) {
            return Err(Error::invalid(name, "must be a non-negative multiple of the window length"));
        }
        Ok(r as usize)
    };
    let n1 = as_mult(t1, "t1")?;
    let n2 = as_mult(t2, "t2")?;
    let nt = as_mult(t_lag, "t_lag")?;
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("t1", "interval lengths must be positive"));
    }
    let span = n1.max(nt + n2);
    let pairs = series.len() / span;
    if pairs < 200 {
        return Err(Error::InsufficientData {
            what: "non-overlapping interval pairs",
            detail: format!("have {pairs}, need ≥ 200"),
        });
    }
    let used = (pairs / BATCH) * BATCH;
    let block = |start: usize, len: usize| series.lost[start..start + len].iter().sum::<f64>();
    let (mut xs, mut ys) = (Vec::with_capacity(used), Vec::with_capacity(used));
    for i in 0..used {
        let s = i * span;
        xs.push(block(s, n1));
        ys.push(block(s + nt, n2));
    }
    let xm = xs.iter().sum::<f64>() / used as f64;
    let ym = ys.iter().sum::<f64>() / used as f64;
    let products: Vec<f64> =
        xs.iter().zip(&ys).map(|(&x, &y)| (x - xm) * (y - ym)).collect();
    let (mean_z, se_z, _) = batched_mean_se(&products);
    // Bessel factor so the T = 0 degenerate case is exactly the sample variance
    let bessel = used as f64 / (used - 1) as f64;
    let cov = mean_z * bessel;
    let se = se_z * bessel;
    Ok(CorrelationEstimate { cov, se, ci: (cov - 1.96 * se, cov + 1.96 * se), pairs: used })
}

/// Kolmogorov–Smirnov distance between the time-weighted empirical occupancy
/// CDF (evaluated at bin edges) and the stationary CDF at reduced drift v.
pub fn occupancy_ks(summary: &RunSummary, v: f64) -> f64 {
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    for (k, mass) in summary.histogram.iter().enumerate() {
        cum += mass;
        let edge = (k + 1) as f64 / HISTOGRAM_BINS as f64;
        d = d.max((cum - stationary_cdf(v, edge)).abs());
    }
    d
}
