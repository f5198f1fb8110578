//! Loss statistics of the reflected drift–diffusion buffer: moments of lost
//! traffic, the distribution of the lost amount, long-time variance, and the
//! two-window temporal correlator, plus their idleness duals.
//!
//! Everything is built from the boundary-return kernel w(1, τ; ℓ): in reduced
//! time the expected loss rate is exactly the occupancy density at the full
//! wall, so k-th moments are k-fold convolutions of that kernel. Three routes
//! are implemented and cross-checked in tests — direct convolution (iterated
//! quadrature in √τ so the 1/√τ kernel endpoint is regular), numerical
//! Laplace inversion of the closed transform, and closed asymptotic forms in
//! the short- and long-time regimes.

use num_complex::Complex64;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::cheb::ChebInterp;
use crate::numerics::quad::{gl64, integrate_adaptive};
use crate::numerics::talbot;
use crate::propagator::{boundary_return_laplace, stationary_density, PropagatorParams};

const PI: f64 = std::f64::consts::PI;

/// Declared validity bounds of the closed asymptotic forms.
pub const ASYMPTOTIC_SMALL_TAU: f64 = 0.01;
pub const ASYMPTOTIC_LARGE_TAU: f64 = 100.0;

/// Moment orders above this compound too much quadrature error.
pub const MAX_MOMENT_ORDER: u32 = 6;

/// Interpolation degree for convolution-cascade stages (smooth in √τ).
const CASCADE_DEGREE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    Convolution,
    LaplaceInversion,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossMomentRequest {
    pub k: u32,
    pub tau: f64,
    pub v: f64,
    pub method: MomentMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdfMethod {
    Inversion,
    Asymptotic,
}

/// Amount of lost traffic x (buffer fractions) at reduced time τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPdfPoint {
    pub x: f64,
    pub tau: f64,
    pub v: f64,
}

/// A loss-amount distribution value: either a proper density at x, or — in
/// the long-time limit where losses self-average — a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossPdf {
    Density(f64),
    Atom { location: f64, mass: f64 },
}

/// Two measurement windows of length t1 and t2 separated by t_sep
/// (end of the first window to start of the second), in original time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorRequest {
    pub t1: f64,
    pub t2: f64,
    pub t_sep: f64,
    pub sigma2: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrMethod {
    Quadrature,
    Asymptotic,
}

/// Where a correlator request sits relative to the occupancy relaxation time
/// 2/σ² (τ-units: relaxation at (π² + v²)τ ≈ 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrRegime {
    /// Separation well inside the relaxation time and windows much shorter
    /// than the separation: inverse-square-root correlations.
    Critical,
    /// Separation beyond several relaxation times: correlations are gone.
    Decayed,
    /// Neither closed form applies; only quadrature is meaningful.
    Intermediate,
}

/// Loss rate per unit boundary density, σ²/2 in original time units
/// (exactly 1 in τ-parameterization). Estimators and moments share this one
/// definition of what "rate" means.
pub fn loss_rate_density(sigma2: f64) -> f64 {
    0.5 * sigma2
}

/// Expected lost traffic over reduced time τ from a stationary start:
/// exactly p(1)·τ at every τ.
pub fn mean_loss(tau: f64, v: f64) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0 && v.is_finite()) {
        return Err(Error::invalid("mean_loss", "tau must be ≥ 0 and finite, v finite"));
    }
    Ok(stationary_density(v, 1.0) * tau)
}

/// Expected idle deficit over reduced time τ: the empty wall is the full
/// wall of the reversed-drift process.
pub fn mean_idleness(tau: f64, v: f64) -> Result<f64> {
    mean_loss(tau, -v)
}

pub fn loss_moment(req: &LossMomentRequest) -> Result<f64> {
    check_moment_order(req.k)?;
    check_tau_positive(req.tau)?;
    check_finite_v(req.v)?;
    match req.method {
        MomentMethod::Convolution => moment_cascade(req.k, req.tau, req.v, Start::Stationary),
        MomentMethod::LaplaceInversion => moment_laplace(req.k, req.tau, req.v),
        MomentMethod::Asymptotic => moment_asymptotic(req.k, req.tau, req.v),
    }
}

/// Loss moment of the drift-reversed process: every idleness statistic is
/// the corresponding loss statistic under v → −v (and ℓ → 1−ℓ where a start
/// point appears).
pub fn idle_moment(req: &LossMomentRequest) -> Result<f64> {
    loss_moment(&LossMomentRequest { v: -req.v, ..*req })
}

/// k-th loss moment conditioned on starting occupancy ℓ; the innermost
/// convolution factor is the first arrival of density at the wall, w(1,·;ℓ).
pub fn conditional_loss_moment(k: u32, tau: f64, ell_start: f64, v: f64) -> Result<f64> {
    check_moment_order(k)?;
    check_tau_positive(tau)?;
    check_finite_v(v)?;
    if !(0.0..=1.0).contains(&ell_start) {
        return Err(Error::invalid("ell_start", "must lie in [0, 1]"));
    }
    moment_cascade(k, tau, v, Start::From(ell_start))
}

pub fn conditional_idle_moment(k: u32, tau: f64, ell_start: f64, v: f64) -> Result<f64> {
    conditional_loss_moment(k, tau, 1.0 - ell_start, -v)
}

/// Density of the lost amount x at reduced time τ (the atom at x = 0 with
/// mass 1 − prob_any_loss is excluded; the density integrates to
/// prob_any_loss). Long-time asymptotics degenerate to a moving point mass.
pub fn loss_pdf(point: &LossPdfPoint, method: PdfMethod) -> Result<LossPdf> {
    check_pdf_point(point)?;
    match method {
        PdfMethod::Inversion => pdf_inversion(point).map(LossPdf::Density),
        PdfMethod::Asymptotic => pdf_asymptotic(point, 1.0),
    }
}

pub fn idle_pdf(point: &LossPdfPoint, method: PdfMethod) -> Result<LossPdf> {
    loss_pdf(&LossPdfPoint { v: -point.v, ..*point }, method)
}

/// Probability that any loss at all occurred within reduced time τ,
/// by numerical inversion of p(1)/(ε²·W(1,ε;1)), clamped to [0, 1].
pub fn prob_any_loss(tau: f64, v: f64) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0 && v.is_finite()) {
        return Err(Error::invalid("prob_any_loss", "tau must be ≥ 0 and finite, v finite"));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let p1 = stationary_density(v, 1.0);
    let val = talbot::invert_checked(
        &mut |eps| p1 / (eps * eps * boundary_return_laplace(v, eps)),
        tau,
        talbot::DEFAULT_NODES,
        0.0,
        "probability of any loss",
    )?;
    Ok(val.clamp(0.0, 1.0))
}

pub fn prob_any_idle(tau: f64, v: f64) -> Result<f64> {
    prob_any_loss(tau, -v)
}

/// Closed short/long-time branches of the any-loss probability.
pub fn prob_any_loss_asymptotic(tau: f64, v: f64) -> Result<f64> {
    check_tau_positive(tau)?;
    check_finite_v(v)?;
    if tau <= ASYMPTOTIC_SMALL_TAU {
        Ok((stationary_density(v, 1.0) * (4.0 * tau / PI).sqrt()).min(1.0))
    } else if tau >= ASYMPTOTIC_LARGE_TAU {
        Ok(1.0)
    } else {
        Err(Error::OutsideRegime {
            what: "any-loss probability asymptotics",
            detail: format!("tau = {tau} is in neither branch (≤ {ASYMPTOTIC_SMALL_TAU} or ≥ {ASYMPTOTIC_LARGE_TAU})"),
        })
    }
}

/// Density of the lost amount conditioned on at least one loss:
/// loss_pdf / prob_any_loss.
pub fn conditional_loss_pdf(point: &LossPdfPoint, method: PdfMethod) -> Result<LossPdf> {
    check_pdf_point(point)?;
    match method {
        PdfMethod::Inversion => {
            let prob = prob_any_loss(point.tau, point.v)?;
            if prob <= 0.0 {
                return Err(Error::invalid("prob_any_loss", "conditioning event has zero probability"));
            }
            pdf_inversion(point).map(|d| LossPdf::Density(d / prob))
        }
        PdfMethod::Asymptotic => {
            // short-time: erfc profile normalized by p(1)√(4τ/π)
            let norm = if point.tau <= ASYMPTOTIC_SMALL_TAU {
                stationary_density(point.v, 1.0) * (4.0 * point.tau / PI).sqrt()
            } else {
                1.0 // long-time branch is already a unit atom
            };
            pdf_asymptotic(point, norm)
        }
    }
}

/// Long-time variance of the lost traffic,
/// m^(1)(τ)·[coth|v|/|v| − 1/sinh²|v|]; valid for τ ≥ 10.
pub fn loss_variance_longtime(tau: f64, v: f64) -> Result<f64> {
    check_finite_v(v)?;
    if !(tau.is_finite() && tau >= 10.0) {
        return Err(Error::OutsideRegime {
            what: "long-time loss variance",
            detail: format!("valid for tau ≥ 10, got {tau}"),
        });
    }
    let m1 = mean_loss(tau, v)?;
    let w = v.abs();
    let bracket = if w < 1e-4 {
        2.0 / 3.0
    } else if w > 350.0 {
        // coth → 1 and 1/sinh² → 0 to far beyond f64 resolution
        1.0 / w
    } else {
        1.0 / (w.tanh() * w) - 1.0 / (w.sinh() * w.sinh())
    };
    Ok(m1 * bracket)
}

pub fn classify_regime(req: &CorrelatorRequest) -> Result<CorrRegime> {
    check_correlator_request(req)?;
    let tau_sep = 0.5 * req.sigma2 * req.t_sep;
    // slowest occupancy mode relaxes at rate π² + v² in τ
    if (PI * PI + req.v * req.v) * tau_sep >= 5.0 {
        Ok(CorrRegime::Decayed)
    } else if tau_sep <= 0.2 && req.t_sep >= 5.0 * req.t1.max(req.t2) {
        Ok(CorrRegime::Critical)
    } else {
        Ok(CorrRegime::Intermediate)
    }
}

/// Restricted second product moment ρ(t1, t2, T): the expectation of the
/// product of losses in the two windows. The correlator is ρ minus the
/// product of means; ρ itself carries the inverse-square-root law in the
/// critical regime.
pub fn loss_product_moment(req: &CorrelatorRequest) -> Result<f64> {
    check_correlator_request(req)?;
    let half = 0.5 * req.sigma2;
    let (tau1, tau2, tau_sep) = (half * req.t1, half * req.t2, half * req.t_sep);
    let kernel = WallKernel::new(req.v)?;
    let p1 = stationary_density(req.v, 1.0);
    // ρ = p(1)·∫ K(τ)·w(1,τ;1) dτ over τ ∈ [τ_sep, τ_sep+τ1+τ2], where the
    // trapezoid K is the overlap measure of the two windows at that gap
    let lo = tau_sep;
    let hi = tau_sep + tau1 + tau2;
    let trap = |t: f64| (t - lo).min(hi - t).min(tau1).min(tau2).max(0.0);
    let mut cuts = vec![lo, lo + tau1.min(tau2), lo + tau1.max(tau2), hi];
    // also split where the kernel changes evaluation strategy
    for edge in [1e-3, DEFAULT_CROSSOVER] {
        if lo < edge && edge < hi {
            cuts.push(edge);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0].sqrt(), pair[1].sqrt());
        if b <= a {
            continue;
        }
        // substitute τ = r²: ∫K·w dτ = ∫2·K(r²)·g(r) dr with g = r·w
        total += integrate_fallible(a, b, 1e-10, 1e-18, &mut |r| {
            Ok(2.0 * trap(r * r) * kernel.g(r)?)
        })?;
    }
    Ok(p1 * total)
}

const DEFAULT_CROSSOVER: f64 = crate::propagator::DEFAULT_TAU_CROSSOVER;

/// Two-window covariance of lost traffic. Quadrature subtracts the exact
/// product of means from ρ; the asymptotic branch returns the closed
/// critical-regime law or zero in the decayed regime.
pub fn loss_correlator(req: &CorrelatorRequest, method: CorrMethod) -> Result<f64> {
    check_correlator_request(req)?;
    let half = 0.5 * req.sigma2;
    let p1 = stationary_density(req.v, 1.0);
    let mean_product = p1 * p1 * (half * req.t1) * (half * req.t2);
    match method {
        CorrMethod::Quadrature => Ok(loss_product_moment(req)? - mean_product),
        CorrMethod::Asymptotic => match classify_regime(req)? {
            CorrRegime::Critical => {
                Ok(mean_product / p1 * (2.0 / (PI * req.sigma2 * req.t_sep)).sqrt())
            }
            CorrRegime::Decayed => Ok(0.0),
            CorrRegime::Intermediate => Err(Error::OutsideRegime {
                what: "correlator asymptotics",
                detail: format!(
                    "separation tau = {} is neither critical nor decayed",
                    half * req.t_sep
                ),
            }),
        },
    }
}

// --- convolution cascade ---------------------------------------------------

enum Start {
    Stationary,
    From(f64),
}

/// Boundary-return kernel in the √τ variable: g(r) = r·w(1, r²; start).
/// The factor r regularizes the 1/√τ endpoint, making g smooth at r = 0.
struct WallKernel {
    params: PropagatorParams,
    v: f64,
}

impl WallKernel {
    fn new(v: f64) -> Result<Self> {
        Ok(Self { params: PropagatorParams::new(v)?, v })
    }

    /// g(r) = r·w(1, r²; 1); below τ = 10⁻³ the image sum collapses to a
    /// closed form exact to e^{−1/τ}, smooth through r = 0.
    fn g(&self, r: f64) -> Result<f64> {
        let tau = r * r;
        if tau <= 1e-3 {
            Ok((-self.v * self.v * tau).exp() / PI.sqrt() + self.v * r * erfc(-self.v * r))
        } else {
            Ok(r * self.params.propagator(1.0, tau, 1.0)?)
        }
    }

    /// g(r) = r·w(1, r²; ℓ) for an interior start. Unlike the wall start this
    /// vanishes (with all derivatives) at r = 0.
    fn g_from(&self, r: f64, l: f64) -> Result<f64> {
        if 1.0 - l <= 1e-6 {
            return self.g(r);
        }
        let tau = r * r;
        if tau <= 1e-13 {
            // density a finite distance from the wall: below e^{−(1−ℓ)²/4τ}
            return Ok(0.0);
        }
        Ok(r * self.params.propagator(1.0, tau, l)?)
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// m^(k) as an iterated convolution of boundary-return kernels:
/// stationary start — k!·p(1)·[1 ∗ 1 ∗ w̃^{∗(k−1)}](τ);
/// conditional start — k!·[1 ∗ w̃_ℓ ∗ w̃^{∗(k−1)}](τ).
/// All stages are tabulated as Chebyshev interpolants in q = √τ.
fn moment_cascade(k: u32, tau: f64, v: f64, start: Start) -> Result<f64> {
    let kernel = WallKernel::new(v)?;
    let q_max = tau.sqrt();
    let (n_kernels, prefactor) = match start {
        Start::Stationary => (k - 1, factorial(k) * stationary_density(v, 1.0)),
        Start::From(_) => (k, factorial(k)),
    };
    if n_kernels == 0 {
        return Ok(prefactor * tau); // stationary k = 1: exactly p(1)·τ
    }
    // innermost stage B₁ = 1 ∗ (start kernel), directly in the q variable
    let mut stage = cheb_fallible(q_max, &mut |q| {
        integrate_fallible(0.0, q, 1e-11, 1e-16, &mut |r| {
            Ok(2.0 * match start {
                Start::Stationary => kernel.g(r)?,
                Start::From(l) => kernel.g_from(r, l)?,
            })
        })
    })?;
    // outer stages B_j = w̃ ∗ B_{j−1} via the circular substitution
    // (f ∗ h)(q²) = 2q ∫₀^{π/2} g(q sin φ)·ĥ(q cos φ)·cos φ dφ
    for _ in 2..=n_kernels {
        let prev = stage;
        stage = cheb_fallible(q_max, &mut |q| {
            let val = gl_fallible(0.0, PI / 2.0, &mut |phi| {
                Ok(kernel.g(q * phi.sin())? * prev.eval(q * phi.cos()) * phi.cos())
            })?;
            Ok(2.0 * q * val)
        })?;
    }
    let total = match start {
        // final open integration: 1 ∗ B_{k−1} evaluated at τ
        Start::Stationary => {
            integrate_fallible(0.0, q_max, 1e-11, 1e-16, &mut |r| Ok(2.0 * r * stage.eval(r)))?
        }
        // conditional chain already contains both integrators
        Start::From(_) => stage.eval(q_max),
    };
    Ok(prefactor * total)
}

fn moment_laplace(k: u32, tau: f64, v: f64) -> Result<f64> {
    let p1 = stationary_density(v, 1.0);
    let kf = factorial(k);
    talbot::invert_checked(
        &mut |eps| {
            let wb = boundary_return_laplace(v, eps);
            let mut acc = Complex64::new(kf * p1, 0.0) / (eps * eps);
            for _ in 1..k {
                acc *= wb;
            }
            acc
        },
        tau,
        talbot::DEFAULT_NODES,
        0.0,
        "loss-moment inversion",
    )
}

fn moment_asymptotic(k: u32, tau: f64, v: f64) -> Result<f64> {
    let p1 = stationary_density(v, 1.0);
    if tau <= ASYMPTOTIC_SMALL_TAU {
        Ok(factorial(k) * p1 * tau.powf((k as f64 + 1.0) / 2.0) / gamma((k as f64 + 3.0) / 2.0))
    } else if tau >= ASYMPTOTIC_LARGE_TAU {
        Ok(p1.powi(k as i32) * tau.powi(k as i32))
    } else {
        Err(Error::OutsideRegime {
            what: "loss-moment asymptotics",
            detail: format!("tau = {tau} is in neither branch (≤ {ASYMPTOTIC_SMALL_TAU} or ≥ {ASYMPTOTIC_LARGE_TAU})"),
        })
    }
}

// --- loss-amount distribution ----------------------------------------------

/// Pointwise inversion of P(x; ε) = p(1)·e^{−x/W_b(ε)}/(ε·W_b(ε))², the
/// transform of the loss-amount density (decaying exponent: the amount lost
/// while the boundary kernel supplies density W_b is exponentially
/// distributed with that mean).
fn pdf_inversion(point: &LossPdfPoint) -> Result<f64> {
    let p1 = stationary_density(point.v, 1.0);
    let x = point.x;
    // tail values sit orders of magnitude below the density scale p(1), so
    // the convergence check needs an absolute budget at that scale
    let val = talbot::invert_checked(
        &mut |eps| {
            let wb = boundary_return_laplace(point.v, eps);
            p1 * (-x / wb).exp() / (eps * wb * eps * wb)
        },
        point.tau,
        talbot::DEFAULT_NODES,
        1e-8 * p1.max(1.0),
        "loss-amount density inversion",
    )?;
    if val < -1e-8 {
        return Err(Error::NegativeDensity {
            value: val,
            context: format!("loss pdf at x={x}, tau={}, v={}", point.tau, point.v),
        });
    }
    Ok(val.max(0.0))
}

fn pdf_asymptotic(point: &LossPdfPoint, norm: f64) -> Result<LossPdf> {
    let p1 = stationary_density(point.v, 1.0);
    if point.tau <= ASYMPTOTIC_SMALL_TAU {
        let profile = p1 * erfc(point.x / (4.0 * point.tau).sqrt());
        Ok(LossPdf::Density(profile / norm))
    } else if point.tau >= ASYMPTOTIC_LARGE_TAU {
        // losses self-average: all mass rides at the mean
        Ok(LossPdf::Atom { location: p1 * point.tau, mass: 1.0 })
    } else {
        Err(Error::OutsideRegime {
            what: "loss-pdf asymptotics",
            detail: format!("tau = {} is in neither branch (≤ {ASYMPTOTIC_SMALL_TAU} or ≥ {ASYMPTOTIC_LARGE_TAU})", point.tau),
        })
    }
}

// --- validation and fallible-integration glue -------------------------------

fn check_moment_order(k: u32) -> Result<()> {
    if (1..=MAX_MOMENT_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid("k", format!("moment order must be in 1..={MAX_MOMENT_ORDER}")))
    }
}

fn check_tau_positive(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("tau", "must be finite and positive"))
    }
}

fn check_finite_v(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("v", "must be finite"))
    }
}

fn check_pdf_point(point: &LossPdfPoint) -> Result<()> {
    if !(point.x.is_finite() && point.x >= 0.0) {
        return Err(Error::invalid("x", "lost amount must be finite and ≥ 0"));
    }
    check_tau_positive(point.tau)?;
    check_finite_v(point.v)
}

fn check_correlator_request(req: &CorrelatorRequest) -> Result<()> {
    let pos = |x: f64| x.is_finite() && x > 0.0;
    if !(pos(req.t1) && pos(req.t2) && pos(req.t_sep)) {
        return Err(Error::invalid("correlator windows", "t1, t2, t_sep must be positive"));
    }
    if !pos(req.sigma2) {
        return Err(Error::invalid("sigma2", "must be finite and positive"));
    }
    check_finite_v(req.v)
}

/// Adaptive quadrature over a fallible integrand: the first error aborts the
/// result even though the driver itself cannot short-circuit.
fn integrate_fallible(
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    f: &mut impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let mut first_err: Option<Error> = None;
    let val = integrate_adaptive(
        &mut |x| match f(x) {
            Ok(y) => y,
            Err(e) => {
                first_err.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        rel_tol,
        abs_tol,
    );
    match first_err {
        Some(e) => Err(e),
        None => val,
    }
}

fn gl_fallible(a: f64, b: f64, f: &mut impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut first_err: Option<Error> = None;
    let val = gl64().integrate(a, b, |x| match f(x) {
        Ok(y) => y,
        Err(e) => {
            first_err.get_or_insert(e);
            0.0
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(val),
    }
}

fn cheb_fallible(q_max: f64, f: &mut impl FnMut(f64) -> Result<f64>) -> Result<ChebInterp> {
    let probe = ChebInterp::from_fn(0.0, q_max, CASCADE_DEGREE, |_| 0.0);
    let mut vals = Vec::with_capacity(probe.nodes().len());
    for &q in probe.nodes() {
        vals.push(f(q)?);
    }
    Ok(ChebInterp::from_values(0.0, q_max, vals))
}
