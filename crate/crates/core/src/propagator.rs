//! Occupancy propagator for drift–diffusion on the unit interval with a
//! reflecting wall at 0 and a radiation (loss) wall at 1 whose outflow is
//! reinjected as boundary mass — total probability is conserved.
//!
//! All functions here work in reduced variables: occupancy ℓ ∈ [0, 1],
//! diffusion time τ = σ²t/2, reduced drift v = a/σ². The propagator
//! w(ℓ′, τ; ℓ) solves ∂_τ w = ∂²_{ℓ′} w − 2v ∂_{ℓ′} w with zero-flux
//! boundaries, starting from a point mass at ℓ.
//!
//! Two complementary representations are used:
//! * an eigenfunction series, geometrically convergent for moderate/large τ,
//! * a method-of-images sum, geometrically convergent for small τ.
//!
//! They overlap on a wide band of τ; the crossover is a tuning knob and the
//! constructor cross-validates the two on a grid at the crossover.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;

/// τ below this is indistinguishable from the initial delta in f64.
const TAU_FLOOR: f64 = 1e-14;

/// Terms beyond exp(−36) ≈ 2e−16 of the leading one are dropped.
const LOG_TERM_CUTOFF: f64 = 6.0;

pub const DEFAULT_SERIES_CUTOFF: usize = 2048;
pub const DEFAULT_IMAGE_CUTOFF: usize = 8;
pub const DEFAULT_TAU_CROSSOVER: f64 = 0.1;

/// Reduced drift plus truncation controls for the two representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorParams {
    pub v: f64,
    /// Maximum admissible number of series modes.
    pub series_cutoff: usize,
    /// Maximum admissible image order (sum runs over −n..=n).
    pub image_cutoff: usize,
    /// Representation switch: images for τ ≤ crossover, series above.
    pub tau_crossover: f64,
}

impl PropagatorParams {
    pub fn new(v: f64) -> Result<Self> {
        Self::with_options(
            v,
            DEFAULT_SERIES_CUTOFF,
            DEFAULT_IMAGE_CUTOFF,
            DEFAULT_TAU_CROSSOVER,
        )
    }

    /// Both representations are most expensive exactly at the crossover, so a
    /// construction-time agreement check there certifies every later call.
    pub fn with_options(
        v: f64,
        series_cutoff: usize,
        image_cutoff: usize,
        tau_crossover: f64,
    ) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::invalid("v", "must be finite"));
        }
        if !(tau_crossover.is_finite() && tau_crossover > TAU_FLOOR) {
            return Err(Error::invalid("tau_crossover", "must be positive"));
        }
        let params = Self { v, series_cutoff, image_cutoff, tau_crossover };
        let grid = [0.0, 0.31, 0.72, 1.0];
        for &l in &grid {
            for &lp in &grid {
                let s = params.w_series(lp, tau_crossover, l)?;
                let i = params.w_images(lp, tau_crossover, l)?;
                if (s - i).abs() > 1e-10 * (1.0 + s.abs()) {
                    return Err(Error::NonConvergent {
                        what: "propagator representations",
                        detail: format!(
                            "series {s:e} vs images {i:e} at (l'={lp}, tau={tau_crossover}, l={l})"
                        ),
                    });
                }
            }
        }
        Ok(params)
    }

    /// Transition density w(ℓ′, τ; ℓ). Errors on τ ≤ 0 or τ too small to
    /// resolve (the initial condition is a delta function), or when the
    /// configured truncation orders cannot reach exp(−36) accuracy.
    pub fn propagator(&self, lp: f64, tau: f64, l: f64) -> Result<f64> {
        check_unit(lp, "l_prime")?;
        check_unit(l, "l")?;
        check_tau(tau)?;
        let w = if tau <= self.tau_crossover {
            self.w_images(lp, tau, l)?
        } else {
            self.w_series(lp, tau, l)?
        };
        // representations can round to tiny negatives in far tails
        Ok(if w < 0.0 && w > -1e-9 { 0.0 } else { w })
    }

    /// Probability current in original time units, J = (σ²/2)(2v·w − ∂_{ℓ′}w).
    /// Vanishes identically at both walls.
    pub fn probability_current(&self, sigma2: f64, lp: f64, tau: f64, l: f64) -> Result<f64> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::invalid("sigma2", "must be finite and positive"));
        }
        check_unit(lp, "l_prime")?;
        check_unit(l, "l")?;
        check_tau(tau)?;
        let j_tau = if tau <= self.tau_crossover {
            self.current_images(lp, tau, l)?
        } else {
            self.current_series(lp, tau, l)?
        };
        Ok(0.5 * sigma2 * j_tau)
    }

    /// Laplace transform W(ℓ′, ε; ℓ) = ∫₀^∞ e^{−ετ} w dτ, Re ε > 0.
    pub fn propagator_laplace(&self, lp: f64, eps: Complex64, l: f64) -> Result<Complex64> {
        check_unit(lp, "l_prime")?;
        check_unit(l, "l")?;
        if !(eps.re.is_finite() && eps.im.is_finite() && eps.re > 0.0) {
            return Err(Error::invalid("eps", "must be finite with positive real part"));
        }
        Ok(self.propagator_laplace_unchecked(lp, eps, l))
    }

    /// Same transform without the half-plane check, for use on deformed
    /// inversion contours (which dip into Re ε < 0 but keep Im ε ≠ 0 there).
    pub fn propagator_laplace_unchecked(&self, lp: f64, eps: Complex64, l: f64) -> Complex64 {
        let v = self.v;
        let kappa = (eps + v * v).sqrt();
        let xs = lp + l - 1.0; // ∈ [−1, 1]
        let dd = (lp - l).abs() - 1.0; // ∈ [−1, 0]
        let (rc_xs, rs_xs) = sinh_ratios(kappa, xs);
        let (rc_dd, _) = sinh_ratios(kappa, dd);
        let half = Complex64::new(0.5 * (v * (lp - l)).exp(), 0.0);
        half * (rc_xs * 2.0 * v * v / (eps * kappa)
            + rs_xs * 2.0 * v / eps
            + (rc_dd + rc_xs) / kappa)
    }

    /// Density at the loss wall started from the loss wall, w(1, τ; 1).
    /// For τ ≤ 1e−3 the images collapse to a two-term closed form whose
    /// neglected remainder is below e^{−1/τ}.
    pub fn boundary_return(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if tau <= 1e-3 {
            let v = self.v;
            let rt = tau.sqrt();
            Ok((-v * v * tau).exp() / (PI * tau).sqrt() + v * erfc(-v * rt))
        } else {
            self.propagator(1.0, tau, 1.0)
        }
    }

    // --- eigenfunction series -------------------------------------------

    fn series_terms(&self, tau: f64) -> Result<usize> {
        // mode k decays as exp(−k²π²τ): need kπ√τ ≥ 6
        let needed = (LOG_TERM_CUTOFF / (PI * tau.sqrt())).ceil().max(8.0) as usize;
        if needed > self.series_cutoff {
            return Err(Error::NonConvergent {
                what: "eigenfunction series",
                detail: format!("needs {needed} modes at tau={tau}, cutoff {}", self.series_cutoff),
            });
        }
        Ok(needed)
    }

    fn w_series(&self, lp: f64, tau: f64, l: f64) -> Result<f64> {
        let v = self.v;
        let terms = self.series_terms(tau)?;
        let mut sum = 0.0;
        for k in (1..=terms).rev() {
            // smallest contributions first
            let kp = k as f64 * PI;
            let lam = kp * kp + v * v;
            let mode = |x: f64| kp * (kp * x).cos() + v * (kp * x).sin();
            sum += (-lam * tau).exp() / lam * mode(lp) * mode(l);
        }
        Ok(stationary_density(v, lp) + 2.0 * (v * (lp - l)).exp() * sum)
    }

    fn current_series(&self, lp: f64, tau: f64, l: f64) -> Result<f64> {
        // per-mode current reduces to (k²π²+v²)·sin(kπℓ′): exactly zero at walls
        let v = self.v;
        let terms = self.series_terms(tau)?;
        let mut sum = 0.0;
        for k in (1..=terms).rev() {
            let kp = k as f64 * PI;
            let lam = kp * kp + v * v;
            sum += (-lam * tau).exp() * (kp * lp).sin() * (kp * (kp * l).cos() + v * (kp * l).sin());
        }
        Ok(2.0 * (v * (lp - l)).exp() * sum)
    }

    // --- method of images ------------------------------------------------

    fn image_order(&self, tau: f64) -> Result<usize> {
        // image n sits ~2n away: need 2n/(2√τ) ≥ 6 beyond the physical window
        let needed = (1.0 + LOG_TERM_CUTOFF * tau.sqrt()).ceil().max(2.0) as usize;
        if needed > self.image_cutoff {
            return Err(Error::NonConvergent {
                what: "image sum",
                detail: format!("needs {needed} images at tau={tau}, cutoff {}", self.image_cutoff),
            });
        }
        Ok(needed)
    }

    fn w_images(&self, lp: f64, tau: f64, l: f64) -> Result<f64> {
        let v = self.v;
        let n_max = self.image_order(tau)? as i64;
        let (dd, xs) = (lp - l, lp + l);
        let rt = tau.sqrt();
        let mut gauss = 0.0;
        let mut drift = 0.0;
        for n in -n_max..=n_max {
            let z_d = dd - 2.0 * n as f64;
            let z_s = xs - 2.0 * n as f64;
            gauss += heat_kernel(z_d, tau) + heat_kernel(z_s, tau);
            // drift correction: one-sided exponential images against the walls.
            // sign(z_s) by image index: z_s > 0 for n ≤ 0 and < 0 for n ≥ 1
            // throughout the open domain, and wall values are interior limits.
            let s = if n <= 0 { 1.0 } else { -1.0 };
            let u = s * (z_s / (2.0 * rt) + v * rt);
            if u < 27.0 {
                // u² ≥ 2v·z_s by AM–GM, so the product cannot overflow
                drift += s * (v * z_s).exp() * erfc(u);
            }
        }
        Ok((v * dd - v * v * tau).exp() * gauss - v * (v * dd).exp() * drift)
    }

    fn current_images(&self, lp: f64, tau: f64, l: f64) -> Result<f64> {
        // the erfc pieces drop out of 2v·w − ∂w entirely
        let v = self.v;
        let n_max = self.image_order(tau)? as i64;
        let (dd, xs) = (lp - l, lp + l);
        let mut sum = 0.0;
        for n in -n_max..=n_max {
            let z_d = dd - 2.0 * n as f64;
            let z_s = xs - 2.0 * n as f64;
            let (g_d, g_s) = (heat_kernel(z_d, tau), heat_kernel(z_s, tau));
            sum += v * (g_d - g_s) + (z_d / (2.0 * tau)) * g_d + (z_s / (2.0 * tau)) * g_s;
        }
        Ok((v * dd - v * v * tau).exp() * sum)
    }
}

#[inline]
fn heat_kernel(z: f64, tau: f64) -> f64 {
    (-z * z / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
}

fn check_unit(x: f64, name: &'static str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(name, "occupancy must lie in [0, 1]"))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::invalid("tau", "must be finite and non-negative"));
    }
    if tau < TAU_FLOOR {
        return Err(Error::DeltaInitial);
    }
    Ok(())
}

/// (cosh(κb)/sinh κ, sinh(κb)/sinh κ) for |b| ≤ 1, computed from exponentials
/// with non-positive real part so nothing overflows for any Re κ ≥ 0.
fn sinh_ratios(kappa: Complex64, b: f64) -> (Complex64, Complex64) {
    if kappa.norm() < 1e-3 {
        // κ → 0: ratios are smooth in κ²; expand to O(κ⁴)
        let k2 = kappa * kappa;
        let b2 = b * b;
        let rc = (Complex64::new(1.0, 0.0)
            + k2 * (b2 / 2.0 - 1.0 / 6.0)
            + k2 * k2 * (b2 * b2 / 24.0 - b2 / 12.0 + 7.0 / 360.0))
            / kappa;
        let rs = Complex64::new(b, 0.0)
            + k2 * (b * (b2 - 1.0) / 6.0)
            + k2 * k2 * (b * (b2 * b2 / 120.0 - b2 / 36.0 + 7.0 / 360.0));
        (rc, rs)
    } else {
        let e1 = (kappa * (b - 1.0)).exp();
        let e2 = (-kappa * (b + 1.0)).exp();
        let denom = Complex64::new(1.0, 0.0) - (-kappa * 2.0).exp();
        ((e1 + e2) / denom, (e1 - e2) / denom)
    }
}

/// Laplace transform of the boundary-return density, (κ coth κ + v)/ε with
/// κ = √(ε + v²). Valid on inversion contours as long as κ² avoids the
/// negative real axis.
pub fn boundary_return_laplace(v: f64, eps: Complex64) -> Complex64 {
    let kappa = (eps + v * v).sqrt();
    (kappa_coth_kappa(kappa) + v) / eps
}

fn kappa_coth_kappa(kappa: Complex64) -> Complex64 {
    if kappa.norm() < 1e-3 {
        let k2 = kappa * kappa;
        Complex64::new(1.0, 0.0) + k2 / 3.0 - k2 * k2 / 45.0
    } else {
        let e = (-kappa * 2.0).exp();
        kappa * (Complex64::new(1.0, 0.0) + e) / (Complex64::new(1.0, 0.0) - e)
    }
}

// --- stationary occupancy law -------------------------------------------

/// p(ℓ) = 2v e^{2vℓ}/(e^{2v} − 1), the zero-flux stationary density.
pub fn stationary_density(v: f64, l: f64) -> f64 {
    if v == 0.0 {
        1.0
    } else if v > 0.0 {
        2.0 * v * (2.0 * v * (l - 1.0)).exp() / -(-2.0 * v).exp_m1()
    } else {
        2.0 * v * (2.0 * v * l).exp() / (2.0 * v).exp_m1()
    }
}

pub fn stationary_cdf(v: f64, l: f64) -> f64 {
    if v == 0.0 {
        l
    } else if 2.0 * v > 700.0 {
        (2.0 * v * (l - 1.0)).exp() * (-2.0 * v * l).exp_m1() / (-2.0 * v).exp_m1()
    } else {
        (2.0 * v * l).exp_m1() / (2.0 * v).exp_m1()
    }
}

/// Inverse of [`stationary_cdf`] in ℓ; exact sampling via u ∈ [0, 1].
pub fn stationary_inverse_cdf(v: f64, u: f64) -> f64 {
    if v == 0.0 {
        u
    } else if 2.0 * v > 700.0 {
        1.0 + (u + (1.0 - u) * (-2.0 * v).exp()).ln() / (2.0 * v)
    } else {
        (u * (2.0 * v).exp_m1()).ln_1p() / (2.0 * v)
    }
}

// --- half-space (near-full-boundary) approximation ------------------------

/// Propagator on (−∞, 1] with the loss wall at 1 only, in original units
/// (drift a, diffusion σ², time t). Valid when the empty boundary is far:
/// ℓ, ℓ′ well above −∞ but the wall at 0 ignored.
pub fn half_space_propagator(a: f64, sigma2: f64, lp: f64, t: f64, l: f64) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::invalid("sigma2", "must be finite and positive"));
    }
    if !(a.is_finite() && lp.is_finite() && l.is_finite()) {
        return Err(Error::invalid("half_space", "a, l, l_prime must be finite"));
    }
    if lp > 1.0 || l > 1.0 {
        return Err(Error::invalid("half_space", "occupancies must not exceed 1"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", "must be finite and non-negative"));
    }
    if sigma2 * t / 2.0 < TAU_FLOOR {
        return Err(Error::DeltaInitial);
    }
    let dd = lp - l;
    let mirror = 2.0 - lp - l; // ≥ |Δ|, so both exponents below are ≤ 0
    let s2t = sigma2 * t;
    let norm = (2.0 * PI * s2t).sqrt();
    let g_direct = (-(dd - a * t) * (dd - a * t) / (2.0 * s2t)).exp() / norm;
    let g_mirror =
        (a * dd / sigma2 - a * a * t / (2.0 * sigma2) - mirror * mirror / (2.0 * s2t)).exp() / norm;
    let wall =
        (a / sigma2) * exp_erfc(-2.0 * a * (1.0 - lp) / sigma2, (mirror - a * t) / (2.0 * s2t).sqrt());
    Ok(g_direct + g_mirror + wall)
}

/// exp(e)·erfc(u), stable when both factors are extreme. Callers guarantee
/// e ≤ max(u², 0), which makes every branch overflow-free.
fn exp_erfc(e: f64, u: f64) -> f64 {
    debug_assert!(e <= u * u + 1e-9 || e <= 1e-9);
    if u > 26.0 {
        let iu2 = 1.0 / (u * u);
        let series =
            1.0 - 0.5 * iu2 * (1.0 - 1.5 * iu2 * (1.0 - 2.5 * iu2 * (1.0 - 3.5 * iu2)));
        (e - u * u).exp() * series / (u * PI.sqrt())
    } else {
        e.exp() * erfc(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use crate::numerics::quad::gl64;

    #[test]
    fn stationary_frozen_values() {
        assert_relative_eq!(stationary_density(1.0, 1.0), 2.3130352854993315, max_relative = 1e-15);
        assert_relative_eq!(stationary_density(0.5, 1.0), 1.5819767068693265, max_relative = 1e-15);
        assert_eq!(stationary_density(0.0, 0.37), 1.0);
        // reversal symmetry p(ℓ; v) = p(1−ℓ; −v)
        for &v in &[0.25, 1.0, 4.0] {
            for &l in &[0.0, 0.3, 0.9] {
                assert_relative_eq!(
                    stationary_density(v, l),
                    stationary_density(-v, 1.0 - l),
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn stationary_normalizes_and_inverts() {
        for &v in &[-3.0, -0.5, 0.0, 1e-8, 0.5, 3.0] {
            let mass = gl64().integrate(0.0, 1.0, |l| stationary_density(v, l));
            assert_relative_eq!(mass, 1.0, max_relative = 1e-13);
            assert_abs_diff_eq!(stationary_cdf(v, 0.0), 0.0, epsilon = 1e-15);
            assert_relative_eq!(stationary_cdf(v, 1.0), 1.0, max_relative = 1e-14);
            for &u in &[0.0, 0.12, 0.5, 0.93, 1.0] {
                let l = stationary_inverse_cdf(v, u);
                assert!((0.0..=1.0).contains(&l));
                assert_abs_diff_eq!(stationary_cdf(v, l), u, epsilon = 1e-12);
            }
        }
        // extreme drift: distribution collapses onto the full boundary
        assert!(stationary_inverse_cdf(400.0, 0.5) > 0.999);
    }

    #[test]
    fn representations_agree_across_the_crossover_band() {
        let params = PropagatorParams::new(1.3).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        for &tau in &[0.05, 0.1, 0.2] {
            for &l in &grid {
                for &lp in &grid {
                    let s = params.w_series(lp, tau, l).unwrap();
                    let i = params.w_images(lp, tau, l).unwrap();
                    assert_abs_diff_eq!(s, i, epsilon = 1e-10);
                    let js = params.current_series(lp, tau, l).unwrap();
                    let ji = params.current_images(lp, tau, l).unwrap();
                    assert_abs_diff_eq!(js, ji, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn propagator_is_nonnegative_and_tends_to_stationary() {
        let params = PropagatorParams::new(-0.8).unwrap();
        for &tau in &[0.01, 0.3, 5.0] {
            for i in 0..=10 {
                let lp = i as f64 / 10.0;
                assert!(params.propagator(lp, tau, 0.4).unwrap() >= 0.0);
            }
        }
        for i in 0..=4 {
            let lp = i as f64 / 4.0;
            assert_relative_eq!(
                params.propagator(lp, 6.0, 0.9).unwrap(),
                stationary_density(-0.8, lp),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn current_vanishes_at_both_walls() {
        let params = PropagatorParams::new(2.0).unwrap();
        for &tau in &[0.04, 0.7] {
            for &wall in &[0.0, 1.0] {
                assert_abs_diff_eq!(
                    params.probability_current(2.0, wall, tau, 0.6).unwrap(),
                    0.0,
                    epsilon = 1e-12
                );
            }
            // interior current is generically nonzero
            assert!(params.probability_current(2.0, 0.5, tau, 0.6).unwrap().abs() > 1e-6);
        }
    }

    #[test]
    fn laplace_boundary_values_match_closed_forms() {
        // v=0, ε=1, ℓ=ℓ′=1: W = coth(1)
        let p0 = PropagatorParams::new(0.0).unwrap();
        let w = p0.propagator_laplace(1.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(w.re, 1.3130352854993312, max_relative = 1e-12);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-14);
        // v=1, ε=1: (κ coth κ ± v)/ε with κ=√2 at the two corners
        let p1 = PropagatorParams::new(1.0).unwrap();
        let w1 = p1.propagator_laplace(1.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(w1.re, 2.591891655520487, max_relative = 1e-12);
        let w0 = p1.propagator_laplace(0.0, Complex64::new(1.0, 0.0), 0.0).unwrap();
        assert_relative_eq!(w0.re, 0.5918916555204874, max_relative = 1e-12);
        // agreement with the dedicated boundary-return transform
        let eps = Complex64::new(0.7, 0.3);
        let direct = p1.propagator_laplace_unchecked(1.0, eps, 1.0);
        let b = boundary_return_laplace(1.0, eps);
        assert_relative_eq!(direct.re, b.re, max_relative = 1e-12);
        assert_relative_eq!(direct.im, b.im, max_relative = 1e-12);
    }

    #[test]
    fn laplace_pole_at_zero_carries_the_stationary_density() {
        let params = PropagatorParams::new(0.7).unwrap();
        let eps = Complex64::new(1e-9, 0.0);
        let w = params.propagator_laplace(0.3, eps, 0.8).unwrap();
        assert_relative_eq!((w * eps).re, stationary_density(0.7, 0.3), max_relative = 1e-6);
    }

    #[test]
    fn boundary_return_closed_form_matches_images() {
        for &v in &[-1.0, 0.0, 2.5] {
            let params = PropagatorParams::new(v).unwrap();
            // just above the closed-form switch the full image sum must agree
            let tau = 2e-3;
            let closed = (-v * v * tau).exp() / (PI * tau).sqrt() + v * erfc(-v * tau.sqrt());
            assert_relative_eq!(params.propagator(1.0, tau, 1.0).unwrap(), closed, max_relative = 1e-12);
        }
        let p0 = PropagatorParams::new(0.0).unwrap();
        assert_relative_eq!(p0.boundary_return(1e-4).unwrap(), 56.41895835477563, max_relative = 1e-13);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let params = PropagatorParams::new(0.5).unwrap();
        assert!(matches!(params.propagator(0.5, 0.0, 0.5), Err(Error::DeltaInitial)));
        assert!(matches!(params.propagator(0.5, 1e-15, 0.5), Err(Error::DeltaInitial)));
        assert!(params.propagator(1.5, 0.1, 0.5).is_err());
        assert!(params.propagator_laplace(0.5, Complex64::new(-1.0, 0.0), 0.5).is_err());
        assert!(matches!(
            half_space_propagator(0.1, 0.01, 0.5, 0.0, 0.5),
            Err(Error::DeltaInitial)
        ));
        // truncation orders too small for the requested crossover
        assert!(PropagatorParams::with_options(1.0, 16, 8, 1e-4).is_err());
        assert!(PropagatorParams::with_options(1.0, 2048, 2, 10.0).is_err());
    }

    #[test]
    fn half_space_limits() {
        // short time, deep interior: free Gaussian
        let (a, s2, t) = (0.03, 0.02, 0.05);
        let free = |lp: f64, l: f64| {
            let d = lp - l - a * t;
            (-d * d / (2.0 * s2 * t)).exp() / (2.0 * PI * s2 * t).sqrt()
        };
        for &lp in &[0.15, 0.2, 0.25] {
            assert_relative_eq!(
                half_space_propagator(a, s2, lp, t, 0.2).unwrap(),
                free(lp, 0.2),
                max_relative = 1e-12
            );
        }
        // long time with drift toward the wall: exponential boundary layer
        let (a, s2) = (0.05, 0.01);
        let vv = a / s2;
        for &lp in &[0.7, 0.9, 1.0] {
            assert_relative_eq!(
                half_space_propagator(a, s2, lp, 2000.0, 0.9).unwrap(),
                2.0 * vv * (2.0 * vv * (lp - 1.0)).exp(),
                max_relative = 1e-6
            );
        }
        // against-the-wall drift: everything leaks away
        assert!(half_space_propagator(-0.05, 0.01, 0.9, 5e4, 0.9).unwrap() < 1e-8);
    }

    #[test]
    fn half_space_matches_two_wall_propagator_near_the_full_wall() {
        // τ small and both points near ℓ=1: the wall at 0 is invisible
        let (a, s2) = (-0.02, 0.01);
        let params = PropagatorParams::new(a / s2).unwrap();
        let t = 0.2; // τ = 0.001
        for &(lp, l) in &[(0.95, 0.9), (1.0, 0.97), (0.9, 1.0)] {
            let full = params.propagator(lp, s2 * t / 2.0, l).unwrap();
            // reduced-variable density → original units carry the same ℓ measure
            assert_relative_eq!(
                half_space_propagator(a, s2, lp, t, l).unwrap(),
                full,
                max_relative = 1e-8
            );
        }
    }
}
