//! Numerical Laplace inversion on the fixed Talbot contour.
//!
//! For a transform F analytic right of the negative real axis,
//!   f(t) ≈ (r/M)·[ ½·F(r)·e^{rt} + Σ_{j=1}^{M-1} Re( e^{t·s_j} F(s_j) (1 + i·σ_j) ) ]
//! with r = 2M/(5t), s(θ) = rθ(cot θ + i), σ(θ) = θ + (θ·cot θ − 1)·cot θ,
//! θ_j = jπ/M. The contour stays strictly inside the upper half plane (plus
//! its real-axis anchor at θ=0), so poles on the negative real axis are
//! enclosed but never touched.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 32;

pub fn invert_fixed(f: &mut impl FnMut(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    assert!(t > 0.0 && m >= 4);
    let r = 0.4 * m as f64 / t;
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)).re) * (r * t).exp();
    for j in 1..m {
        let theta = j as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let weight = (s * t).exp() * Complex64::new(1.0, sigma);
        acc += (weight * f(s)).re;
    }
    acc * r / m as f64
}

/// Inversion with a built-in convergence cross-check: the node count is
/// raised by half and the two results must agree, otherwise the caller gets
/// an explicit failure rather than a silently wrong value. `abs_floor` is the
/// caller's absolute error budget — required when the pointwise value can sit
/// far below the overall scale of f (tails), where a purely relative test
/// is unattainable.
pub fn invert_checked(
    f: &mut impl FnMut(Complex64) -> Complex64,
    t: f64,
    m: usize,
    abs_floor: f64,
    what: &'static str,
) -> Result<f64> {
    let coarse = invert_fixed(f, t, m);
    let fine = invert_fixed(f, t, m + m / 2);
    let scale = coarse.abs().max(fine.abs()).max(1e-300);
    if (coarse - fine).abs() <= 1e-7 * scale + abs_floor.max(1e-13) {
        Ok(fine)
    } else {
        Err(Error::NonConvergent {
            what,
            detail: format!(
                "Talbot estimates at {m} and {} nodes disagree: {coarse:e} vs {fine:e} (t = {t:e})",
                m + m / 2
            ),
        })
    }
}
