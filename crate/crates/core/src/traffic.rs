//! Microscopic traffic model: renewal arrivals into a unit buffer drained at
//! constant rate, plus the mapping onto continuum drift/diffusion parameters.
//!
//! Lengths are buffer fractions (capacity ≡ 1); `eta0` is the time to drain a
//! full buffer, so the drain rate is 1/eta0 buffer fractions per unit time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inter-arrival gap distribution (time units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GapDist {
    Exponential { rate: f64 },
    Deterministic { gap: f64 },
    Uniform { lo: f64, hi: f64 },
    Pareto { shape: f64, scale: f64 },
}

impl GapDist {
    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            GapDist::Exponential { rate } if ok(rate) => Ok(()),
            GapDist::Deterministic { gap } if ok(gap) => Ok(()),
            GapDist::Uniform { lo, hi } if ok(lo) && ok(hi) && lo < hi => Ok(()),
            GapDist::Pareto { shape, scale } if ok(scale) && shape.is_finite() => {
                // shape ≤ 1 has no mean: the renewal process has no rate
                if shape > 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "inter_arrival.shape",
                        "Pareto shape must exceed 1 (finite mean gap required)",
                    ))
                }
            }
            _ => Err(Error::invalid(
                "inter_arrival",
                "distribution parameters must be finite, positive and ordered",
            )),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            GapDist::Exponential { rate } => 1.0 / rate,
            GapDist::Deterministic { gap } => gap,
            GapDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            GapDist::Pareto { shape, scale } => shape * scale / (shape - 1.0),
        }
    }

    /// None when the variance diverges (Pareto shape ≤ 2).
    pub fn variance(&self) -> Option<f64> {
        match *self {
            GapDist::Exponential { rate } => Some(1.0 / (rate * rate)),
            GapDist::Deterministic { .. } => Some(0.0),
            GapDist::Uniform { lo, hi } => Some((hi - lo) * (hi - lo) / 12.0),
            GapDist::Pareto { shape, scale } => {
                if shape > 2.0 {
                    let m = shape - 1.0;
                    Some(shape * scale * scale / (m * m * (shape - 2.0)))
                } else {
                    None
                }
            }
        }
    }

    /// Inverse-CDF sample; `u` must lie in (0, 1].
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            GapDist::Exponential { rate } => -u.ln() / rate,
            GapDist::Deterministic { gap } => gap,
            GapDist::Uniform { lo, hi } => lo + (hi - lo) * u,
            GapDist::Pareto { shape, scale } => scale * u.powf(-1.0 / shape),
        }
    }
}

/// Packet-size distribution (buffer fractions). Sizes are kept well below the
/// buffer so the continuum comparison stays honest: supports above 0.1 of the
/// buffer are folded back at construction time (`TruncExponential` truncates
/// its cap to 0.1; bounded families must already fit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeDist {
    Deterministic { value: f64 },
    Uniform { lo: f64, hi: f64 },
    TruncExponential { mean: f64, cap: f64 },
}

/// Hard ceiling on packet-size support relative to the buffer.
pub const SIZE_SUPPORT_CAP: f64 = 0.1;
/// Mean packet size above this is rejected outright…
pub const MEAN_SIZE_LIMIT: f64 = 0.05;
/// …and above this is flagged as straining the continuum approximation.
pub const MEAN_SIZE_WARN: f64 = 0.01;

impl SizeDist {
    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            SizeDist::Deterministic { value } if ok(value) && value <= SIZE_SUPPORT_CAP => Ok(()),
            SizeDist::Uniform { lo, hi }
                if ok(lo) && ok(hi) && lo < hi && hi <= SIZE_SUPPORT_CAP =>
            {
                Ok(())
            }
            SizeDist::TruncExponential { mean, cap } if ok(mean) && ok(cap) => Ok(()),
            _ => Err(Error::invalid(
                "packet_size",
                format!(
                    "parameters must be finite and positive with support within (0, {SIZE_SUPPORT_CAP}]"
                ),
            )),
        }
    }

    /// Truncation point actually in effect (analytics and sampling agree on it).
    fn effective_cap(&self) -> f64 {
        match *self {
            SizeDist::Deterministic { value } => value,
            SizeDist::Uniform { hi, .. } => hi,
            SizeDist::TruncExponential { cap, .. } => cap.min(SIZE_SUPPORT_CAP),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SizeDist::Deterministic { value } => value,
            SizeDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            SizeDist::TruncExponential { mean, .. } => {
                let c = self.effective_cap();
                // E[X | X ≤ c] for Exp(mean): m − c/(e^{c/m} − 1)
                mean - c / (c / mean).exp_m1()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            SizeDist::Deterministic { .. } => 0.0,
            SizeDist::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            SizeDist::TruncExponential { mean, .. } => {
                let (m, c) = (mean, self.effective_cap());
                let q = (-c / m).exp();
                let second = (2.0 * m * m - q * (c * c + 2.0 * c * m + 2.0 * m * m)) / (1.0 - q);
                let mu = self.mean();
                second - mu * mu
            }
        }
    }

    /// Inverse-CDF sample; `u` must lie in (0, 1].
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            SizeDist::Deterministic { value } => value,
            SizeDist::Uniform { lo, hi } => lo + (hi - lo) * u,
            SizeDist::TruncExponential { mean, .. } => {
                let c = self.effective_cap();
                // x = −m·ln(1 − u(1 − e^{−c/m})) ∈ (0, c]
                -mean * (-u * (-(-c / mean).exp_m1())).ln_1p()
            }
        }
    }
}

/// The microscopic process: renewal gaps, packet sizes, drain time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficModel {
    pub inter_arrival: GapDist,
    pub packet_size: SizeDist,
    pub eta0: f64,
}

impl TrafficModel {
    pub fn new(inter_arrival: GapDist, packet_size: SizeDist, eta0: f64) -> Result<Self> {
        inter_arrival.validate()?;
        packet_size.validate()?;
        if !(eta0.is_finite() && eta0 > 0.0) {
            return Err(Error::invalid("eta0", "must be finite and positive"));
        }
        let model = Self { inter_arrival, packet_size, eta0 };
        if model.packet_size.mean() > MEAN_SIZE_LIMIT {
            return Err(Error::invalid(
                "packet_size",
                format!("mean size {} exceeds the {MEAN_SIZE_LIMIT} limit", model.packet_size.mean()),
            ));
        }
        Ok(model)
    }

    /// Mean size above 0.01 of the buffer strains the small-packet assumption.
    pub fn strains_continuum(&self) -> bool {
        self.packet_size.mean() > MEAN_SIZE_WARN
    }

    pub fn mean_gap(&self) -> f64 {
        self.inter_arrival.mean()
    }

    /// Mean input rate in buffer fractions per unit time.
    pub fn input_rate(&self) -> f64 {
        self.packet_size.mean() / self.mean_gap()
    }
}

/// Continuum parameters: per-unit-time drift and diffusion of the occupancy,
/// the reduced drift v = a/σ², and the distance from criticality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpParams {
    pub a: f64,
    pub sigma2: f64,
    pub v: f64,
    pub criticality: f64,
}

impl FpParams {
    /// Reduced (diffusion) time τ = σ²t/2.
    pub fn tau_of_t(&self, t: f64) -> f64 {
        self.sigma2 * t / 2.0
    }

    pub fn t_of_tau(&self, tau: f64) -> f64 {
        2.0 * tau / self.sigma2
    }

    /// Advisory check of |criticality| ≤ 0.1; analytics still evaluate outside.
    pub fn check_critical_regime(&self) -> CriticalityCheck {
        let magnitude = self.criticality.abs();
        CriticalityCheck { magnitude, ok: magnitude <= 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityCheck {
    pub magnitude: f64,
    pub ok: bool,
}

/// Map the renewal process onto drift/diffusion via the renewal-reward limit:
/// per cycle the occupancy changes by X = p − η/η0, so per unit time
/// a = E[X]/η̄ and σ² = Var(X)/η̄ (centered form; at criticality the raw and
/// centered second moments coincide).
pub fn derive_fp_params(traffic: &TrafficModel) -> Result<FpParams> {
    let mean_gap = traffic.mean_gap();
    let var_gap = traffic.inter_arrival.variance().ok_or_else(|| {
        Error::invalid(
            "inter_arrival",
            "gap variance diverges (Pareto shape ≤ 2): no diffusion limit exists",
        )
    })?;
    let a = traffic.packet_size.mean() / mean_gap - 1.0 / traffic.eta0;
    let var_x = traffic.packet_size.variance() + var_gap / (traffic.eta0 * traffic.eta0);
    let sigma2 = var_x / mean_gap;
    if sigma2 <= 0.0 {
        return Err(Error::invalid(
            "traffic",
            "both distributions are degenerate: zero diffusion, continuum model undefined",
        ));
    }
    let criticality = traffic.packet_size.mean() * traffic.eta0 / mean_gap - 1.0;
    Ok(FpParams { a, sigma2, v: a / sigma2, criticality })
}
