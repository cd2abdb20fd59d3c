//! Generalized logical qubits: surface-code overhead as a continuous
//! function of the physical two-qubit error rate.
//!
//! With code distance `d` the surface code needs `(2d - 1)^2` physical
//! qubits per logical qubit and reaches a logical error rate of roughly
//! `sqrt(10) * p * (p / p_th)^((d - 1) / 2)`. Solving for a real-valued
//! `d` at the target logical rate gives the overhead factor
//!
//! ```text
//! f_qec(p) = [4 * ln(sqrt(10) p / p_L) / ln(p_th / p) + 1]^-2
//! ```
//!
//! and the GLQ count `N_L = N_P * f_qec(p)`. Only ratios of logarithms
//! appear, so the log base is irrelevant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Milestones of interest: proof-of-concept fault tolerance and an
/// RSA-2048-scale factoring run.
pub const DEFAULT_THRESHOLDS: [f64; 2] = [1.0, 4100.0];

const SQRT_10: f64 = 3.162_277_660_168_379_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QecParams {
    /// Fault-tolerance threshold error rate.
    pub p_th: f64,
    /// Target logical error rate.
    pub p_l: f64,
    pub scheme: String,
}

impl Default for QecParams {
    fn default() -> Self {
        QecParams {
            p_th: 1e-2,
            p_l: 1e-18,
            scheme: "surface-code".into(),
        }
    }
}

impl QecParams {
    pub fn new(p_th: f64, p_l: f64) -> Result<Self> {
        let params = QecParams {
            p_th,
            p_l,
            ..QecParams::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.p_l && self.p_l < self.p_th && self.p_th < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < p_L < p_th < 1, got p_L={} p_th={}",
                self.p_l, self.p_th
            )));
        }
        Ok(())
    }

    /// Error rates at or below this floor make the overhead formula
    /// meaningless (the numerator log turns non-positive).
    pub fn lower_limit(&self) -> f64 {
        self.p_l / SQRT_10
    }

    /// `ln(sqrt(10) p / p_L) / ln(p_th / p)` from `ln p`.
    fn log_ratio(&self, ln_p: f64) -> f64 {
        (SQRT_10.ln() + ln_p - self.p_l.ln()) / (self.p_th.ln() - ln_p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlqValue {
    pub value: f64,
    /// False when the error rate is at or above threshold; the value is then 0.
    pub defined: bool,
}

fn check_probability(p: f64, params: &QecParams) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            p,
            reason: "error rate must lie in (0, 1)",
        });
    }
    if p <= params.lower_limit() {
        return Err(Error::Domain {
            p,
            reason: "error rate at or below p_L / sqrt(10)",
        });
    }
    Ok(())
}

/// Fraction of physical qubits that survive as logical qubits; 0 at or
/// above threshold.
pub fn qec_overhead(p: f64, params: &QecParams) -> Result<f64> {
    check_probability(p, params)?;
    if p >= params.p_th {
        return Ok(0.0);
    }
    let denom = 4.0 * params.log_ratio(p.ln()) + 1.0;
    Ok(denom.powi(-2))
}

pub fn generalized_logical_qubits(
    physical_qubits: f64,
    p: f64,
    params: &QecParams,
) -> Result<GlqValue> {
    if physical_qubits < 0.0 || physical_qubits.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "negative qubit count {physical_qubits}"
        )));
    }
    let f = qec_overhead(p, params)?;
    Ok(GlqValue {
        value: physical_qubits * f,
        defined: p < params.p_th,
    })
}

/// Real-valued surface-code distance reaching `p_L` at error rate `p`.
pub fn continuous_code_distance(p: f64, params: &QecParams) -> Result<f64> {
    check_probability(p, params)?;
    if p >= params.p_th {
        return Err(Error::Divergence {
            p,
            p_th: params.p_th,
        });
    }
    Ok(2.0 * params.log_ratio(p.ln()) + 1.0)
}

/// Physical qubit counts on the contour `GLQ = target` for each grid error rate.
pub fn glq_threshold_curve(
    target: f64,
    params: &QecParams,
    error_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !(target > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "contour target must be positive, got {target}"
        )));
    }
    error_grid
        .iter()
        .map(|&p| {
            if p >= params.p_th {
                return Err(Error::Domain {
                    p,
                    reason: "contour undefined at or above threshold",
                });
            }
            let f = qec_overhead(p, params)?;
            Ok((p, target / f))
        })
        .collect()
}

/// Log GLQ for log-space metric values, total over the real line.
///
/// Returns `None` (GLQ = 0) at or above threshold. Below `p_L / sqrt(10)`
/// no encoding is needed and the overhead saturates at 1, which is where
/// the formula itself tends.
pub fn ln_glq(ln_qubits: f64, ln_error: f64, params: &QecParams) -> Option<f64> {
    if ln_error >= params.p_th.ln() {
        return None;
    }
    if ln_error <= params.lower_limit().ln() {
        return Some(ln_qubits);
    }
    let denom = 4.0 * params.log_ratio(ln_error) + 1.0;
    Some(ln_qubits - 2.0 * denom.ln())
}

pub fn glq_from_logs(ln_qubits: f64, ln_error: f64, params: &QecParams) -> f64 {
    ln_glq(ln_qubits, ln_error, params).map_or(0.0, f64::exp)
}
