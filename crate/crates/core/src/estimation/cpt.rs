//! Cumulative-prospect-theory value and probability-weighting functions.
//!
//! The value function is piecewise-power with loss aversion:
//!
//! ```text
//! v(x) = x^alpha            for x >= 0
//! v(x) = -lambda * (-x)^beta  for x < 0
//! ```
//!
//! The weighting function distorts stated probabilities:
//!
//! ```text
//! w(p) = p^phi / (p^phi + (1-p)^phi)^(1/phi)
//! ```
//!
//! with separate distortion parameters `phi_plus` (gains) and `phi_minus`
//! (losses). A prospect's subjective utility is `U = v(x) * w(p)` for a
//! single nonzero outcome; two same-sign outcomes use rank-dependent
//! cumulative weighting, and a mixed prospect weights its gain and loss parts
//! with their own sign's function.

use serde::{Deserialize, Serialize};

use super::{EstimationError, FitQuality};
use crate::gamespec::Prospect;

/// Fitted (or assumed) prospect-theory parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptParams {
    /// Gain curvature; < 1 means risk aversion for gains.
    pub alpha: f64,
    /// Loss curvature; < 1 means risk seeking for losses.
    pub beta: f64,
    /// Loss-aversion coefficient; > 1 means losses loom larger than gains.
    pub lambda: f64,
    /// Probability distortion for gains.
    pub phi_plus: f64,
    /// Probability distortion for losses.
    pub phi_minus: f64,
    /// Present when the parameters came out of a regression.
    pub fit: Option<FitQuality>,
}

impl CptParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64, phi_plus: f64, phi_minus: f64) -> Self {
        Self { alpha, beta, lambda, phi_plus, phi_minus, fit: None }
    }

    /// The risk-neutral expected-value maximizer: all parameters 1.
    pub fn rational() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.alpha, self.beta, self.lambda, self.phi_plus, self.phi_minus]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }
}

/// v(x): subjective value of a signed dollar outcome.
pub fn value(x: f64, params: &CptParams) -> f64 {
    if x >= 0.0 {
        x.powf(params.alpha)
    } else {
        -params.lambda * (-x).powf(params.beta)
    }
}

/// v^-1(u): the certain dollar amount with subjective value `u`.
pub fn value_inverse(u: f64, params: &CptParams) -> f64 {
    if u >= 0.0 {
        u.powf(1.0 / params.alpha)
    } else {
        -(-u / params.lambda).powf(1.0 / params.beta)
    }
}

/// w(p): decision weight for a stated probability.
///
/// Exact at the endpoints: w(0) = 0 and w(1) = 1 for any positive `phi`.
pub fn weight(p: f64, phi: f64) -> Result<f64, EstimationError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(EstimationError::DomainError(format!("probability {p} outside [0, 1]")));
    }
    if phi <= 0.0 || !phi.is_finite() {
        return Err(EstimationError::DomainError(format!("weighting exponent {phi} must be positive")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let num = p.powf(phi);
    Ok(num / (num + (1.0 - p).powf(phi)).powf(1.0 / phi))
}

/// Subjective utility of a prospect under `params`.
///
/// Supports at most two distinct nonzero outcomes: a single nonzero outcome
/// uses `v(x) * w(p)`; two same-sign outcomes use cumulative weighting where
/// the extreme outcome keeps `w(p_extreme)` and the other gets
/// `w(p_extreme + p_other) - w(p_extreme)`; a mixed prospect sums
/// `v(gain) * w_plus(p_gain) + v(loss) * w_minus(p_loss)`.
pub fn predict_utility(params: &CptParams, prospect: &Prospect) -> Result<f64, EstimationError> {
    let nonzero: Vec<(f64, f64)> =
        prospect.outcomes.iter().copied().filter(|(x, _)| *x != 0.0).collect();
    match nonzero.len() {
        0 => Ok(0.0),
        1 => {
            let (x, p) = nonzero[0];
            let phi = if x > 0.0 { params.phi_plus } else { params.phi_minus };
            Ok(value(x, params) * weight(p, phi)?)
        }
        2 => {
            let (a, b) = (nonzero[0], nonzero[1]);
            if a.0 > 0.0 && b.0 > 0.0 || a.0 < 0.0 && b.0 < 0.0 {
                let phi = if a.0 > 0.0 { params.phi_plus } else { params.phi_minus };
                // extreme outcome first
                let (ext, other) = if a.0.abs() >= b.0.abs() { (a, b) } else { (b, a) };
                let w_ext = weight(ext.1, phi)?;
                let w_other = weight(ext.1 + other.1, phi)? - w_ext;
                Ok(value(ext.0, params) * w_ext + value(other.0, params) * w_other)
            } else {
                let (gain, loss) = if a.0 > 0.0 { (a, b) } else { (b, a) };
                Ok(value(gain.0, params) * weight(gain.1, params.phi_plus)?
                    + value(loss.0, params) * weight(loss.1, params.phi_minus)?)
            }
        }
        n => Err(EstimationError::UnsupportedProspect(format!(
            "prospect {} has {} nonzero outcomes; at most 2 supported",
            prospect.id, n
        ))),
    }
}

/// Certainty equivalent of a prospect: `v^-1(U)`.
pub fn predict_ce(params: &CptParams, prospect: &Prospect) -> Result<f64, EstimationError> {
    Ok(value_inverse(predict_utility(params, prospect)?, params))
}
