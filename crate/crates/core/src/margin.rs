//! Sign convention, ℓ1-margin and exponential loss.

use crate::error::{check_len, Error, Result};
use crate::matrix::l1_norm;
use crate::types::Instance;

/// Exponents above this are clamped when evaluating the exponential loss.
pub const EXPONENT_CLAMP: f64 = 700.0;

/// Three-valued sign: `1` for positive, `-1` for negative, `0` for zero.
pub fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// min_i y_i ⟨X_i, β⟩ / ‖β‖₁. Negative when β does not interpolate.
pub fn l1_margin(instance: &Instance, coefficients: &[f64]) -> Result<f64> {
    check_len(instance.p(), coefficients.len())?;
    let norm = l1_norm(coefficients);
    if norm == 0.0 {
        return Err(Error::UndefinedMargin);
    }
    let scores = instance.signed_scores(coefficients)?;
    Ok(scores.iter().fold(f64::INFINITY, |m, s| m.min(*s)) / norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpLoss {
    pub value: f64,
    /// Some exponent exceeded [`EXPONENT_CLAMP`] and was clamped.
    pub saturated: bool,
}

/// (1/n) Σ exp(m_i) for exponents `m_i = -y_i ⟨X_i, β⟩`, clamping each
/// exponent at [`EXPONENT_CLAMP`].
pub fn exp_loss_from_exponents(exponents: &[f64]) -> ExpLoss {
    let mut saturated = false;
    let sum: f64 = exponents
        .iter()
        .map(|&m| {
            if m > EXPONENT_CLAMP {
                saturated = true;
                EXPONENT_CLAMP.exp()
            } else {
                m.exp()
            }
        })
        .sum();
    ExpLoss {
        value: sum / exponents.len() as f64,
        saturated,
    }
}

pub fn exp_loss_flagged(instance: &Instance, coefficients: &[f64]) -> Result<ExpLoss> {
    let exponents: Vec<f64> = instance
        .signed_scores(coefficients)?
        .into_iter()
        .map(|s| -s)
        .collect();
    Ok(exp_loss_from_exponents(&exponents))
}

/// (1/n) Σ exp(-y_i ⟨X_i, β⟩). Saturation is reported by
/// [`exp_loss_flagged`]; this returns the clamped value only.
pub fn exp_loss(instance: &Instance, coefficients: &[f64]) -> Result<f64> {
    exp_loss_flagged(instance, coefficients).map(|l| l.value)
}
