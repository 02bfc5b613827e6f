//! Evaluation quantities for a fitted model against the ground truth.
//!
//! The prediction error of `β` is the probability that a fresh feature
//! vector `X` gets a different sign under `β` than under `β*`. For
//! Gaussian features it equals the angle between the two vectors divided
//! by π. For every other distribution it is estimated by Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::datagen::FeatureDistribution;
use crate::error::{check_len, Error, Result};
use crate::lpmargin::{margin_of_best, LpSolution};
use crate::margin::{exp_loss, l1_margin, sgn};
use crate::matrix::{dot, l2_norm, Matrix};
use crate::rng::{purpose, Stream};
use crate::types::{EstimatorTag, Instance, Model};

/// Fresh draws used by Monte Carlo prediction error unless overridden.
pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionErrorMethod {
    ClosedFormGaussian,
    MonteCarlo { samples: u64 },
}

impl PredictionErrorMethod {
    pub fn label(&self) -> String {
        match self {
            PredictionErrorMethod::ClosedFormGaussian => "closed_form_gaussian".into(),
            PredictionErrorMethod::MonteCarlo { samples } => format!("monte_carlo({samples})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub estimator: EstimatorTag,
    pub prediction_error: f64,
    pub prediction_error_method: PredictionErrorMethod,
    pub l2_direction_error: f64,
    pub margin: f64,
    pub margin_ratio: Option<f64>,
    pub loss: f64,
    pub wall_time_ms: u64,
}

fn nonzero(coefficients: &[f64]) -> Result<f64> {
    let norm = l2_norm(coefficients);
    if norm == 0.0 {
        return Err(Error::Domain("model coefficients are all zero".into()));
    }
    Ok(norm)
}

/// arccos(⟨β/‖β‖₂, β*⟩)/π, exact for rotation-invariant features.
pub fn prediction_error_gaussian(coefficients: &[f64], ground_truth: &[f64]) -> Result<f64> {
    check_len(ground_truth.len(), coefficients.len())?;
    let norm = nonzero(coefficients)?;
    let cosine = (dot(coefficients, ground_truth) / norm).clamp(-1.0, 1.0);
    Ok(libm::acos(cosine) / std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Draws where either projection was exactly zero.
    pub ties: u64,
    pub samples: u64,
}

/// Monte Carlo estimate of `P(sgn⟨X, β⟩ ≠ sgn⟨X, β*⟩)`.
///
/// Coordinates outside both supports do not affect either projection, so
/// only the union of the supports is drawn, in increasing index order.
/// A zero projection against a nonzero one counts as a mismatch.
pub fn prediction_error_mc(
    coefficients: &[f64],
    ground_truth: &[f64],
    distribution: FeatureDistribution,
    standardized_laplace: bool,
    samples: u64,
    stream: &mut Stream,
) -> Result<McEstimate> {
    check_len(ground_truth.len(), coefficients.len())?;
    nonzero(coefficients)?;
    distribution.validate()?;
    if samples == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one sample".into()));
    }
    let support: Vec<usize> = (0..coefficients.len())
        .filter(|&j| coefficients[j] != 0.0 || ground_truth[j] != 0.0)
        .collect();
    let beta: Vec<f64> = support.iter().map(|&j| coefficients[j]).collect();
    let truth: Vec<f64> = support.iter().map(|&j| ground_truth[j]).collect();
    let mut x = vec![0.0; support.len()];
    let (mut mismatches, mut ties) = (0u64, 0u64);
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = distribution.sample(standardized_laplace, stream);
        }
        let a = sgn(dot(&x, &beta));
        let b = sgn(dot(&x, &truth));
        if a == 0 || b == 0 {
            ties += 1;
        }
        if a != b {
            mismatches += 1;
        }
    }
    if ties > 0 {
        log::debug!("{ties} of {samples} Monte Carlo draws had a zero projection");
    }
    let m = samples as f64;
    let estimate = mismatches as f64 / m;
    Ok(McEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / m).sqrt(),
        ties,
        samples,
    })
}

/// ‖β/‖β‖₂ − β*‖₂.
pub fn l2_direction_error(coefficients: &[f64], ground_truth: &[f64]) -> Result<f64> {
    check_len(ground_truth.len(), coefficients.len())?;
    let norm = nonzero(coefficients)?;
    let sq: f64 = coefficients
        .iter()
        .zip(ground_truth)
        .map(|(b, t)| {
            let d = b / norm - t;
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// Fraction of rows with `|⟨X_i, direction⟩| ≤ ε`, for each ε.
pub fn empirical_small_ball(features: &Matrix, direction: &[f64], eps_grid: &[f64]) -> Result<Vec<f64>> {
    check_len(features.cols(), direction.len())?;
    let projections: Vec<f64> = (0..features.rows())
        .map(|i| features.row_dot(i, direction).abs())
        .collect();
    let n = projections.len().max(1) as f64;
    Ok(eps_grid
        .iter()
        .map(|&eps| projections.iter().filter(|&&v| v <= eps).count() as f64 / n)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub mc_samples: u64,
    /// Seed of the evaluation stream, so every estimator evaluated with the
    /// same seed sees the same fresh draws.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

/// Prediction error with the closed form for Gaussian features and Monte
/// Carlo otherwise.
pub fn prediction_error(
    instance: &Instance,
    coefficients: &[f64],
    opts: &EvalOptions,
) -> Result<(f64, PredictionErrorMethod)> {
    let truth = instance
        .ground_truth()
        .ok_or_else(|| Error::Usage("instance has no ground truth to evaluate against".into()))?;
    match instance.distribution() {
        Some(FeatureDistribution::Gaussian) => Ok((
            prediction_error_gaussian(coefficients, truth)?,
            PredictionErrorMethod::ClosedFormGaussian,
        )),
        Some(dist) => {
            let mut stream = Stream::derived(opts.seed, purpose::EVALUATION, 0);
            let mc = prediction_error_mc(
                coefficients,
                truth,
                dist,
                instance.standardized_laplace(),
                opts.mc_samples,
                &mut stream,
            )?;
            Ok((mc.estimate, PredictionErrorMethod::MonteCarlo { samples: mc.samples }))
        }
        None => Err(Error::Usage(
            "instance does not record its feature distribution; cannot draw fresh samples".into(),
        )),
    }
}

/// Every metric of `model` on `instance`. `lp` supplies γ for the margin
/// ratio when it is optimal.
pub fn evaluate(
    instance: &Instance,
    model: &Model,
    lp: Option<&LpSolution>,
    opts: &EvalOptions,
) -> Result<MetricsRecord> {
    model.validate_for(instance)?;
    let coefs = &model.coefficients;
    let (prediction_error, method) = prediction_error(instance, coefs, opts)?;
    let truth = instance.ground_truth().unwrap_or_default();
    let margin_ratio = match lp {
        Some(sol) if sol.is_optimal() => Some(margin_of_best(instance, coefs, sol)?),
        _ => None,
    };
    Ok(MetricsRecord {
        estimator: model.estimator,
        prediction_error,
        prediction_error_method: method,
        l2_direction_error: l2_direction_error(coefs, truth)?,
        margin: l1_margin(instance, coefs)?,
        margin_ratio,
        loss: exp_loss(instance, &model.original_scale_coefficients())?,
        wall_time_ms: 0,
    })
}
