//! Domain types shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::datagen::FeatureDistribution;
use crate::error::{check_len, Error, Result};
use crate::margin::sgn;
use crate::matrix::{l2_norm, Matrix};

/// One synthetic one-bit compressed-sensing problem.
///
/// Construction validates every invariant: labels are ±1, corruption
/// indices are strictly increasing and in range, and when a ground truth
/// is attached it has unit ℓ2-norm and reproduces the labels (flipped
/// exactly on the corruption set). A zero projection counts as `+1`
/// before flipping.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    features: Matrix,
    labels: Vec<i8>,
    ground_truth: Option<Vec<f64>>,
    corruptions: Vec<usize>,
    seed: u64,
    distribution: Option<FeatureDistribution>,
    standardized_laplace: bool,
}

impl Instance {
    pub fn new(
        features: Matrix,
        labels: Vec<i8>,
        ground_truth: Option<Vec<f64>>,
        corruptions: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        let n = features.rows();
        check_len(n, labels.len())?;
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidInstance(format!(
                "label {} at index {i} is not ±1",
                labels[i]
            )));
        }
        for w in corruptions.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidInstance(
                    "corruption indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = corruptions.last() {
            if last >= n {
                return Err(Error::InvalidInstance(format!(
                    "corruption index {last} out of range for n = {n}"
                )));
            }
        }
        if let Some(beta) = &ground_truth {
            check_len(features.cols(), beta.len())?;
            let norm = l2_norm(beta);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "ground truth has l2 norm {norm}, expected 1"
                )));
            }
            let mut corrupt = corruptions.iter().peekable();
            for (i, &y) in labels.iter().enumerate() {
                let flipped = corrupt.next_if_eq(&&i).is_some();
                let clean = match sgn(features.row_dot(i, beta)) {
                    -1 => -1,
                    _ => 1,
                };
                let expected = if flipped { -clean } else { clean };
                if y != expected {
                    return Err(Error::InvalidInstance(format!(
                        "label at index {i} disagrees with the ground truth and corruption set"
                    )));
                }
            }
        }
        Ok(Self {
            features,
            labels,
            ground_truth,
            corruptions,
            seed,
            distribution: None,
            standardized_laplace: false,
        })
    }

    /// Instance with only features and labels.
    pub fn from_data(features: Matrix, labels: Vec<i8>) -> Result<Self> {
        Self::new(features, labels, None, Vec::new(), 0)
    }

    pub fn with_distribution(mut self, distribution: Option<FeatureDistribution>) -> Self {
        self.distribution = distribution;
        self
    }

    /// Marks Laplace features as drawn with unit variance (scale 1/√2).
    pub fn with_standardized_laplace(mut self, standardized: bool) -> Self {
        self.standardized_laplace = standardized;
        self
    }

    pub fn standardized_laplace(&self) -> bool {
        self.standardized_laplace
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        f64::from(self.labels[i])
    }

    pub fn ground_truth(&self) -> Option<&[f64]> {
        self.ground_truth.as_deref()
    }

    pub fn corruptions(&self) -> &[usize] {
        &self.corruptions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Feature distribution the instance was drawn from, when known.
    pub fn distribution(&self) -> Option<FeatureDistribution> {
        self.distribution
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn p(&self) -> usize {
        self.features.cols()
    }

    /// Number of nonzero ground-truth entries, if a ground truth is known.
    pub fn sparsity(&self) -> Option<usize> {
        self.ground_truth
            .as_ref()
            .map(|b| b.iter().filter(|v| **v != 0.0).count())
    }

    /// y_i ⟨X_i, β⟩ for every sample.
    pub fn signed_scores(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p(), coefficients.len())?;
        Ok((0..self.n())
            .map(|i| self.label(i) * self.features.row_dot(i, coefficients))
            .collect())
    }

    /// Same instance with every feature multiplied by `factor`. The ground
    /// truth is direction-only, so it survives positive scaling.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Domain("scale factor must be positive".into()));
        }
        Ok(Self {
            features: self.features.scaled(factor),
            ..self.clone()
        })
    }

    /// Samples reordered so that new sample `k` is old sample `order[k]`.
    /// Ground truth, corruption set and metadata are dropped.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let features = self.features.permute_rows(order)?;
        let labels = order.iter().map(|&i| self.labels[i]).collect();
        Self::from_data(features, labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorTag {
    Adaboost,
    Lp,
    External,
}

impl EstimatorTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorTag::Adaboost => "adaboost",
            EstimatorTag::Lp => "lp",
            EstimatorTag::External => "external",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adaboost" => Ok(EstimatorTag::Adaboost),
            "lp" => Ok(EstimatorTag::Lp),
            "external" => Ok(EstimatorTag::External),
            other => Err(Error::Usage(format!(
                "unknown estimator '{other}' (expected adaboost, lp or external)"
            ))),
        }
    }
}

impl std::fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitted coefficient vector with provenance.
///
/// AdaBoost coefficients live on the rescaled features `X / feature_scale`;
/// margins, prediction errors and directions are invariant to that, and
/// `⟨X / s, β⟩ = ⟨X, β / s⟩` recovers original-scale scores when needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub coefficients: Vec<f64>,
    pub estimator: EstimatorTag,
    pub iterations: u64,
    pub learning_rate: f64,
    #[serde(default = "unit_scale")]
    pub feature_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Model {
    pub fn new(coefficients: Vec<f64>, estimator: EstimatorTag) -> Self {
        Self {
            coefficients,
            estimator,
            iterations: 0,
            learning_rate: 1.0,
            feature_scale: 1.0,
        }
    }

    /// True when every coefficient is zero; the margin is then undefined.
    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    pub fn validate_for(&self, instance: &Instance) -> Result<()> {
        check_len(instance.p(), self.coefficients.len())?;
        if !(self.learning_rate > 0.0) {
            return Err(Error::Domain("learning rate must be positive".into()));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Coefficients expressed against the original (unrescaled) features.
    pub fn original_scale_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c / self.feature_scale)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One recorded AdaBoost iteration. `loss` and `margin` are evaluated on
/// the rescaled features at the coefficients after the update.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub t: u64,
    pub coordinate: usize,
    pub direction_sign: i8,
    pub stepsize: f64,
    pub loss: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    /// Iterations whose stepsize was exactly zero.
    pub stalls: u64,
    /// Iterations whose loss evaluation hit the exponent clamp.
    pub saturated: u64,
}

impl Trajectory {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,coordinate,direction_sign,stepsize,loss,margin")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t, r.coordinate, r.direction_sign, r.stepsize, r.loss, r.margin
            )?;
        }
        Ok(())
    }
}
