//! Synthetic one-bit compressed-sensing instances.
//!
//! Every sampler draws from an explicit [`Stream`]. [`generate_instance`]
//! derives its three streams from the master seed with
//! [`derive_seed`](crate::rng::derive_seed):
//!
//! | purpose      | tag | index |
//! |--------------|-----|-------|
//! | features     | 1   | 0     |
//! | ground truth | 2   | 0     |
//! | corruptions  | 3   | 0     |
//!
//! Features are drawn row by row (sample-major), one entry at a time.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::margin::sgn;
use crate::matrix::Matrix;
use crate::rng::{purpose, Stream};
use crate::types::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureDistribution {
    /// Standard normal.
    Gaussian,
    /// Student-t with `dof` degrees of freedom scaled by √((d−2)/d) to unit
    /// variance. Drawn as `Z / sqrt(V / d)` with `V` a sum of `d` squared
    /// standard normals.
    StudentT { dof: u32 },
    /// Uniform on [−√3, √3].
    Uniform,
    /// Laplace with location 0 and scale 1 (variance 2), or scale 1/√2 when
    /// standardized. Drawn by inverse CDF from an open uniform.
    Laplace,
    /// ±1 with equal probability.
    Rademacher,
}

impl FeatureDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureDistribution::Gaussian => "gaussian",
            FeatureDistribution::StudentT { .. } => "student-t",
            FeatureDistribution::Uniform => "uniform",
            FeatureDistribution::Laplace => "laplace",
            FeatureDistribution::Rademacher => "rademacher",
        }
    }

    /// Parses a distribution name; Student-t takes its dof from `dof`.
    pub fn parse(name: &str, dof: Option<u32>) -> Result<Self> {
        let d = match name.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => FeatureDistribution::Gaussian,
            "student-t" | "studentt" | "student" | "t" => FeatureDistribution::StudentT {
                dof: dof.ok_or_else(|| {
                    Error::InvalidSpec("student-t requires degrees of freedom".into())
                })?,
            },
            "uniform" => FeatureDistribution::Uniform,
            "laplace" => FeatureDistribution::Laplace,
            "rademacher" => FeatureDistribution::Rademacher,
            other => {
                return Err(Error::Usage(format!(
                    "unknown distribution '{other}' (expected gaussian, student-t, uniform, laplace or rademacher)"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureDistribution::StudentT { dof } if *dof < 3 => Err(Error::InvalidSpec(format!(
                "student-t needs at least 3 degrees of freedom, got {dof}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn population_variance(&self, standardize_laplace: bool) -> f64 {
        match self {
            FeatureDistribution::Laplace if !standardize_laplace => 2.0,
            _ => 1.0,
        }
    }

    /// One draw from the distribution.
    pub fn sample(&self, standardize_laplace: bool, stream: &mut Stream) -> f64 {
        match *self {
            FeatureDistribution::Gaussian => stream.standard_normal(),
            FeatureDistribution::StudentT { dof } => {
                let z = stream.standard_normal();
                let chi2: f64 = (0..dof)
                    .map(|_| {
                        let g = stream.standard_normal();
                        g * g
                    })
                    .sum();
                let d = f64::from(dof);
                z / (chi2 / d).sqrt() * ((d - 2.0) / d).sqrt()
            }
            FeatureDistribution::Uniform => 3f64.sqrt() * (2.0 * stream.uniform() - 1.0),
            FeatureDistribution::Laplace => {
                let scale = if standardize_laplace {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    1.0
                };
                let u = stream.open_uniform() - 0.5;
                let magnitude = -scale * libm::log(1.0 - 2.0 * u.abs());
                if u < 0.0 {
                    -magnitude
                } else {
                    magnitude
                }
            }
            FeatureDistribution::Rademacher => stream.sign(),
        }
    }
}

impl std::fmt::Display for FeatureDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureDistribution::StudentT { dof } => write!(f, "student-t({dof})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Degrees of freedom used for Student-t features: max(3, round(ln p)).
pub fn student_dof(p: usize) -> u32 {
    let d = (p.max(1) as f64).ln().round() as u32;
    d.max(3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub n_corrupt: usize,
    pub distribution: FeatureDistribution,
    pub master_seed: u64,
    pub standardize_laplace: bool,
}

impl GenSpec {
    pub fn new(n: usize, p: usize, s: usize, n_corrupt: usize, distribution: FeatureDistribution) -> Self {
        Self {
            n,
            p,
            s,
            n_corrupt,
            distribution,
            master_seed: 0,
            standardize_laplace: false,
        }
    }

    pub fn seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.s == 0 {
            return Err(Error::InvalidSpec("n, p and s must be positive".into()));
        }
        if self.s > self.p {
            return Err(Error::InvalidSpec(format!("s = {} exceeds p = {}", self.s, self.p)));
        }
        if self.n_corrupt > self.n {
            return Err(Error::InvalidSpec(format!(
                "{} corruptions exceed n = {}",
                self.n_corrupt, self.n
            )));
        }
        self.distribution.validate()
    }
}

/// n × p matrix of i.i.d. entries, drawn row-major from `stream`.
pub fn sample_features_from(
    n: usize,
    p: usize,
    distribution: FeatureDistribution,
    standardize_laplace: bool,
    stream: &mut Stream,
) -> Result<Matrix> {
    distribution.validate()?;
    let data = (0..n * p)
        .map(|_| distribution.sample(standardize_laplace, stream))
        .collect();
    Matrix::from_row_major(n, p, data)
}

/// Feature matrix for `spec`, drawn from its derived feature stream.
pub fn sample_features(spec: &GenSpec) -> Result<Matrix> {
    spec.validate()?;
    let mut stream = Stream::derived(spec.master_seed, purpose::FEATURES, 0);
    sample_features_from(spec.n, spec.p, spec.distribution, spec.standardize_laplace, &mut stream)
}

/// Partial Fisher–Yates: the first `k` entries of a uniformly shuffled
/// `0..n`, in draw order.
fn choose_without_replacement(n: usize, k: usize, stream: &mut Stream) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + stream.below((n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Unit vector with exactly `s` entries equal to ±1/√s on a uniformly
/// random support. Support is drawn first, then one sign per support
/// index in draw order.
pub fn sample_sparse_rademacher(p: usize, s: usize, stream: &mut Stream) -> Result<Vec<f64>> {
    if s == 0 || s > p {
        return Err(Error::InvalidSpec(format!("need 1 <= s <= p, got s = {s}, p = {p}")));
    }
    let magnitude = 1.0 / (s as f64).sqrt();
    let mut beta = vec![0.0; p];
    for j in choose_without_replacement(p, s, stream) {
        beta[j] = stream.sign() * magnitude;
    }
    Ok(beta)
}

/// `k` distinct indices from `[0, n)`, uniform over k-subsets, sorted.
pub fn sample_corruptions(n: usize, k: usize, stream: &mut Stream) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidSpec(format!("cannot corrupt {k} of {n} labels")));
    }
    let mut picked = choose_without_replacement(n, k, stream);
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub labels: Vec<i8>,
    /// Samples whose projection onto the ground truth was exactly zero.
    pub ties: usize,
}

/// y_i = sgn⟨X_i, β*⟩, negated on the corruption set. A zero projection
/// is labelled as `+1` before negation and counted as a tie.
pub fn generate_labels(features: &Matrix, ground_truth: &[f64], corruptions: &[usize]) -> Result<Labels> {
    check_len(features.cols(), ground_truth.len())?;
    let mut labels = Vec::with_capacity(features.rows());
    let mut ties = 0;
    let mut corrupt = corruptions.iter().peekable();
    for i in 0..features.rows() {
        let clean = match sgn(features.row_dot(i, ground_truth)) {
            0 => {
                ties += 1;
                1
            }
            s => s,
        };
        let flipped = corrupt.next_if_eq(&&i).is_some();
        labels.push(if flipped { -clean } else { clean });
    }
    if corrupt.next().is_some() {
        return Err(Error::InvalidSpec(
            "corruption indices must be sorted and below n".into(),
        ));
    }
    if ties > 0 {
        log::debug!("{ties} zero projections labelled by the +1 convention");
    }
    Ok(Labels { labels, ties })
}

/// Composes the samplers into one [`Instance`]; a pure function of `spec`.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let features = sample_features(spec)?;
    let mut gt_stream = Stream::derived(spec.master_seed, purpose::GROUND_TRUTH, 0);
    let ground_truth = sample_sparse_rademacher(spec.p, spec.s, &mut gt_stream)?;
    let mut corrupt_stream = Stream::derived(spec.master_seed, purpose::CORRUPTIONS, 0);
    let corruptions = sample_corruptions(spec.n, spec.n_corrupt, &mut corrupt_stream)?;
    let Labels { labels, .. } = generate_labels(&features, &ground_truth, &corruptions)?;
    let instance = Instance::new(features, labels, Some(ground_truth), corruptions, spec.master_seed)?;
    Ok(instance
        .with_distribution(Some(spec.distribution))
        .with_standardized_laplace(spec.standardize_laplace && spec.distribution == FeatureDistribution::Laplace))
}
