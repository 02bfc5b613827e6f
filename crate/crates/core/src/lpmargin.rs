//! Exact max-ℓ1-margin with dual certificates.
//!
//! The minimum-ℓ1 interpolator solves
//!
//! ```text
//! min Σ_j (β⁺_j + β⁻_j)   s.t.   y_i ⟨X_i, β⁺ − β⁻⟩ − s_i = 1,   β⁺, β⁻, s ≥ 0
//! ```
//!
//! and the max-margin is `γ = 1 / ‖β̂‖₁`. The simplex multipliers `λ ≥ 0`
//! of the constraints satisfy `‖Σ λ_i y_i X_i‖_∞ ≤ 1` at optimality, so the
//! normalized weights `w = λ / ‖λ‖₁` certify `γ` from above:
//! `‖Σ w_i y_i X_i‖_∞ ≥ γ`, with equality at the optimum.
//!
//! When the data are not separable, phase one stops with a positive
//! artificial objective. Its multipliers then satisfy `Σ λ_i y_i X_i = 0`,
//! so the normalized weights certify that no direction has positive margin.

use std::io::Write;

use crate::error::{check_len, Error, Result};
use crate::margin::l1_margin;
use crate::matrix::{dot, l1_norm, linf_norm};
use crate::simplex::{self, Columns, SimplexOptions, SimplexStatus};
use crate::types::{EstimatorTag, Instance, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericallyDegenerate,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::NumericallyDegenerate => "numerically_degenerate",
        }
    }
}

/// Bounds on γ known when the solver stopped early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub beta_hat: Vec<f64>,
    /// γ; NaN unless the status is optimal.
    pub margin: f64,
    pub dual_weights: Vec<f64>,
    pub status: LpStatus,
    pub duality_gap: f64,
    pub iterations: u64,
    pub bounds: Option<MarginBounds>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn to_model(&self) -> Model {
        Model {
            coefficients: self.beta_hat.clone(),
            estimator: EstimatorTag::Lp,
            iterations: self.iterations,
            learning_rate: 1.0,
            feature_scale: 1.0,
        }
    }

    /// CSV certificate: one row per sample with its dual weight, plus the
    /// margin, gap and status repeated on every row.
    pub fn write_certificate<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sample,dual_weight,gamma,duality_gap,status")?;
        for (i, w) in self.dual_weights.iter().enumerate() {
            writeln!(
                out,
                "{i},{w},{},{},{}",
                self.margin,
                self.duality_gap,
                self.status.as_str()
            )?;
        }
        Ok(())
    }
}

/// Columns `[ +M | −M | −I ]` where row i of M is `y_i X_i`.
struct MarginColumns {
    n: usize,
    p: usize,
    /// column j of M, contiguous
    signed: Vec<f64>,
}

impl MarginColumns {
    fn new(instance: &Instance) -> Self {
        let (n, p) = (instance.n(), instance.p());
        let mut signed = Vec::with_capacity(n * p);
        for j in 0..p {
            signed.extend(
                instance
                    .features()
                    .column(j)
                    .iter()
                    .zip(instance.labels())
                    .map(|(x, &y)| x * f64::from(y)),
            );
        }
        Self { n, p, signed }
    }

    fn feature_column(&self, j: usize) -> &[f64] {
        &self.signed[j * self.n..(j + 1) * self.n]
    }
}

impl Columns for MarginColumns {
    fn rows(&self) -> usize {
        self.n
    }

    fn cols(&self) -> usize {
        2 * self.p + self.n
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        if j < self.p {
            out.copy_from_slice(self.feature_column(j));
        } else if j < 2 * self.p {
            for (o, v) in out.iter_mut().zip(self.feature_column(j - self.p)) {
                *o = -v;
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j - 2 * self.p] = -1.0;
        }
    }

    fn price(&self, y: &[f64], out: &mut [f64]) {
        let (plus, rest) = out.split_at_mut(self.p);
        let (minus, surplus) = rest.split_at_mut(self.p);
        for j in 0..self.p {
            let r = dot(self.feature_column(j), y);
            plus[j] = r;
            minus[j] = -r;
        }
        for (s, v) in surplus.iter_mut().zip(y) {
            *s = -v;
        }
    }
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 {
        clipped.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

/// ‖Σ_i w_i y_i X_i‖_∞ for weights on the probability simplex.
pub fn dual_value(instance: &Instance, weights: &[f64]) -> Result<f64> {
    check_len(instance.n(), weights.len())?;
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= -1e-8)) || (total - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(
            "weights must be nonnegative and sum to one".into(),
        ));
    }
    Ok(combined_linf(instance, weights))
}

fn combined_linf(instance: &Instance, weights: &[f64]) -> f64 {
    let mut combined = vec![0.0; instance.p()];
    for (i, w) in weights.iter().enumerate() {
        if *w != 0.0 {
            let wy = w * instance.label(i);
            for (c, x) in combined.iter_mut().zip(instance.features().row(i)) {
                *c += wy * x;
            }
        }
    }
    linf_norm(&combined)
}

/// Simplex variant used for the max-margin program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LpMethod {
    /// Dual simplex from the all-surplus basis, which is dual feasible
    /// because every cost is nonnegative. No artificial phase is needed.
    #[default]
    DualSimplex,
    /// Two-phase primal simplex with artificials.
    TwoPhasePrimal,
}

pub fn default_options(instance: &Instance) -> SimplexOptions {
    SimplexOptions {
        max_iterations: 50 * (instance.n() as u64 + 2 * instance.p() as u64) + 10_000,
        ..SimplexOptions::default()
    }
}

pub fn solve_max_margin(instance: &Instance) -> Result<LpSolution> {
    solve_max_margin_with(instance, LpMethod::default(), &default_options(instance))
}

pub fn solve_max_margin_with(instance: &Instance, method: LpMethod, opts: &SimplexOptions) -> Result<LpSolution> {
    let (n, p) = (instance.n(), instance.p());
    if n == 0 || p == 0 {
        return Err(Error::Domain("instance must have at least one sample and one feature".into()));
    }
    let columns = MarginColumns::new(instance);
    let rhs = vec![1.0; n];
    let mut costs = vec![1.0; 2 * p];
    costs.extend(std::iter::repeat_n(0.0, n));
    let result = match method {
        LpMethod::DualSimplex => {
            let surplus = (2 * p..2 * p + n).collect();
            simplex::solve_dual(&columns, &rhs, &costs, surplus, opts)?
        }
        LpMethod::TwoPhasePrimal => simplex::solve(&columns, &rhs, &costs, opts)?,
    };
    let mut beta: Vec<f64> = (0..p).map(|j| result.x[j] - result.x[p + j]).collect();

    match result.status {
        SimplexStatus::Optimal => {
            let worst = instance
                .signed_scores(&beta)?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if !(worst > 0.0) || l1_norm(&beta) == 0.0 {
                return Ok(degenerate(instance, beta, result.duals, result.iterations));
            }
            // remove residual infeasibility by rescaling onto the constraint set
            if worst < 1.0 {
                beta.iter_mut().for_each(|b| *b /= worst);
            }
            let margin = 1.0 / l1_norm(&beta);
            let dual_weights = normalized(&result.duals);
            let duality_gap = (combined_linf(instance, &dual_weights) - margin).abs();
            Ok(LpSolution {
                beta_hat: beta,
                margin,
                dual_weights,
                status: LpStatus::Optimal,
                duality_gap,
                iterations: result.iterations,
                bounds: None,
            })
        }
        SimplexStatus::Infeasible => {
            let dual_weights = normalized(&result.duals);
            let residual = combined_linf(instance, &dual_weights);
            Ok(LpSolution {
                beta_hat: vec![0.0; p],
                margin: f64::NAN,
                dual_weights,
                status: LpStatus::Infeasible,
                duality_gap: residual,
                iterations: result.iterations,
                bounds: Some(MarginBounds {
                    lower: f64::NEG_INFINITY,
                    upper: residual,
                }),
            })
        }
        _ => {
            log::warn!("simplex stopped with {:?} after {} pivots", result.status, result.iterations);
            Ok(degenerate(instance, beta, result.duals, result.iterations))
        }
    }
}

fn degenerate(instance: &Instance, beta: Vec<f64>, duals: Vec<f64>, iterations: u64) -> LpSolution {
    let lower = l1_margin(instance, &beta).unwrap_or(f64::NEG_INFINITY);
    let dual_weights = normalized(&duals);
    let upper = combined_linf(instance, &dual_weights);
    LpSolution {
        beta_hat: beta,
        margin: f64::NAN,
        dual_weights,
        status: LpStatus::NumericallyDegenerate,
        duality_gap: (upper - lower).abs(),
        iterations,
        bounds: Some(MarginBounds { lower, upper }),
    }
}

/// l1_margin(coefficients) / γ.
pub fn margin_of_best(instance: &Instance, coefficients: &[f64], solution: &LpSolution) -> Result<f64> {
    if !solution.is_optimal() {
        return Err(Error::Domain(format!(
            "max-margin solution is {}, not optimal",
            solution.status.as_str()
        )));
    }
    if !(solution.margin > 0.0) {
        return Err(Error::Domain("max-margin must be positive".into()));
    }
    Ok(l1_margin(instance, coefficients)? / solution.margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, FeatureDistribution, GenSpec};
    use crate::matrix::Matrix;

    fn inst(rows: &[&[f64]], labels: &[i8]) -> Instance {
        Instance::from_data(Matrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn single_constraint() {
        let s = solve_max_margin(&inst(&[&[3.0, 0.0]], &[1])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.beta_hat[0] - 1.0 / 3.0).abs() < 1e-12 && s.beta_hat[1] == 0.0);
        assert!((s.margin - 3.0).abs() < 1e-12);
        assert_eq!(s.dual_weights, vec![1.0]);
    }

    #[test]
    fn two_orthogonal_samples() {
        let two = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, -1]);
        let s = solve_max_margin(&two).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.beta_hat[0] - 1.0).abs() < 1e-12 && (s.beta_hat[1] + 1.0).abs() < 1e-12);
        assert!((s.margin - 0.5).abs() < 1e-12);
        assert!((s.dual_weights[0] - 0.5).abs() < 1e-12 && (s.dual_weights[1] - 0.5).abs() < 1e-12);
        assert!(s.duality_gap < 1e-12);
    }

    #[test]
    fn contradictory_labels_are_infeasible() {
        let s = solve_max_margin(&inst(&[&[1.0], &[1.0]], &[1, -1])).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.margin.is_nan());
        // Farkas certificate: equal weights cancel exactly
        assert!(s.duality_gap < 1e-12);
        assert!(margin_of_best(&inst(&[&[1.0], &[1.0]], &[1, -1]), &[1.0], &s).is_err());
    }

    #[test]
    fn dual_value_examples() {
        let two = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, -1]);
        assert_eq!(dual_value(&two, &[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(dual_value(&two, &[1.0, 0.0]).unwrap(), 1.0);
        let one = inst(&[&[-2.5, 1.0]], &[1]);
        assert_eq!(dual_value(&one, &[1.0]).unwrap(), 2.5);
        assert!(dual_value(&two, &[0.6, 0.6]).is_err());
        assert!(dual_value(&two, &[1.1, -0.1]).is_err());
    }

    #[test]
    fn margin_ratio_examples() {
        let spec = GenSpec::new(15, 40, 3, 0, FeatureDistribution::Gaussian).seed(4);
        let instance = generate_instance(&spec).unwrap();
        let s = solve_max_margin(&instance).unwrap();
        assert!((margin_of_best(&instance, &s.beta_hat, &s).unwrap() - 1.0).abs() < 1e-8);
        let doubled: Vec<f64> = s.beta_hat.iter().map(|b| 2.0 * b).collect();
        assert!((margin_of_best(&instance, &doubled, &s).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn certificate_csv() {
        let s = solve_max_margin(&inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, -1])).unwrap();
        let mut buf = Vec::new();
        s.write_certificate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sample,dual_weight,gamma,duality_gap,status");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0.5,0.5,"));
        assert!(lines[1].ends_with(",optimal"));
    }

    #[test]
    fn iteration_cap_gives_degenerate_status_with_bounds() {
        let spec = GenSpec::new(20, 60, 3, 0, FeatureDistribution::Gaussian).seed(9);
        let instance = generate_instance(&spec).unwrap();
        let opts = SimplexOptions { max_iterations: 3, ..Default::default() };
        for method in [LpMethod::DualSimplex, LpMethod::TwoPhasePrimal] {
            let s = solve_max_margin_with(&instance, method, &opts).unwrap();
            assert_eq!(s.status, LpStatus::NumericallyDegenerate);
            assert!(s.bounds.is_some());
        }
    }

    #[test]
    fn methods_agree() {
        for seed in 0..6 {
            let dist = [FeatureDistribution::Gaussian, FeatureDistribution::Laplace][seed % 2];
            let spec = GenSpec::new(25, 80, 4, seed % 3, dist).seed(seed as u64);
            let instance = generate_instance(&spec).unwrap();
            let opts = default_options(&instance);
            let a = solve_max_margin_with(&instance, LpMethod::DualSimplex, &opts).unwrap();
            let b = solve_max_margin_with(&instance, LpMethod::TwoPhasePrimal, &opts).unwrap();
            assert_eq!((a.status, b.status), (LpStatus::Optimal, LpStatus::Optimal));
            assert!((a.margin - b.margin).abs() <= 1e-9 * a.margin);
            for (x, y) in a.beta_hat.iter().zip(&b.beta_hat) {
                assert!((x - y).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn both_methods_certify_infeasibility() {
        // four points in general position with XOR-like labels in 1-D after
        // a sign flip: x and -x with equal labels cannot be separated
        let bad = inst(&[&[1.0, 2.0], &[-1.0, -2.0], &[0.5, -1.0], &[-0.5, 1.0]], &[1, 1, -1, -1]);
        for method in [LpMethod::DualSimplex, LpMethod::TwoPhasePrimal] {
            let s = solve_max_margin_with(&bad, method, &default_options(&bad)).unwrap();
            assert_eq!(s.status, LpStatus::Infeasible, "{method:?}");
            let total: f64 = s.dual_weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(s.dual_weights.iter().all(|w| *w >= 0.0));
            assert!(dual_value(&bad, &s.dual_weights).unwrap() < 1e-9, "{method:?}");
        }
    }
}
