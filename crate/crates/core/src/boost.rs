//! AdaBoost over the canonical basis with the quadratic adaptive stepsize.
//!
//! Each iteration reweights samples by a softmax of the negated scores
//! `m_i = -y_i ⟨X_i, β⟩`, picks the coordinate with the largest absolute
//! weighted label correlation (lowest index on ties), and moves that
//! coordinate by `ε α_t` where `α_t` is the signed correlation. Features
//! are rescaled once by their largest absolute entry.

use crate::error::{check_len, Error, Result};
use crate::margin::exp_loss_from_exponents;
use crate::matrix::{dot, l1_norm, Matrix};
use crate::types::{EstimatorTag, Instance, IterationRecord, Model, Trajectory};

/// Cached scores are recomputed from scratch this often.
pub const REFRESH_PERIOD: u64 = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct BoostConfig {
    pub learning_rate: f64,
    pub max_iterations: u64,
    pub record_every: u64,
    pub weight_floor: f64,
}

impl BoostConfig {
    pub fn new(learning_rate: f64, max_iterations: u64) -> Self {
        Self {
            learning_rate,
            max_iterations,
            record_every: 1,
            weight_floor: 0.0,
        }
    }

    pub fn record_every(mut self, every: u64) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "learning rate must lie in (0, 1), got {}",
                self.learning_rate
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidSpec("record_every must be positive".into()));
        }
        if !(self.weight_floor >= 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::InvalidSpec("weight floor must be a nonnegative number".into()));
        }
        Ok(())
    }

    /// Whether the loss is guaranteed to decrease monotonically (ε ≤ 1/6).
    pub fn guarantees_descent(&self) -> bool {
        self.learning_rate <= 1.0 / 6.0
    }
}

/// Divides the features by their largest absolute entry.
pub fn rescale_features(features: &Matrix) -> Result<(Matrix, f64)> {
    let scale = features.max_abs();
    if scale == 0.0 {
        return Err(Error::DegenerateInput("feature matrix is all zero".into()));
    }
    Ok((features.divided(scale), scale))
}

/// Number of iterations `ceil((n √(s + |O|))^{2/3} ln(p) / ε²)`.
pub fn iterations_rule(n: usize, s: usize, n_corrupt: usize, p: usize, learning_rate: f64) -> u64 {
    let base = (n as f64 * ((s + n_corrupt) as f64).sqrt()).powf(2.0 / 3.0);
    (base * (p as f64).ln() / (learning_rate * learning_rate)).ceil() as u64
}

#[derive(Clone, Debug)]
pub struct BoostState {
    coefficients: Vec<f64>,
    iteration: u64,
    neg_scores: Vec<f64>,
    scale: f64,
    weights: Vec<f64>,
}

impl BoostState {
    /// β̃₀ = 0 for features rescaled by `scale`.
    pub fn new(n: usize, p: usize, scale: f64) -> Self {
        Self {
            coefficients: vec![0.0; p],
            iteration: 0,
            neg_scores: vec![0.0; n],
            scale,
            weights: vec![0.0; n],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Cached `-y_i ⟨X_i, β̃_t⟩`.
    pub fn neg_scores(&self) -> &[f64] {
        &self.neg_scores
    }

    /// Weights of the most recent step.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Recomputes the cached scores from the coefficients.
    pub fn refresh(&mut self, features: &Matrix, labels: &[i8]) {
        for (i, m) in self.neg_scores.iter_mut().enumerate() {
            *m = -f64::from(labels[i]) * features.row_dot(i, &self.coefficients);
        }
    }

    /// ℓ1-margin of the current coefficients on the rescaled features;
    /// NaN while the coefficients are zero.
    pub fn margin(&self) -> f64 {
        let norm = l1_norm(&self.coefficients);
        if norm == 0.0 {
            return f64::NAN;
        }
        let worst = self.neg_scores.iter().fold(f64::NEG_INFINITY, |a, m| a.max(*m));
        -worst / norm
    }
}

/// One AdaBoost iteration on rescaled features.
pub fn boost_step(
    state: &mut BoostState,
    features: &Matrix,
    labels: &[i8],
    learning_rate: f64,
    weight_floor: f64,
) -> Result<IterationRecord> {
    let n = features.rows();
    check_len(n, labels.len())?;
    check_len(n, state.neg_scores.len())?;
    check_len(features.cols(), state.coefficients.len())?;
    let t = state.iteration + 1;

    let top = state.neg_scores.iter().fold(f64::NEG_INFINITY, |a, m| a.max(*m));
    let mut total = 0.0;
    for (w, m) in state.weights.iter_mut().zip(&state.neg_scores) {
        *w = (m - top).exp();
        total += *w;
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NumericalFailure {
            iteration: t,
            reason: format!("weight normalizer is {total}"),
        });
    }
    for w in state.weights.iter_mut() {
        *w /= total;
    }
    if weight_floor > 0.0 {
        let mut total = 0.0;
        for w in state.weights.iter_mut() {
            *w = w.max(weight_floor);
            total += *w;
        }
        for w in state.weights.iter_mut() {
            *w /= total;
        }
    }

    // signed weights u_i = w_i y_i, then correlations column by column
    let signed: Vec<f64> = state
        .weights
        .iter()
        .zip(labels)
        .map(|(w, &y)| w * f64::from(y))
        .collect();
    let mut best = 0;
    let mut best_corr = 0.0f64;
    for j in 0..features.cols() {
        let corr = dot(features.column(j), &signed);
        if corr.abs() > best_corr.abs() {
            best = j;
            best_corr = corr;
        }
    }
    if !best_corr.is_finite() {
        return Err(Error::NumericalFailure {
            iteration: t,
            reason: "non-finite correlation".into(),
        });
    }

    let stepsize = best_corr;
    let delta = learning_rate * stepsize;
    if delta != 0.0 {
        state.coefficients[best] += delta;
        for ((m, &y), x) in state.neg_scores.iter_mut().zip(labels).zip(features.column(best)) {
            *m -= f64::from(y) * x * delta;
        }
    }
    state.iteration = t;
    if t.is_multiple_of(REFRESH_PERIOD) {
        state.refresh(features, labels);
    }

    let loss = exp_loss_from_exponents(&state.neg_scores);
    Ok(IterationRecord {
        t,
        coordinate: best,
        direction_sign: crate::margin::sgn(stepsize),
        stepsize,
        loss: loss.value,
        margin: state.margin(),
    })
}

/// Runs `config.max_iterations` steps from zero. The returned coefficients
/// live on the rescaled features; `Model::feature_scale` records the scale.
pub fn run_adaboost(instance: &Instance, config: &BoostConfig) -> Result<(Model, Trajectory)> {
    config.validate()?;
    let (features, scale) = rescale_features(instance.features())?;
    let labels = instance.labels();
    let mut state = BoostState::new(instance.n(), instance.p(), scale);
    let mut trajectory = Trajectory::default();
    for _ in 0..config.max_iterations {
        let record = boost_step(
            &mut state,
            &features,
            labels,
            config.learning_rate,
            config.weight_floor,
        )?;
        if record.stepsize == 0.0 {
            trajectory.stalls += 1;
        }
        if record.loss.is_infinite() || state.neg_scores.iter().any(|m| *m > crate::margin::EXPONENT_CLAMP) {
            trajectory.saturated += 1;
        }
        if record.t % config.record_every == 0 || record.t == config.max_iterations {
            trajectory.records.push(record);
        }
    }
    let model = Model {
        coefficients: state.coefficients,
        estimator: EstimatorTag::Adaboost,
        iterations: config.max_iterations,
        learning_rate: config.learning_rate,
        feature_scale: scale,
    };
    if model.is_zero() {
        log::warn!("AdaBoost returned all-zero coefficients; margin is undefined");
    }
    Ok((model, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, FeatureDistribution, GenSpec};
    use crate::margin::{exp_loss, l1_margin};

    fn inst(rows: &[&[f64]], labels: &[i8]) -> Instance {
        Instance::from_data(Matrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn rescale_examples() {
        let m = Matrix::from_rows(&[[2.0, -4.0], [1.0, 0.0]]).unwrap();
        let (r, s) = rescale_features(&m).unwrap();
        assert_eq!(s, 4.0);
        assert_eq!(r, Matrix::from_rows(&[[0.5, -1.0], [0.25, 0.0]]).unwrap());

        let m = Matrix::from_rows(&[[0.5, -1.0], [0.3, 0.0]]).unwrap();
        let (r, s) = rescale_features(&m).unwrap();
        assert_eq!((r, s), (m, 1.0));

        let (r, s) = rescale_features(&Matrix::from_rows(&[[-3.0]]).unwrap()).unwrap();
        assert_eq!((r.get(0, 0), s), (-1.0, 3.0));

        let zero = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(rescale_features(&zero), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn hand_executed_single_step() {
        let x = Matrix::from_rows(&[[1.0, 0.5]]).unwrap();
        let mut state = BoostState::new(1, 2, 1.0);
        let r = boost_step(&mut state, &x, &[1], 0.2, 0.0).unwrap();
        assert_eq!(state.weights(), &[1.0]);
        assert_eq!(r.coordinate, 0);
        assert_eq!(r.stepsize, 1.0);
        assert_eq!(r.direction_sign, 1);
        assert_eq!(state.coefficients(), &[0.2, 0.0]);
        assert!((r.margin - 1.0).abs() < 1e-15);
        assert!((r.loss - (-0.2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_instance_stalls() {
        let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let mut state = BoostState::new(2, 1, 1.0);
        let r = boost_step(&mut state, &x, &[1, 1], 0.2, 0.0).unwrap();
        assert_eq!(r.stepsize, 0.0);
        assert_eq!(state.coefficients(), &[0.0]);
        assert_eq!(r.direction_sign, 0);
    }

    #[test]
    fn ties_pick_lowest_column() {
        let x = Matrix::from_rows(&[[1.0, 1.0, -1.0]]).unwrap();
        let mut state = BoostState::new(1, 3, 1.0);
        assert_eq!(boost_step(&mut state, &x, &[1], 0.1, 0.0).unwrap().coordinate, 0);
        let x = Matrix::from_rows(&[[0.5, -1.0, 1.0]]).unwrap();
        let mut state = BoostState::new(1, 3, 1.0);
        let r = boost_step(&mut state, &x, &[1], 0.1, 0.0).unwrap();
        assert_eq!((r.coordinate, r.stepsize), (1, -1.0));
        assert_eq!(state.coefficients()[1], -0.1);
    }

    #[test]
    fn non_finite_scores_fail_with_iteration() {
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        let mut state = BoostState::new(1, 1, 1.0);
        state.neg_scores[0] = f64::NAN;
        match boost_step(&mut state, &x, &[1], 0.1, 0.0) {
            Err(Error::NumericalFailure { iteration, .. }) => assert_eq!(iteration, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn run_examples() {
        let one = inst(&[&[1.0, 0.5]], &[1]);
        let (model, traj) = run_adaboost(&one, &BoostConfig::new(0.2, 1)).unwrap();
        assert_eq!(model.coefficients, vec![0.2, 0.0]);
        assert_eq!(traj.records.len(), 1);
        assert!((traj.records[0].margin - 1.0).abs() < 1e-15);

        let (model, traj) = run_adaboost(&one, &BoostConfig::new(0.2, 0)).unwrap();
        assert!(model.is_zero());
        assert!(traj.records.is_empty());

        assert!(run_adaboost(&one, &BoostConfig::new(1.0, 5)).is_err());
        assert!(run_adaboost(&one, &BoostConfig::new(0.1, 5).record_every(0)).is_err());
    }

    #[test]
    fn trajectory_thinning_keeps_final() {
        let spec = GenSpec::new(10, 30, 3, 0, FeatureDistribution::Gaussian).seed(1);
        let inst = generate_instance(&spec).unwrap();
        let (_, traj) = run_adaboost(&inst, &BoostConfig::new(0.1, 25).record_every(10)).unwrap();
        let ts: Vec<u64> = traj.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![10, 20, 25]);
    }

    #[test]
    fn noiseless_gaussian_interpolates() {
        let spec = GenSpec::new(50, 500, 5, 0, FeatureDistribution::Gaussian).seed(2024);
        let inst = generate_instance(&spec).unwrap();
        let (model, _) = run_adaboost(&inst, &BoostConfig::new(1.0 / 6.0, 20_000).record_every(1000)).unwrap();
        assert!(l1_margin(&inst, &model.coefficients).unwrap() > 0.0);
    }

    #[test]
    fn loss_descends_and_steps_are_bounded() {
        let spec = GenSpec::new(40, 200, 5, 4, FeatureDistribution::Laplace).seed(5);
        let inst = generate_instance(&spec).unwrap();
        let (_, traj) = run_adaboost(&inst, &BoostConfig::new(1.0 / 6.0, 3000)).unwrap();
        let mut prev = 1.0;
        for r in &traj.records {
            assert!(r.loss <= prev + 1e-12, "t = {}", r.t);
            assert!(r.stepsize.abs() <= 1.0 + 1e-12);
            prev = r.loss;
        }
    }

    #[test]
    fn cached_scores_match_recomputation() {
        let spec = GenSpec::new(30, 120, 5, 3, FeatureDistribution::StudentT { dof: 5 }).seed(8);
        let inst = generate_instance(&spec).unwrap();
        let (x, scale) = rescale_features(inst.features()).unwrap();
        let mut state = BoostState::new(inst.n(), inst.p(), scale);
        for _ in 0..(REFRESH_PERIOD + 300) {
            boost_step(&mut state, &x, inst.labels(), 0.2, 0.0).unwrap();
            let mut fresh = state.clone();
            fresh.refresh(&x, inst.labels());
            for (a, b) in state.neg_scores().iter().zip(fresh.neg_scores()) {
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
            }
        }
        // the loss on rescaled features equals exp_loss on β / scale
        let loss = exp_loss_from_exponents(state.neg_scores()).value;
        let orig: Vec<f64> = state.coefficients().iter().map(|c| c / scale).collect();
        assert!((loss - exp_loss(&inst, &orig).unwrap()).abs() <= 1e-10 * loss);
    }

    #[test]
    fn margin_rescale_relation() {
        let spec = GenSpec::new(20, 80, 4, 0, FeatureDistribution::Uniform).seed(3);
        let inst = generate_instance(&spec).unwrap();
        let (model, traj) = run_adaboost(&inst, &BoostConfig::new(0.2, 2000).record_every(2000)).unwrap();
        let original = l1_margin(&inst, &model.coefficients).unwrap();
        let rescaled = traj.records.last().unwrap().margin;
        assert!((original - model.feature_scale * rescaled).abs() <= 1e-10 * original.abs().max(1e-300));
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec::new(25, 100, 5, 2, FeatureDistribution::Gaussian).seed(77);
        let inst = generate_instance(&spec).unwrap();
        let cfg = BoostConfig::new(0.2, 1500);
        let (a, ta) = run_adaboost(&inst, &cfg).unwrap();
        let (b, tb) = run_adaboost(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn iterations_rule_examples() {
        assert_eq!(iterations_rule(500, 5, 0, 5000, 0.2), 22938);
        assert_eq!(iterations_rule(1, 1, 0, 3, 1.0), 2);
        assert_eq!(iterations_rule(100, 5, 0, 1000, 1.0 / 6.0), 9162);
        let base = iterations_rule(100, 5, 10, 1000, 0.2);
        assert!(iterations_rule(101, 5, 10, 1000, 0.2) >= base);
        assert!(iterations_rule(100, 6, 10, 1000, 0.2) >= base);
        assert!(iterations_rule(100, 5, 11, 1000, 0.2) >= base);
    }
}
