//! Experiment plans and the plan-file format.
//!
//! A plan file is plain text with one `key = value` per line. Blank lines
//! and lines starting with `#` are ignored; lists are comma separated.
//!
//! ```text
//! name = my-sweep
//! distributions = gaussian, student-t, uniform, laplace
//! n_grid = 100, 200, 300
//! p_ratio = 10
//! s = 5
//! corrupt_grid = 0, 40
//! epsilon = 0.2
//! iterations = paper          # or a fixed count such as 5000
//! replications = 20
//! estimators = adaboost, lp
//! master_seed = 1
//! mc_samples = 100000
//! standardize_laplace = false
//! ```
//!
//! Every key except `name`, `distributions`, `n_grid` and `corrupt_grid`
//! is optional and takes the default shown above. `student-t` uses
//! `max(3, round(ln p))` degrees of freedom unless written `student-t(d)`.

use crate::datagen::{student_dof, FeatureDistribution};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_MC_SAMPLES;
use crate::types::EstimatorTag;

pub const BUILTIN_PLANS: [&str; 5] = ["figure1-left", "figure1-right", "figure2-left", "figure2-right", "smoke"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanDistribution {
    Gaussian,
    /// `None` picks the degrees of freedom from `p`.
    StudentT(Option<u32>),
    Uniform,
    Laplace,
    Rademacher,
}

impl PlanDistribution {
    pub const CONTINUOUS: [PlanDistribution; 4] = [
        PlanDistribution::Gaussian,
        PlanDistribution::StudentT(None),
        PlanDistribution::Uniform,
        PlanDistribution::Laplace,
    ];

    pub fn name(&self) -> String {
        match self {
            PlanDistribution::Gaussian => "gaussian".into(),
            PlanDistribution::StudentT(None) => "student-t".into(),
            PlanDistribution::StudentT(Some(d)) => format!("student-t({d})"),
            PlanDistribution::Uniform => "uniform".into(),
            PlanDistribution::Laplace => "laplace".into(),
            PlanDistribution::Rademacher => "rademacher".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("student-t(").and_then(|r| r.strip_suffix(')')) {
            let dof = inner
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("bad degrees of freedom in '{s}'")))?;
            FeatureDistribution::StudentT { dof }.validate()?;
            return Ok(PlanDistribution::StudentT(Some(dof)));
        }
        Ok(match s {
            "gaussian" => PlanDistribution::Gaussian,
            "student-t" => PlanDistribution::StudentT(None),
            "uniform" => PlanDistribution::Uniform,
            "laplace" => PlanDistribution::Laplace,
            "rademacher" => PlanDistribution::Rademacher,
            other => return Err(Error::Usage(format!("unknown distribution '{other}'"))),
        })
    }

    pub fn resolve(&self, p: usize) -> FeatureDistribution {
        match *self {
            PlanDistribution::Gaussian => FeatureDistribution::Gaussian,
            PlanDistribution::StudentT(dof) => FeatureDistribution::StudentT {
                dof: dof.unwrap_or_else(|| student_dof(p.max(2))),
            },
            PlanDistribution::Uniform => FeatureDistribution::Uniform,
            PlanDistribution::Laplace => FeatureDistribution::Laplace,
            PlanDistribution::Rademacher => FeatureDistribution::Rademacher,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationRule {
    /// `boost::iterations_rule` evaluated per cell.
    PaperFormula,
    Fixed(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub name: String,
    pub distributions: Vec<PlanDistribution>,
    pub n_grid: Vec<usize>,
    pub p_ratio: usize,
    pub s: usize,
    pub corrupt_grid: Vec<usize>,
    pub epsilon: f64,
    pub iteration_rule: IterationRule,
    pub replications: u64,
    pub estimators: Vec<EstimatorTag>,
    pub master_seed: u64,
    pub mc_samples: u64,
    pub standardize_laplace: bool,
}

const DESK_N_GRID: [usize; 5] = [100, 200, 300, 400, 500];

impl ExperimentPlan {
    fn base(name: &str) -> Self {
        Self {
            name: name.into(),
            distributions: PlanDistribution::CONTINUOUS.to_vec(),
            n_grid: DESK_N_GRID.to_vec(),
            p_ratio: 10,
            s: 5,
            corrupt_grid: vec![0],
            epsilon: 0.2,
            iteration_rule: IterationRule::PaperFormula,
            replications: 20,
            estimators: vec![EstimatorTag::Adaboost, EstimatorTag::Lp],
            master_seed: 1,
            mc_samples: DEFAULT_MC_SAMPLES,
            standardize_laplace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(format!("plan '{}': {msg}", self.name)));
        if self.distributions.is_empty() || self.n_grid.is_empty() || self.corrupt_grid.is_empty() {
            return fail("distribution, n and corruption grids must be nonempty".into());
        }
        if self.estimators.is_empty() {
            return fail("at least one estimator is required".into());
        }
        if self.estimators.contains(&EstimatorTag::External) {
            return fail("only adaboost and lp can be fitted by a plan".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.p_ratio == 0 || self.s == 0 || self.mc_samples == 0 {
            return fail("p_ratio, s and mc_samples must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if let IterationRule::Fixed(0) = self.iteration_rule {
            return fail("a fixed iteration count must be positive".into());
        }
        for &n in &self.n_grid {
            if n == 0 {
                return fail("n must be positive".into());
            }
            if self.s > n * self.p_ratio {
                return fail(format!("s = {} exceeds p = {}", self.s, n * self.p_ratio));
            }
            if let Some(&k) = self.corrupt_grid.iter().find(|&&k| k > n) {
                return fail(format!("{k} corruptions exceed n = {n}"));
            }
        }
        Ok(())
    }

    /// Multiplies every entry of the n grid by `factor`, rounding to the
    /// nearest integer and keeping at least one sample.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Usage(format!("scale must be positive, got {factor}")));
        }
        for n in &mut self.n_grid {
            *n = ((*n as f64 * factor).round() as usize).max(1);
        }
        self.n_grid.dedup();
        Ok(self)
    }

    /// Parses the flat `key = value` plan format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = Self::base("");
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Usage(format!("line {}: bad {what} '{value}'", lineno + 1));
            let list = || value.split(',').map(str::trim).filter(|v| !v.is_empty());
            match key {
                "name" => plan.name = value.to_string(),
                "distributions" => plan.distributions = list().map(PlanDistribution::parse).collect::<Result<_>>()?,
                "n_grid" => plan.n_grid = list().map(|v| v.parse().map_err(|_| bad("n"))).collect::<Result<_>>()?,
                "corrupt_grid" => {
                    plan.corrupt_grid = list().map(|v| v.parse().map_err(|_| bad("count"))).collect::<Result<_>>()?
                }
                "p_ratio" => plan.p_ratio = value.parse().map_err(|_| bad("ratio"))?,
                "s" => plan.s = value.parse().map_err(|_| bad("sparsity"))?,
                "epsilon" => plan.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
                "iterations" => {
                    plan.iteration_rule = match value {
                        "paper" => IterationRule::PaperFormula,
                        v => IterationRule::Fixed(v.parse().map_err(|_| bad("iteration count"))?),
                    }
                }
                "replications" => plan.replications = value.parse().map_err(|_| bad("replication count"))?,
                "estimators" => plan.estimators = list().map(EstimatorTag::parse).collect::<Result<_>>()?,
                "master_seed" => plan.master_seed = value.parse().map_err(|_| bad("seed"))?,
                "mc_samples" => plan.mc_samples = value.parse().map_err(|_| bad("sample count"))?,
                "standardize_laplace" => plan.standardize_laplace = value.parse().map_err(|_| bad("boolean"))?,
                other => return Err(Error::Usage(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
            seen.insert(key.to_string());
        }
        for required in ["name", "distributions", "n_grid", "corrupt_grid"] {
            if !seen.contains(required) {
                return Err(Error::Usage(format!("plan file is missing '{required}'")));
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Renders the plan in the format read by [`ExperimentPlan::parse`].
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let iterations = match self.iteration_rule {
            IterationRule::PaperFormula => "paper".to_string(),
            IterationRule::Fixed(t) => t.to_string(),
        };
        format!(
            "name = {}\ndistributions = {}\nn_grid = {}\np_ratio = {}\ns = {}\ncorrupt_grid = {}\n\
             epsilon = {}\niterations = {}\nreplications = {}\nestimators = {}\nmaster_seed = {}\n\
             mc_samples = {}\nstandardize_laplace = {}\n",
            self.name,
            join(self.distributions.iter().map(|d| d.name()).collect()),
            join(self.n_grid.iter().map(|v| v.to_string()).collect()),
            self.p_ratio,
            self.s,
            join(self.corrupt_grid.iter().map(|v| v.to_string()).collect()),
            self.epsilon,
            iterations,
            self.replications,
            join(self.estimators.iter().map(|e| e.as_str().to_string()).collect()),
            self.master_seed,
            self.mc_samples,
            self.standardize_laplace,
        )
    }

    /// Number of rows a run of this plan produces.
    pub fn row_count(&self) -> usize {
        self.distributions.len()
            * self.n_grid.len()
            * self.corrupt_grid.len()
            * self.replications as usize
            * self.estimators.len()
    }
}

/// One of the named plans: the four figure panels and a small smoke test.
pub fn builtin_plan(name: &str) -> Result<ExperimentPlan> {
    let mut plan = ExperimentPlan::base(name);
    match name {
        "figure1-left" => plan.corrupt_grid = vec![40],
        "figure1-right" => {
            plan.n_grid = vec![500];
            plan.corrupt_grid = vec![0, 10, 20, 40, 60, 80];
        }
        "figure2-left" | "figure2-right" => {}
        "smoke" => {
            plan.n_grid = vec![40, 80];
            plan.corrupt_grid = vec![0, 4];
            plan.replications = 3;
            plan.mc_samples = 10_000;
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown plan '{other}'; available: {}",
                BUILTIN_PLANS.join(", ")
            )))
        }
    }
    Ok(plan)
}
