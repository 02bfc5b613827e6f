use std::time::Instant;

use rayon::prelude::*;

use super::plan::{ExperimentPlan, IterationRule, PlanDistribution};
use super::table::{ResultRow, ResultTable, STATUS_OK};
use crate::boost::{iterations_rule, run_adaboost, BoostConfig};
use crate::datagen::{generate_instance, GenSpec};
use crate::error::{Error, Result};
use crate::lpmargin::{solve_max_margin, LpSolution};
use crate::metrics::{evaluate, EvalOptions, MetricsRecord};
use crate::rng::{derive_seed, fnv1a64};
use crate::types::{EstimatorTag, Instance, Model};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool pick one per core.
    pub workers: usize,
    /// Fill `wall_time_ms`. Off by default so output bytes depend only on
    /// the plan.
    pub record_timings: bool,
}

pub fn cell_key(distribution: &str, n: usize, p: usize, s: usize, n_corrupt: usize) -> String {
    format!("{distribution}|n={n}|p={p}|s={s}|corrupt={n_corrupt}")
}

pub fn cell_seed(master_seed: u64, key: &str, replication: u64) -> u64 {
    derive_seed(master_seed, fnv1a64(key.as_bytes()), replication)
}

struct Task {
    distribution: PlanDistribution,
    n: usize,
    n_corrupt: usize,
    replication: u64,
}

/// Runs every cell and replication of `plan`. Failures become rows with a
/// non-`ok` status; the table is sorted, so its contents do not depend on
/// the number of workers.
pub fn run_plan(plan: &ExperimentPlan, opts: &RunOptions) -> Result<ResultTable> {
    plan.validate()?;
    let mut tasks = Vec::new();
    for &distribution in &plan.distributions {
        for &n in &plan.n_grid {
            for &n_corrupt in &plan.corrupt_grid {
                for replication in 0..plan.replications {
                    tasks.push(Task {
                        distribution,
                        n,
                        n_corrupt,
                        replication,
                    });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<ResultRow> = pool.install(|| {
        tasks
            .par_iter()
            .flat_map_iter(|task| run_task(plan, task, opts))
            .collect()
    });
    let table = ResultTable::from_rows(rows);
    debug_assert_eq!(table.rows.len(), plan.row_count());
    Ok(table)
}

fn elapsed_ms(start: Instant, opts: &RunOptions) -> u64 {
    if opts.record_timings {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn run_task(plan: &ExperimentPlan, task: &Task, opts: &RunOptions) -> Vec<ResultRow> {
    let p = task.n * plan.p_ratio;
    let dist_name = task.distribution.name();
    let seed = cell_seed(plan.master_seed, &cell_key(&dist_name, task.n, p, plan.s, task.n_corrupt), task.replication);
    let blank = |estimator: EstimatorTag, status: String| ResultRow {
        plan: plan.name.clone(),
        distribution: dist_name.clone(),
        n: task.n,
        p,
        s: plan.s,
        n_corrupt: task.n_corrupt,
        replication: task.replication,
        seed,
        estimator,
        status,
        margin: None,
        margin_ratio: None,
        prediction_error: None,
        l2_direction_error: None,
        loss: None,
        iterations: 0,
        wall_time_ms: 0,
    };

    let mut spec = GenSpec::new(task.n, p, plan.s, task.n_corrupt, task.distribution.resolve(p)).seed(seed);
    spec.standardize_laplace = plan.standardize_laplace;
    let instance = match generate_instance(&spec) {
        Ok(inst) => inst,
        Err(e) => {
            log::warn!("cell {dist_name} n={} seed={seed}: {e}", task.n);
            return plan
                .estimators
                .iter()
                .map(|&est| blank(est, format!("generation_failed: {e}")))
                .collect();
        }
    };
    let eval = EvalOptions {
        mc_samples: plan.mc_samples,
        seed,
    };

    let mut lp: Option<(Result<LpSolution>, u64)> = None;
    if plan.estimators.contains(&EstimatorTag::Lp) {
        let start = Instant::now();
        let solution = solve_max_margin(&instance);
        lp = Some((solution, elapsed_ms(start, opts)));
    }
    let optimal_lp = match &lp {
        Some((Ok(sol), _)) if sol.is_optimal() => Some(sol),
        _ => None,
    };

    let finish = |estimator: EstimatorTag, model: &Model, iterations: u64, ms: u64| {
        let mut row = blank(estimator, STATUS_OK.into());
        row.iterations = iterations;
        row.wall_time_ms = ms;
        match evaluate(&instance, model, optimal_lp, &eval) {
            Ok(m) => fill(&mut row, &m),
            Err(e) => row.status = format!("evaluation_failed: {e}"),
        }
        row
    };

    plan.estimators
        .iter()
        .map(|&estimator| match estimator {
            EstimatorTag::Lp => match &lp {
                Some((Ok(sol), ms)) if sol.is_optimal() => finish(estimator, &sol.to_model(), sol.iterations, *ms),
                Some((Ok(sol), ms)) => {
                    let mut row = blank(estimator, sol.status.as_str().into());
                    row.iterations = sol.iterations;
                    row.wall_time_ms = *ms;
                    row
                }
                Some((Err(e), _)) => blank(estimator, format!("lp_failed: {e}")),
                None => unreachable!("LP is solved whenever it is requested"),
            },
            _ => fit_boost(plan, &instance, task, p, opts)
                .map(|(model, ms)| finish(estimator, &model, model.iterations, ms))
                .unwrap_or_else(|status| blank(estimator, status)),
        })
        .collect()
}

fn fit_boost(
    plan: &ExperimentPlan,
    instance: &Instance,
    task: &Task,
    p: usize,
    opts: &RunOptions,
) -> std::result::Result<(Model, u64), String> {
    let iterations = match plan.iteration_rule {
        IterationRule::PaperFormula => iterations_rule(task.n, plan.s, task.n_corrupt, p, plan.epsilon),
        IterationRule::Fixed(t) => t,
    };
    let config = BoostConfig::new(plan.epsilon, iterations).record_every(iterations.max(1));
    let start = Instant::now();
    let (model, _) = run_adaboost(instance, &config).map_err(|e| match e {
        Error::NumericalFailure { .. } => format!("numerical_failure: {e}"),
        other => format!("boost_failed: {other}"),
    })?;
    if model.is_zero() {
        return Err("zero_model".into());
    }
    Ok((model, elapsed_ms(start, opts)))
}

fn fill(row: &mut ResultRow, m: &MetricsRecord) {
    row.margin = Some(m.margin);
    row.margin_ratio = m.margin_ratio;
    row.prediction_error = Some(m.prediction_error);
    row.l2_direction_error = Some(m.l2_direction_error);
    row.loss = Some(m.loss);
}
