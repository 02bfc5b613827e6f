//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 7 runs at n = 200 (the 0.4-scaled n = 500 grid) by default;
//! set `MBCS_ACCEPTANCE_FULL=1` to run it at n = 500.

use std::time::{Duration, Instant};

use mbcs::boost::{iterations_rule, run_adaboost, BoostConfig};
use mbcs::datagen::{generate_instance, FeatureDistribution, GenSpec};
use mbcs::harness::{builtin_plan, render_plot, run_plan, ExperimentPlan, IterationRule, PanelSpec, PlanDistribution, RunOptions};
use mbcs::lpmargin::{margin_of_best, solve_max_margin, LpStatus};
use mbcs::matrix::{l1_norm, l2_norm};
use mbcs::metrics::{prediction_error_gaussian, prediction_error_mc};
use mbcs::oracle::{brute_force_margin, exhaustive_sign_check};
use mbcs::rng::Stream;
use mbcs::{EstimatorTag, Trajectory};

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Option<Duration>,
}

fn report(outcomes: &mut Vec<Outcome>, o: Outcome) {
    let within = o.budget.is_none_or(|b| o.elapsed < b);
    let pass = o.pass && within;
    let budget = o
        .budget
        .map(|b| format!(", budget {:.0}s{}", b.as_secs_f64(), if within { "" } else { " EXCEEDED" }))
        .unwrap_or_default();
    println!(
        "criterion {:>2} {}: {} ({}; {:.1}s{})",
        o.id,
        if pass { "PASS" } else { "FAIL" },
        o.name,
        o.detail,
        o.elapsed.as_secs_f64(),
        budget
    );
    outcomes.push(Outcome { pass, ..o });
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    mbcs::harness::quantile(&v, 0.5).unwrap_or(f64::NAN)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut pick = Stream::new(0xC1);
    let (mut worst_norm, mut worst_gap, mut failures) = (0f64, 0f64, 0);
    for seed in 0..100u64 {
        let n = 5 + pick.below(96) as usize;
        let spec = GenSpec::new(n, 10 * n, 5, 0, FeatureDistribution::Gaussian).seed(seed);
        let inst = generate_instance(&spec).expect("valid spec");
        let sol = solve_max_margin(&inst).expect("solver runs");
        if sol.status != LpStatus::Optimal {
            failures += 1;
            continue;
        }
        let norm_err = (sol.margin * l1_norm(&sol.beta_hat) - 1.0).abs();
        let gap_ratio = sol.duality_gap / sol.margin.max(1.0);
        worst_norm = worst_norm.max(norm_err);
        worst_gap = worst_gap.max(gap_ratio);
        if norm_err > 1e-8 || gap_ratio > 1e-6 {
            failures += 1;
        }
    }
    Outcome {
        id: 1,
        name: "strong duality",
        pass: failures == 0,
        detail: format!(
            "100 instances, {failures} failing, max |γ‖β̂‖₁−1| = {worst_norm:.1e}, max gap/max(1,γ) = {worst_gap:.1e}"
        ),
        elapsed: start.elapsed(),
        budget: Some(Duration::from_secs(60)),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let dists = [
        FeatureDistribution::Gaussian,
        FeatureDistribution::StudentT { dof: 3 },
        FeatureDistribution::Uniform,
        FeatureDistribution::Laplace,
        FeatureDistribution::Rademacher,
    ];
    let mut pick = Stream::new(0xC2);
    let (mut worst, mut failures, mut infeasible) = (0f64, 0, 0);
    for seed in 0..200u64 {
        let n = 1 + pick.below(3) as usize;
        let s = 1 + pick.below(2) as usize;
        let dist = dists[seed as usize % dists.len()];
        let inst = generate_instance(&GenSpec::new(n, 2, s, 0, dist).seed(seed)).expect("valid spec");
        let sol = solve_max_margin(&inst).expect("solver runs");
        let brute = brute_force_margin(&inst, 100_000).expect("p = 2");
        match sol.status {
            LpStatus::Optimal => {
                let err = (sol.margin - brute).abs();
                worst = worst.max(err);
                if err > 1e-3 {
                    failures += 1;
                }
            }
            // No direction separates the labels, so the best grid value
            // cannot be positive either.
            LpStatus::Infeasible => {
                infeasible += 1;
                if brute > 0.0 {
                    failures += 1;
                }
            }
            LpStatus::NumericallyDegenerate => failures += 1,
        }
    }
    Outcome {
        id: 2,
        name: "oracle equivalence",
        pass: failures == 0,
        detail: format!(
            "200 instances ({infeasible} non-separable Rademacher), {failures} failing, max |γ_LP − brute| = {worst:.1e}"
        ),
        elapsed: start.elapsed(),
        budget: Some(Duration::from_secs(30)),
    }
}

struct BoostRun {
    ratio: Option<f64>,
    lp_interpolates: bool,
    boost_interpolates: bool,
    trajectory: Trajectory,
}

fn boost_runs() -> (Vec<BoostRun>, Duration, u64) {
    let start = Instant::now();
    let lr = 1.0 / 6.0;
    let t = iterations_rule(100, 5, 0, 1000, lr);
    let runs = (0..20u64)
        .map(|seed| {
            let spec = GenSpec::new(100, 1000, 5, 0, FeatureDistribution::Gaussian).seed(seed);
            let inst = generate_instance(&spec).expect("valid spec");
            let sol = solve_max_margin(&inst).expect("solver runs");
            let (model, trajectory) = run_adaboost(&inst, &BoostConfig::new(lr, t)).expect("boost runs");
            BoostRun {
                ratio: margin_of_best(&inst, &model.coefficients, &sol).ok(),
                lp_interpolates: sol.is_optimal() && exhaustive_sign_check(&inst, &sol.beta_hat).unwrap_or(false),
                boost_interpolates: exhaustive_sign_check(&inst, &model.coefficients).unwrap_or(false),
                trajectory,
            }
        })
        .collect();
    (runs, start.elapsed(), t)
}

fn criterion_3(runs: &[BoostRun], elapsed: Duration, t: u64) -> Outcome {
    let ratios: Vec<f64> = runs.iter().map(|r| r.ratio.unwrap_or(f64::NAN)).collect();
    let good = ratios.iter().filter(|r| **r >= 0.5).count();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        id: 3,
        name: "margin approximation",
        pass: good >= 19,
        detail: format!(
            "T = {t}, {good}/20 seeds with ratio ≥ 0.5, min ratio {min:.3}, median {:.3}",
            median(ratios.clone())
        ),
        elapsed,
        budget: Some(Duration::from_secs(300)),
    }
}

fn criterion_4(runs: &[BoostRun]) -> Outcome {
    let start = Instant::now();
    let checked: Vec<&BoostRun> = runs.iter().filter(|r| r.ratio.is_some_and(|v| v > 0.0)).collect();
    let failures = checked
        .iter()
        .filter(|r| !(r.lp_interpolates && r.boost_interpolates))
        .count();
    Outcome {
        id: 4,
        name: "interpolation",
        pass: failures == 0 && !checked.is_empty(),
        detail: format!("{} seeds with positive ratio checked, {failures} sign mismatches", checked.len()),
        elapsed: start.elapsed(),
        budget: None,
    }
}

fn criterion_8(runs: &[BoostRun]) -> Outcome {
    let start = Instant::now();
    let (mut iterations, mut violations, mut max_step) = (0usize, 0usize, 0f64);
    let mut max_rise = f64::NEG_INFINITY;
    for run in runs {
        let mut previous = 1.0;
        for r in &run.trajectory.records {
            iterations += 1;
            max_rise = max_rise.max(r.loss - previous);
            max_step = max_step.max(r.stepsize.abs());
            if r.loss > previous + 1e-12 || r.stepsize.abs() > 1.0 + 1e-12 {
                violations += 1;
            }
            previous = r.loss;
        }
    }
    Outcome {
        id: 8,
        name: "loss monotonicity",
        pass: violations == 0 && iterations > 0,
        detail: format!(
            "{iterations} iterations, {violations} violations, max loss increase {max_rise:.1e}, max |α| {max_step:.4}"
        ),
        elapsed: start.elapsed(),
        budget: None,
    }
}

fn lp_plan(name: &str, n_grid: Vec<usize>, corrupt_grid: Vec<usize>) -> ExperimentPlan {
    let mut plan = builtin_plan("figure2-left").expect("builtin");
    plan.name = name.into();
    plan.distributions = vec![PlanDistribution::Gaussian];
    plan.n_grid = n_grid;
    plan.corrupt_grid = corrupt_grid;
    plan.estimators = vec![EstimatorTag::Lp];
    plan.iteration_rule = IterationRule::PaperFormula;
    plan.master_seed = 2024;
    plan
}

fn criteria_5_and_6() -> (Outcome, Outcome) {
    let start = Instant::now();
    let grid = vec![100, 200, 400];
    let table = run_plan(&lp_plan("rate", grid.clone(), vec![0]), &RunOptions::default()).expect("plan runs");
    let elapsed = start.elapsed();
    let failures = table.failures();
    let (mut errors, mut margins) = (Vec::new(), Vec::new());
    for &n in &grid {
        let rows: Vec<_> = table.rows.iter().filter(|r| r.n == n && r.is_ok()).collect();
        errors.push(median(rows.iter().filter_map(|r| r.prediction_error).collect()));
        margins.push(median(rows.iter().filter_map(|r| r.margin).collect()));
    }
    let ns: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let err_slope = slope(&ns, &errors);
    let margin_slope = slope(&ns, &margins);
    let c5 = Outcome {
        id: 5,
        name: "rate trend",
        pass: failures == 0 && strictly_decreasing(&errors) && (-0.70..=-0.15).contains(&err_slope),
        detail: format!(
            "median prediction error [{}] at n = 100, 200, 400, log-log slope {err_slope:.3}, {failures} failed rows",
            fmt_list(&errors)
        ),
        elapsed,
        budget: Some(Duration::from_secs(600)),
    };
    let c6 = Outcome {
        id: 6,
        name: "margin scaling",
        pass: failures == 0 && strictly_decreasing(&margins) && (-0.60..=-0.15).contains(&margin_slope),
        detail: format!("median γ [{}], log-log slope {margin_slope:.3}", fmt_list(&margins)),
        elapsed: Duration::ZERO,
        budget: None,
    };
    (c5, c6)
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let full = std::env::var("MBCS_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let corrupt = vec![0, 10, 20, 40];
    let plan = lp_plan("noise", vec![500], corrupt.clone())
        .scaled(if full { 1.0 } else { 0.4 })
        .expect("positive scale");
    let n = plan.n_grid[0];
    let table = run_plan(&plan, &RunOptions::default()).expect("plan runs");
    let medians: Vec<f64> = corrupt
        .iter()
        .map(|&k| {
            median(
                table
                    .rows
                    .iter()
                    .filter(|r| r.n_corrupt == k && r.is_ok())
                    .filter_map(|r| r.prediction_error)
                    .collect(),
            )
        })
        .collect();
    let monotone = medians.windows(2).all(|w| w[1] >= w[0]);
    let below_half = medians.iter().all(|m| *m < 0.5);
    Outcome {
        id: 7,
        name: "noise monotonicity",
        pass: table.failures() == 0 && monotone && below_half,
        detail: format!("n = {n}, median prediction error [{}] at |O| = 0, 10, 20, 40", fmt_list(&medians)),
        elapsed: start.elapsed(),
        budget: None,
    }
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut draws = Stream::new(0xC9);
    let mut worst_z = 0f64;
    let mut failures = 0;
    for _ in 0..50 {
        let mut truth: Vec<f64> = (0..10).map(|_| draws.standard_normal()).collect();
        let norm = l2_norm(&truth);
        truth.iter_mut().for_each(|v| *v /= norm);
        let model: Vec<f64> = (0..10).map(|_| draws.standard_normal()).collect();
        let exact = prediction_error_gaussian(&model, &truth).expect("nonzero model");
        let mc = prediction_error_mc(&model, &truth, FeatureDistribution::Gaussian, false, 100_000, &mut draws)
            .expect("valid inputs");
        let z = (mc.estimate - exact).abs() / mc.std_error;
        worst_z = worst_z.max(z);
        if (mc.estimate - exact).abs() > 4.0 * mc.std_error {
            failures += 1;
        }
    }
    Outcome {
        id: 9,
        name: "metric cross-validation",
        pass: failures == 0,
        detail: format!("50 directions, m = 100000, {failures} outside 4 standard errors, max |z| = {worst_z:.2}"),
        elapsed: start.elapsed(),
        budget: None,
    }
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let plan = builtin_plan("smoke").expect("builtin");
    let panel = PanelSpec::builtin("figure2-left").expect("builtin");
    let artifacts = |workers: usize| {
        let table = run_plan(&plan, &RunOptions { workers, record_timings: false }).expect("plan runs");
        let mut csv = Vec::new();
        table.write_csv(&mut csv).expect("in-memory write");
        let svg = render_plot(&table, &panel).expect("smoke table has noiseless rows");
        (csv, svg, table.rows.len())
    };
    let (csv_a, svg_a, rows) = artifacts(1);
    let (csv_b, svg_b, _) = artifacts(2);
    let identical = csv_a == csv_b && svg_a == svg_b;
    Outcome {
        id: 10,
        name: "determinism",
        pass: identical && rows == plan.row_count(),
        detail: format!(
            "smoke plan twice (1 and 2 workers): {rows} rows, CSV {} bytes {}, SVG {} bytes {}",
            csv_a.len(),
            if csv_a == csv_b { "identical" } else { "DIFFER" },
            svg_a.len(),
            if svg_a == svg_b { "identical" } else { "DIFFER" }
        ),
        elapsed: start.elapsed(),
        budget: None,
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = Vec::new();
    report(&mut outcomes, criterion_1());
    report(&mut outcomes, criterion_2());
    let (runs, boost_time, t) = boost_runs();
    report(&mut outcomes, criterion_3(&runs, boost_time, t));
    report(&mut outcomes, criterion_4(&runs));
    let (c5, c6) = criteria_5_and_6();
    report(&mut outcomes, c5);
    report(&mut outcomes, c6);
    report(&mut outcomes, criterion_7());
    report(&mut outcomes, criterion_8(&runs));
    report(&mut outcomes, criterion_9());
    report(&mut outcomes, criterion_10());
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", outcomes.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
