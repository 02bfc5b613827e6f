//! `onebit`: generate instances, fit AdaBoost or the max-margin LP,
//! evaluate models, and run or plot experiment plans.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 when an experiment
//! finished but some rows failed, 1 on any other error.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mbcs::boost::{iterations_rule, run_adaboost, BoostConfig};
use mbcs::datagen::{generate_instance, student_dof, FeatureDistribution, GenSpec};
use mbcs::harness::{builtin_plan, render_plot, run_plan, ExperimentPlan, PanelSpec, ResultTable, RunOptions};
use mbcs::io::{load_instance, load_model, save_instance, save_model};
use mbcs::lpmargin::{solve_max_margin, LpStatus};
use mbcs::metrics::{evaluate, EvalOptions, DEFAULT_MC_SAMPLES};
use mbcs::Error;

#[derive(Parser)]
#[command(name = "onebit", version, about = "Max-margin boosting for robust one-bit compressed sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Fit AdaBoost with the quadratic adaptive stepsize.
    FitAdaboost(FitAdaboostArgs),
    /// Solve the max-l1-margin LP and write its dual certificate.
    FitLp(FitLpArgs),
    /// Evaluate a model against the instance's ground truth.
    Eval(EvalArgs),
    /// Run an experiment plan and write a result table.
    Experiment(ExperimentArgs),
    /// Render one panel of a result table as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    /// gaussian, student-t, uniform, laplace or rademacher
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 5)]
    s: usize,
    /// Number of flipped labels.
    #[arg(long, default_value_t = 0)]
    corrupt: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Student-t degrees of freedom; defaults to max(3, round(ln p)).
    #[arg(long)]
    dof: Option<u32>,
    /// Draw Laplace features with unit variance instead of unit scale.
    #[arg(long)]
    standardize_laplace: bool,
    /// Output path; `.csv` writes CSV, anything else the MBCS1 binary format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitAdaboostArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Fixed number of iterations.
    #[arg(long, conflicts_with = "iters_rule", required_unless_present = "iters_rule")]
    iters: Option<u64>,
    /// Use the iteration count prescribed for margin approximation.
    #[arg(long)]
    iters_rule: bool,
    #[arg(long, default_value_t = 1)]
    record_every: u64,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct FitLpArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_model: Option<PathBuf>,
    #[arg(long)]
    out_certificate: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: u64,
    /// Seed of the fresh Monte Carlo draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also solve the LP to report the margin ratio.
    #[arg(long)]
    margin_ratio: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in plan name or path to a plan file.
    #[arg(long)]
    plan: String,
    /// Multiplies every n in the plan's grid.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Record wall-clock times (makes the output machine dependent).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
    /// Per-cell medians, quartiles and means; defaults to <out>.summary.csv.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// figure1-left, figure1-right, figure2-left or figure2-right
    #[arg(long)]
    panel: String,
    #[arg(long)]
    out: PathBuf,
}

/// An experiment that completed with failed rows.
#[derive(Debug)]
struct PartialFailure(usize);

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} rows failed; see the status column", self.0)
    }
}

impl std::error::Error for PartialFailure {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::FitAdaboost(a) => fit_adaboost(a),
        Command::FitLp(a) => fit_lp(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(p) = e.downcast_ref::<PartialFailure>() {
                log::debug!("partial failure: {p}");
                return ExitCode::from(3);
            }
            match e.downcast_ref::<Error>() {
                Some(Error::Usage(_) | Error::InvalidSpec(_) | Error::Unsupported(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let dof = (a.dist == "student-t").then(|| a.dof.unwrap_or_else(|| student_dof(a.p.max(2))));
    if a.dof.is_some() && a.dist != "student-t" {
        bail!(Error::Usage("--dof only applies to student-t".into()));
    }
    let dist = FeatureDistribution::parse(&a.dist, dof).map_err(|e| Error::Usage(e.to_string()))?;
    let mut spec = GenSpec::new(a.n, a.p, a.s, a.corrupt, dist).seed(a.seed);
    spec.standardize_laplace = a.standardize_laplace;
    let instance = generate_instance(&spec)?;
    save_instance(&instance, &a.out)?;
    println!(
        "wrote {} ({} x {}, {}, {} corrupted labels, seed {})",
        a.out.display(),
        a.n,
        a.p,
        dist,
        a.corrupt,
        a.seed
    );
    Ok(())
}

fn fit_adaboost(a: FitAdaboostArgs) -> anyhow::Result<()> {
    let instance = load_instance(&a.input)?;
    let iterations = match a.iters {
        Some(t) => t,
        None => {
            let s = instance.sparsity().ok_or_else(|| {
                Error::Usage("--iters-rule needs an instance with a ground truth; pass --iters".into())
            })?;
            iterations_rule(instance.n(), s, instance.corruptions().len(), instance.p(), a.epsilon)
        }
    };
    let config = BoostConfig::new(a.epsilon, iterations).record_every(a.record_every);
    config.validate()?;
    let (model, trajectory) = run_adaboost(&instance, &config)?;
    save_model(&model, &a.out_model)?;
    if let Some(path) = &a.out_trajectory {
        let mut out = create(path)?;
        trajectory.write_csv(&mut out)?;
        out.flush()?;
    }
    let last = trajectory.records.last();
    println!(
        "adaboost: {iterations} iterations, epsilon {}, final loss {}, final margin {}{}",
        a.epsilon,
        last.map_or(f64::NAN, |r| r.loss),
        last.map_or(f64::NAN, |r| r.margin),
        if trajectory.saturated > 0 {
            format!(" ({} iterations hit the exponent clamp)", trajectory.saturated)
        } else {
            String::new()
        }
    );
    Ok(())
}

fn fit_lp(a: FitLpArgs) -> anyhow::Result<()> {
    let instance = load_instance(&a.input)?;
    let solution = solve_max_margin(&instance)?;
    if let Some(path) = &a.out_certificate {
        let mut out = create(path)?;
        solution.write_certificate(&mut out)?;
        out.flush()?;
    }
    match solution.status {
        LpStatus::Optimal => {
            if let Some(path) = &a.out_model {
                save_model(&solution.to_model(), path)?;
            }
            println!(
                "lp: optimal, gamma {}, ||beta||_1 {}, duality gap {:e}, {} pivots",
                solution.margin,
                1.0 / solution.margin,
                solution.duality_gap,
                solution.iterations
            );
        }
        LpStatus::Infeasible => println!(
            "lp: infeasible, the labels cannot be separated; certificate residual {:e}",
            solution.duality_gap
        ),
        LpStatus::NumericallyDegenerate => {
            let b = solution.bounds.expect("degenerate solutions carry bounds");
            println!("lp: numerically degenerate, gamma in [{}, {}]", b.lower, b.upper);
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let instance = load_instance(&a.input)?;
    let model = load_model(&a.model)?;
    let lp = if a.margin_ratio {
        Some(solve_max_margin(&instance)?)
    } else {
        None
    };
    let opts = EvalOptions {
        mc_samples: a.mc_samples,
        seed: a.seed,
    };
    let m = evaluate(&instance, &model, lp.as_ref(), &opts)?;
    let header = "estimator,prediction_error,prediction_error_method,l2_direction_error,margin,margin_ratio,loss,wall_time_ms";
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        m.estimator,
        m.prediction_error,
        m.prediction_error_method.label(),
        m.l2_direction_error,
        m.margin,
        opt(m.margin_ratio),
        m.loss,
        m.wall_time_ms
    );
    match &a.out {
        Some(path) => fs::write(path, format!("{header}\n{row}\n"))?,
        None => println!("{header}\n{row}"),
    }
    Ok(())
}

fn load_plan(spec: &str) -> anyhow::Result<ExperimentPlan> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {spec}"))?;
        Ok(ExperimentPlan::parse(&text)?)
    } else {
        Ok(builtin_plan(spec)?)
    }
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let plan = load_plan(&a.plan)?.scaled(a.scale)?;
    plan.validate().map_err(|e| Error::Usage(e.to_string()))?;
    log::info!("running plan '{}' ({} rows)", plan.name, plan.row_count());
    let table = run_plan(
        &plan,
        &RunOptions {
            workers: a.workers,
            record_timings: a.timings,
        },
    )?;
    let mut out = create(&a.out)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    let summary_path = a.summary.unwrap_or_else(|| a.out.with_extension("summary.csv"));
    let mut summary = create(&summary_path)?;
    table.write_summary_csv(&mut summary)?;
    summary.flush()?;
    println!(
        "plan '{}': {} rows written to {}, summary in {}",
        plan.name,
        table.rows.len(),
        a.out.display(),
        summary_path.display()
    );
    match table.failures() {
        0 => Ok(()),
        k => Err(PartialFailure(k).into()),
    }
}

fn plot(a: PlotArgs) -> anyhow::Result<()> {
    let panel = PanelSpec::builtin(&a.panel)?;
    let file = File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let table = ResultTable::read_csv(file)?;
    let svg = render_plot(&table, &panel)?;
    fs::write(&a.out, svg)?;
    println!("wrote {}", a.out.display());
    Ok(())
}
