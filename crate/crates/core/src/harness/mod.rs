//! Experiment orchestration: plans, replicated runs, result tables and
//! SVG figures.
//!
//! A plan is a grid of (distribution, n, |O|) cells, each replicated with
//! its own seed
//!
//! ```text
//! seed = derive_seed(master_seed, fnv1a64(cell_key), replication)
//! cell_key = "<distribution>|n=<n>|p=<p>|s=<s>|corrupt=<|O|>"
//! ```
//!
//! so any single cell can be re-run in isolation and reproduce its rows.

pub mod plan;
pub mod plot;
pub mod run;
pub mod table;

pub use plan::{builtin_plan, ExperimentPlan, IterationRule, PlanDistribution, BUILTIN_PLANS};
pub use plot::{panel_series, render_plot, Metric, PanelSpec, Series, SeriesPoint, XAxis};
pub use run::{cell_key, cell_seed, run_plan, RunOptions};
pub use table::{quantile, ResultRow, ResultTable, SummaryRow};
