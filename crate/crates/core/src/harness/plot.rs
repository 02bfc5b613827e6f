//! Deterministic SVG line charts of per-cell medians with interquartile
//! bands. LP series are solid and AdaBoost series dash-dotted; colour
//! identifies the feature distribution.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::table::{quantile, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::types::EstimatorTag;

pub const BUILTIN_PANELS: [&str; 4] = ["figure1-left", "figure1-right", "figure2-left", "figure2-right"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    PredictionError,
    Margin,
    L2DirectionError,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::PredictionError => "prediction error",
            Metric::Margin => "margin",
            Metric::L2DirectionError => "l2 direction error",
        }
    }

    fn of(self, row: &ResultRow) -> Option<f64> {
        match self {
            Metric::PredictionError => row.prediction_error,
            Metric::Margin => row.margin,
            Metric::L2DirectionError => row.l2_direction_error,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    /// Number of samples, with the corruption count held fixed.
    Samples { n_corrupt: usize },
    /// Number of corruptions at the largest n in the table.
    Corruptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelSpec {
    pub name: String,
    pub metric: Metric,
    pub x: XAxis,
    pub log_x: bool,
    pub log_y: bool,
}

impl PanelSpec {
    pub fn builtin(name: &str) -> Result<Self> {
        let (metric, x, log_x) = match name {
            "figure1-left" => (Metric::PredictionError, XAxis::Samples { n_corrupt: 40 }, true),
            "figure1-right" => (Metric::PredictionError, XAxis::Corruptions, false),
            "figure2-left" => (Metric::PredictionError, XAxis::Samples { n_corrupt: 0 }, true),
            "figure2-right" => (Metric::Margin, XAxis::Samples { n_corrupt: 0 }, true),
            other => {
                return Err(Error::Usage(format!(
                    "unknown panel '{other}'; available: {}",
                    BUILTIN_PANELS.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.into(),
            metric,
            x,
            log_x,
            log_y: true,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub distribution: String,
    pub estimator: EstimatorTag,
    pub points: Vec<SeriesPoint>,
}

fn available_keys(table: &ResultTable) -> String {
    let ok: Vec<&ResultRow> = table.rows.iter().filter(|r| r.is_ok()).collect();
    fn list<T: Ord + ToString>(items: impl Iterator<Item = T>) -> String {
        let set: BTreeSet<T> = items.collect();
        set.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
    }
    format!(
        "n: [{}]; n_corrupt: [{}]; distribution: [{}]; estimator: [{}]; successful rows: {} of {}",
        list(ok.iter().map(|r| r.n)),
        list(ok.iter().map(|r| r.n_corrupt)),
        list(ok.iter().map(|r| r.distribution.as_str())),
        list(ok.iter().map(|r| r.estimator.as_str())),
        ok.len(),
        table.rows.len(),
    )
}

/// Medians and quartiles of the panel's metric, one series per
/// (distribution, estimator), x ascending.
pub fn panel_series(table: &ResultTable, panel: &PanelSpec) -> Result<Vec<Series>> {
    let largest_n = table.rows.iter().filter(|r| r.is_ok()).map(|r| r.n).max();
    let selected: Vec<(&ResultRow, f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| {
            let x = match panel.x {
                XAxis::Samples { n_corrupt } if r.n_corrupt == n_corrupt => r.n as f64,
                XAxis::Corruptions if Some(r.n) == largest_n => r.n_corrupt as f64,
                _ => return None,
            };
            let y = panel.metric.of(r).filter(|v| v.is_finite())?;
            let drawable = (!panel.log_x || x > 0.0) && (!panel.log_y || y > 0.0);
            drawable.then_some((r, x, y))
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::Usage(format!(
            "panel '{}' selects no rows; available keys: {}",
            panel.name,
            available_keys(table)
        )));
    }
    let groups: BTreeSet<(String, EstimatorTag)> =
        selected.iter().map(|(r, _, _)| (r.distribution.clone(), r.estimator)).collect();
    let mut out = Vec::new();
    for (distribution, estimator) in groups {
        let mine: Vec<(f64, f64)> = selected
            .iter()
            .filter(|(r, _, _)| r.distribution == distribution && r.estimator == estimator)
            .map(|&(_, x, y)| (x, y))
            .collect();
        let xs: BTreeSet<u64> = mine.iter().map(|(x, _)| x.to_bits()).collect();
        let mut points: Vec<SeriesPoint> = xs
            .into_iter()
            .map(|bits| {
                let x = f64::from_bits(bits);
                let mut ys: Vec<f64> = mine.iter().filter(|(px, _)| *px == x).map(|(_, y)| *y).collect();
                ys.sort_by(f64::total_cmp);
                SeriesPoint {
                    x,
                    median: quantile(&ys, 0.5).unwrap_or(f64::NAN),
                    q1: quantile(&ys, 0.25).unwrap_or(f64::NAN),
                    q3: quantile(&ys, 0.75).unwrap_or(f64::NAN),
                    count: ys.len(),
                }
            })
            .collect();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        out.push(Series {
            distribution,
            estimator,
            points,
        });
    }
    Ok(out)
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const DASH_DOT: &str = "9 4 2 4";

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, pixel_lo: f64, pixel_hi: f64) -> Self {
        let t: Vec<f64> = values.map(|v| if log { libm::log10(v) } else { v }).collect();
        let mut lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-12 {
            let pad = if log { 0.25 } else { (lo.abs() * 0.1).max(0.5) };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Self {
            log,
            lo,
            hi,
            pixel_lo,
            pixel_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { libm::log10(v) } else { v };
        self.pixel_lo + (t - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let mut ticks = Vec::new();
            let multipliers: &[f64] = if self.hi - self.lo < 1.2 { &[1.0, 2.0, 5.0] } else { &[1.0] };
            for e in (self.lo.floor() as i32)..=(self.hi.ceil() as i32) {
                for m in multipliers {
                    let v = m * libm::pow(10.0, f64::from(e));
                    let t = libm::log10(v);
                    if t >= self.lo && t <= self.hi {
                        ticks.push(v);
                    }
                }
            }
            if ticks.is_empty() {
                ticks.push(libm::pow(10.0, (self.lo + self.hi) / 2.0));
            }
            ticks
        } else {
            let span = self.hi - self.lo;
            let raw = span / 5.0;
            let mag = libm::pow(10.0, raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{:.4}", v);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn estimator_label(e: EstimatorTag) -> &'static str {
    match e {
        EstimatorTag::Lp => "max-margin LP",
        EstimatorTag::Adaboost => "AdaBoost",
        EstimatorTag::External => "external",
    }
}

/// Renders the panel as a standalone SVG document.
pub fn render_plot(table: &ResultTable, panel: &PanelSpec) -> Result<String> {
    let series = panel_series(table, panel)?;
    let all = || series.iter().flat_map(|s| s.points.iter());
    let x_axis = Axis::new(all().map(|p| p.x), panel.log_x, LEFT, WIDTH - RIGHT);
    let y_axis = Axis::new(
        all().flat_map(|p| [p.median, p.q1, p.q3]).filter(|v| !panel.log_y || *v > 0.0),
        panel.log_y,
        HEIGHT - BOTTOM,
        TOP,
    );
    let distributions: Vec<&str> = series
        .iter()
        .map(|s| s.distribution.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let colour = |d: &str| PALETTE[distributions.iter().position(|x| *x == d).unwrap_or(0) % PALETTE.len()];
    let x_label = match panel.x {
        XAxis::Samples { .. } => "number of samples n",
        XAxis::Corruptions => "number of corrupted labels |O|",
    };
    let subtitle = match panel.x {
        XAxis::Samples { n_corrupt } => format!("|O| = {n_corrupt}"),
        XAxis::Corruptions => format!(
            "n = {}",
            table.rows.iter().filter(|r| r.is_ok()).map(|r| r.n).max().unwrap_or(0)
        ),
    };

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#,
        W = WIDTH,
        H = HEIGHT
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{} ({})</text>"#,
        num((LEFT + WIDTH - RIGHT) / 2.0),
        escape(&panel.name),
        escape(&subtitle)
    );

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        w,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(x0),
        num(y1),
        num(x1 - x0),
        num(y0 - y1)
    );
    for t in x_axis.ticks() {
        let px = num(x_axis.map(t));
        let _ = writeln!(w, r##"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="#ddd"/>"##, num(y1), num(y0));
        let _ = writeln!(
            w,
            r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            num(y0 + 18.0),
            tick_label(t)
        );
    }
    for t in y_axis.ticks() {
        let py = num(y_axis.map(t));
        let _ = writeln!(w, r##"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="#ddd"/>"##, num(x0), num(x1));
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            num(x0 - 6.0),
            tick_label(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}{}</text>"#,
        num((x0 + x1) / 2.0),
        num(HEIGHT - 18.0),
        if panel.log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">median {}{}</text>"#,
        escape(panel.metric.label()),
        if panel.log_y { " (log scale)" } else { "" },
        y = num((y0 + y1) / 2.0)
    );

    for s in &series {
        let c = colour(&s.distribution);
        let upper: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{},{}", num(x_axis.map(p.x)), num(y_axis.map(p.q3))))
            .collect();
        let lower: Vec<String> = s
            .points
            .iter()
            .rev()
            .map(|p| format!("{},{}", num(x_axis.map(p.x)), num(y_axis.map(p.q1))))
            .collect();
        if s.points.len() > 1 {
            let _ = writeln!(
                w,
                r#"<polygon points="{} {}" fill="{c}" fill-opacity="0.12" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            );
        }
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{},{}", num(x_axis.map(p.x)), num(y_axis.map(p.median))))
            .collect();
        let dash = if s.estimator == EstimatorTag::Adaboost {
            format!(r#" stroke-dasharray="{DASH_DOT}""#)
        } else {
            String::new()
        };
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-distribution="{}" data-estimator="{}" points="{}" fill="none" stroke="{c}" stroke-width="2"{dash}/>"#,
            escape(&s.distribution),
            s.estimator.as_str(),
            line.join(" ")
        );
        for p in &s.points {
            let _ = writeln!(
                w,
                r#"<circle cx="{}" cy="{}" r="3" fill="{c}"/>"#,
                num(x_axis.map(p.x)),
                num(y_axis.map(p.median))
            );
        }
    }

    let lx = WIDTH - RIGHT + 20.0;
    let mut ly = TOP + 10.0;
    for d in &distributions {
        let _ = writeln!(
            w,
            r#"<rect x="{}" y="{}" width="14" height="10" fill="{}"/>"#,
            num(lx),
            num(ly - 5.0),
            colour(d)
        );
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
            num(lx + 22.0),
            num(ly),
            escape(d)
        );
        ly += 20.0;
    }
    ly += 10.0;
    let estimators: BTreeSet<EstimatorTag> = series.iter().map(|s| s.estimator).collect();
    for e in estimators {
        let dash = if e == EstimatorTag::Adaboost {
            format!(r#" stroke-dasharray="{DASH_DOT}""#)
        } else {
            String::new()
        };
        let _ = writeln!(
            w,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black" stroke-width="2"{dash}/>"#,
            num(lx),
            num(lx + 30.0),
            y = num(ly)
        );
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" dominant-baseline="middle">{}</text>"#,
            num(lx + 38.0),
            num(ly),
            estimator_label(e)
        );
        ly += 20.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
