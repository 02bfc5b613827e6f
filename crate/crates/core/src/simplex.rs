//! Dense two-phase revised simplex for `min cᵀx  s.t.  A x = b, x ≥ 0`
//! with `b ≥ 0`.
//!
//! The basis inverse is held explicitly and updated by elementary row
//! operations after every pivot, with a fresh Gauss–Jordan inversion every
//! [`SimplexOptions::refactor_every`] pivots. Phase one starts from an
//! all-artificial basis; artificials that leave never re-enter. Pricing is
//! Dantzig's rule with a Harris two-pass ratio test, switching to Bland's
//! rule after a run of degenerate pivots and back after progress.

use crate::error::{check_len, Error, Result};
use crate::matrix::dot;

/// Column access to the constraint matrix.
pub trait Columns {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Writes column `j` into `out` (length `rows`).
    fn column_into(&self, j: usize, out: &mut [f64]);
    /// `out[j] = a_jᵀ y` for every column.
    fn price(&self, y: &[f64], out: &mut [f64]);
}

/// Plain column-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseColumns {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseColumns {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            check_len(n, row.len())?;
            for (j, v) in row.iter().enumerate() {
                data[j * m + i] = *v;
            }
        }
        Ok(Self { rows: m, cols: n, data })
    }
}

impl Columns for DenseColumns {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[j * self.rows..(j + 1) * self.rows]);
    }

    fn price(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let col = &self.data[j * self.rows..(j + 1) * self.rows];
            *o = dot(col, y);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOptions {
    /// Absolute tolerance on primal feasibility.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: u64,
    pub refactor_every: u64,
    /// Total pivot cap over both phases.
    pub max_iterations: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            bland_after: 5000,
            refactor_every: 128,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The basis matrix became numerically singular.
    Singular,
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Primal values of the structural variables.
    pub x: Vec<f64>,
    /// Simplex multipliers `c_Bᵀ B⁻¹` at termination.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Sum of artificials when phase one stopped.
    pub phase_one_objective: f64,
    pub iterations: u64,
    pub degenerate_pivots: u64,
    pub bland_pivots: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Step {
    Pivoted,
    Optimal,
    Unbounded,
}

struct Solver<'a, C: Columns> {
    a: &'a C,
    b: &'a [f64],
    c: &'a [f64],
    opts: &'a SimplexOptions,
    m: usize,
    ncols: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    y: Vec<f64>,
    prices: Vec<f64>,
    column: Vec<f64>,
    alpha: Vec<f64>,
    iterations: u64,
    since_refactor: u64,
    degenerate_run: u64,
    degenerate_pivots: u64,
    bland_pivots: u64,
}

impl<'a, C: Columns> Solver<'a, C> {
    fn new(a: &'a C, b: &'a [f64], c: &'a [f64], opts: &'a SimplexOptions, basis: Vec<usize>) -> Self {
        let m = a.rows();
        let ncols = a.cols();
        let mut is_basic = vec![false; ncols + m];
        for &v in &basis {
            is_basic[v] = true;
        }
        Self {
            a,
            b,
            c,
            opts,
            m,
            ncols,
            basis,
            is_basic,
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            y: vec![0.0; m],
            prices: vec![0.0; ncols],
            column: vec![0.0; m],
            alpha: vec![0.0; m],
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            degenerate_pivots: 0,
            bland_pivots: 0,
        }
    }

    fn is_artificial(&self, v: usize) -> bool {
        v >= self.ncols
    }

    fn cost(&self, v: usize, phase: Phase) -> f64 {
        match (phase, self.is_artificial(v)) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.c[v],
        }
    }

    fn load_column(&mut self, v: usize) {
        if self.is_artificial(v) {
            self.column.iter_mut().for_each(|x| *x = 0.0);
            self.column[v - self.ncols] = 1.0;
        } else {
            self.a.column_into(v, &mut self.column);
        }
    }

    /// alpha = B⁻¹ column
    fn ftran(&mut self) {
        let m = self.m;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.alpha[i] = dot(row, &self.column);
        }
    }

    fn compute_duals(&mut self, phase: Phase) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let cb = self.cost(self.basis[i], phase);
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, r) in self.y.iter_mut().zip(row) {
                    *yk += cb * r;
                }
            }
        }
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        // B stored row-major, augmented with the identity in binv
        let mut bmat = vec![0.0; m * m];
        for (k, &v) in self.basis.clone().iter().enumerate() {
            self.load_column(v);
            for i in 0..m {
                bmat[i * m + k] = self.column[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let pivot_row = (col..m)
                .max_by(|&r, &s| bmat[r * m + col].abs().total_cmp(&bmat[s * m + col].abs()))
                .unwrap_or(col);
            let pivot = bmat[pivot_row * m + col];
            if pivot.abs() < 1e-12 {
                return false;
            }
            if pivot_row != col {
                for k in 0..m {
                    bmat.swap(col * m + k, pivot_row * m + k);
                    inv.swap(col * m + k, pivot_row * m + k);
                }
            }
            let scale = 1.0 / bmat[col * m + col];
            for k in 0..m {
                bmat[col * m + k] *= scale;
                inv[col * m + k] *= scale;
            }
            let pivot_b = bmat[col * m + col..(col + 1) * m].to_vec();
            let pivot_inv = inv[col * m..(col + 1) * m].to_vec();
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = bmat[r * m + col];
                if f == 0.0 {
                    continue;
                }
                let row_b = &mut bmat[r * m + col..(r + 1) * m];
                row_b.iter_mut().zip(&pivot_b).for_each(|(x, p)| *x -= f * p);
                let row_inv = &mut inv[r * m..(r + 1) * m];
                row_inv.iter_mut().zip(&pivot_inv).for_each(|(x, p)| *x -= f * p);
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = dot(row, self.b);
        }
        self.since_refactor = 0;
        true
    }

    fn pivot(&mut self, r: usize, entering: usize) {
        let theta = self.xb[r] / self.alpha[r];
        for i in 0..self.m {
            if i != r {
                self.xb[i] -= theta * self.alpha[i];
                if self.xb[i] < 0.0 && self.xb[i] > -self.opts.feasibility_tol {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        self.update_inverse(r, entering);
    }

    /// Pivot for the dual simplex, where basic values may be negative.
    fn pivot_any_sign(&mut self, r: usize, entering: usize) {
        let theta = self.xb[r] / self.alpha[r];
        for i in 0..self.m {
            if i != r {
                self.xb[i] -= theta * self.alpha[i];
            }
        }
        self.xb[r] = theta;
        self.update_inverse(r, entering);
    }

    fn update_inverse(&mut self, r: usize, entering: usize) {
        let m = self.m;

        let inv_pivot = 1.0 / self.alpha[r];
        for k in 0..m {
            self.binv[r * m + k] *= inv_pivot;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, row) in before.chunks_exact_mut(m).enumerate() {
            let f = self.alpha[i];
            if f != 0.0 {
                row.iter_mut().zip(pivot_row.iter()).for_each(|(x, p)| *x -= f * p);
            }
        }
        for (i, row) in after.chunks_exact_mut(m).enumerate() {
            let f = self.alpha[r + 1 + i];
            if f != 0.0 {
                row.iter_mut().zip(pivot_row.iter()).for_each(|(x, p)| *x -= f * p);
            }
        }

        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[entering] = true;
        self.basis[r] = entering;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn step(&mut self, phase: Phase) -> Step {
        self.compute_duals(phase);
        self.a.price(&self.y, &mut self.prices);
        let bland = self.degenerate_run >= self.opts.bland_after;
        let mut entering = None;
        let mut best = -self.opts.optimality_tol;
        for j in 0..self.ncols {
            if self.is_basic[j] {
                continue;
            }
            let d = self.cost(j, phase) - self.prices[j];
            if d < best {
                entering = Some(j);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(q) = entering else {
            return Step::Optimal;
        };
        self.load_column(q);
        self.ftran();

        let tol = self.opts.pivot_tol;
        let mut leave = None;
        if bland {
            let mut theta = f64::INFINITY;
            for i in 0..self.m {
                if self.alpha[i] > tol {
                    let ratio = self.xb[i].max(0.0) / self.alpha[i];
                    let better = match leave {
                        None => true,
                        Some(r) => {
                            ratio < theta - 1e-12
                                || (ratio <= theta + 1e-12 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        theta = theta.min(ratio);
                        leave = Some(i);
                    }
                }
            }
        } else {
            let mut bound = f64::INFINITY;
            for i in 0..self.m {
                if self.alpha[i] > tol {
                    bound = bound.min((self.xb[i].max(0.0) + self.opts.feasibility_tol) / self.alpha[i]);
                }
            }
            let mut largest = 0.0;
            for i in 0..self.m {
                if self.alpha[i] > tol && self.xb[i].max(0.0) / self.alpha[i] <= bound && self.alpha[i] > largest {
                    largest = self.alpha[i];
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Step::Unbounded;
        };
        if self.xb[r] < 0.0 {
            self.xb[r] = 0.0;
        }
        let theta = self.xb[r] / self.alpha[r];
        if bland {
            self.bland_pivots += 1;
        }
        if theta <= 1e-12 {
            self.degenerate_run += 1;
            self.degenerate_pivots += 1;
        } else {
            self.degenerate_run = 0;
        }
        self.pivot(r, q);
        Step::Pivoted
    }

    fn run_phase(&mut self, phase: Phase) -> Option<SimplexStatus> {
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Some(SimplexStatus::IterationLimit);
            }
            if self.since_refactor >= self.opts.refactor_every && !self.refactor() {
                return Some(SimplexStatus::Singular);
            }
            match self.step(phase) {
                Step::Pivoted => {}
                Step::Optimal => return None,
                Step::Unbounded => return Some(SimplexStatus::Unbounded),
            }
        }
    }

    /// Pivots basic artificials out of the basis where a structural column
    /// has a usable entry in their row.
    fn drive_out_artificials(&mut self) -> bool {
        let m = self.m;
        let mut row = vec![0.0; m];
        for r in 0..m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            row.copy_from_slice(&self.binv[r * m..(r + 1) * m]);
            self.a.price(&row, &mut self.prices);
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..self.ncols {
                if !self.is_basic[j] && self.prices[j].abs() > best_abs {
                    best_abs = self.prices[j].abs();
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                self.load_column(q);
                self.ftran();
                self.xb[r] = 0.0;
                self.pivot(r, q);
            }
        }
        self.refactor()
    }

    fn objective(&self, phase: Phase) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&v, x)| self.cost(v, phase) * x)
            .sum()
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for (&v, &val) in self.basis.iter().zip(&self.xb) {
            if !self.is_artificial(v) {
                x[v] = val.max(0.0);
            }
        }
        x
    }

    fn finish(&mut self, status: SimplexStatus, phase: Phase, phase_one: f64) -> SimplexResult {
        self.compute_duals(phase);
        SimplexResult {
            status,
            x: self.primal(),
            duals: self.y.clone(),
            objective: self.objective(phase),
            phase_one_objective: phase_one,
            iterations: self.iterations,
            degenerate_pivots: self.degenerate_pivots,
            bland_pivots: self.bland_pivots,
        }
    }
}

/// Solves `min cᵀx  s.t.  A x = b, x ≥ 0`.
pub fn solve<C: Columns>(a: &C, b: &[f64], c: &[f64], opts: &SimplexOptions) -> Result<SimplexResult> {
    let m = a.rows();
    let ncols = a.cols();
    check_len(m, b.len())?;
    check_len(ncols, c.len())?;
    if b.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("right-hand side must be finite and nonnegative".into()));
    }
    let mut s = Solver::new(a, b, c, opts, (ncols..ncols + m).collect());
    let mut identity = vec![0.0; m * m];
    for i in 0..m {
        identity[i * m + i] = 1.0;
    }
    s.binv = identity;
    s.xb = b.to_vec();

    if let Some(status) = s.run_phase(Phase::One) {
        let p1 = s.objective(Phase::One);
        return Ok(s.finish(status, Phase::One, p1));
    }
    if !s.refactor() {
        let p1 = s.objective(Phase::One);
        return Ok(s.finish(SimplexStatus::Singular, Phase::One, p1));
    }
    let phase_one = s.objective(Phase::One);
    let scale = b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if phase_one > opts.feasibility_tol * scale * (m as f64).sqrt().max(1.0) * 10.0 {
        return Ok(s.finish(SimplexStatus::Infeasible, Phase::One, phase_one));
    }
    if !s.drive_out_artificials() {
        return Ok(s.finish(SimplexStatus::Singular, Phase::Two, phase_one));
    }
    s.degenerate_run = 0;
    if let Some(status) = s.run_phase(Phase::Two) {
        return Ok(s.finish(status, Phase::Two, phase_one));
    }
    if !s.refactor() {
        return Ok(s.finish(SimplexStatus::Singular, Phase::Two, phase_one));
    }
    // a refactor can expose small reduced-cost errors; polish once more
    if let Some(status) = s.run_phase(Phase::Two) {
        return Ok(s.finish(status, Phase::Two, phase_one));
    }
    Ok(s.finish(SimplexStatus::Optimal, Phase::Two, phase_one))
}

/// Dual simplex from a dual-feasible starting basis of structural columns.
///
/// Each iteration picks the basic row with the largest dual steepest-edge
/// score `x_i² / ‖e_iᵀB⁻¹‖²` among infeasible rows (Bland: the
/// infeasible row with the smallest basic index), prices that row of
/// `B⁻¹A`, and enters the column minimizing `d_j / |α_rj|` over negative
/// `α_rj` (Harris two-pass; Bland: smallest index among ties). When an
/// infeasible row has no negative entry the primal is infeasible, and
/// `duals` holds the Farkas ray `y` with `yᵀA ≤ 0`, `yᵀb > 0`.
pub fn solve_dual<C: Columns>(
    a: &C,
    b: &[f64],
    c: &[f64],
    basis: Vec<usize>,
    opts: &SimplexOptions,
) -> Result<SimplexResult> {
    let m = a.rows();
    let ncols = a.cols();
    check_len(m, b.len())?;
    check_len(ncols, c.len())?;
    check_len(m, basis.len())?;
    if basis.iter().any(|&v| v >= ncols) {
        return Err(Error::Domain("starting basis must use structural columns".into()));
    }
    let mut s = Solver::new(a, b, c, opts, basis);
    if !s.refactor() {
        return Ok(s.finish(SimplexStatus::Singular, Phase::Two, f64::NAN));
    }
    let mut reduced = vec![0.0; ncols];
    let refresh_reduced = |s: &mut Solver<'_, C>, reduced: &mut [f64]| {
        s.compute_duals(Phase::Two);
        s.a.price(&s.y, &mut s.prices);
        for (j, d) in reduced.iter_mut().enumerate() {
            *d = if s.is_basic[j] { 0.0 } else { s.c[j] - s.prices[j] };
        }
    };
    refresh_reduced(&mut s, &mut reduced);
    if reduced.iter().any(|d| *d < -opts.optimality_tol) {
        return Err(Error::Domain("starting basis is not dual feasible".into()));
    }
    let mut row = vec![0.0; m];
    let mut row_alpha = vec![0.0; ncols];
    loop {
        if s.iterations >= opts.max_iterations {
            return Ok(s.finish(SimplexStatus::IterationLimit, Phase::Two, f64::NAN));
        }
        if s.since_refactor >= opts.refactor_every {
            if !s.refactor() {
                return Ok(s.finish(SimplexStatus::Singular, Phase::Two, f64::NAN));
            }
            refresh_reduced(&mut s, &mut reduced);
        }
        let bland = s.degenerate_run >= opts.bland_after;
        let mut leave = None;
        let mut worst = 0.0;
        for i in 0..m {
            if s.xb[i] < -opts.feasibility_tol {
                if bland {
                    if leave.is_none_or(|r: usize| s.basis[i] < s.basis[r]) {
                        leave = Some(i);
                    }
                } else {
                    // dual steepest edge: infeasibility² / ‖e_iᵀ B⁻¹‖²
                    let r = &s.binv[i * m..(i + 1) * m];
                    let norm2 = dot(r, r);
                    let score = s.xb[i] * s.xb[i] / norm2;
                    if score > worst {
                        worst = score;
                        leave = Some(i);
                    }
                }
            }
        }
        let Some(r) = leave else {
            // primal feasible; confirm with fresh factors before stopping
            if s.since_refactor == 0 {
                return Ok(s.finish(SimplexStatus::Optimal, Phase::Two, 0.0));
            }
            if !s.refactor() {
                return Ok(s.finish(SimplexStatus::Singular, Phase::Two, f64::NAN));
            }
            refresh_reduced(&mut s, &mut reduced);
            continue;
        };
        row.copy_from_slice(&s.binv[r * m..(r + 1) * m]);
        s.a.price(&row, &mut row_alpha);

        let tol = opts.pivot_tol;
        let mut entering = None;
        if bland {
            let mut best = f64::INFINITY;
            for j in 0..ncols {
                if !s.is_basic[j] && row_alpha[j] < -tol {
                    let ratio = reduced[j].max(0.0) / -row_alpha[j];
                    if ratio < best - 1e-12 {
                        best = ratio;
                        entering = Some(j);
                    }
                }
            }
        } else {
            let mut bound = f64::INFINITY;
            for j in 0..ncols {
                if !s.is_basic[j] && row_alpha[j] < -tol {
                    bound = bound.min((reduced[j].max(0.0) + opts.optimality_tol) / -row_alpha[j]);
                }
            }
            let mut largest = 0.0;
            for j in 0..ncols {
                if !s.is_basic[j]
                    && row_alpha[j] < -tol
                    && reduced[j].max(0.0) / -row_alpha[j] <= bound
                    && -row_alpha[j] > largest
                {
                    largest = -row_alpha[j];
                    entering = Some(j);
                }
            }
        }
        let Some(q) = entering else {
            let mut result = s.finish(SimplexStatus::Infeasible, Phase::Two, -s.xb[r]);
            result.duals = row.iter().map(|v| -v).collect();
            return Ok(result);
        };

        let step = reduced[q].max(0.0) / -row_alpha[q];
        if bland {
            s.bland_pivots += 1;
        }
        if step <= 1e-12 {
            s.degenerate_run += 1;
            s.degenerate_pivots += 1;
        } else {
            s.degenerate_run = 0;
        }
        for j in 0..ncols {
            if !s.is_basic[j] {
                reduced[j] += step * row_alpha[j];
            }
        }
        let leaving = s.basis[r];
        reduced[q] = 0.0;
        reduced[leaving] = step;

        s.load_column(q);
        s.ftran();
        if s.alpha[r].abs() < tol {
            // row and column computations disagree; rebuild and retry
            if !s.refactor() {
                return Ok(s.finish(SimplexStatus::Singular, Phase::Two, f64::NAN));
            }
            refresh_reduced(&mut s, &mut reduced);
            s.iterations += 1;
            continue;
        }
        s.pivot_any_sign(r, q);
    }
}
