//! LP subproblem contract and the reference solver: a bounded-variable
//! revised simplex with a dense basis inverse, Dantzig pricing and a Bland
//! fallback for anti-cycling. Deterministic by construction: no randomized
//! tie-breaking, fixed refactorization schedule.
//!
//! The backend is swappable behind [`solve`]'s contract, but every test in
//! this crate runs against this implementation.

use crate::formulation::Sense;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub n_cols: usize,
    /// Structural columns, sparse over rows.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub row_sense: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub obj: Vec<f64>,
}

impl LpProblem {
    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Build from row-oriented data.
    pub fn from_rows(
        n_cols: usize,
        rows: &[(Vec<(usize, f64)>, Sense, f64)],
        lb: Vec<f64>,
        ub: Vec<f64>,
        obj: Vec<f64>,
    ) -> Self {
        let mut cols = vec![Vec::new(); n_cols];
        let mut row_sense = Vec::with_capacity(rows.len());
        let mut rhs = Vec::with_capacity(rows.len());
        for (i, (coeffs, sense, b)) in rows.iter().enumerate() {
            for &(j, c) in coeffs {
                cols[j].push((i, c));
            }
            row_sense.push(*sense);
            rhs.push(*b);
        }
        Self {
            n_cols,
            cols,
            row_sense,
            rhs,
            lb,
            ub,
            obj,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (logicals stripped).
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Basis snapshot for warm starts across related solves.
#[derive(Debug, Clone)]
pub struct LpBasis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

pub fn solve(lp: &LpProblem, opts: &LpOptions) -> LpSolution {
    solve_warm(lp, opts, None).0
}

pub fn solve_warm(
    lp: &LpProblem,
    opts: &LpOptions,
    warm: Option<&LpBasis>,
) -> (LpSolution, LpBasis) {
    let mut s = Simplex::new(lp, opts, warm);
    let status = s.run();
    let x = s.x[..lp.n_cols].to_vec();
    let objective = lp
        .obj
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    (
        LpSolution {
            status,
            x,
            objective,
            iterations: s.iterations,
        },
        LpBasis {
            basic: s.basic.clone(),
            at_upper: s.at_upper.clone(),
        },
    )
}

const REFACTOR_EVERY: usize = 120;
const BLAND_AFTER: usize = 60;
const BIG: f64 = 1e30;

struct Simplex<'a> {
    lp: &'a LpProblem,
    tol: f64,
    /// Pricing tolerance, relative to the objective magnitude; reduced
    /// costs below it are treated as zero to avoid degenerate churn.
    price_tol: f64,
    max_iter: usize,
    m: usize,
    n_total: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    obj: Vec<f64>,
    /// Basic variable per row.
    basic: Vec<usize>,
    /// Row of a basic variable, or usize::MAX when nonbasic.
    basic_row: Vec<usize>,
    at_upper: Vec<bool>,
    /// Dense inverse of the basis matrix, row major.
    binv: Vec<f64>,
    x: Vec<f64>,
    iterations: usize,
    pivots_since_refactor: usize,
    degenerate_streak: usize,
    /// Whether the inverse was rebuilt since the last pivot. Termination is
    /// only declared from a freshly factorized state, so accumulated update
    /// error can never produce a wrong status.
    fresh: bool,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LpProblem, opts: &LpOptions, warm: Option<&LpBasis>) -> Self {
        let m = lp.n_rows();
        let n_total = lp.n_cols + m;
        let mut lb = lp.lb.clone();
        let mut ub = lp.ub.clone();
        let mut obj = lp.obj.clone();
        for sense in &lp.row_sense {
            lb.push(0.0);
            ub.push(match sense {
                Sense::Le => BIG,
                Sense::Eq => 0.0,
            });
            obj.push(0.0);
        }
        for j in 0..n_total {
            if lb[j] < -BIG {
                lb[j] = -BIG;
            }
            if ub[j] > BIG {
                ub[j] = BIG;
            }
        }

        let c_inf = obj.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut s = Self {
            lp,
            tol: opts.tol,
            price_tol: opts.tol * (1.0 + c_inf),
            max_iter: opts.max_iter,
            m,
            n_total,
            lb,
            ub,
            obj,
            basic: Vec::new(),
            basic_row: vec![usize::MAX; n_total],
            at_upper: vec![false; n_total],
            binv: Vec::new(),
            x: vec![0.0; n_total],
            iterations: 0,
            pivots_since_refactor: 0,
            degenerate_streak: 0,
            fresh: true,
        };

        let mut warmed = false;
        if let Some(basis) = warm {
            if basis.basic.len() == m
                && basis.at_upper.len() == n_total
                && basis.basic.iter().all(|&j| j < n_total)
            {
                s.basic = basis.basic.clone();
                s.at_upper = basis.at_upper.clone();
                for (r, &j) in s.basic.iter().enumerate() {
                    s.basic_row[j] = r;
                }
                if s.refactor() {
                    warmed = true;
                } else {
                    s.basic_row = vec![usize::MAX; n_total];
                    s.at_upper = vec![false; n_total];
                }
            }
        }
        if !warmed {
            // Logical basis: identity inverse, structurals at a bound.
            s.basic = (lp.n_cols..n_total).collect();
            for (r, &j) in s.basic.iter().enumerate() {
                s.basic_row[j] = r;
            }
            s.binv = identity(m);
            for j in 0..lp.n_cols {
                s.at_upper[j] = s.lb[j] <= -BIG && s.ub[j] < BIG;
            }
        }
        s.set_nonbasic_values();
        s.recompute_basics();
        s
    }

    #[inline]
    fn is_free(&self, j: usize) -> bool {
        self.lb[j] <= -BIG && self.ub[j] >= BIG
    }

    fn set_nonbasic_values(&mut self) {
        for j in 0..self.n_total {
            if self.basic_row[j] == usize::MAX {
                // Free variables rest at zero; they enter in either
                // direction and, having no bounds, never leave the basis.
                self.x[j] = if self.is_free(j) {
                    0.0
                } else if self.at_upper[j] {
                    self.ub[j]
                } else {
                    self.lb[j]
                };
            }
        }
    }

    /// Column j of the augmented matrix applied to a visitor.
    #[inline]
    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.lp.n_cols {
            for &(i, c) in &self.lp.cols[j] {
                f(i, c);
            }
        } else {
            f(j - self.lp.n_cols, 1.0);
        }
    }

    /// alpha = binv * A_j.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        self.for_col(j, |row, c| {
            let brow = row;
            for i in 0..m {
                alpha[i] += self.binv[i * m + brow] * c;
            }
        });
        alpha
    }

    /// x_B = binv (b - N x_N).
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut r = self.lp.rhs.clone();
        for j in 0..self.n_total {
            if self.basic_row[j] != usize::MAX {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_col(j, |row, c| r[row] -= c * xj);
            }
        }
        for i in 0..m {
            let mut v = 0.0;
            for k in 0..m {
                v += self.binv[i * m + k] * r[k];
            }
            self.x[self.basic[i]] = v;
        }
    }

    /// Rebuild the dense inverse from the current basis columns. Returns
    /// false when the basis matrix is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        // Gauss-Jordan with partial pivoting on [B | I].
        let mut a = vec![0.0; m * m];
        for (col, &j) in self.basic.iter().enumerate() {
            self.for_col(j, |row, c| a[row * m + col] += c);
        }
        let mut inv = identity(m);
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * m + col].abs();
            for r in (col + 1)..m {
                let v = a[r * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return false;
            }
            if piv_row != col {
                for k in 0..m {
                    a.swap(col * m + k, piv_row * m + k);
                    inv.swap(col * m + k, piv_row * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[col * m + k];
                    inv[r * m + k] -= f * inv[col * m + k];
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.fresh = true;
        true
    }

    /// Rebuild the inverse and all values from scratch.
    fn refresh(&mut self) {
        if !self.refactor() {
            // Singular basis can only arise from a degenerate numerical
            // pivot; restart from the logical basis.
            self.basic = (self.lp.n_cols..self.n_total).collect();
            self.basic_row = vec![usize::MAX; self.n_total];
            for (row, &bj) in self.basic.iter().enumerate() {
                self.basic_row[bj] = row;
            }
            self.binv = identity(self.m);
            self.fresh = true;
        }
        self.set_nonbasic_values();
        self.recompute_basics();
    }

    fn run(&mut self) -> LpStatus {
        match self.phase1() {
            Some(status) => return status,
            None => {}
        }
        self.phase2()
    }

    /// Drive basic variables inside their bounds by minimizing the total
    /// bound violation. Returns Some(status) on failure.
    fn phase1(&mut self) -> Option<LpStatus> {
        loop {
            if self.iterations >= self.max_iter {
                return Some(LpStatus::IterLimit);
            }
            let infeas = self.infeasibility();
            if infeas <= self.tol * (1.0 + self.m as f64) {
                if !self.fresh {
                    self.refresh();
                    continue;
                }
                return None;
            }
            // Gradient of the violation over basic values.
            let mut grad = vec![0.0; self.m];
            for i in 0..self.m {
                let j = self.basic[i];
                if self.x[j] < self.lb[j] - self.tol {
                    grad[i] = -1.0;
                } else if self.x[j] > self.ub[j] + self.tol {
                    grad[i] = 1.0;
                }
            }
            let mut y = vec![0.0; self.m];
            for i in 0..self.m {
                if grad[i] == 0.0 {
                    continue;
                }
                let gi = grad[i];
                for k in 0..self.m {
                    y[k] += gi * self.binv[i * self.m + k];
                }
            }
            let bland = self.degenerate_streak > BLAND_AFTER;
            let mut entering: Option<(usize, f64, f64)> = None; // (j, rate, dir)
            for j in 0..self.n_total {
                if self.basic_row[j] != usize::MAX || self.lb[j] == self.ub[j] {
                    continue;
                }
                let mut yaj = 0.0;
                self.for_col(j, |row, c| yaj += y[row] * c);
                // dF/dx_j = -y' A_j
                let rate = -yaj;
                let (improving, dir) = if self.is_free(j) {
                    (rate.abs() > self.tol, -rate.signum())
                } else if self.at_upper[j] {
                    (rate > self.tol, -1.0)
                } else {
                    (rate < -self.tol, 1.0)
                };
                if improving {
                    let score = rate.abs();
                    match &entering {
                        _ if bland => {
                            entering = Some((j, score, dir));
                            break;
                        }
                        Some((_, best, _)) if score <= *best => {}
                        _ => entering = Some((j, score, dir)),
                    }
                }
            }
            let Some((j, _, dir)) = entering else {
                if !self.fresh {
                    self.refresh();
                    continue;
                }
                return Some(LpStatus::Infeasible);
            };
            self.step(j, dir, true);
            self.iterations += 1;
        }
    }

    fn phase2(&mut self) -> LpStatus {
        loop {
            if self.iterations >= self.max_iter {
                return LpStatus::IterLimit;
            }
            // y = c_B binv
            let mut y = vec![0.0; self.m];
            for i in 0..self.m {
                let cb = self.obj[self.basic[i]];
                if cb == 0.0 {
                    continue;
                }
                for k in 0..self.m {
                    y[k] += cb * self.binv[i * self.m + k];
                }
            }
            let bland = self.degenerate_streak > BLAND_AFTER;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n_total {
                if self.basic_row[j] != usize::MAX || self.lb[j] == self.ub[j] {
                    continue;
                }
                let mut yaj = 0.0;
                self.for_col(j, |row, c| yaj += y[row] * c);
                let r = self.obj[j] - yaj;
                let (improving, dir) = if self.is_free(j) {
                    (r.abs() > self.price_tol, -r.signum())
                } else if self.at_upper[j] {
                    (r > self.price_tol, -1.0)
                } else {
                    (r < -self.price_tol, 1.0)
                };
                if improving {
                    let score = r.abs();
                    match &entering {
                        _ if bland => {
                            entering = Some((j, score, dir));
                            break;
                        }
                        Some((_, best, _)) if score <= *best => {}
                        _ => entering = Some((j, score, dir)),
                    }
                }
            }
            let Some((j, _, dir)) = entering else {
                if !self.fresh {
                    self.refresh();
                    continue;
                }
                return LpStatus::Optimal;
            };
            if let StepOutcome::Unbounded = self.step(j, dir, false) {
                if !self.fresh {
                    self.refresh();
                    continue;
                }
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
        }
    }

    fn infeasibility(&self) -> f64 {
        let mut s = 0.0;
        for &j in &self.basic {
            s += (self.lb[j] - self.x[j]).max(0.0) + (self.x[j] - self.ub[j]).max(0.0);
        }
        s
    }

    /// Move entering variable j in direction dir, pivot or flip its bound.
    fn step(&mut self, j: usize, dir: f64, phase1: bool) -> StepOutcome {
        let alpha = self.ftran(j);
        let flip_range = self.ub[j] - self.lb[j];
        let mut limit = flip_range;
        let mut leave: Option<(usize, f64)> = None; // (row, bound the leaver lands on)

        if phase1 {
            // First-breakpoint rule: stop where a basic variable meets a
            // bound it must not cross, or where a violated one turns
            // feasible (the gradient changes there).
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() < 1e-9 {
                    continue;
                }
                let bj = self.basic[i];
                let rate = -dir * a;
                let xb = self.x[bj];
                let (lo, hi) = (self.lb[bj], self.ub[bj]);
                let mut cand: Option<(f64, f64)> = None; // (step, landing)
                if rate > 0.0 {
                    if xb < lo - self.tol {
                        cand = Some(((lo - xb) / rate, lo));
                    } else if hi < BIG {
                        cand = Some(((hi - xb).max(0.0) / rate, hi));
                    }
                } else {
                    let rate = -rate;
                    if xb > hi + self.tol {
                        cand = Some(((xb - hi) / rate, hi));
                    } else if lo > -BIG {
                        cand = Some(((xb - lo).max(0.0) / rate, lo));
                    }
                }
                if let Some((step, landing)) = cand {
                    if step < limit - 1e-12 {
                        limit = step;
                        leave = Some((i, landing));
                    } else if (step - limit).abs() <= 1e-12 {
                        if let Some((cur, _)) = leave {
                            if a.abs() > alpha[cur].abs() {
                                leave = Some((i, landing));
                            }
                        } else {
                            leave = Some((i, landing));
                        }
                    }
                }
            }
        } else {
            // Harris two-pass ratio test: a small feasibility slack in the
            // first pass widens the candidate set, the second pass picks the
            // largest pivot among it. Degenerate and unstable pivots become
            // far rarer than with the textbook minimum-ratio rule.
            const FEASTOL: f64 = 1e-7;
            let mut theta_max = flip_range;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() < 1e-9 {
                    continue;
                }
                let bj = self.basic[i];
                let rate = -dir * a;
                let room = if rate > 0.0 {
                    if self.ub[bj] >= BIG {
                        continue;
                    }
                    self.ub[bj] - self.x[bj]
                } else {
                    if self.lb[bj] <= -BIG {
                        continue;
                    }
                    self.x[bj] - self.lb[bj]
                };
                let t = (room.max(0.0) + FEASTOL) / rate.abs();
                if t < theta_max {
                    theta_max = t;
                }
            }
            let mut best_pivot = 0.0f64;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() < 1e-9 {
                    continue;
                }
                let bj = self.basic[i];
                let rate = -dir * a;
                let (room, landing) = if rate > 0.0 {
                    if self.ub[bj] >= BIG {
                        continue;
                    }
                    ((self.ub[bj] - self.x[bj]).max(0.0), self.ub[bj])
                } else {
                    if self.lb[bj] <= -BIG {
                        continue;
                    }
                    ((self.x[bj] - self.lb[bj]).max(0.0), self.lb[bj])
                };
                let ratio = room / rate.abs();
                if ratio <= theta_max && a.abs() > best_pivot {
                    best_pivot = a.abs();
                    limit = ratio;
                    leave = Some((i, landing));
                }
            }
            if leave.is_some() && limit > flip_range {
                // The loosened pass admitted a ratio beyond the entering
                // variable's own range; flipping is the true minimum.
                leave = None;
                limit = flip_range;
            }
        }

        if limit >= BIG {
            return StepOutcome::Unbounded;
        }
        self.degenerate_streak = if limit <= 1e-12 {
            self.degenerate_streak + 1
        } else {
            0
        };

        let delta = dir * limit;
        match leave {
            None => {
                // Bound flip: entering variable crosses to its other bound.
                self.x[j] += delta;
                for (i, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let bj = self.basic[i];
                        self.x[bj] -= a * delta;
                    }
                }
                self.at_upper[j] = dir > 0.0;
                self.fresh = false;
                StepOutcome::BoundFlip
            }
            Some((r, landing)) => {
                let pivot = alpha[r];
                // Update values.
                self.x[j] += delta;
                for (i, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let bj = self.basic[i];
                        self.x[bj] -= a * delta;
                    }
                }
                let leaver = self.basic[r];
                self.x[leaver] = landing;
                self.at_upper[leaver] = landing == self.ub[leaver] && self.lb[leaver] != self.ub[leaver];
                self.basic_row[leaver] = usize::MAX;
                self.basic[r] = j;
                self.basic_row[j] = r;
                // Eta update of the inverse: row r scaled, others eliminated.
                let m = self.m;
                let inv_p = 1.0 / pivot;
                for k in 0..m {
                    self.binv[r * m + k] *= inv_p;
                }
                for i in 0..m {
                    if i == r {
                        continue;
                    }
                    let f = alpha[i];
                    if f == 0.0 {
                        continue;
                    }
                    for k in 0..m {
                        self.binv[i * m + k] -= f * self.binv[r * m + k];
                    }
                }
                self.pivots_since_refactor += 1;
                self.fresh = false;
                if self.pivots_since_refactor >= REFACTOR_EVERY || pivot.abs() < 1e-7 {
                    self.refresh();
                }
                StepOutcome::Pivot
            }
        }
    }
}

enum StepOutcome {
    Pivot,
    BoundFlip,
    Unbounded,
}

fn identity(m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
    out
}

/// Maximum primal residual of a candidate solution (bounds and rows),
/// scaled by the magnitude of the row activity.
pub fn primal_residual(lp: &LpProblem, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..lp.n_cols {
        worst = worst.max(lp.lb[j] - x[j]).max(x[j] - lp.ub[j]);
    }
    let mut act = vec![0.0; lp.n_rows()];
    let mut scale = vec![1.0f64; lp.n_rows()];
    for (j, col) in lp.cols.iter().enumerate() {
        for &(i, c) in col {
            act[i] += c * x[j];
            scale[i] = scale[i].max((c * x[j]).abs());
        }
    }
    for i in 0..lp.n_rows() {
        let r = match lp.row_sense[i] {
            Sense::Le => act[i] - lp.rhs[i],
            Sense::Eq => (act[i] - lp.rhs[i]).abs(),
        };
        worst = worst.max(r / scale[i]);
    }
    worst
}

/// Serialize a problem in the CPLEX LP text format (minimize sense,
/// columns named x0..xN, rows c0..cM). Line-exact for snapshot tests.
pub fn write_lp(lp: &LpProblem) -> String {
    use std::fmt::Write;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_rows()];
    for (j, col) in lp.cols.iter().enumerate() {
        for &(i, c) in col {
            rows[i].push((j, c));
        }
    }
    let term = |out: &mut String, first: &mut bool, c: f64, j: usize| {
        if c == 0.0 {
            return;
        }
        if *first {
            if c < 0.0 {
                out.push_str("- ");
            }
            *first = false;
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        let a = c.abs();
        if a == 1.0 {
            write!(out, "x{j}").unwrap();
        } else {
            write!(out, "{a} x{j}").unwrap();
        }
    };
    let mut out = String::from("Minimize\n obj:");
    let mut first = true;
    let mut line = String::new();
    for (j, &c) in lp.obj.iter().enumerate() {
        term(&mut line, &mut first, c, j);
    }
    if line.is_empty() {
        line.push('0');
    }
    out.push(' ');
    out.push_str(&line);
    out.push_str("\nSubject To\n");
    for (i, row) in rows.iter().enumerate() {
        let mut line = String::new();
        let mut first = true;
        for &(j, c) in row {
            term(&mut line, &mut first, c, j);
        }
        if line.is_empty() {
            line.push('0');
        }
        let op = match lp.row_sense[i] {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        writeln!(out, " c{i}: {line} {op} {}", lp.rhs[i]).unwrap();
    }
    out.push_str("Bounds\n");
    for j in 0..lp.n_cols {
        let (lo, hi) = (lp.lb[j], lp.ub[j]);
        if lo <= -BIG && hi >= BIG {
            writeln!(out, " x{j} free").unwrap();
        } else if lo <= -BIG {
            writeln!(out, " x{j} <= {hi}").unwrap();
        } else if hi >= BIG {
            writeln!(out, " x{j} >= {lo}").unwrap();
        } else if lo == hi {
            writeln!(out, " x{j} = {lo}").unwrap();
        } else {
            writeln!(out, " {lo} <= x{j} <= {hi}").unwrap();
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(
        n: usize,
        rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
        lb: Vec<f64>,
        ub: Vec<f64>,
        obj: Vec<f64>,
    ) -> LpProblem {
        LpProblem::from_rows(n, &rows, lb, ub, obj)
    }

    #[test]
    fn min_x_above_three() {
        let lp = simple(1, vec![], vec![3.0], vec![f64::INFINITY], vec![1.0]);
        let sol = solve(&lp, &LpOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        // min 0 s.t. x <= 1, x >= 2 (second row as -x <= -2).
        let lp = simple(
            1,
            vec![
                (vec![(0, 1.0)], Sense::Le, 1.0),
                (vec![(0, -1.0)], Sense::Le, -2.0),
            ],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
            vec![0.0],
        );
        assert_eq!(solve(&lp, &LpOptions::default()).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let lp = simple(
            1,
            vec![(vec![(0, -1.0)], Sense::Le, 0.0)],
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
            vec![-1.0],
        );
        assert_eq!(solve(&lp, &LpOptions::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_row_with_bounds() {
        // min x + y s.t. x + y = 2, 0 <= x <= 1, 0 <= y <= 3
        let lp = simple(
            2,
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0)],
            vec![0.0, 0.0],
            vec![1.0, 3.0],
            vec![1.0, 2.0],
        );
        let sol = solve(&lp, &LpOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn negative_bounds_and_upper_start() {
        // min -x - 2y s.t. x + y <= 1, vars in [-1, 1].
        let lp = simple(
            2,
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0)],
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
            vec![-1.0, -2.0],
        );
        // Optimum at (0, 1): the row caps x + y while y carries more weight.
        let sol = solve(&lp, &LpOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 2.0).abs() < 1e-9, "{:?}", sol);
    }

    #[test]
    fn determinism_bit_identical() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 12;
        let m = 8;
        let mut rows = Vec::new();
        for _ in 0..m {
            let mut coeffs = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.6) {
                    coeffs.push((j, rng.gen_range(-2.0..2.0)));
                }
            }
            rows.push((coeffs, Sense::Le, rng.gen_range(0.5..4.0)));
        }
        let lb = vec![0.0; n];
        let ub = vec![2.0; n];
        let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lp = simple(n, rows, lb, ub, obj);
        let a = solve(&lp, &LpOptions::default());
        let b = solve(&lp, &LpOptions::default());
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn optimal_solutions_satisfy_rows() {
        use rand::{Rng, SeedableRng};
        for seed in 0..30 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..15);
            let m = rng.gen_range(1..10);
            let mut rows = Vec::new();
            for _ in 0..m {
                let mut coeffs = Vec::new();
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        coeffs.push((j, rng.gen_range(-3.0..3.0)));
                    }
                }
                let sense = if rng.gen_bool(0.25) { Sense::Eq } else { Sense::Le };
                rows.push((coeffs, sense, rng.gen_range(-1.0..3.0)));
            }
            let lb = vec![0.0; n];
            let ub: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
            let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lp = simple(n, rows, lb, ub, obj);
            let sol = solve(&lp, &LpOptions::default());
            if sol.status == LpStatus::Optimal {
                assert!(
                    primal_residual(&lp, &sol.x) <= 1e-8,
                    "seed {seed}: residual {}",
                    primal_residual(&lp, &sol.x)
                );
            }
        }
    }

    #[test]
    fn lp_export_snapshot() {
        let lp = simple(
            2,
            vec![
                (vec![(0, 1.0), (1, -2.5)], Sense::Le, 4.0),
                (vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0),
            ],
            vec![0.0, f64::NEG_INFINITY],
            vec![10.0, f64::INFINITY],
            vec![1.0, -1.0],
        );
        let text = write_lp(&lp);
        let expect = "Minimize\n obj: x0 - x1\nSubject To\n c0: x0 - 2.5 x1 <= 4\n c1: x0 + x1 = 1\nBounds\n 0 <= x0 <= 10\n x1 free\nEnd\n";
        assert_eq!(text, expect);
    }
}
