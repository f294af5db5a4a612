//! Penalized sequential linear programming with a trust region, for the
//! non-convex NLP variants (relaxed commitment, fixed-commitment dispatch,
//! and the feasibility-pump subproblems).
//!
//! Each iteration linearizes the AC rows at the current point, attaches
//! penalized nonnegative slacks to them (split pairs on the balance
//! equalities), boxes the step with a per-class trust region and solves the
//! LP. The ratio of actual to predicted reduction of the exact L1 merit
//! drives acceptance and the trust-radius update.

use crate::acpf::{self, AcLinearization};
use crate::case::PowerCase;
use crate::formulation::{build_skeleton, LinearModel, Sense, Variant};
use crate::lp::{self, LpBasis, LpOptions, LpProblem, LpStatus};
use crate::network::NetworkMatrices;
use crate::point::{DecisionPoint, VariableLayout};
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct PslpParams {
    /// Stop when an accepted step is shorter than this in infinity norm.
    pub eps_stop: f64,
    /// Slack penalty weight in the merit and the LP objective.
    pub mu: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Trust-region shrink factor.
    pub beta: f64,
    pub delta_lb: f64,
    /// Initial trust radius, as a fraction of each variable's natural range.
    pub delta0: f64,
    /// Trust-region growth factor on very successful steps.
    pub expand: f64,
    pub max_iter: usize,
}

impl Default for PslpParams {
    fn default() -> Self {
        Self {
            eps_stop: 1e-4,
            mu: 5e6,
            rho0: 1e-6,
            rho1: 0.25,
            rho2: 0.75,
            beta: 0.5,
            delta_lb: 1e-6,
            delta0: 0.2,
            expand: 2.0,
            max_iter: 300,
        }
    }
}

impl PslpParams {
    pub fn with_penalty(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PslpResult {
    #[serde(skip)]
    pub point: DecisionPoint,
    /// Outer iterations (one LP solve each, not counting retries).
    pub iterations: usize,
    pub accepted_steps: usize,
    pub ac_violation: f64,
    pub converged: bool,
    /// Exact merit after the initial point and every accepted step.
    pub merit_history: Vec<f64>,
    pub wall_time: f64,
}

/// One of the problem variants bound to a case and its network matrices.
pub struct NlpInstance<'a> {
    pub case: &'a PowerCase,
    pub net: &'a NetworkMatrices,
    pub variant: Variant,
    pub model: LinearModel,
}

impl<'a> NlpInstance<'a> {
    pub fn new(case: &'a PowerCase, net: &'a NetworkMatrices, variant: Variant) -> Self {
        let model = build_skeleton(case, &variant);
        Self {
            case,
            net,
            variant,
            model,
        }
    }
}

/// Midpoint-voltage flat start. Commitment columns are seeded from the
/// initial statuses (or the fixed binaries), active power sits at the
/// minimum operating level of committed units, reactive power at zero.
pub fn flat_start(case: &PowerCase, variant: &Variant) -> DecisionPoint {
    let layout = VariableLayout::new(case);
    let mut point = DecisionPoint::zeros(layout);
    for (i, bus) in case.buses.iter().enumerate() {
        for t in 0..case.horizon {
            point.values[layout.v_mag(i, t)] = 0.5 * (bus.v_max + bus.v_min);
            point.values[layout.theta(i, t)] = if bus.is_reference { bus.theta0 } else { 0.0 };
        }
    }
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..case.horizon {
            let (u, v, w) = match variant {
                Variant::AcopfFixed { u, v, w } => {
                    (u[g][t] as f64, v[g][t] as f64, w[g][t] as f64)
                }
                _ => (unit.u0 as f64, 0.0, 0.0),
            };
            point.values[layout.u(g, t)] = u;
            point.values[layout.v(g, t)] = v;
            point.values[layout.w(g, t)] = w;
            point.values[layout.p_g(g, t)] = unit.p_min * u;
        }
    }
    point
}

/// Natural range of each column, used to scale the trust-region box so
/// per-unit, radian and commitment variables shrink together.
fn variable_scales(case: &PowerCase, layout: &VariableLayout) -> Vec<f64> {
    let mut scale = vec![1.0; layout.total];
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..case.horizon {
            scale[layout.p_g(g, t)] = unit.p_max;
            scale[layout.q_g(g, t)] = unit.q_max.abs().max(unit.q_min.abs()).max(0.1);
            scale[layout.p_res(g, t)] = (unit.p_max - unit.p_min).max(1e-6);
        }
    }
    for (c, sc) in case.condensers.iter().enumerate() {
        for t in 0..case.horizon {
            scale[layout.q_sc(c, t)] = sc.q_max.abs().max(sc.q_min.abs()).max(0.1);
        }
    }
    for (i, bus) in case.buses.iter().enumerate() {
        for t in 0..case.horizon {
            scale[layout.v_mag(i, t)] = bus.v_max - bus.v_min;
            scale[layout.theta(i, t)] = 1.0;
        }
    }
    scale
}

/// Second-order correction: re-solve the voltage/angle block against the
/// balance residuals of a trial point, hour by hour, using the Jacobian
/// from the base point. Counters the Maratos effect: a step that moves
/// injections correctly but leaves a quadratic voltage error would
/// otherwise be rejected by the L1 merit.
fn soc_correct(inst: &NlpInstance, trial: &DecisionPoint) -> DecisionPoint {
    let layout = trial.layout;
    let (nb, tf) = (layout.n_buses, layout.horizon);
    // A stale Jacobian overshoots across long steps; linearize at the trial.
    let lin = acpf::jacobian(trial, inst.case, inst.net);
    let state = acpf::AcState::from_point(trial);
    let (gen_p, gen_q) = acpf::bus_injections(inst.case, trial);
    let (p_bal, q_bal) = acpf::balance_residual(&state, &gen_p, &gen_q, inst.case, inst.net);

    // Unknowns per hour: every V plus every non-reference theta.
    let refbus = inst.case.reference_bus();
    let mut cols: Vec<usize> = Vec::with_capacity(2 * nb - 1);
    let mut corrected = trial.clone();
    for t in 0..tf {
        cols.clear();
        for i in 0..nb {
            cols.push(layout.v_mag(i, t));
        }
        for i in 0..nb {
            if i != refbus {
                cols.push(layout.theta(i, t));
            }
        }
        let n = cols.len();
        // Rows for this hour sit at (t * nb + i) * 2 offsets in the fixed
        // linearization order: p and q interleaved per bus. Near-binding
        // current rows join as keep-in-place targets so the correction
        // moves inside their null space instead of pushing lines over.
        let nl = inst.case.n_branches();
        let mut current_rows: Vec<(usize, f64)> = Vec::new();
        for side in 0..2 {
            for l in 0..nl {
                let row_idx = lin.n_balance + side * tf * nl + t * nl + l;
                let (cur, lim) = (lin.value[row_idx], lin.limit[row_idx]);
                if cur >= 0.95 * lim {
                    current_rows.push((row_idx, (lim - cur).min(0.0)));
                }
            }
        }
        let m = 2 * nb + current_rows.len();
        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        for i in 0..nb {
            for (k, bal_q) in [false, true].iter().enumerate() {
                let row_idx = (t * nb + i) * 2 + k;
                let r = i * 2 + k;
                b[r] = if !*bal_q { -p_bal[i][t] } else { -q_bal[i][t] };
                for &(col, val) in &lin.rows[row_idx] {
                    if let Some(pos) = cols.iter().position(|&c| c == col) {
                        a[r * n + pos] = val;
                    }
                }
            }
        }
        for (extra, &(row_idx, target)) in current_rows.iter().enumerate() {
            let r = 2 * nb + extra;
            b[r] = target;
            for &(col, val) in &lin.rows[row_idx] {
                if let Some(pos) = cols.iter().position(|&c| c == col) {
                    a[r * n + pos] = val;
                }
            }
        }
        // Least squares via normal equations; the system is small and the
        // Jacobian well scaled after per-unit normalization.
        let mut ata = vec![0.0; n * n];
        let mut atb = vec![0.0; n];
        for r in 0..m {
            for i in 0..n {
                let ari = a[r * n + i];
                if ari == 0.0 {
                    continue;
                }
                atb[i] += ari * b[r];
                for j in 0..n {
                    ata[i * n + j] += ari * a[r * n + j];
                }
            }
        }
        for i in 0..n {
            ata[i * n + i] += 1e-10;
        }
        if let Some(d) = solve_dense(&mut ata, &mut atb, n) {
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let rmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 1e-4 {
                log::debug!("pslp soc hour {t}: |d|={dmax:.3e} |r|={rmax:.3e}");
            }
            for (pos, &col) in cols.iter().enumerate() {
                let lo = inst.model.lb[col];
                let hi = inst.model.ub[col];
                corrected.values[col] = (corrected.values[col] + d[pos]).clamp(lo, hi);
            }
        }
    }
    corrected
}

/// Gaussian elimination with partial pivoting; `a` is n-by-n row major.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i * n + i]).collect())
}

/// Exact L1 merit: objective plus mu times the total AC violation.
fn merit(inst: &NlpInstance, x: &DecisionPoint, mu: f64) -> (f64, f64) {
    let f = inst.model.cost.eval(&x.values);
    let state = acpf::AcState::from_point(x);
    let (gen_p, gen_q) = acpf::bus_injections(inst.case, x);
    let (p_bal, q_bal) = acpf::balance_residual(&state, &gen_p, &gen_q, inst.case, inst.net);
    let mut viol = 0.0;
    for row in p_bal.iter().chain(q_bal.iter()) {
        for v in row {
            viol += v.abs();
        }
    }
    for side in [acpf::Side::From, acpf::Side::To] {
        let cur = acpf::current_sq(&state, inst.net, side);
        for (l, row) in cur.iter().enumerate() {
            let lim = inst.case.branches[l].i_max.powi(2);
            for v in row {
                viol += (v - lim).max(0.0);
            }
        }
    }
    (f + mu * viol, viol)
}

/// Proximal cost on voltage/angle movement inside the subproblem. The AC
/// rows are linear in the injections but quadratic in voltage, so the LP
/// happily trades a first-order crumb of objective for voltage swings
/// whose second-order violation cost it cannot see. Charging voltage
/// moves roughly their expected curvature damage (penalty times radius),
/// capped well under the objective scale, prices that trade correctly:
/// moves backed by slack savings or real dispatch gains still pass.
const PROX_WEIGHT: f64 = 0.05;

struct LpLayout {
    n_struct: usize,
    n_balance: usize,
    n_current: usize,
    /// Column of the positive slack of balance row b (negative is +1).
    bal_slack: usize,
    cur_slack: usize,
    /// Start of the downward-deviation columns paired with the voltage and
    /// angle columns (which themselves hold the upward deviation).
    vtheta_minus: usize,
    /// Downward-deviation column for a structural column, if it has one.
    minus_of: Vec<Option<usize>>,
    n_cols: usize,
}

impl LpLayout {
    fn new(n_struct: usize, n_balance: usize, n_current: usize, vtheta: &[usize]) -> Self {
        let vtheta_minus = n_struct + 2 * n_balance + n_current;
        let mut minus_of = vec![None; n_struct];
        for (k, &j) in vtheta.iter().enumerate() {
            minus_of[j] = Some(vtheta_minus + k);
        }
        Self {
            n_struct,
            n_balance,
            n_current,
            bal_slack: n_struct,
            cur_slack: n_struct + 2 * n_balance,
            vtheta_minus,
            minus_of,
            n_cols: vtheta_minus + vtheta.len(),
        }
    }
}

pub fn solve_nlp(inst: &NlpInstance, init: &DecisionPoint, params: &PslpParams) -> PslpResult {
    let start = Instant::now();
    let layout = inst.model.layout;
    let scales = variable_scales(inst.case, &layout);
    let mut x = init.clone();
    for j in 0..layout.total {
        x.values[j] = x.values[j].clamp(inst.model.lb[j], inst.model.ub[j]);
    }

    // Fixed AC row order; current rows join the LP lazily once loaded.
    let probe = acpf::jacobian(&x, inst.case, inst.net);
    let n_balance = probe.n_balance;
    let n_current = probe.kinds.len() - n_balance;
    let mut vtheta: Vec<usize> = Vec::with_capacity(2 * layout.n_buses * layout.horizon);
    for i in 0..layout.n_buses {
        for t in 0..layout.horizon {
            vtheta.push(layout.v_mag(i, t));
            vtheta.push(layout.theta(i, t));
        }
    }
    let lpl = LpLayout::new(layout.total, n_balance, n_current, &vtheta);
    let mut included = vec![false; n_current];
    let mut inclusion_order: Vec<usize> = Vec::new();
    let mut include_near_binding = |lin: &AcLinearization,
                                    included: &mut Vec<bool>,
                                    order: &mut Vec<usize>| {
        let mut added = 0;
        for c in 0..n_current {
            let idx = n_balance + c;
            if !included[c] && lin.value[idx] > 0.5 * lin.limit[idx] {
                included[c] = true;
                order.push(c);
                added += 1;
            }
        }
        added
    };
    include_near_binding(&probe, &mut included, &mut inclusion_order);

    let (mut phi, mut viol) = merit(inst, &x, params.mu);
    let mut merit_history = vec![phi];
    let mut delta = params.delta0;
    let mut basis: Option<LpBasis> = None;
    let mut iterations = 0;
    let mut accepted_steps = 0;
    let mut converged = false;
    let mut stalled_accepts = 0;
    let lp_opts = LpOptions::default();

    while iterations < params.max_iter {
        iterations += 1;
        let lin = acpf::jacobian(&x, inst.case, inst.net);

        // Assemble the LP in absolute variables.
        let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> =
            Vec::with_capacity(inst.model.rows.len() + n_balance + inclusion_order.len());
        for r in &inst.model.rows {
            rows.push((r.coeffs.clone(), r.sense, r.rhs));
        }
        // Voltage and angle columns are expressed as deviation pairs around
        // the current point: the original column carries the upward move,
        // a trailing column the downward one, both with the proximal cost.
        let split = |row: &[(usize, f64)]| -> (Vec<(usize, f64)>, f64) {
            let mut coeffs = Vec::with_capacity(row.len() + 4);
            let mut jx_other = 0.0;
            for &(j, c) in row {
                match lpl.minus_of[j] {
                    Some(minus) => {
                        coeffs.push((j, c));
                        coeffs.push((minus, -c));
                    }
                    None => {
                        coeffs.push((j, c));
                        jx_other += c * x.values[j];
                    }
                }
            }
            (coeffs, jx_other)
        };
        for b in 0..n_balance {
            let (mut coeffs, jx_other) = split(&lin.rows[b]);
            coeffs.push((lpl.bal_slack + 2 * b, 1.0));
            coeffs.push((lpl.bal_slack + 2 * b + 1, -1.0));
            rows.push((coeffs, Sense::Eq, jx_other - lin.value[b]));
        }
        for &c in &inclusion_order {
            let idx = n_balance + c;
            let (mut coeffs, jx_other) = split(&lin.rows[idx]);
            coeffs.push((lpl.cur_slack + c, -1.0));
            rows.push((coeffs, Sense::Le, lin.limit[idx] - lin.value[idx] + jx_other));
        }

        let mut obj = vec![0.0; lpl.n_cols];
        let grad = inst.model.cost.gradient(&x.values);
        obj[..layout.total].copy_from_slice(&grad);
        for s in layout.total..lpl.vtheta_minus {
            obj[s] = params.mu;
        }

        let mut lb = vec![0.0; lpl.n_cols];
        let mut ub = vec![f64::INFINITY; lpl.n_cols];
        for j in 0..layout.total {
            let r = delta * scales[j];
            if let Some(minus) = lpl.minus_of[j] {
                let up = (inst.model.ub[j].min(x.values[j] + r) - x.values[j]).max(0.0);
                let down = (x.values[j] - inst.model.lb[j].max(x.values[j] - r)).max(0.0);
                lb[j] = 0.0;
                ub[j] = up;
                lb[minus] = 0.0;
                ub[minus] = down;
                obj[j] = grad[j] + PROX_WEIGHT;
                obj[minus] = -grad[j] + PROX_WEIGHT;
                continue;
            }
            lb[j] = inst.model.lb[j].max(x.values[j] - r);
            ub[j] = inst.model.ub[j].min(x.values[j] + r);
            if lb[j] > ub[j] {
                let pin = x.values[j].clamp(inst.model.lb[j], inst.model.ub[j]);
                lb[j] = pin;
                ub[j] = pin;
            }
        }
        for c in 0..n_current {
            if !included[c] {
                ub[lpl.cur_slack + c] = 0.0;
            }
        }

        let lp = LpProblem::from_rows(lpl.n_cols, &rows, lb, ub, obj);
        let (sol, new_basis) = lp::solve_warm(&lp, &lp_opts, basis.as_ref());
        match sol.status {
            LpStatus::Optimal => basis = Some(new_basis),
            LpStatus::Infeasible if iterations == 1 && delta < 2.0 => {
                // A flat start can sit outside the ramp polytope; widen the
                // box until the first step can reach it.
                delta = (delta * params.expand).min(2.0);
                iterations -= 1;
                continue;
            }
            status => {
                log::warn!("pslp: subproblem returned {status:?} at iteration {iterations}");
                break;
            }
        }

        let mut trial = x.clone();
        for j in 0..layout.total {
            trial.values[j] = match lpl.minus_of[j] {
                Some(minus) => x.values[j] + sol.x[j] - sol.x[minus],
                None => sol.x[j],
            };
        }
        // Model merit at the LP solution: linearized cost + slack total.
        let lin_cost: f64 = grad
            .iter()
            .zip(&trial.values)
            .zip(&x.values)
            .map(|((g, t), xk)| g * (t - xk))
            .sum();
        let slack_total: f64 = sol.x[layout.total..lpl.vtheta_minus].iter().sum();
        let predicted = phi - (inst.model.cost.eval(&x.values) + lin_cost + params.mu * slack_total);
        let (mut phi_trial, mut viol_trial) = merit(inst, &trial, params.mu);

        if predicted <= 1e-9 * (1.0 + phi.abs()) {
            // The model sees no further improvement.
            let step_norm = x
                .values
                .iter()
                .zip(&trial.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if step_norm <= params.eps_stop || viol <= 1e-6 {
                converged = true;
                break;
            }
            delta *= params.beta;
            if delta <= params.delta_lb {
                break;
            }
            continue;
        }

        let mut ratio = (phi - phi_trial) / predicted;
        if ratio < params.rho0 {
            // The injections may have moved correctly while the voltage
            // profile lags a quadratic term behind; correct and re-judge.
            let corrected = soc_correct(inst, &trial);
            let (phi_c, viol_c) = merit(inst, &corrected, params.mu);
            log::debug!(
                "pslp soc: viol {viol_trial:.3e} -> {viol_c:.3e}, phi {phi_trial:.8e} -> {phi_c:.8e} (base {phi:.8e}, pred {predicted:.3e})"
            );
            if phi_c < phi_trial {
                trial = corrected;
                phi_trial = phi_c;
                viol_trial = viol_c;
                ratio = (phi - phi_trial) / predicted;
            }
        }
        let actual = phi - phi_trial;
        let step_norm = x
            .values
            .iter()
            .zip(&trial.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        // Whether the step pressed against the trust region (scaled).
        let boundary = (0..layout.total)
            .filter(|&j| scales[j] > 0.0)
            .map(|j| (trial.values[j] - x.values[j]).abs() / (delta * scales[j]))
            .fold(0.0f64, f64::max)
            >= 0.999;
        log::debug!(
            "pslp iter {iterations}: delta={delta:.3e} ratio={ratio:.3} merit={phi:.6e} viol={viol:.3e} step={step_norm:.3e}"
        );
        if log::log_enabled!(log::Level::Trace) {
            let l = layout;
            let sum_block = |idx: &dyn Fn(usize, usize) -> usize, n: usize| -> f64 {
                let mut s = 0.0;
                for a in 0..n {
                    for t in 0..l.horizon {
                        let j = idx(a, t);
                        s += (trial.values[j] - x.values[j]).abs();
                    }
                }
                s
            };
            log::trace!(
                "pslp blocks: u={:.2e} p={:.2e} q={:.2e} v={:.2e} th={:.2e} | viol_trial={viol_trial:.3e} pred={predicted:.3e} slk={slack_total:.3e}",
                sum_block(&|g, t| l.u(g, t), l.n_thermal),
                sum_block(&|g, t| l.p_g(g, t), l.n_thermal),
                sum_block(&|g, t| l.q_g(g, t), l.n_thermal),
                sum_block(&|i, t| l.v_mag(i, t), l.n_buses),
                sum_block(&|i, t| l.theta(i, t), l.n_buses),
            );
        }
        if ratio >= params.rho0 {
            x = trial;
            phi = phi_trial;
            viol = viol_trial;
            merit_history.push(phi);
            accepted_steps += 1;
            let lin_now = acpf::jacobian(&x, inst.case, inst.net);
            include_near_binding(&lin_now, &mut included, &mut inclusion_order);
            if step_norm <= params.eps_stop {
                converged = true;
                break;
            }
            // Wandering across a near-degenerate face: successive accepted
            // steps that change the merit by nothing are convergence too.
            if actual <= 1e-9 * (1.0 + phi.abs()) {
                stalled_accepts += 1;
                if stalled_accepts >= 3 {
                    converged = true;
                    break;
                }
            } else {
                stalled_accepts = 0;
            }
        }
        if ratio < params.rho1 {
            delta *= params.beta;
        } else if ratio > params.rho2 || (ratio >= params.rho1 && boundary) {
            // A boundary-limited acceptable step means the region, not the
            // model, is what binds; grow it back or the radius stays
            // frozen wherever an earlier rejection left it.
            delta = (delta * params.expand).min(2.0);
        }
        if delta <= params.delta_lb {
            break;
        }
    }

    let ac_violation = acpf::ac_violation(&x, inst.case, inst.net);
    let converged = converged && ac_violation <= 1e-6;
    PslpResult {
        point: x,
        iterations,
        accepted_steps,
        ac_violation,
        converged,
        merit_history,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::assemble;
    use crate::testcases::{tiny_uc_case, two_bus_single_period};
    use num_complex::Complex64;

    #[test]
    fn flat_start_midpoint_voltage() {
        let case = two_bus_single_period();
        let point = flat_start(&case, &Variant::RucAcopf);
        assert_eq!(point.v_mag(0, 0), 1.0);
        assert_eq!(point.v_mag(1, 0), 1.0);
        assert_eq!(point.p_g(0, 0), case.thermal_units[0].p_min);
    }

    #[test]
    fn flat_start_fixed_binaries() {
        let case = tiny_uc_case();
        let tf = case.horizon;
        let on = Variant::AcopfFixed {
            u: vec![vec![1; tf]],
            v: vec![vec![0; tf]],
            w: vec![vec![0; tf]],
        };
        let p = flat_start(&case, &on);
        for t in 0..tf {
            assert_eq!(p.p_g(0, t), case.thermal_units[0].p_min);
            assert_eq!(p.q_g(0, t), 0.0);
        }
        let off = Variant::AcopfFixed {
            u: vec![vec![0; tf]],
            v: vec![vec![0; tf]],
            w: vec![vec![0; tf]],
        };
        let p = flat_start(&case, &off);
        for t in 0..tf {
            assert_eq!(p.p_g(0, t), 0.0);
            assert_eq!(p.p_res(0, t), 0.0);
        }
    }

    /// Newton power flow on the two-bus case, independent of the production
    /// path: complex matrix form with finite-difference Jacobian.
    fn newton_pf(case: &PowerCase, v1: f64) -> Option<(f64, f64, f64, f64)> {
        let net = assemble(case).unwrap();
        let (pd, qd) = case.demand.at_bus(2, 0);
        let resid = |v2: f64, th2: f64| -> (f64, f64) {
            let vc = [
                Complex64::from_polar(v1, 0.0),
                Complex64::from_polar(v2, th2),
            ];
            let s2: Complex64 = vc[1]
                * ((0..2)
                    .map(|k| net.y_bus.get(1, k) * vc[k])
                    .sum::<Complex64>())
                .conj();
            (-pd - s2.re, -qd - s2.im)
        };
        let (mut v2, mut th2) = (v1, 0.0);
        for _ in 0..50 {
            let (rp, rq) = resid(v2, th2);
            if rp.abs().max(rq.abs()) < 1e-13 {
                let vc = [
                    Complex64::from_polar(v1, 0.0),
                    Complex64::from_polar(v2, th2),
                ];
                let s1: Complex64 = vc[0]
                    * ((0..2)
                        .map(|k| net.y_bus.get(0, k) * vc[k])
                        .sum::<Complex64>())
                    .conj();
                return Some((s1.re, s1.im, v2, th2));
            }
            let h = 1e-8;
            let (rp_v, rq_v) = resid(v2 + h, th2);
            let (rp_t, rq_t) = resid(v2, th2 + h);
            let j11 = (rp_v - rp) / h;
            let j12 = (rp_t - rp) / h;
            let j21 = (rq_v - rq) / h;
            let j22 = (rq_t - rq) / h;
            let det = j11 * j22 - j12 * j21;
            if det.abs() < 1e-14 {
                return None;
            }
            v2 -= (rp * j22 - rq * j12) / det;
            th2 -= (rq * j11 - rp * j21) / det;
        }
        None
    }

    #[test]
    fn two_bus_acopf_matches_grid_search_oracle() {
        let case = two_bus_single_period();
        let net = assemble(&case).unwrap();
        let variant = Variant::AcopfFixed {
            u: vec![vec![1]],
            v: vec![vec![0]],
            w: vec![vec![0]],
        };
        let inst = NlpInstance::new(&case, &net, variant.clone());
        let init = flat_start(&case, &variant);
        let result = solve_nlp(&inst, &init, &PslpParams::with_penalty(5e6));
        assert!(result.converged, "pslp did not converge: {result:?}");
        assert!(result.ac_violation <= 1e-6);

        // Brute-force oracle: sweep the one degree of freedom (the
    	// generator-bus voltage) and dispatch by power flow.
        let unit = &case.thermal_units[0];
        let mut best: Option<(f64, f64)> = None; // (cost, p1)
        let n = 20_000;
        for k in 0..=n {
            let v1 = 0.95 + 0.1 * (k as f64) / (n as f64);
            if let Some((p1, q1, v2, _)) = newton_pf(&case, v1) {
                if !(0.95..=1.05).contains(&v2) {
                    continue;
                }
                if p1 < unit.p_min || p1 > unit.p_max || q1 < unit.q_min || q1 > unit.q_max {
                    continue;
                }
                let cost = unit.a2 * p1 * p1 + unit.a1 * p1 + unit.a0;
                if best.map_or(true, |(c, _)| cost < c) {
                    best = Some((cost, p1));
                }
            }
        }
        let (_, p_oracle) = best.expect("oracle found a feasible dispatch");
        let p_solver = result.point.p_g(0, 0);
        assert!(
            (p_solver - p_oracle).abs() <= 1e-5,
            "dispatch {p_solver} vs oracle {p_oracle}"
        );
    }

    #[test]
    fn soc_reduces_balance_residuals() {
        // With the Jacobian taken at the point itself, the correction is a
        // plain Newton step on the voltage block and must shrink residuals.
        let case = crate::testcases::six_bus();
        let net = assemble(&case).unwrap();
        let inst = NlpInstance::new(&case, &net, Variant::RucAcopf);
        let mut point = flat_start(&case, &Variant::RucAcopf);
        // Commit everything at a plausible dispatch so the system is
        // solvable in V/theta.
        for g in 0..case.n_thermal() {
            for t in 0..case.horizon {
                point.values[point.layout.u(g, t)] = 1.0;
                let share = case.demand.total_p(t) / 3.0;
                let unit = &case.thermal_units[g];
                point.values[point.layout.p_g(g, t)] =
                    share.clamp(unit.p_min, unit.p_max);
                point.values[point.layout.q_g(g, t)] = 0.1;
            }
        }
        let before = crate::acpf::ac_violation(&point, &case, &net);
        let corrected = soc_correct(&inst, &point);
        let after = crate::acpf::ac_violation(&corrected, &case, &net);
        assert!(
            after < 0.5 * before,
            "soc did not reduce violation: {before:.3e} -> {after:.3e}"
        );
    }

    #[test]
    fn merit_history_non_increasing() {
        let case = two_bus_single_period();
        let net = assemble(&case).unwrap();
        let inst = NlpInstance::new(&case, &net, Variant::RucAcopf);
        let init = flat_start(&case, &Variant::RucAcopf);
        let result = solve_nlp(&inst, &init, &PslpParams::with_penalty(5e6));
        for pair in result.merit_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0));
        }
    }

    #[test]
    fn presatisfied_linear_instance_converges_in_one_accepted_step() {
        // No branches, no demand: AC rows are satisfied at the flat start
        // and the cost is linear, so the first LP step is exact.
        let mut case = tiny_uc_case();
        case.thermal_units[0].a2 = 0.0;
        for row in case.demand.p.iter_mut().chain(case.demand.q.iter_mut()) {
            for v in row.iter_mut() {
                *v = 0.0;
            }
        }
        case.branches.clear();
        // Let the unit shut down immediately: no demand to serve.
        case.thermal_units[0].p0 = case.thermal_units[0].s_down;
        let net = assemble(&case).unwrap();
        let inst = NlpInstance::new(&case, &net, Variant::RucAcopf);
        let init = flat_start(&case, &Variant::RucAcopf);
        // A trust region covering the whole box keeps the LP step exact.
        let params = PslpParams {
            delta0: 1.0,
            ..Default::default()
        };
        let result = solve_nlp(&inst, &init, &params);
        assert!(result.converged);
        assert_eq!(result.accepted_steps, 1, "{result:?}");
    }

    #[test]
    fn terminates_when_trust_region_collapses() {
        let case = two_bus_single_period();
        let net = assemble(&case).unwrap();
        let inst = NlpInstance::new(&case, &net, Variant::RucAcopf);
        let init = flat_start(&case, &Variant::RucAcopf);
        let params = PslpParams {
            max_iter: 10_000,
            delta_lb: 1e-2,
            delta0: 2e-2,
            beta: 0.5,
            ..Default::default()
        };
        let result = solve_nlp(&inst, &init, &params);
        assert!(result.iterations < 10_000);
    }
}
