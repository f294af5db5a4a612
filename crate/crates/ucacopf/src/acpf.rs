//! Nonlinear AC power flow residuals and their analytic Jacobians in polar
//! coordinates: bus power balance and squared line-current limits.

use crate::case::PowerCase;
use crate::network::NetworkMatrices;
use crate::point::DecisionPoint;
use num_complex::Complex64;

/// Voltage magnitudes and angles, indexed `[bus][hour]`.
#[derive(Debug, Clone)]
pub struct AcState {
    pub v: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

impl AcState {
    pub fn from_point(point: &DecisionPoint) -> Self {
        let l = point.layout;
        let v = (0..l.n_buses)
            .map(|i| (0..l.horizon).map(|t| point.v_mag(i, t)).collect())
            .collect();
        let theta = (0..l.n_buses)
            .map(|i| (0..l.horizon).map(|t| point.theta(i, t)).collect())
            .collect();
        Self { v, theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    From,
    To,
}

/// Net generator injections aggregated per bus, `[bus][hour]`.
pub fn bus_injections(case: &PowerCase, point: &DecisionPoint) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (nb, tf) = (case.n_buses(), case.horizon);
    let mut gen_p = vec![vec![0.0; tf]; nb];
    let mut gen_q = vec![vec![0.0; tf]; nb];
    for i in 0..nb {
        for g in case.thermal_at(i) {
            for t in 0..tf {
                gen_p[i][t] += point.p_g(g, t);
                gen_q[i][t] += point.q_g(g, t);
            }
        }
        for c in case.condensers_at(i) {
            for t in 0..tf {
                gen_q[i][t] += point.q_sc(c, t);
            }
        }
    }
    (gen_p, gen_q)
}

/// Injected complex power drawn from the bus into the grid, scalar polar
/// form. The self term enters through the admittance diagonal.
fn injection(state: &AcState, net: &NetworkMatrices, i: usize, t: usize) -> (f64, f64) {
    let vi = state.v[i][t];
    let thi = state.theta[i][t];
    let mut p = 0.0;
    let mut q = 0.0;
    for &k in &net.neighbors[i] {
        let y = net.y_bus.get(i, k);
        let (g, b) = (y.re, y.im);
        let d = thi - state.theta[k][t];
        let (sin, cos) = d.sin_cos();
        let vk = state.v[k][t];
        p += vk * (g * cos + b * sin);
        q += vk * (g * sin - b * cos);
    }
    (vi * p, vi * q)
}

/// Active and reactive power balance residuals: generation minus demand
/// minus grid injection, `[bus][hour]`.
pub fn balance_residual(
    state: &AcState,
    gen_p: &[Vec<f64>],
    gen_q: &[Vec<f64>],
    case: &PowerCase,
    net: &NetworkMatrices,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (nb, tf) = (case.n_buses(), case.horizon);
    let mut p_bal = vec![vec![0.0; tf]; nb];
    let mut q_bal = vec![vec![0.0; tf]; nb];
    for i in 0..nb {
        let id = case.buses[i].id;
        for t in 0..tf {
            let (pd, qd) = case.demand.at_bus(id, t);
            let (pi, qi) = injection(state, net, i, t);
            p_bal[i][t] = gen_p[i][t] - pd - pi;
            q_bal[i][t] = gen_q[i][t] - qd - qi;
        }
    }
    (p_bal, q_bal)
}

/// Complex current into one end of a line.
fn line_current(state: &AcState, net: &NetworkMatrices, side: Side, l: usize, t: usize) -> Complex64 {
    let (f, to) = net.ends[l];
    let blk = &net.y_branch[l];
    let (ya, yb) = match side {
        Side::From => (blk.y_ff, blk.y_ft),
        Side::To => (blk.y_tf, blk.y_tt),
    };
    let vf = Complex64::from_polar(state.v[f][t], state.theta[f][t]);
    let vt = Complex64::from_polar(state.v[to][t], state.theta[to][t]);
    ya * vf + yb * vt
}

/// Squared current magnitude per line and hour, one side.
pub fn current_sq(state: &AcState, net: &NetworkMatrices, side: Side) -> Vec<Vec<f64>> {
    let nl = net.ends.len();
    let tf = state.v.first().map(|r| r.len()).unwrap_or(0);
    (0..nl)
        .map(|l| {
            (0..tf)
                .map(|t| line_current(state, net, side, l, t).norm_sqr())
                .collect()
        })
        .collect()
}

/// Infinity norm over all AC constraint violations: balance residual
/// magnitudes and current-limit overshoots.
pub fn ac_violation(point: &DecisionPoint, case: &PowerCase, net: &NetworkMatrices) -> f64 {
    let state = AcState::from_point(point);
    let (gen_p, gen_q) = bus_injections(case, point);
    let (p_bal, q_bal) = balance_residual(&state, &gen_p, &gen_q, case, net);
    let mut worst: f64 = 0.0;
    for row in p_bal.iter().chain(q_bal.iter()) {
        for v in row {
            worst = worst.max(v.abs());
        }
    }
    for side in [Side::From, Side::To] {
        let cur = current_sq(&state, net, side);
        for (l, row) in cur.iter().enumerate() {
            let lim = case.branches[l].i_max * case.branches[l].i_max;
            for v in row {
                worst = worst.max(v - lim);
            }
        }
    }
    worst
}

/// One AC constraint row in the fixed linearization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcRow {
    /// Active balance at (bus, hour); equality, residual driven to zero.
    PBalance(usize, usize),
    /// Reactive balance at (bus, hour).
    QBalance(usize, usize),
    /// Squared current at (line, hour), one side; bounded by i_max^2.
    Current(Side, usize, usize),
}

/// First-order model of every AC constraint at a point.
pub struct AcLinearization {
    pub kinds: Vec<AcRow>,
    /// Sparse gradient of each row over the decision columns.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Row value at the point: balance residual, or squared current.
    pub value: Vec<f64>,
    /// Squared current limit for current rows, unused for balance rows.
    pub limit: Vec<f64>,
    pub n_balance: usize,
}

/// Analytic Jacobian of all AC rows with respect to (V, theta, P, Q).
/// Time steps are decoupled; every row touches a single hour.
pub fn jacobian(point: &DecisionPoint, case: &PowerCase, net: &NetworkMatrices) -> AcLinearization {
    let layout = point.layout;
    let (nb, nl, tf) = (case.n_buses(), case.n_branches(), case.horizon);
    let state = AcState::from_point(point);
    let (gen_p, gen_q) = bus_injections(case, point);
    let (p_bal, q_bal) = balance_residual(&state, &gen_p, &gen_q, case, net);

    let mut kinds = Vec::new();
    let mut rows = Vec::new();
    let mut value = Vec::new();
    let mut limit = Vec::new();

    for t in 0..tf {
        for i in 0..nb {
            for bal_q in [false, true] {
                let vi = state.v[i][t];
                let thi = state.theta[i][t];
                let (inj_p, inj_q) = injection(&state, net, i, t);
                let mut row: Vec<(usize, f64)> = Vec::new();
                // Generator columns: unit injection enters with +1.
                if !bal_q {
                    for g in case.thermal_at(i) {
                        row.push((layout.p_g(g, t), 1.0));
                    }
                } else {
                    for g in case.thermal_at(i) {
                        row.push((layout.q_g(g, t), 1.0));
                    }
                    for c in case.condensers_at(i) {
                        row.push((layout.q_sc(c, t), 1.0));
                    }
                }
                // Network part: residual = ... - inj, so the entries below
                // carry a leading minus sign.
                let y_ii = net.y_bus.get(i, i);
                let (d_inj_dvi, d_inj_dthi) = if !bal_q {
                    (
                        inj_p / vi + vi * y_ii.re,
                        -inj_q - vi * vi * y_ii.im,
                    )
                } else {
                    (
                        inj_q / vi - vi * y_ii.im,
                        inj_p - vi * vi * y_ii.re,
                    )
                };
                row.push((layout.v_mag(i, t), -d_inj_dvi));
                row.push((layout.theta(i, t), -d_inj_dthi));
                for &k in &net.neighbors[i] {
                    if k == i {
                        continue;
                    }
                    let y = net.y_bus.get(i, k);
                    let (g, b) = (y.re, y.im);
                    let d = thi - state.theta[k][t];
                    let (sin, cos) = d.sin_cos();
                    let vk = state.v[k][t];
                    let (d_dvk, d_dthk) = if !bal_q {
                        (vi * (g * cos + b * sin), vi * vk * (g * sin - b * cos))
                    } else {
                        (vi * (g * sin - b * cos), -vi * vk * (g * cos + b * sin))
                    };
                    row.push((layout.v_mag(k, t), -d_dvk));
                    row.push((layout.theta(k, t), -d_dthk));
                }
                kinds.push(if !bal_q {
                    AcRow::PBalance(i, t)
                } else {
                    AcRow::QBalance(i, t)
                });
                value.push(if !bal_q { p_bal[i][t] } else { q_bal[i][t] });
                limit.push(0.0);
                rows.push(row);
            }
        }
    }
    let n_balance = rows.len();

    for side in [Side::From, Side::To] {
        for t in 0..tf {
            for l in 0..nl {
                let (f, to) = net.ends[l];
                let blk = &net.y_branch[l];
                let (ya, yb) = match side {
                    Side::From => (blk.y_ff, blk.y_ft),
                    Side::To => (blk.y_tf, blk.y_tt),
                };
                let c = line_current(&state, net, side, l, t);
                let cc = c.conj();
                let mut row: Vec<(usize, f64)> = Vec::new();
                for (bus, y) in [(f, ya), (to, yb)] {
                    let e = Complex64::from_polar(1.0, state.theta[bus][t]);
                    let dv = 2.0 * (cc * y * e).re;
                    let dth = 2.0
                        * (cc * y * Complex64::new(0.0, state.v[bus][t]) * e).re;
                    row.push((layout.v_mag(bus, t), dv));
                    row.push((layout.theta(bus, t), dth));
                }
                kinds.push(AcRow::Current(side, l, t));
                value.push(c.norm_sqr());
                limit.push(case.branches[l].i_max * case.branches[l].i_max);
                rows.push(row);
            }
        }
    }

    AcLinearization {
        kinds,
        rows,
        value,
        limit,
        n_balance,
    }
}
