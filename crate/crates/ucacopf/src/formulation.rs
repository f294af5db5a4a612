//! Linear constraint set (the unit-commitment skeleton) and objective for
//! each problem variant.

use crate::case::PowerCase;
use crate::point::{DecisionPoint, VariableLayout};
use serde::Serialize;
use std::f64::consts::PI;

/// Which problem the model encodes. All variants share the column layout;
/// they differ in bounds, integrality flags and objective.
#[derive(Debug, Clone)]
pub enum Variant {
    UcAcopf,
    RucAcopf,
    /// Commitment fixed to a given binary schedule.
    AcopfFixed {
        u: Vec<Vec<u8>>,
        v: Vec<Vec<u8>>,
        w: Vec<Vec<u8>>,
    },
    /// Feasibility-pump subproblem: convex combination of the L1 distance to
    /// a binary commitment and the production cost.
    FpRuc {
        u_in: Vec<Vec<u8>>,
        alpha: f64,
        w_l1: f64,
        w_uc: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Separable objective: linear vector plus a diagonal quadratic (the a2
/// terms). Kept split so the LP layer can linearize the quadratic part.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub linear: Vec<f64>,
    pub quad_diag: Vec<f64>,
    pub constant: f64,
}

impl CostModel {
    pub fn zeros(n: usize) -> Self {
        Self {
            linear: vec![0.0; n],
            quad_diag: vec![0.0; n],
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = self.constant;
        for (j, &xj) in x.iter().enumerate() {
            s += self.linear[j] * xj + self.quad_diag[j] * xj * xj;
        }
        s
    }

    /// Gradient at a point (for the first-order cost model in the LP).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &xj)| self.linear[j] + 2.0 * self.quad_diag[j] * xj)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub layout: VariableLayout,
    pub rows: Vec<LinRow>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub integer: Vec<bool>,
    pub cost: CostModel,
}

/// Build the UC-skeleton rows and variable bounds for a variant.
///
/// Rows cover the on/off logic, minimum up/down windows, the system reserve
/// requirement, ramps and the commitment-scaled generation limits. The t=1
/// boundary uses the case initial conditions (u0, p0, dwell0).
pub fn build_skeleton(case: &PowerCase, variant: &Variant) -> LinearModel {
    let layout = VariableLayout::new(case);
    let tf = case.horizon;
    let n = layout.total;
    let mut rows = Vec::new();
    let mut lb = vec![f64::NEG_INFINITY; n];
    let mut ub = vec![f64::INFINITY; n];
    let mut integer = vec![false; n];

    for (g, unit) in case.thermal_units.iter().enumerate() {
        let u0 = unit.u0 as f64;
        for t in 0..tf {
            // On/off logic: u_{t-1} - u_t + v_t - w_t = 0.
            let mut coeffs = vec![
                (layout.u(g, t), -1.0),
                (layout.v(g, t), 1.0),
                (layout.w(g, t), -1.0),
            ];
            let rhs = if t == 0 {
                -u0
            } else {
                coeffs.push((layout.u(g, t - 1), 1.0));
                0.0
            };
            rows.push(LinRow {
                coeffs,
                sense: Sense::Eq,
                rhs,
            });
        }
        // Minimum up: sum of starts in the trailing window cannot exceed u_t.
        for t in (unit.t_up - 1)..tf {
            let mut coeffs: Vec<(usize, f64)> = (t + 1 - unit.t_up..=t)
                .map(|tt| (layout.v(g, tt), 1.0))
                .collect();
            coeffs.push((layout.u(g, t), -1.0));
            rows.push(LinRow {
                coeffs,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
        // Minimum down: sum of stops in the window cannot exceed 1 - u_t.
        for t in (unit.t_down - 1)..tf {
            let mut coeffs: Vec<(usize, f64)> = (t + 1 - unit.t_down..=t)
                .map(|tt| (layout.w(g, tt), 1.0))
                .collect();
            coeffs.push((layout.u(g, t), 1.0));
            rows.push(LinRow {
                coeffs,
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
        for t in 0..tf {
            // Ramp up: P_t + Pres_t - P_{t-1} <= Ru u_{t-1} + Su v_t.
            let mut coeffs = vec![
                (layout.p_g(g, t), 1.0),
                (layout.p_res(g, t), 1.0),
                (layout.v(g, t), -unit.s_up),
            ];
            let rhs = if t == 0 {
                unit.r_up * u0 + unit.p0
            } else {
                coeffs.push((layout.p_g(g, t - 1), -1.0));
                coeffs.push((layout.u(g, t - 1), -unit.r_up));
                0.0
            };
            rows.push(LinRow {
                coeffs,
                sense: Sense::Le,
                rhs,
            });
            // Ramp down: P_{t-1} - P_t <= Rd u_t + Sd w_t.
            let mut coeffs = vec![
                (layout.p_g(g, t), -1.0),
                (layout.u(g, t), -unit.r_down),
                (layout.w(g, t), -unit.s_down),
            ];
            let rhs = if t == 0 {
                -unit.p0
            } else {
                coeffs.push((layout.p_g(g, t - 1), 1.0));
                0.0
            };
            rows.push(LinRow {
                coeffs,
                sense: Sense::Le,
                rhs,
            });
            // Generation limits scaled by commitment.
            rows.push(LinRow {
                coeffs: vec![(layout.u(g, t), unit.p_min), (layout.p_g(g, t), -1.0)],
                sense: Sense::Le,
                rhs: 0.0,
            });
            rows.push(LinRow {
                coeffs: vec![
                    (layout.p_g(g, t), 1.0),
                    (layout.p_res(g, t), 1.0),
                    (layout.u(g, t), -unit.p_max),
                ],
                sense: Sense::Le,
                rhs: 0.0,
            });
            rows.push(LinRow {
                coeffs: vec![(layout.u(g, t), unit.q_min), (layout.q_g(g, t), -1.0)],
                sense: Sense::Le,
                rhs: 0.0,
            });
            rows.push(LinRow {
                coeffs: vec![(layout.q_g(g, t), 1.0), (layout.u(g, t), -unit.q_max)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }

    // System reserve requirement (single region): sum_g Pres_{g,t} >= req_t.
    for t in 0..tf {
        let coeffs: Vec<(usize, f64)> = (0..layout.n_thermal)
            .map(|g| (layout.p_res(g, t), -1.0))
            .collect();
        rows.push(LinRow {
            coeffs,
            sense: Sense::Le,
            rhs: -case.reserve[t],
        });
    }

    // Bounds common to all variants.
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..tf {
            lb[layout.p_g(g, t)] = 0.0;
            ub[layout.p_g(g, t)] = unit.p_max;
            lb[layout.q_g(g, t)] = unit.q_min.min(0.0);
            ub[layout.q_g(g, t)] = unit.q_max.max(0.0);
            lb[layout.p_res(g, t)] = 0.0;
            ub[layout.p_res(g, t)] = unit.p_max - unit.p_min;
        }
    }
    for (c, sc) in case.condensers.iter().enumerate() {
        for t in 0..tf {
            lb[layout.q_sc(c, t)] = sc.q_min;
            ub[layout.q_sc(c, t)] = sc.q_max;
        }
    }
    for (i, bus) in case.buses.iter().enumerate() {
        for t in 0..tf {
            lb[layout.v_mag(i, t)] = bus.v_min;
            ub[layout.v_mag(i, t)] = bus.v_max;
            if bus.is_reference {
                lb[layout.theta(i, t)] = bus.theta0;
                ub[layout.theta(i, t)] = bus.theta0;
            } else {
                lb[layout.theta(i, t)] = -PI;
                ub[layout.theta(i, t)] = PI;
            }
        }
    }

    // Commitment bounds per variant.
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..tf {
            let cols = [layout.u(g, t), layout.v(g, t), layout.w(g, t)];
            match variant {
                Variant::UcAcopf => {
                    for col in cols {
                        lb[col] = 0.0;
                        ub[col] = 1.0;
                        integer[col] = true;
                    }
                }
                Variant::RucAcopf | Variant::FpRuc { .. } => {
                    for col in cols {
                        lb[col] = 0.0;
                        ub[col] = 1.0;
                    }
                }
                Variant::AcopfFixed { u, v, w } => {
                    for (col, val) in cols.iter().zip([u[g][t], v[g][t], w[g][t]]) {
                        lb[*col] = val as f64;
                        ub[*col] = val as f64;
                    }
                }
            }
        }
        // A unit already past its minimum up/down window keeps its freedom;
        // otherwise the initial dwell pins the first hours.
        match variant {
            Variant::AcopfFixed { .. } => {}
            _ => {
                if unit.u0 == 1 && unit.dwell0 < unit.t_up {
                    for t in 0..(unit.t_up - unit.dwell0).min(tf) {
                        lb[layout.u(g, t)] = 1.0;
                    }
                } else if unit.u0 == 0 && unit.dwell0 < unit.t_down {
                    for t in 0..(unit.t_down - unit.dwell0).min(tf) {
                        ub[layout.u(g, t)] = 0.0;
                    }
                }
            }
        }
    }

    let cost = objective(case, variant, &layout);
    LinearModel {
        layout,
        rows,
        lb,
        ub,
        integer,
        cost,
    }
}

/// Objective for a variant, in dollars over the horizon.
pub fn objective(case: &PowerCase, variant: &Variant, layout: &VariableLayout) -> CostModel {
    let mut cost = CostModel::zeros(layout.total);
    let (uc_scale, l1_weight) = match variant {
        Variant::FpRuc {
            alpha, w_l1, w_uc, ..
        } => (alpha / w_uc, (1.0 - alpha) / w_l1),
        _ => (1.0, 0.0),
    };
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..case.horizon {
            cost.quad_diag[layout.p_g(g, t)] += uc_scale * unit.a2;
            cost.linear[layout.p_g(g, t)] += uc_scale * unit.a1;
            cost.linear[layout.u(g, t)] += uc_scale * unit.a0;
            cost.linear[layout.v(g, t)] += uc_scale * unit.c_up;
            cost.linear[layout.w(g, t)] += uc_scale * unit.c_down;
        }
    }
    if let Variant::FpRuc { u_in, .. } = variant {
        // |u_in - u| linearized against the binary u_in:
        // zeros contribute u, ones contribute 1 - u.
        for g in 0..layout.n_thermal {
            for t in 0..case.horizon {
                if u_in[g][t] == 0 {
                    cost.linear[layout.u(g, t)] += l1_weight;
                } else {
                    cost.linear[layout.u(g, t)] -= l1_weight;
                    cost.constant += l1_weight;
                }
            }
        }
    }
    cost
}

/// Production cost of a point in dollars (always the plain UC cost, whatever
/// variant produced the point).
pub fn evaluate_cost(point: &DecisionPoint, case: &PowerCase) -> f64 {
    assert_eq!(
        point.layout,
        VariableLayout::new(case),
        "point layout does not match case dimensions"
    );
    let uc = objective(case, &Variant::RucAcopf, &point.layout);
    uc.eval(&point.values)
}

/// Residual of every skeleton row at a point; used by tests and the
/// feasibility classifier to cross-check the straight-loop evaluation.
pub fn row_violation(model: &LinearModel, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for row in &model.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
        let v = match row.sense {
            Sense::Le => lhs - row.rhs,
            Sense::Eq => (lhs - row.rhs).abs(),
        };
        worst = worst.max(v);
    }
    worst
}
