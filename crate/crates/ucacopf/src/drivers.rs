//! Pipeline orchestration: the direct relax-and-round procedure, the
//! objective feasibility pump, the feasibility classifier and the penalty
//! sweep harness.

use crate::acpf;
use crate::case::PowerCase;
use crate::formulation::{evaluate_cost, Variant};
use crate::network::NetworkMatrices;
use crate::point::DecisionPoint;
use crate::pslp::{self, NlpInstance, PslpParams, PslpResult};
use crate::rounding::{
    self, derive_vw, BinarySchedule, RescaleMode, RoundFormula, RoundParams,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct FpParams {
    pub maxit: usize,
    pub maxrst: usize,
    pub alpha0: f64,
    pub phi_alpha: f64,
    pub delta_alpha: f64,
    /// Number of random bit flips applied at a stationary point.
    pub s_flips: usize,
    /// Normalization weights; when absent they default to t_f|G| and
    /// t_f|G| max a2 respectively.
    pub w_l1: Option<f64>,
    pub w_uc: Option<f64>,
    pub rng_seed: u64,
}

impl Default for FpParams {
    fn default() -> Self {
        Self {
            maxit: 50,
            maxrst: 3,
            alpha0: 0.75,
            phi_alpha: 0.5,
            delta_alpha: 0.075,
            s_flips: 0,
            w_l1: None,
            w_uc: None,
            rng_seed: 0,
        }
    }
}

impl FpParams {
    /// Flip count as a fraction of the commitment-variable count.
    pub fn flips_for(case: &PowerCase, frac: f64) -> usize {
        ((case.horizon * case.n_thermal()) as f64 * frac).round() as usize
    }
}

/// Worst violation per constraint family plus the paper's two-level
/// feasibility classification.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub uc_feasible: bool,
    pub ac_feasible: bool,
    pub fully_feasible: bool,
    pub max_ac_violation: f64,
    pub worst: Vec<(String, f64)>,
}

impl FeasibilityReport {
    pub fn family(&self, name: &str) -> f64 {
        self.worst
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }
}

/// Evaluate every constraint family of the full problem independently with
/// straight loops over the case data.
pub fn check_feasibility(
    point: &DecisionPoint,
    case: &PowerCase,
    net: &NetworkMatrices,
    tol: f64,
) -> FeasibilityReport {
    let tf = case.horizon;
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut family = |name: &str, v: f64| worst.push((name.to_string(), v));

    let mut logic: f64 = 0.0;
    let mut min_up: f64 = 0.0;
    let mut min_down: f64 = 0.0;
    let mut ramp_up: f64 = 0.0;
    let mut ramp_down: f64 = 0.0;
    let mut p_limits: f64 = 0.0;
    let mut q_limits: f64 = 0.0;
    let mut p_domain: f64 = 0.0;
    let mut reserve_domain: f64 = 0.0;
    let mut integrality: f64 = 0.0;
    for (g, unit) in case.thermal_units.iter().enumerate() {
        for t in 0..tf {
            let u = point.u(g, t);
            let u_prev = if t == 0 {
                unit.u0 as f64
            } else {
                point.u(g, t - 1)
            };
            let (v, w) = (point.v(g, t), point.w(g, t));
            logic = logic.max((u_prev - u + v - w).abs());
            for b in [u, v, w] {
                integrality = integrality.max((b - b.round()).abs());
            }
            let p = point.p_g(g, t);
            let q = point.q_g(g, t);
            let res = point.p_res(g, t);
            let p_prev = if t == 0 {
                unit.p0
            } else {
                point.p_g(g, t - 1)
            };
            ramp_up = ramp_up.max(p + res - p_prev - unit.r_up * u_prev - unit.s_up * v);
            ramp_down = ramp_down.max(p_prev - p - unit.r_down * u - unit.s_down * w);
            p_limits = p_limits
                .max(unit.p_min * u - p)
                .max(p + res - unit.p_max * u);
            q_limits = q_limits
                .max(unit.q_min * u - q)
                .max(q - unit.q_max * u);
            reserve_domain = reserve_domain
                .max(-res)
                .max(res - (unit.p_max - unit.p_min));
            // Disconnected active-power domain, judged by the rounded u.
            p_domain = p_domain.max(if u.round() >= 1.0 {
                (unit.p_min - p).max(p - unit.p_max)
            } else {
                p.abs()
            });
        }
        for t in (unit.t_up - 1)..tf {
            let sum_v: f64 = (t + 1 - unit.t_up..=t).map(|tt| point.v(g, tt)).sum();
            min_up = min_up.max(sum_v - point.u(g, t));
        }
        for t in (unit.t_down - 1)..tf {
            let sum_w: f64 = (t + 1 - unit.t_down..=t).map(|tt| point.w(g, tt)).sum();
            min_down = min_down.max(sum_w - (1.0 - point.u(g, t)));
        }
    }
    family("logic", logic);
    family("min_up", min_up);
    family("min_down", min_down);
    family("ramp_up", ramp_up);
    family("ramp_down", ramp_down);
    family("p_limits", p_limits);
    family("q_limits", q_limits);
    family("p_domain", p_domain);
    family("reserve_domain", reserve_domain);
    family("integrality", integrality);

    let mut reserve_req: f64 = 0.0;
    for t in 0..tf {
        let total: f64 = (0..case.n_thermal()).map(|g| point.p_res(g, t)).sum();
        reserve_req = reserve_req.max(case.reserve[t] - total);
    }
    family("reserve_requirement", reserve_req);

    let mut condenser: f64 = 0.0;
    for (c, sc) in case.condensers.iter().enumerate() {
        for t in 0..tf {
            let q = point.q_sc(c, t);
            condenser = condenser.max(sc.q_min - q).max(q - sc.q_max);
        }
    }
    family("condenser_limits", condenser);

    let mut v_bounds: f64 = 0.0;
    let mut theta_bounds: f64 = 0.0;
    let mut ref_angle: f64 = 0.0;
    for (i, bus) in case.buses.iter().enumerate() {
        for t in 0..tf {
            let v = point.v_mag(i, t);
            v_bounds = v_bounds.max(bus.v_min - v).max(v - bus.v_max);
            let th = point.theta(i, t);
            theta_bounds = theta_bounds.max(th.abs() - PI);
            if bus.is_reference {
                ref_angle = ref_angle.max((th - bus.theta0).abs());
            }
        }
    }
    family("v_bounds", v_bounds);
    family("theta_bounds", theta_bounds);
    family("ref_angle", ref_angle);

    let state = acpf::AcState::from_point(point);
    let (gen_p, gen_q) = acpf::bus_injections(case, point);
    let (p_bal, q_bal) = acpf::balance_residual(&state, &gen_p, &gen_q, case, net);
    let mut balance: f64 = 0.0;
    for row in p_bal.iter().chain(q_bal.iter()) {
        for v in row {
            balance = balance.max(v.abs());
        }
    }
    family("ac_balance", balance);
    let mut current: f64 = 0.0;
    for side in [acpf::Side::From, acpf::Side::To] {
        let cur = acpf::current_sq(&state, net, side);
        for (l, row) in cur.iter().enumerate() {
            let lim = case.branches[l].i_max.powi(2);
            for v in row {
                current = current.max(v - lim);
            }
        }
    }
    family("line_current", current);

    let uc_feasible = [logic, min_up, min_down, ramp_up, ramp_down]
        .iter()
        .all(|&v| v <= tol);
    let ac_feasible = balance <= tol && current <= tol;
    let fully_feasible = worst.iter().all(|(_, v)| *v <= tol);
    FeasibilityReport {
        uc_feasible,
        ac_feasible,
        fully_feasible,
        max_ac_violation: balance.max(current),
        worst,
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct FpStats {
    pub iterations: usize,
    pub resets: usize,
    pub total_pslp_iters: usize,
    pub seed: u64,
    pub alpha_trace: Vec<f64>,
    pub integral_exit: bool,
}

/// Per-pipeline outcome row.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rescale: RescaleMode,
    pub round: RoundFormula,
    pub penalty: f64,
    pub iter1: usize,
    pub ac_feas1: f64,
    pub iter2: usize,
    pub ac_feas2: f64,
    pub uc_feasible: bool,
    pub ac_feasible: bool,
    pub feasible: bool,
    pub cost: f64,
    pub time_s: f64,
    pub commitment: Vec<Vec<u8>>,
    /// Relaxed commitment and active power from the relaxation solve, for
    /// the rescaling plots; empty for pump runs.
    pub relaxed_u: Vec<Vec<f64>>,
    pub relaxed_p: Vec<Vec<f64>>,
    pub fp: Option<FpStats>,
}

fn round_with(
    formula: RoundFormula,
    u_r: &[Vec<f64>],
    p_rel: &[Vec<f64>],
    res_rel: &[Vec<f64>],
    case: &PowerCase,
    params: &RoundParams,
) -> BinarySchedule {
    match formula {
        RoundFormula::Nr => rounding::naive_round(u_r, case),
        RoundFormula::Er => rounding::er_round(u_r, p_rel, res_rel, case, params).schedule,
        RoundFormula::UcEr => rounding::ucer_round(u_r, p_rel, res_rel, case, params).schedule,
    }
}

fn solve_fixed(
    case: &PowerCase,
    net: &NetworkMatrices,
    schedule: &BinarySchedule,
    params: &PslpParams,
) -> PslpResult {
    let variant = Variant::AcopfFixed {
        u: schedule.u.clone(),
        v: schedule.v.clone(),
        w: schedule.w.clone(),
    };
    let inst = NlpInstance::new(case, net, variant.clone());
    let init = pslp::flat_start(case, &variant);
    pslp::solve_nlp(&inst, &init, params)
}

/// Direct relax-and-round: solve the relaxation from a flat start, rescale,
/// round, fix the binaries and re-solve the dispatch.
pub fn relax_and_round(
    case: &PowerCase,
    net: &NetworkMatrices,
    rescale_mode: RescaleMode,
    formula: RoundFormula,
    pslp1: &PslpParams,
    pslp2: &PslpParams,
    round_params: &RoundParams,
) -> (DecisionPoint, RunReport) {
    let start = Instant::now();
    let inst1 = NlpInstance::new(case, net, Variant::RucAcopf);
    let init1 = pslp::flat_start(case, &Variant::RucAcopf);
    let r1 = pslp::solve_nlp(&inst1, &init1, pslp1);
    log::info!(
        "step 1: {} iterations, ac violation {:.3e}",
        r1.iterations,
        r1.ac_violation
    );

    let u_rel = r1.point.u_matrix();
    let p_rel = r1.point.p_matrix();
    let res_rel = r1.point.p_res_matrix();
    let u_r = rounding::rescale(&u_rel, &p_rel, case, rescale_mode);
    let schedule = round_with(formula, &u_r, &p_rel, &res_rel, case, round_params);

    let r2 = solve_fixed(case, net, &schedule, pslp2);
    log::info!(
        "step 4: {} iterations, ac violation {:.3e}",
        r2.iterations,
        r2.ac_violation
    );
    let feas = check_feasibility(&r2.point, case, net, FEAS_TOL);
    let report = RunReport {
        rescale: rescale_mode,
        round: formula,
        penalty: pslp1.mu,
        iter1: r1.iterations,
        ac_feas1: r1.ac_violation,
        iter2: r2.iterations,
        ac_feas2: r2.ac_violation,
        uc_feasible: feas.uc_feasible,
        ac_feasible: feas.ac_feasible,
        feasible: feas.fully_feasible,
        cost: evaluate_cost(&r2.point, case),
        time_s: start.elapsed().as_secs_f64(),
        commitment: schedule.u.clone(),
        relaxed_u: u_rel,
        relaxed_p: p_rel,
        fp: None,
    };
    (r2.point, report)
}

/// Objective feasibility pump. Iterates FP subproblem solves and roundings
/// until the relaxed commitment comes out integral; applies seeded random
/// flips at stationary points and falls back to the projection-closest
/// iterate when the budget runs out.
#[allow(clippy::too_many_arguments)]
pub fn feasibility_pump(
    case: &PowerCase,
    net: &NetworkMatrices,
    u_init: &[Vec<u8>],
    init: Option<&DecisionPoint>,
    fp: &FpParams,
    pslp_fp: &PslpParams,
    pslp_acopf: &PslpParams,
    rescale_mode: RescaleMode,
    formula: RoundFormula,
    round_params: &RoundParams,
) -> (DecisionPoint, RunReport) {
    let start = Instant::now();
    let tf = case.horizon;
    let ng = case.n_thermal();
    let w_l1 = fp.w_l1.unwrap_or((tf * ng) as f64);
    // The production-cost normalizer uses the largest constant cost
    // coefficient; it keeps the blended objective near the L1 term's
    // scale, which is what lets the pump reach integral points within a
    // few alpha halvings.
    let w_uc = fp.w_uc.unwrap_or_else(|| {
        (tf * ng) as f64
            * case
                .thermal_units
                .iter()
                .map(|g| g.a0)
                .fold(0.0f64, f64::max)
    });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(fp.rng_seed);
    let mut warm = match init {
        Some(p) => p.clone(),
        None => pslp::flat_start(case, &Variant::RucAcopf),
    };

    let mut u_prev: Vec<Vec<u8>> = u_init.to_vec();
    let mut alpha_prev = fp.alpha0;
    // Every u_in used so far with the alpha it was produced at.
    let mut used: Vec<(Vec<Vec<u8>>, f64)> = vec![(u_prev.clone(), fp.alpha0)];
    let mut resets = 0usize;
    let mut total_pslp = 0usize;
    let mut alpha_trace = vec![fp.alpha0];
    // Kept per iterate for the fallthrough: projection distance, rounded
    // schedule before any flip, and the iterate itself.
    let mut iterates: Vec<(f64, BinarySchedule, DecisionPoint)> = Vec::new();
    let mut fp_iterations = 0usize;

    let finish = |point: DecisionPoint,
                  commitment: Vec<Vec<u8>>,
                  stats: FpStats,
                  iter2: usize,
                  ac2: f64| {
        let feas = check_feasibility(&point, case, net, FEAS_TOL);
        let report = RunReport {
            rescale: rescale_mode,
            round: formula,
            penalty: pslp_fp.mu,
            iter1: 0,
            ac_feas1: f64::NAN,
            iter2,
            ac_feas2: ac2,
            uc_feasible: feas.uc_feasible,
            ac_feasible: feas.ac_feasible,
            feasible: feas.fully_feasible,
            cost: evaluate_cost(&point, case),
            time_s: start.elapsed().as_secs_f64(),
            commitment,
            relaxed_u: Vec::new(),
            relaxed_p: Vec::new(),
            fp: Some(stats),
        };
        (point, report)
    };

    for k in 1..=fp.maxit {
        fp_iterations = k;
        let variant = Variant::FpRuc {
            u_in: u_prev.clone(),
            alpha: alpha_prev,
            w_l1,
            w_uc,
        };
        let inst = NlpInstance::new(case, net, variant);
        let r = pslp::solve_nlp(&inst, &warm, pslp_fp);
        total_pslp += r.iterations;
        log::info!(
            "fp iteration {k}: alpha {alpha_prev:.4}, {} pslp iterations, viol {:.2e}",
            r.iterations,
            r.ac_violation
        );
        let u_hat = r.point.u_matrix();

        let integral = u_hat
            .iter()
            .flatten()
            .all(|&v| (v - v.round()).abs() <= FEAS_TOL);
        if integral {
            // Snap the commitment triplet onto exact binaries.
            let u_bin: Vec<Vec<u8>> = u_hat
                .iter()
                .map(|row| row.iter().map(|&v| v.round() as u8).collect())
                .collect();
            let u0: Vec<u8> = case.thermal_units.iter().map(|g| g.u0).collect();
            let (v_bin, w_bin) = derive_vw(&u_bin, &u0);
            let mut point = r.point.clone();
            for g in 0..ng {
                for t in 0..tf {
                    point.values[point.layout.u(g, t)] = u_bin[g][t] as f64;
                    point.values[point.layout.v(g, t)] = v_bin[g][t] as f64;
                    point.values[point.layout.w(g, t)] = w_bin[g][t] as f64;
                }
            }
            let stats = FpStats {
                iterations: k,
                resets,
                total_pslp_iters: total_pslp,
                seed: fp.rng_seed,
                alpha_trace,
                integral_exit: true,
            };
            let ac2 = acpf::ac_violation(&point, case, net);
            return finish(point, u_bin, stats, r.iterations, ac2);
        }

        let p_rel = r.point.p_matrix();
        let res_rel = r.point.p_res_matrix();
        let u_r = rounding::rescale(&u_hat, &p_rel, case, rescale_mode);
        let mut u_k = round_with(formula, &u_r, &p_rel, &res_rel, case, round_params);
        let dist: f64 = u_hat
            .iter()
            .zip(&u_k.u)
            .flat_map(|(hr, br)| hr.iter().zip(br).map(|(h, b)| (h - *b as f64).abs()))
            .sum();
        iterates.push((dist, u_k.clone(), r.point.clone()));
        warm = r.point;

        let mut alpha_k = alpha_prev * fp.phi_alpha;
        let stationary = used
            .iter()
            .any(|(u, a)| *u == u_k.u && a - alpha_k <= fp.delta_alpha);
        if stationary {
            resets += 1;
            if resets > fp.maxrst {
                log::info!("fp: reset budget exhausted after iteration {k}");
                break;
            }
            // Perturb: flip distinct commitment entries, then repair v/w.
            let mut pairs: Vec<(usize, usize)> = (0..ng)
                .flat_map(|g| (0..tf).map(move |t| (g, t)))
                .collect();
            pairs.shuffle(&mut rng);
            for &(g, t) in pairs.iter().take(fp.s_flips.min(pairs.len())) {
                u_k.u[g][t] ^= 1;
            }
            let u0: Vec<u8> = case.thermal_units.iter().map(|g| g.u0).collect();
            let (v, w) = derive_vw(&u_k.u, &u0);
            u_k.v = v;
            u_k.w = w;
            alpha_k = fp.alpha0 / (resets + 1) as f64;
            log::info!("fp: stationary point, reset {resets}, alpha back to {alpha_k:.4}");
        }
        alpha_trace.push(alpha_k);
        used.push((u_k.u.clone(), alpha_k));
        u_prev = u_k.u;
        alpha_prev = alpha_k;
    }

    // Fallthrough: fix the rounded binaries of the iterate closest to its
    // projection and solve the dispatch problem.
    let best = iterates
        .iter()
        .enumerate()
        .min_by(|(ia, (da, _, _)), (ib, (db, _, _))| {
            da.partial_cmp(db)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| i);
    let (point, commitment, iter2, ac2) = match best {
        Some(h) => {
            let schedule = iterates[h].1.clone();
            let r2 = solve_fixed(case, net, &schedule, pslp_acopf);
            total_pslp += r2.iterations;
            let ac2 = r2.ac_violation;
            (r2.point, schedule.u, r2.iterations, ac2)
        }
        None => {
            let ac2 = acpf::ac_violation(&warm, case, net);
            (warm, u_init.to_vec(), 0, ac2)
        }
    };
    let stats = FpStats {
        iterations: fp_iterations,
        resets,
        total_pslp_iters: total_pslp,
        seed: fp.rng_seed,
        alpha_trace,
        integral_exit: false,
    };
    finish(point, commitment, stats, iter2, ac2)
}

/// Full relax-and-round-with-FP pipeline: relax once, seed the pump with a
/// plain naive rounding, then pump with the configured formulas.
#[allow(clippy::too_many_arguments)]
pub fn fp_pipeline(
    case: &PowerCase,
    net: &NetworkMatrices,
    rescale_mode: RescaleMode,
    formula: RoundFormula,
    pslp1: &PslpParams,
    pslp_fp: &PslpParams,
    pslp_acopf: &PslpParams,
    fp: &FpParams,
    round_params: &RoundParams,
) -> (DecisionPoint, RunReport) {
    let inst1 = NlpInstance::new(case, net, Variant::RucAcopf);
    let init1 = pslp::flat_start(case, &Variant::RucAcopf);
    let r1 = pslp::solve_nlp(&inst1, &init1, pslp1);
    let u_rel = r1.point.u_matrix();
    let u_init = rounding::naive_round(&u_rel, case);
    let (point, mut report) = feasibility_pump(
        case,
        net,
        &u_init.u,
        Some(&r1.point),
        fp,
        pslp_fp,
        pslp_acopf,
        rescale_mode,
        formula,
        round_params,
    );
    report.iter1 = r1.iterations;
    report.ac_feas1 = r1.ac_violation;
    if let Some(stats) = report.fp.as_mut() {
        stats.total_pslp_iters += r1.iterations;
    }
    (point, report)
}

/// Run the relax-and-round grid for a list of step-1 penalty weights; the
/// dispatch step keeps the reference penalty.
pub fn penalty_sweep(
    case: &PowerCase,
    net: &NetworkMatrices,
    penalties: &[f64],
    rescales: &[RescaleMode],
    formulas: &[RoundFormula],
    round_params: &RoundParams,
) -> Vec<RunReport> {
    let mut out = Vec::new();
    for &penalty in penalties {
        for &formula in formulas {
            for &rescale in rescales {
                let pslp1 = PslpParams::with_penalty(penalty);
                let pslp2 = PslpParams::with_penalty(5e6);
                let (_, report) =
                    relax_and_round(case, net, rescale, formula, &pslp1, &pslp2, round_params);
                out.push(report);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::assemble;
    use crate::point::VariableLayout;
    use crate::testcases::{tiny_uc_case, two_bus_single_period};

    #[test]
    fn classifier_flags_are_independent() {
        // A schedule violating only the minimum-up window must flip the UC
        // flag while leaving the AC flag untouched.
        let mut case = tiny_uc_case();
        case.thermal_units[0].t_up = 3;
        case.thermal_units[0].u0 = 0;
        case.thermal_units[0].p0 = 0.0;
        case.thermal_units[0].dwell0 = 5;
        for row in case.demand.p.iter_mut().chain(case.demand.q.iter_mut()) {
            for v in row.iter_mut() {
                *v = 0.0;
            }
        }
        let net = assemble(&case).unwrap();
        let layout = VariableLayout::new(&case);
        let mut point = DecisionPoint::zeros(layout);
        for (i, bus) in case.buses.iter().enumerate() {
            for t in 0..case.horizon {
                point.values[layout.v_mag(i, t)] = 0.5 * (bus.v_min + bus.v_max);
            }
        }
        // On for a single hour then off again: breaks t_up = 3.
        point.values[layout.u(0, 1)] = 1.0;
        point.values[layout.v(0, 1)] = 1.0;
        point.values[layout.w(0, 2)] = 1.0;
        point.values[layout.p_g(0, 1)] = case.thermal_units[0].p_min;
        // Power balance at the only bus is violated by the injection; zero
        // it out by letting the unit produce nothing (domain violation is
        // not part of the UC/AC flags).
        point.values[layout.p_g(0, 1)] = 0.0;
        let report = check_feasibility(&point, &case, &net, FEAS_TOL);
        assert!(!report.uc_feasible);
        assert!(report.ac_feasible, "{:?}", report.worst);
    }

    #[test]
    fn classifier_matches_model_rows_on_random_points() {
        use crate::formulation::{build_skeleton, row_violation};
        use rand::{Rng, SeedableRng};
        let case = tiny_uc_case();
        let net = assemble(&case).unwrap();
        let model = build_skeleton(&case, &Variant::UcAcopf);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut point = DecisionPoint::zeros(model.layout);
            for g in 0..1 {
                let mut prev = case.thermal_units[g].u0;
                for t in 0..case.horizon {
                    let u = rng.gen_range(0..2u8);
                    point.values[model.layout.u(g, t)] = u as f64;
                    point.values[model.layout.v(g, t)] = u.saturating_sub(prev) as f64;
                    point.values[model.layout.w(g, t)] = prev.saturating_sub(u) as f64;
                    point.values[model.layout.p_g(g, t)] =
                        rng.gen_range(0.0..case.thermal_units[g].p_max);
                    prev = u;
                }
            }
            let report = check_feasibility(&point, &case, &net, FEAS_TOL);
            // The straight-loop classifier and the assembled rows agree on
            // the combinatorial families.
            let row_worst = row_violation(&model, &point.values);
            let loop_worst = ["logic", "min_up", "min_down", "ramp_up", "ramp_down"]
                .iter()
                .map(|f| report.family(f))
                .chain(["p_limits", "q_limits", "reserve_requirement"].iter().map(|f| report.family(f)))
                .fold(0.0f64, f64::max);
            assert!(
                (row_worst.max(0.0) - loop_worst.max(0.0)).abs() < 1e-9,
                "rows {row_worst} vs loops {loop_worst}"
            );
        }
    }

    #[test]
    fn zero_demand_relax_round_turns_everything_off() {
        let mut case = tiny_uc_case();
        for row in case.demand.p.iter_mut().chain(case.demand.q.iter_mut()) {
            for v in row.iter_mut() {
                *v = 0.0;
            }
        }
        // Start from an off state so the all-off schedule is reachable.
        case.thermal_units[0].u0 = 0;
        case.thermal_units[0].p0 = 0.0;
        case.thermal_units[0].dwell0 = 2;
        let net = assemble(&case).unwrap();
        let (point, report) = relax_and_round(
            &case,
            &net,
            RescaleMode::None,
            RoundFormula::UcEr,
            &PslpParams::with_penalty(5e6),
            &PslpParams::with_penalty(5e6),
            &RoundParams::default(),
        );
        assert!(report.feasible, "{:?}", report);
        assert_eq!(report.commitment, vec![vec![0, 0, 0]]);
        assert!(evaluate_cost(&point, &case).abs() < 1e-9);
    }

    #[test]
    fn fp_deterministic_under_fixed_seed() {
        let case = two_bus_single_period();
        let net = assemble(&case).unwrap();
        let fp = FpParams {
            maxit: 5,
            s_flips: 1,
            rng_seed: 7,
            ..Default::default()
        };
        let run = || {
            fp_pipeline(
                &case,
                &net,
                RescaleMode::ReRuc,
                RoundFormula::UcEr,
                &PslpParams::with_penalty(5e6),
                &PslpParams::with_penalty(500.0),
                &PslpParams::with_penalty(5e6),
                &fp,
                &RoundParams::default(),
            )
        };
        let (pa, ra) = run();
        let (pb, rb) = run();
        assert_eq!(pa.values, pb.values);
        assert_eq!(ra.cost, rb.cost);
        assert_eq!(
            ra.fp.as_ref().unwrap().alpha_trace,
            rb.fp.as_ref().unwrap().alpha_trace
        );
    }

    #[test]
    fn fp_alpha_sequence_decays_geometrically() {
        let case = two_bus_single_period();
        let net = assemble(&case).unwrap();
        let fp = FpParams {
            maxit: 4,
            s_flips: 1,
            ..Default::default()
        };
        let (_, report) = fp_pipeline(
            &case,
            &net,
            RescaleMode::None,
            RoundFormula::Nr,
            &PslpParams::with_penalty(5e6),
            &PslpParams::with_penalty(500.0),
            &PslpParams::with_penalty(5e6),
            &fp,
            &RoundParams::default(),
        );
        let stats = report.fp.unwrap();
        // Between resets alpha follows alpha0 * phi^k.
        let mut expect = fp.alpha0;
        let mut r = 0usize;
        for (k, &a) in stats.alpha_trace.iter().enumerate() {
            if k == 0 {
                assert_eq!(a, fp.alpha0);
                continue;
            }
            expect *= fp.phi_alpha;
            if (a - expect).abs() > 1e-12 {
                // Must be a reset value alpha0 / (r + 1).
                r += 1;
                let reset_val = fp.alpha0 / (r + 1) as f64;
                assert!(
                    (a - reset_val).abs() < 1e-12,
                    "alpha {a} at step {k} matches neither decay {expect} nor reset {reset_val}"
                );
                expect = a;
            }
        }
    }
}
