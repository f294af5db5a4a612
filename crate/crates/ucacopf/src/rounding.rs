//! Rescaling strategies and rounding formulas that map relaxed commitments
//! to binary schedules.
//!
//! The enhanced formulas walk the hours forward, committing units from the
//! highest rescaled values down while tracking committed power against the
//! system demand, a slack-power tracker (power committed above the minimum
//! levels, ramp-capped) and the potential headroom of committed units. The
//! UC variant additionally carries the minimum up/down state so its output
//! satisfies the combinatorial constraints for any input.

use crate::case::PowerCase;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RescaleMode {
    #[default]
    None,
    ReRuc,
    RePower,
}

impl std::fmt::Display for RescaleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RescaleMode::None => "none",
            RescaleMode::ReRuc => "re-ruc",
            RescaleMode::RePower => "re-power",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RoundFormula {
    #[default]
    Nr,
    Er,
    UcEr,
}

impl std::fmt::Display for RoundFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoundFormula::Nr => "nr",
            RoundFormula::Er => "er",
            RoundFormula::UcEr => "uc-er",
        })
    }
}

/// Grouping of the rescaled values into descending intervals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoundParams {
    /// Interval width in (0, 1]; 0 selects strict descending order.
    pub level_width: f64,
}

impl Default for RoundParams {
    fn default() -> Self {
        Self { level_width: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySchedule {
    pub u: Vec<Vec<u8>>,
    pub v: Vec<Vec<u8>>,
    pub w: Vec<Vec<u8>>,
}

/// Schedule plus the per-hour demand-coverage verdict of the enhanced
/// formulas ("the rounding procedure may have failed" hours).
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub schedule: BinarySchedule,
    pub coverage_failed: Vec<bool>,
}

/// Rescale the relaxed commitment into the quantity that gets rounded.
/// Values are deliberately not clipped at 1; the enhanced formulas treat
/// anything at or above 1 as a forced commitment.
pub fn rescale(
    u_relaxed: &[Vec<f64>],
    p_relaxed: &[Vec<f64>],
    case: &PowerCase,
    mode: RescaleMode,
) -> Vec<Vec<f64>> {
    case.thermal_units
        .iter()
        .enumerate()
        .map(|(g, unit)| {
            (0..case.horizon)
                .map(|t| match mode {
                    RescaleMode::None => u_relaxed[g][t],
                    RescaleMode::ReRuc => u_relaxed[g][t] * unit.p_max / unit.p_min,
                    RescaleMode::RePower => p_relaxed[g][t] / unit.p_min,
                })
                .collect()
        })
        .collect()
}

/// Fixed-threshold rounding: strictly above one half commits.
pub fn naive_round(u_r: &[Vec<f64>], case: &PowerCase) -> BinarySchedule {
    let u: Vec<Vec<u8>> = u_r
        .iter()
        .map(|row| row.iter().map(|&v| u8::from(v > 0.5)).collect())
        .collect();
    let u0: Vec<u8> = case.thermal_units.iter().map(|g| g.u0).collect();
    let (v, w) = derive_vw(&u, &u0);
    BinarySchedule { u, v, w }
}

/// Start/stop indicators recovered from a binary commitment.
pub fn derive_vw(u: &[Vec<u8>], u0: &[u8]) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let mut v = Vec::with_capacity(u.len());
    let mut w = Vec::with_capacity(u.len());
    for (g, row) in u.iter().enumerate() {
        let mut vg = Vec::with_capacity(row.len());
        let mut wg = Vec::with_capacity(row.len());
        let mut prev = u0[g];
        for &cur in row {
            vg.push(cur.saturating_sub(prev));
            wg.push(prev.saturating_sub(cur));
            prev = cur;
        }
        v.push(vg);
        w.push(wg);
    }
    (v, w)
}

/// Enhanced rounding: demand/slack/potential-power trackers, no minimum
/// up/down bookkeeping.
pub fn er_round(
    u_r: &[Vec<f64>],
    p_relaxed: &[Vec<f64>],
    p_res_relaxed: &[Vec<f64>],
    case: &PowerCase,
    params: &RoundParams,
) -> RoundOutcome {
    enhanced_round(u_r, p_relaxed, p_res_relaxed, case, params, false)
}

/// Enhanced rounding with the combinatorial state enforced: units inside an
/// active minimum-up window are forced on, units inside a minimum-down
/// window cannot commit. The output satisfies the on/off logic and minimum
/// up/down constraints for arbitrary inputs.
pub fn ucer_round(
    u_r: &[Vec<f64>],
    p_relaxed: &[Vec<f64>],
    p_res_relaxed: &[Vec<f64>],
    case: &PowerCase,
    params: &RoundParams,
) -> RoundOutcome {
    enhanced_round(u_r, p_relaxed, p_res_relaxed, case, params, true)
}

fn enhanced_round(
    u_r: &[Vec<f64>],
    p_relaxed: &[Vec<f64>],
    p_res_relaxed: &[Vec<f64>],
    case: &PowerCase,
    params: &RoundParams,
    enforce_updown: bool,
) -> RoundOutcome {
    let ng = case.n_thermal();
    let tf = case.horizon;
    let mut u = vec![vec![0u8; tf]; ng];
    let mut p = p_relaxed.to_vec();
    let mut coverage_failed = vec![false; tf];

    // Consecutive on/off hours ending at the previous step, seeded from the
    // initial state.
    let mut on_len: Vec<usize> = case
        .thermal_units
        .iter()
        .map(|g| if g.u0 == 1 { g.dwell0 } else { 0 })
        .collect();
    let mut off_len: Vec<usize> = case
        .thermal_units
        .iter()
        .map(|g| if g.u0 == 0 { g.dwell0 } else { 0 })
        .collect();

    for t in 0..tf {
        let demand = case.demand.total_p(t);
        let mut committed_power = 0.0;
        let mut potential = 0.0;
        let mut slack = 0.0;

        let mut commit = |g: usize,
                          u: &mut Vec<Vec<u8>>,
                          p: &mut Vec<Vec<f64>>,
                          committed_power: &mut f64,
                          potential: &mut f64,
                          slack: &mut f64| {
            let unit = &case.thermal_units[g];
            u[g][t] = 1;
            let slack_cap = p[g][t] - unit.p_min;
            p[g][t] = p[g][t].max(unit.p_min);
            *committed_power += p[g][t];
            let (u_prev, p_prev) = if t == 0 {
                (unit.u0, unit.p0)
            } else {
                (u[g][t - 1], p[g][t - 1])
            };
            *potential += if u_prev == 1 {
                unit.r_up - p[g][t] - p_res_relaxed[g][t] + p_prev
            } else {
                unit.s_up - p[g][t] - p_res_relaxed[g][t]
            };
            *slack += (unit.r_down - p_prev + p[g][t]).min(slack_cap);
        };

        // Forced set: live minimum-up windows plus everything at or above 1
        // after rescaling; minimum-down windows are excluded outright.
        let mut free: Vec<usize> = Vec::new();
        for g in 0..ng {
            let unit = &case.thermal_units[g];
            let in_up_window = enforce_updown && on_len[g] > 0 && on_len[g] < unit.t_up;
            let in_down_window = enforce_updown && off_len[g] > 0 && off_len[g] < unit.t_down;
            if in_up_window || (u_r[g][t] >= 1.0 && !in_down_window) {
                commit(
                    g,
                    &mut u,
                    &mut p,
                    &mut committed_power,
                    &mut potential,
                    &mut slack,
                );
            } else if !in_down_window {
                free.push(g);
            }
        }

        // Group the free units into descending levels; a zero width means
        // strict value ordering (one unit per level). Ties keep case order.
        let levels: Vec<Vec<usize>> = if params.level_width <= 0.0 {
            let mut sorted = free.clone();
            sorted.sort_by(|&a, &b| {
                u_r[b][t]
                    .partial_cmp(&u_r[a][t])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            sorted.into_iter().map(|g| vec![g]).collect()
        } else {
            let width = params.level_width;
            let n_levels = (1.0 / width).ceil() as usize;
            let mut buckets = vec![Vec::new(); n_levels];
            for &g in &free {
                let val = u_r[g][t].clamp(0.0, 1.0);
                let k = (((1.0 - val) / width).floor() as usize).min(n_levels - 1);
                buckets[k].push(g);
            }
            buckets
        };

        'levels: for level in &levels {
            let committed_reserve: f64 = (0..ng)
                .filter(|&g| u[g][t] == 1)
                .map(|g| p_res_relaxed[g][t])
                .sum();
            if committed_power > demand && committed_reserve + potential >= case.reserve[t] {
                break 'levels;
            }
            for &g in level {
                let unit = &case.thermal_units[g];
                let deficit = unit.p_min - p[g][t];
                if slack > deficit && committed_power + unit.p_min - (slack - deficit) < demand {
                    commit(
                        g,
                        &mut u,
                        &mut p,
                        &mut committed_power,
                        &mut potential,
                        &mut slack,
                    );
                }
            }
        }

        if committed_power + potential < demand {
            coverage_failed[t] = true;
        }

        for g in 0..ng {
            if u[g][t] == 1 {
                on_len[g] += 1;
                off_len[g] = 0;
            } else {
                off_len[g] += 1;
                on_len[g] = 0;
            }
        }
    }

    let u0: Vec<u8> = case.thermal_units.iter().map(|g| g.u0).collect();
    let (v, w) = derive_vw(&u, &u0);
    RoundOutcome {
        schedule: BinarySchedule { u, v, w },
        coverage_failed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case_str;

    fn two_unit_case(demand: [f64; 1]) -> PowerCase {
        load_case_str(&format!(
            r#"{{
            "base_mva": 100.0, "horizon": 1,
            "buses": [{{"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true}}],
            "branches": [],
            "thermal_units": [
                {{"bus": 1, "a2": 0.0, "a1": 10.0, "a0": 0.0, "c_up": 0.0, "c_down": 0.0,
                 "p_min": 50.0, "p_max": 100.0, "q_min": -10.0, "q_max": 10.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 100.0, "s_down": 100.0,
                 "t_up": 1, "t_down": 1, "u0": 1, "p0": 60.0, "dwell0": 4}},
                {{"bus": 1, "a2": 0.0, "a1": 20.0, "a0": 0.0, "c_up": 0.0, "c_down": 0.0,
                 "p_min": 30.0, "p_max": 80.0, "q_min": -10.0, "q_max": 10.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 100.0, "s_down": 100.0,
                 "t_up": 1, "t_down": 1, "u0": 0, "p0": 0.0, "dwell0": 4}}
            ],
            "condensers": [],
            "demand": {{"buses": [1], "p": [[{}]], "q": [[0.0]]}},
            "reserve": [0.0]
        }}"#,
            demand[0]
        ))
        .unwrap()
    }

    #[test]
    fn rescale_formulas() {
        let case = two_unit_case([80.0]);
        // Unit 0: p_min 0.5, p_max 1.0 pu.
        let u_rel = vec![vec![0.4], vec![0.7]];
        let p_rel = vec![vec![0.6], vec![0.2]];
        let none = rescale(&u_rel, &p_rel, &case, RescaleMode::None);
        assert_eq!(none, u_rel);
        let reruc = rescale(&u_rel, &p_rel, &case, RescaleMode::ReRuc);
        assert!((reruc[0][0] - 0.8).abs() < 1e-12);
        let repower = rescale(&u_rel, &p_rel, &case, RescaleMode::RePower);
        assert!((repower[0][0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn rescale_monotone_in_input() {
        let case = two_unit_case([80.0]);
        let low = rescale(&vec![vec![0.3], vec![0.3]], &vec![vec![0.4], vec![0.4]], &case, RescaleMode::ReRuc);
        let high = rescale(&vec![vec![0.5], vec![0.3]], &vec![vec![0.4], vec![0.4]], &case, RescaleMode::ReRuc);
        assert!(high[0][0] > low[0][0]);
        let low = rescale(&vec![vec![0.3], vec![0.3]], &vec![vec![0.4], vec![0.4]], &case, RescaleMode::RePower);
        let high = rescale(&vec![vec![0.3], vec![0.3]], &vec![vec![0.6], vec![0.4]], &case, RescaleMode::RePower);
        assert!(high[0][0] > low[0][0]);
    }

    #[test]
    fn repower_threshold_matches_minimum_generation() {
        // u_r >= 1 exactly when the relaxed power covers the minimum.
        let case = two_unit_case([80.0]);
        let p_at_min = vec![vec![0.5], vec![0.3]];
        let scaled = rescale(&vec![vec![0.0], vec![0.0]], &p_at_min, &case, RescaleMode::RePower);
        assert!((scaled[0][0] - 1.0).abs() < 1e-12);
        assert!((scaled[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naive_threshold_is_strict() {
        let case = two_unit_case([80.0]);
        let s = naive_round(&vec![vec![0.6], vec![0.5]], &case);
        assert_eq!(s.u[0][0], 1);
        assert_eq!(s.u[1][0], 0);
        let s = naive_round(&vec![vec![1.3], vec![0.500001]], &case);
        assert_eq!(s.u[0][0], 1);
        assert_eq!(s.u[1][0], 1);
    }

    #[test]
    fn derive_vw_examples() {
        let u = vec![vec![0, 1, 1, 0]];
        let (v, w) = derive_vw(&u, &[0]);
        assert_eq!(v[0], vec![0, 1, 0, 0]);
        assert_eq!(w[0], vec![0, 0, 0, 1]);
        let u = vec![vec![1, 1, 1]];
        let (v, w) = derive_vw(&u, &[1]);
        assert_eq!(v[0], vec![0, 0, 0]);
        assert_eq!(w[0], vec![0, 0, 0]);
    }

    #[test]
    fn derive_vw_logic_residual_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let u0 = rng.gen_range(0..2u8);
            let u: Vec<u8> = (0..12).map(|_| rng.gen_range(0..2u8)).collect();
            let (v, w) = derive_vw(&[u.clone()], &[u0]);
            let mut prev = u0 as i32;
            for t in 0..12 {
                let resid = prev - u[t] as i32 + v[0][t] as i32 - w[0][t] as i32;
                assert_eq!(resid, 0);
                assert_eq!(v[0][t] * w[0][t], 0);
                prev = u[t] as i32;
            }
        }
    }

    #[test]
    fn er_commits_all_forced_units() {
        let case = two_unit_case([80.0]);
        let u_r = vec![vec![1.2], vec![1.0]];
        let p = vec![vec![0.6], vec![0.4]];
        let res = vec![vec![0.0], vec![0.0]];
        let out = er_round(&u_r, &p, &res, &case, &RoundParams::default());
        assert_eq!(out.schedule.u, vec![vec![1], vec![1]]);
    }

    #[test]
    fn er_zero_demand_commits_no_free_unit() {
        let case = two_unit_case([0.0]);
        let u_r = vec![vec![0.9], vec![0.8]];
        let p = vec![vec![0.0], vec![0.0]];
        let res = vec![vec![0.0], vec![0.0]];
        let out = er_round(&u_r, &p, &res, &case, &RoundParams::default());
        assert_eq!(out.schedule.u, vec![vec![0], vec![0]]);
        assert!(!out.coverage_failed[0]);
    }

    #[test]
    fn er_matches_straight_line_trace() {
        // Independent trace of the tracker arithmetic for two units in one
        // hour, written out by hand.
        let case = two_unit_case([80.0]);
        let u_r = vec![vec![0.9], vec![0.8]];
        let p = vec![vec![0.45], vec![0.2]];
        let res = vec![vec![0.0], vec![0.0]];
        // Unit 0 (level [0.9, 0.95)): deficit = 0.5 - 0.45 = 0.05,
        // slack 0 > 0.05 fails -> not committed. Unit 1 next level:
        // deficit = 0.3 - 0.2 = 0.1, slack 0 > 0.1 fails -> not committed.
        let out = er_round(&u_r, &p, &res, &case, &RoundParams::default());
        assert_eq!(out.schedule.u, vec![vec![0], vec![0]]);
        assert!(out.coverage_failed[0]);

        // Raise both relaxed powers above the minima: unit 0 commits
        // (deficit negative), then unit 1: slack = min(rd - p0 + p, p-pmin)
        // = min(1.0 - 0.6 + 0.55, 0.05) = 0.05 > deficit -0.1, and
        // committed + pmin - (slack - deficit) = 0.55 + 0.3 - 0.15 = 0.7
        // < 0.8 demand -> commits too.
        let p = vec![vec![0.55], vec![0.4]];
        let out = er_round(&u_r, &p, &res, &case, &RoundParams::default());
        assert_eq!(out.schedule.u, vec![vec![1], vec![1]]);
        assert!(!out.coverage_failed[0]);
    }

    #[test]
    fn ucer_forces_min_up_window() {
        // t_up = 3: a start must hold for three hours whatever the relaxed
        // values say afterwards.
        let case = load_case_str(
            r#"{
            "base_mva": 100.0, "horizon": 6,
            "buses": [{"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true}],
            "branches": [],
            "thermal_units": [
                {"bus": 1, "a2": 0.0, "a1": 10.0, "a0": 0.0, "c_up": 0.0, "c_down": 0.0,
                 "p_min": 20.0, "p_max": 100.0, "q_min": -10.0, "q_max": 10.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 100.0, "s_down": 100.0,
                 "t_up": 3, "t_down": 2, "u0": 0, "p0": 0.0, "dwell0": 5}
            ],
            "condensers": [],
            "demand": {"buses": [1], "p": [[0, 0, 30, 0, 0, 0]], "q": [[0,0,0,0,0,0]]},
            "reserve": [0,0,0,0,0,0]
        }"#,
        )
        .unwrap();
        let u_r = vec![vec![0.0, 0.0, 1.5, 0.0, 0.0, 0.0]];
        let p = vec![vec![0.0, 0.0, 0.4, 0.0, 0.0, 0.0]];
        let res = vec![vec![0.0; 6]];
        let out = ucer_round(&u_r, &p, &res, &case, &RoundParams::default());
        assert_eq!(out.schedule.u[0], vec![0, 0, 1, 1, 1, 0]);
    }

    #[test]
    fn ucer_min_down_exclusion_beats_forced_scale() {
        // Stopped at hour 1; even a rescaled value over 1 cannot recommit
        // the unit during the minimum-down window.
        let case = load_case_str(
            r#"{
            "base_mva": 100.0, "horizon": 5,
            "buses": [{"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true}],
            "branches": [],
            "thermal_units": [
                {"bus": 1, "a2": 0.0, "a1": 10.0, "a0": 0.0, "c_up": 0.0, "c_down": 0.0,
                 "p_min": 20.0, "p_max": 100.0, "q_min": -10.0, "q_max": 10.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 100.0, "s_down": 100.0,
                 "t_up": 1, "t_down": 3, "u0": 1, "p0": 20.0, "dwell0": 4}
            ],
            "condensers": [],
            "demand": {"buses": [1], "p": [[0, 0, 30, 30, 30]], "q": [[0,0,0,0,0]]},
            "reserve": [0,0,0,0,0]
        }"#,
        )
        .unwrap();
        let u_r = vec![vec![0.0, 0.0, 2.0, 2.0, 2.0]];
        let p = vec![vec![0.0, 0.0, 0.4, 0.4, 0.4]];
        let res = vec![vec![0.0; 5]];
        let out = ucer_round(&u_r, &p, &res, &case, &RoundParams::default());
        // Off at t=0 starts the down window (dwell ends); recommit allowed
        // from t=3 only.
        assert_eq!(out.schedule.u[0], vec![0, 0, 0, 1, 1]);
    }
}
