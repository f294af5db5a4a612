//! Bundled example systems used by the test suites and the documentation.

use crate::case::{load_case_str, PowerCase};

/// The 6-bus day-ahead test system: 6 buses, 7 branches (two of them
/// transformers), three thermal units and a 24-hour load profile.
pub fn six_bus() -> PowerCase {
    load_case_str(SIX_BUS_JSON).expect("bundled 6-bus case is valid")
}

pub const SIX_BUS_JSON: &str = include_str!("../data/six_bus.json");

/// One unit on one bus over three hours; no network to speak of.
pub fn tiny_uc_case() -> PowerCase {
    load_case_str(
        r#"{
        "base_mva": 100.0, "horizon": 3,
        "buses": [{"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true}],
        "branches": [],
        "thermal_units": [
            {"bus": 1, "a2": 0.0001, "a1": 20.0, "a0": 10.0, "c_up": 50.0, "c_down": 25.0,
             "p_min": 20.0, "p_max": 150.0, "q_min": -40.0, "q_max": 60.0,
             "r_up": 80.0, "r_down": 80.0, "s_up": 30.0, "s_down": 30.0,
             "t_up": 1, "t_down": 1, "u0": 1, "p0": 25.0, "dwell0": 2}
        ],
        "condensers": [],
        "demand": {"buses": [1], "p": [[20.0, 25.0, 22.0]], "q": [[5.0, 6.0, 5.5]]},
        "reserve": [0.0, 0.0, 0.0]
    }"#,
    )
    .expect("tiny case is valid")
}

/// Reference bus with one generator feeding a load bus over one line.
/// Single period; the smallest system with real power flow.
pub fn two_bus_single_period() -> PowerCase {
    load_case_str(
        r#"{
        "base_mva": 100.0, "horizon": 1,
        "buses": [
            {"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true, "theta0": 0.0},
            {"id": 2, "v_min": 0.95, "v_max": 1.05}
        ],
        "branches": [
            {"from_bus": 1, "to_bus": 2, "r": 0.02, "x": 0.2, "b_charge": 0.0, "i_max": 1.5}
        ],
        "thermal_units": [
            {"bus": 1, "a2": 0.01, "a1": 20.0, "a0": 50.0, "c_up": 100.0, "c_down": 50.0,
             "p_min": 10.0, "p_max": 200.0, "q_min": -100.0, "q_max": 150.0,
             "r_up": 200.0, "r_down": 200.0, "s_up": 200.0, "s_down": 200.0,
             "t_up": 1, "t_down": 1, "u0": 1, "p0": 80.0, "dwell0": 4}
        ],
        "condensers": [],
        "demand": {"buses": [2], "p": [[80.0]], "q": [[20.0]]},
        "reserve": [0.0]
    }"#,
    )
    .expect("two-bus case is valid")
}
