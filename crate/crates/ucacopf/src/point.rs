//! Decision-vector layout shared by every problem variant.
//!
//! All variants use the same column indexing; they differ only in bounds and
//! objective. Blocks, in order: u, v, w, P, Q, P_res per thermal unit and
//! hour, then condenser Q, then voltage magnitude and angle per bus and hour.

use crate::case::PowerCase;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n_thermal: usize,
    pub n_condensers: usize,
    pub n_buses: usize,
    pub horizon: usize,
    u0: usize,
    v0: usize,
    w0: usize,
    pg0: usize,
    qg0: usize,
    pres0: usize,
    qsc0: usize,
    vm0: usize,
    th0: usize,
    pub total: usize,
}

impl VariableLayout {
    pub fn new(case: &PowerCase) -> Self {
        let (ng, nc, nb, tf) = (
            case.n_thermal(),
            case.n_condensers(),
            case.n_buses(),
            case.horizon,
        );
        let gt = ng * tf;
        let u0 = 0;
        let v0 = u0 + gt;
        let w0 = v0 + gt;
        let pg0 = w0 + gt;
        let qg0 = pg0 + gt;
        let pres0 = qg0 + gt;
        let qsc0 = pres0 + gt;
        let vm0 = qsc0 + nc * tf;
        let th0 = vm0 + nb * tf;
        Self {
            n_thermal: ng,
            n_condensers: nc,
            n_buses: nb,
            horizon: tf,
            u0,
            v0,
            w0,
            pg0,
            qg0,
            pres0,
            qsc0,
            vm0,
            th0,
            total: th0 + nb * tf,
        }
    }

    #[inline]
    pub fn u(&self, g: usize, t: usize) -> usize {
        self.u0 + g * self.horizon + t
    }
    #[inline]
    pub fn v(&self, g: usize, t: usize) -> usize {
        self.v0 + g * self.horizon + t
    }
    #[inline]
    pub fn w(&self, g: usize, t: usize) -> usize {
        self.w0 + g * self.horizon + t
    }
    #[inline]
    pub fn p_g(&self, g: usize, t: usize) -> usize {
        self.pg0 + g * self.horizon + t
    }
    #[inline]
    pub fn q_g(&self, g: usize, t: usize) -> usize {
        self.qg0 + g * self.horizon + t
    }
    #[inline]
    pub fn p_res(&self, g: usize, t: usize) -> usize {
        self.pres0 + g * self.horizon + t
    }
    #[inline]
    pub fn q_sc(&self, c: usize, t: usize) -> usize {
        self.qsc0 + c * self.horizon + t
    }
    #[inline]
    pub fn v_mag(&self, i: usize, t: usize) -> usize {
        self.vm0 + i * self.horizon + t
    }
    #[inline]
    pub fn theta(&self, i: usize, t: usize) -> usize {
        self.th0 + i * self.horizon + t
    }
}

/// Full variable assignment over the horizon (per-unit, radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub layout: VariableLayout,
    pub values: Vec<f64>,
}

impl DecisionPoint {
    pub fn zeros(layout: VariableLayout) -> Self {
        Self {
            values: vec![0.0; layout.total],
            layout,
        }
    }

    #[inline]
    pub fn u(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.u(g, t)]
    }
    #[inline]
    pub fn v(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.v(g, t)]
    }
    #[inline]
    pub fn w(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.w(g, t)]
    }
    #[inline]
    pub fn p_g(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.p_g(g, t)]
    }
    #[inline]
    pub fn q_g(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.q_g(g, t)]
    }
    #[inline]
    pub fn p_res(&self, g: usize, t: usize) -> f64 {
        self.values[self.layout.p_res(g, t)]
    }
    #[inline]
    pub fn q_sc(&self, c: usize, t: usize) -> f64 {
        self.values[self.layout.q_sc(c, t)]
    }
    #[inline]
    pub fn v_mag(&self, i: usize, t: usize) -> f64 {
        self.values[self.layout.v_mag(i, t)]
    }
    #[inline]
    pub fn theta(&self, i: usize, t: usize) -> f64 {
        self.values[self.layout.theta(i, t)]
    }

    /// Relaxed commitment as a g-by-t matrix.
    pub fn u_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.layout.n_thermal)
            .map(|g| (0..self.layout.horizon).map(|t| self.u(g, t)).collect())
            .collect()
    }

    pub fn p_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.layout.n_thermal)
            .map(|g| (0..self.layout.horizon).map(|t| self.p_g(g, t)).collect())
            .collect()
    }

    pub fn p_res_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.layout.n_thermal)
            .map(|g| (0..self.layout.horizon).map(|t| self.p_res(g, t)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case_str;

    #[test]
    fn blocks_are_disjoint_and_cover_total() {
        let case = load_case_str(
            r#"{
            "base_mva": 100.0, "horizon": 3,
            "buses": [
                {"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true},
                {"id": 2, "v_min": 0.95, "v_max": 1.05}
            ],
            "branches": [{"from_bus": 1, "to_bus": 2, "r": 0.01, "x": 0.1, "i_max": 1.0}],
            "thermal_units": [
                {"bus": 1, "a2": 0.0, "a1": 10.0, "a0": 0.0, "c_up": 0.0, "c_down": 0.0,
                 "p_min": 10.0, "p_max": 100.0, "q_min": -50.0, "q_max": 50.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 100.0, "s_down": 100.0,
                 "t_up": 1, "t_down": 1, "u0": 0, "p0": 0.0, "dwell0": 1}
            ],
            "condensers": [{"bus": 2, "q_min": -30.0, "q_max": 30.0}],
            "demand": {"buses": [2], "p": [[10.0, 10.0, 10.0]], "q": [[0.0, 0.0, 0.0]]},
            "reserve": [0.0, 0.0, 0.0]
        }"#,
        )
        .unwrap();
        let layout = VariableLayout::new(&case);
        let mut seen = vec![false; layout.total];
        let mut mark = |idx: usize| {
            assert!(!seen[idx], "column {idx} assigned twice");
            seen[idx] = true;
        };
        for g in 0..1 {
            for t in 0..3 {
                mark(layout.u(g, t));
                mark(layout.v(g, t));
                mark(layout.w(g, t));
                mark(layout.p_g(g, t));
                mark(layout.q_g(g, t));
                mark(layout.p_res(g, t));
            }
        }
        for t in 0..3 {
            mark(layout.q_sc(0, t));
        }
        for i in 0..2 {
            for t in 0..3 {
                mark(layout.v_mag(i, t));
                mark(layout.theta(i, t));
            }
        }
        assert!(seen.iter().all(|&s| s), "layout has gaps");
    }
}
