//! Grid data model: case file ingestion, validation and per-unit normalization.
//!
//! A [`PowerCase`] is the single source of truth for every builder in this
//! crate. Case files are JSON (see `docs/case-format.md` in the repository
//! root); all electrical quantities are stored internally in per-unit on
//! `base_mva`, angles in radians. A case is immutable once loaded.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("i/o error reading case: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed case file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid case: {0}")]
    Invalid(String),
}

/// A single validation failure: which field broke which rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub g_sh: f64,
    #[serde(default)]
    pub b_sh: f64,
    #[serde(default)]
    pub is_reference: bool,
    /// Reference angle, meaningful only when `is_reference`.
    #[serde(default)]
    pub theta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_charge: f64,
    #[serde(default = "one")]
    pub tap: f64,
    #[serde(default)]
    pub shift: f64,
    pub i_max: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThermalUnit {
    pub bus: usize,
    /// Quadratic production cost: a2·P² + a1·P + a0·u, P in MW at file level.
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub c_up: f64,
    pub c_down: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub r_up: f64,
    pub r_down: f64,
    pub s_up: f64,
    pub s_down: f64,
    pub t_up: usize,
    pub t_down: usize,
    pub u0: u8,
    pub p0: f64,
    /// Hours already spent in the initial on/off state before t=1.
    pub dwell0: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SyncCondenser {
    pub bus: usize,
    pub q_min: f64,
    pub q_max: f64,
}

/// Active/reactive demand series for the buses that carry load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DemandSeries {
    pub buses: Vec<usize>,
    /// `p[i][t]` is the active demand of `buses[i]` at hour `t`.
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl DemandSeries {
    /// Total system active demand at hour `t`.
    pub fn total_p(&self, t: usize) -> f64 {
        self.p.iter().map(|row| row[t]).sum()
    }

    /// Demand at a given bus id (0.0 if the bus carries no load).
    pub fn at_bus(&self, bus: usize, t: usize) -> (f64, f64) {
        match self.buses.iter().position(|&b| b == bus) {
            Some(i) => (self.p[i][t], self.q[i][t]),
            None => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum CaseUnits {
    /// MW / MVAr / $ per MWh at file level (converted on load).
    #[default]
    Physical,
    /// Already normalized; loading performs no conversion.
    PerUnit,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PowerCase {
    pub base_mva: f64,
    pub horizon: usize,
    #[serde(default)]
    pub angle_unit: AngleUnit,
    #[serde(default)]
    pub units: CaseUnits,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub thermal_units: Vec<ThermalUnit>,
    #[serde(default)]
    pub condensers: Vec<SyncCondenser>,
    pub demand: DemandSeries,
    pub reserve: Vec<f64>,
}

impl PowerCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_thermal(&self) -> usize {
        self.thermal_units.len()
    }

    pub fn n_condensers(&self) -> usize {
        self.condensers.len()
    }

    /// Position of a bus id in the bus array.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn reference_bus(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.is_reference)
            .expect("validated case has a reference bus")
    }

    /// Thermal units located at bus index `i`.
    pub fn thermal_at(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let id = self.buses[i].id;
        self.thermal_units
            .iter()
            .enumerate()
            .filter(move |(_, g)| g.bus == id)
            .map(|(k, _)| k)
    }

    pub fn condensers_at(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let id = self.buses[i].id;
        self.condensers
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.bus == id)
            .map(|(k, _)| k)
    }

    pub fn is_per_unit(&self) -> bool {
        self.units == CaseUnits::PerUnit
    }

    /// Convert MW/MVAr quantities to per-unit and angles to radians, in place.
    /// Idempotent: a case already in per-unit is returned unchanged.
    pub fn normalize(&mut self) {
        if self.is_per_unit() {
            return;
        }
        let base = self.base_mva;
        if self.angle_unit == AngleUnit::Degrees {
            for b in &mut self.buses {
                b.theta0 *= PI / 180.0;
            }
            for br in &mut self.branches {
                br.shift *= PI / 180.0;
            }
            self.angle_unit = AngleUnit::Radians;
        }
        for g in &mut self.thermal_units {
            g.a2 *= base * base;
            g.a1 *= base;
            for f in [
                &mut g.p_min,
                &mut g.p_max,
                &mut g.q_min,
                &mut g.q_max,
                &mut g.r_up,
                &mut g.r_down,
                &mut g.s_up,
                &mut g.s_down,
                &mut g.p0,
            ] {
                *f /= base;
            }
        }
        for c in &mut self.condensers {
            c.q_min /= base;
            c.q_max /= base;
        }
        for row in self.demand.p.iter_mut().chain(self.demand.q.iter_mut()) {
            for v in row.iter_mut() {
                *v /= base;
            }
        }
        for v in &mut self.reserve {
            *v /= base;
        }
        self.units = CaseUnits::PerUnit;
    }

    /// Check every type invariant; returns the full list of violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: &str| {
            out.push(Violation {
                field: field.to_string(),
                rule: rule.to_string(),
            })
        };

        if self.base_mva <= 0.0 {
            push("base_mva", "must be positive");
        }
        if self.horizon == 0 {
            push("horizon", "must be at least 1");
        }

        let n_ref = self.buses.iter().filter(|b| b.is_reference).count();
        if n_ref == 0 {
            push("buses", "no reference bus");
        } else if n_ref > 1 {
            push("buses", "multiple reference buses");
        }
        for (i, b) in self.buses.iter().enumerate() {
            if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
                push(&format!("buses[{i}].v_min"), "requires 0 < v_min <= v_max");
            }
            if self.buses.iter().filter(|o| o.id == b.id).count() > 1 {
                push(&format!("buses[{i}].id"), "duplicate bus id");
            }
        }

        for (l, br) in self.branches.iter().enumerate() {
            if br.from_bus == br.to_bus {
                push(&format!("branches[{l}]"), "from_bus equals to_bus");
            }
            if br.r == 0.0 && br.x == 0.0 {
                push(&format!("branches[{l}]"), "zero series impedance");
            }
            if br.tap <= 0.0 {
                push(&format!("branches[{l}].tap"), "must be positive");
            }
            if br.i_max <= 0.0 {
                push(&format!("branches[{l}].i_max"), "must be positive");
            }
            for (end, id) in [("from_bus", br.from_bus), ("to_bus", br.to_bus)] {
                if self.bus_index(id).is_none() {
                    push(&format!("branches[{l}].{end}"), "dangling bus reference");
                }
            }
        }

        for (g, u) in self.thermal_units.iter().enumerate() {
            let f = |name: &str| format!("thermal_units[{g}].{name}");
            if self.bus_index(u.bus).is_none() {
                push(&f("bus"), "dangling bus reference");
            }
            if u.p_min <= 0.0 {
                push(&f("p_min"), "p_min must be positive");
            }
            if u.p_min > u.p_max {
                push(&f("p_max"), "requires p_min <= p_max");
            }
            if u.q_min > u.q_max {
                push(&f("q_max"), "requires q_min <= q_max");
            }
            if u.a2 < 0.0 {
                push(&f("a2"), "must be nonnegative");
            }
            if u.t_up < 1 {
                push(&f("t_up"), "must be at least 1");
            }
            if u.t_down < 1 {
                push(&f("t_down"), "must be at least 1");
            }
            if u.u0 > 1 {
                push(&f("u0"), "must be 0 or 1");
            }
            if u.u0 == 0 && u.p0 != 0.0 {
                push(&f("p0"), "must be zero when u0 = 0");
            }
            if u.u0 == 1 && !(u.p_min <= u.p0 && u.p0 <= u.p_max) {
                push(&f("p0"), "must lie in [p_min, p_max] when u0 = 1");
            }
            if u.r_up < 0.0 || u.r_down < 0.0 || u.s_up < 0.0 || u.s_down < 0.0 {
                push(&f("ramps"), "ramp limits must be nonnegative");
            }
        }

        for (c, sc) in self.condensers.iter().enumerate() {
            if self.bus_index(sc.bus).is_none() {
                push(&format!("condensers[{c}].bus"), "dangling bus reference");
            }
            if sc.q_min > sc.q_max {
                push(&format!("condensers[{c}].q_max"), "requires q_min <= q_max");
            }
        }

        if self.demand.p.len() != self.demand.buses.len()
            || self.demand.q.len() != self.demand.buses.len()
        {
            push("demand", "one p and q series required per demand bus");
        }
        for (i, id) in self.demand.buses.iter().enumerate() {
            if self.bus_index(*id).is_none() {
                push(&format!("demand.buses[{i}]"), "dangling bus reference");
            }
        }
        for (name, rows) in [("p", &self.demand.p), ("q", &self.demand.q)] {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.horizon {
                    push(&format!("demand.{name}[{i}]"), "series length mismatch");
                }
            }
        }
        if self.reserve.len() != self.horizon {
            push("reserve", "series length mismatch");
        }
        if self.reserve.iter().any(|v| *v < 0.0) {
            push("reserve", "values must be nonnegative");
        }

        out
    }
}

/// Load, validate and normalize a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<PowerCase, CaseError> {
    let text = std::fs::read_to_string(path)?;
    load_case_str(&text)
}

pub fn load_case_str(text: &str) -> Result<PowerCase, CaseError> {
    let mut case: PowerCase = serde_json::from_str(text)?;
    let violations = case.validate();
    if !violations.is_empty() {
        let msg = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CaseError::Invalid(msg));
    }
    case.normalize();
    Ok(case)
}

/// Serialize a normalized case. The output is marked `per_unit`, so loading
/// it back performs no conversion and reproduces the case bit for bit.
pub fn serialize_case(case: &PowerCase) -> String {
    serde_json::to_string_pretty(case).expect("case serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus_json() -> String {
        r#"{
            "base_mva": 100.0,
            "horizon": 2,
            "buses": [
                {"id": 1, "v_min": 0.95, "v_max": 1.05, "is_reference": true, "theta0": 0.0},
                {"id": 2, "v_min": 0.95, "v_max": 1.05}
            ],
            "branches": [
                {"from_bus": 1, "to_bus": 2, "r": 0.01, "x": 0.1, "i_max": 1.0}
            ],
            "thermal_units": [
                {"bus": 1, "a2": 0.01, "a1": 10.0, "a0": 5.0, "c_up": 100.0, "c_down": 50.0,
                 "p_min": 50.0, "p_max": 220.0, "q_min": -50.0, "q_max": 100.0,
                 "r_up": 100.0, "r_down": 100.0, "s_up": 60.0, "s_down": 60.0,
                 "t_up": 1, "t_down": 1, "u0": 1, "p0": 100.0, "dwell0": 2}
            ],
            "condensers": [],
            "demand": {"buses": [2], "p": [[90.0, 80.0]], "q": [[30.0, 25.0]]},
            "reserve": [0.0, 0.0]
        }"#
        .to_string()
    }

    #[test]
    fn loads_and_normalizes_to_per_unit() {
        let case = load_case_str(&two_bus_json()).unwrap();
        assert!(case.is_per_unit());
        let g = &case.thermal_units[0];
        assert_eq!(g.p_max, 2.2);
        assert_eq!(g.p_min, 0.5);
        // a1 in $/MWh becomes $/pu-h, a2 in $/MW^2h becomes $/pu^2-h
        assert_eq!(g.a1, 1000.0);
        assert_eq!(g.a2, 100.0);
        assert_eq!(case.demand.p[0][0], 0.9);
    }

    #[test]
    fn rejects_two_reference_buses() {
        let text = two_bus_json().replace(
            r#"{"id": 2, "v_min": 0.95, "v_max": 1.05}"#,
            r#"{"id": 2, "v_min": 0.95, "v_max": 1.05, "is_reference": true}"#,
        );
        let err = load_case_str(&text).unwrap_err();
        assert!(err.to_string().contains("multiple reference buses"));
    }

    #[test]
    fn rejects_nonpositive_p_min() {
        let text = two_bus_json().replace(r#""p_min": 50.0"#, r#""p_min": 0.0"#);
        let err = load_case_str(&text).unwrap_err();
        assert!(err.to_string().contains("p_min must be positive"));
    }

    #[test]
    fn rejects_series_length_mismatch() {
        let text = two_bus_json().replace("[[90.0, 80.0]]", "[[90.0]]");
        let err = load_case_str(&text).unwrap_err();
        assert!(err.to_string().contains("series length mismatch"));
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut case = load_case_str(&two_bus_json()).unwrap();
        let snapshot = case.clone();
        case.normalize();
        assert_eq!(case, snapshot);
    }

    #[test]
    fn round_trips_bit_exact() {
        let case = load_case_str(&two_bus_json()).unwrap();
        let reparsed = load_case_str(&serialize_case(&case)).unwrap();
        assert_eq!(case, reparsed);
    }

    #[test]
    fn single_field_mutations_are_rejected() {
        // Each mutation breaks exactly one invariant.
        let mutations = [
            (r#""from_bus": 1"#, r#""from_bus": 2"#),            // self loop
            (r#""r": 0.01, "x": 0.1"#, r#""r": 0.0, "x": 0.0"#), // zero impedance
            (r#""i_max": 1.0"#, r#""i_max": -1.0"#),
            (r#""t_up": 1"#, r#""t_up": 0"#),
            (r#""u0": 1"#, r#""u0": 0"#), // p0 nonzero while off
            (r#""buses": [2]"#, r#""buses": [7]"#), // dangling demand bus
            (r#""reserve": [0.0, 0.0]"#, r#""reserve": [0.0]"#),
            (r#""reserve": [0.0, 0.0]"#, r#""reserve": [-1.0, 0.0]"#),
            (r#""a2": 0.01"#, r#""a2": -0.01"#),
            (r#""v_min": 0.95, "v_max": 1.05, "is_reference": true"#,
             r#""v_min": 1.15, "v_max": 1.05, "is_reference": true"#),
        ];
        for (from, to) in mutations {
            let text = two_bus_json().replace(from, to);
            assert_ne!(text, two_bus_json(), "mutation {from} -> {to} not applied");
            assert!(
                load_case_str(&text).is_err(),
                "mutation {from} -> {to} was accepted"
            );
        }
    }
}
