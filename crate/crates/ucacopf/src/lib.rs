//! Feasible-point heuristics for the unit commitment problem with AC power
//! flow constraints (UC-ACOPF).
//!
//! The library relaxes the commitment binaries, solves the resulting
//! non-convex NLP with a penalized sequential linear programming method,
//! rescales and rounds the relaxed commitment, and re-solves the dispatch
//! with the binaries fixed. A feasibility-pump driver combines the same
//! building blocks iteratively. See the README for the pipeline overview
//! and CLI usage.

pub mod acpf;
pub mod case;
pub mod formulation;
pub mod lp;
pub mod pslp;
pub mod rounding;
pub mod drivers;
pub mod report;
pub mod network;
pub mod point;
pub mod testcases;

pub use case::{load_case, PowerCase};
pub use point::{DecisionPoint, VariableLayout};
