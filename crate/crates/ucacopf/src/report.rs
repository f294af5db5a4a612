//! Report emission: the summary CSV, per-run JSON traces and plot-data
//! files (commitment Gantt and per-unit generation stack).

use crate::case::PowerCase;
use crate::drivers::RunReport;
use crate::point::DecisionPoint;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub const SUMMARY_HEADER: &str =
    "rescale,round,penalty,iter1,acfeas1,iter2,acfeas2,feasible,cost,time_s";

/// One summary row with the fixed column formatting: violations in
/// scientific notation, dollars rounded to integers, seconds to tenths.
pub fn summary_row(r: &RunReport) -> String {
    format!(
        "{},{},{:e},{},{},{},{},{},{},{:.1}",
        r.rescale,
        r.round,
        r.penalty,
        r.iter1,
        sci(r.ac_feas1),
        r.iter2,
        sci(r.ac_feas2),
        r.feasible,
        r.cost.round() as i64,
        r.time_s,
    )
}

fn sci(v: f64) -> String {
    if v.is_nan() {
        "-".to_string()
    } else {
        format!("{v:.2e}")
    }
}

pub fn summary_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&summary_row(r));
        out.push('\n');
    }
    out
}

/// Commitment Gantt data: one row per unit and hour with the on/off flag.
pub fn gantt_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run,unit,hour,on\n");
    for (k, r) in reports.iter().enumerate() {
        for (g, row) in r.commitment.iter().enumerate() {
            for (t, &on) in row.iter().enumerate() {
                writeln!(out, "{},{},{},{}", k, g + 1, t + 1, on).unwrap();
            }
        }
    }
    out
}

/// Generation stack data: active power per unit and hour in MW.
pub fn generation_csv(point: &DecisionPoint, case: &PowerCase) -> String {
    let mut out = String::from("unit,hour,p_mw,q_mvar\n");
    for g in 0..case.n_thermal() {
        for t in 0..case.horizon {
            writeln!(
                out,
                "{},{},{:.3},{:.3}",
                g + 1,
                t + 1,
                point.p_g(g, t) * case.base_mva,
                point.q_g(g, t) * case.base_mva,
            )
            .unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct RunTrace<'a> {
    report: &'a RunReport,
    point: &'a DecisionPoint,
}

/// Write summary.csv, runs/*.json and the plot-data files into a directory.
pub fn emit_reports(
    reports: &[(RunReport, DecisionPoint)],
    case: &PowerCase,
    dir: &Path,
) -> io::Result<()> {
    fs::create_dir_all(dir.join("runs"))?;
    let rows: Vec<RunReport> = reports.iter().map(|(r, _)| r.clone()).collect();
    fs::write(dir.join("summary.csv"), summary_csv(&rows))?;
    fs::write(dir.join("gantt.csv"), gantt_csv(&rows))?;
    if let Some((_, point)) = reports.last() {
        fs::write(dir.join("generation.csv"), generation_csv(point, case))?;
    }
    for (k, (report, point)) in reports.iter().enumerate() {
        let name = format!(
            "runs/run{:03}_{}_{}_{:e}.json",
            k, report.rescale, report.round, report.penalty
        );
        let trace = RunTrace { report, point };
        fs::write(dir.join(name), serde_json::to_string_pretty(&trace)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::RunReport;
    use crate::rounding::{RescaleMode, RoundFormula};

    fn sample_report() -> RunReport {
        RunReport {
            rescale: RescaleMode::RePower,
            round: RoundFormula::UcEr,
            penalty: 5e6,
            iter1: 5,
            ac_feas1: 3.16e-13,
            iter2: 34,
            ac_feas2: 1.86e-8,
            uc_feasible: true,
            ac_feasible: true,
            feasible: true,
            cost: 101763.4,
            time_s: 4.03,
            commitment: vec![vec![1, 1], vec![0, 1]],
            relaxed_u: vec![],
            relaxed_p: vec![],
            fp: None,
        }
    }

    #[test]
    fn summary_row_formatting_snapshot() {
        let row = summary_row(&sample_report());
        assert_eq!(
            row,
            "re-power,uc-er,5e6,5,3.16e-13,34,1.86e-8,true,101763,4.0"
        );
        assert_eq!(row.split(',').count(), 10);
    }

    #[test]
    fn summary_csv_round_trips_fields() {
        let csv = summary_csv(&[sample_report()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SUMMARY_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "re-power");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 5e6);
        assert_eq!(fields[8].parse::<i64>().unwrap(), 101763);
        // No NaN leaks into emitted columns.
        assert!(!csv.contains("NaN"));
    }

    #[test]
    fn gantt_matches_commitment() {
        let csv = gantt_csv(&[sample_report()]);
        let on_hours: Vec<&str> = csv
            .lines()
            .filter(|l| l.starts_with("0,2,") && l.ends_with(",1"))
            .collect();
        assert_eq!(on_hours, vec!["0,2,2,1"]);
    }
}
