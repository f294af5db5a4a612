use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

use ucacopf::case::load_case;
use ucacopf::drivers::{self, check_feasibility, FpParams, RunReport, FEAS_TOL};
use ucacopf::network::assemble;
use ucacopf::point::DecisionPoint;
use ucacopf::pslp::PslpParams;
use ucacopf::report;
use ucacopf::rounding::{RescaleMode, RoundFormula, RoundParams};

#[derive(Parser)]
#[command(
    name = "ucacopf",
    version,
    about = "Relax-and-round heuristics for unit commitment with AC power flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the direct relax-and-round pipeline on a case
    Solve(SolveArgs),
    /// Classify a solution point against every constraint family
    Check(CheckArgs),
    /// Run the penalty / rescale / formula sweep grid
    Sweep(SweepArgs),
    /// Run the feasibility-pump pipeline
    Fp(FpArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Case file (JSON)
    #[arg(long)]
    case: Option<PathBuf>,
    /// Config file supplying defaults for any flag not given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rescaling strategy applied before rounding
    #[arg(long, value_parser = parse_rescale)]
    rescale: Option<RescaleMode>,
    /// Rounding formula
    #[arg(long, value_parser = parse_round)]
    round: Option<RoundFormula>,
    /// Grouping interval width for the enhanced formulas (0 = strict order)
    #[arg(long)]
    levels: Option<f64>,
    /// Slack penalty weight for the relaxation solve
    #[arg(long)]
    penalty: Option<f64>,
    /// Slack penalty weight for the fixed-binaries dispatch solve
    #[arg(long)]
    penalty2: Option<f64>,
    /// Step-norm stop tolerance for both solver stages
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration cap for both solver stages
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Pipeline name (only "relax-round" is valid here)
    #[arg(value_name = "PIPELINE", default_value = "relax-round")]
    pipeline: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    case: PathBuf,
    /// Solution point (JSON, as written by solve/fp into point.json)
    #[arg(long)]
    point: PathBuf,
    #[arg(long, default_value_t = FEAS_TOL)]
    tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated step-1 penalty weights
    #[arg(long, value_delimiter = ',')]
    penalties: Vec<f64>,
    /// Rescale modes to cover ("all" or comma-separated names)
    #[arg(long, default_value = "all")]
    rescales: String,
    /// Rounding formulas to cover ("all" or comma-separated names)
    #[arg(long, default_value = "all")]
    rounds: String,
}

#[derive(Args)]
struct FpArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seeds for the random flips; one pump run per seed
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Flip count as a fraction of the commitment variables
    #[arg(long, default_value_t = 0.25)]
    flip_frac: f64,
    /// Absolute flip count (overrides --flip-frac)
    #[arg(long)]
    flips: Option<usize>,
    #[arg(long, default_value_t = 50)]
    maxit: usize,
    #[arg(long, default_value_t = 3)]
    maxrst: usize,
    #[arg(long, default_value_t = 0.75)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.5)]
    phi_alpha: f64,
    #[arg(long, default_value_t = 0.075)]
    delta_alpha: f64,
    /// Slack penalty for the pump subproblems
    #[arg(long, default_value_t = 500.0)]
    fp_penalty: f64,
}

fn parse_rescale(s: &str) -> Result<RescaleMode, String> {
    match s {
        "none" => Ok(RescaleMode::None),
        "re-ruc" => Ok(RescaleMode::ReRuc),
        "re-power" => Ok(RescaleMode::RePower),
        _ => Err(format!("unknown rescale mode `{s}` (none|re-ruc|re-power)")),
    }
}

fn parse_round(s: &str) -> Result<RoundFormula, String> {
    match s {
        "nr" => Ok(RoundFormula::Nr),
        "er" => Ok(RoundFormula::Er),
        "uc-er" => Ok(RoundFormula::UcEr),
        _ => Err(format!("unknown rounding formula `{s}` (nr|er|uc-er)")),
    }
}

/// File-supplied defaults; every flag wins over its config counterpart.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    case: Option<PathBuf>,
    out: Option<PathBuf>,
    rescale: Option<RescaleMode>,
    round: Option<RoundFormula>,
    levels: Option<f64>,
    penalty: Option<f64>,
    penalty2: Option<f64>,
    eps: Option<f64>,
    max_iter: Option<usize>,
}

struct Resolved {
    case: PathBuf,
    out: Option<PathBuf>,
    rescale: RescaleMode,
    round: RoundFormula,
    round_params: RoundParams,
    penalty: f64,
    penalty2: f64,
    eps: f64,
    max_iter: usize,
}

impl Resolved {
    fn pslp(&self, mu: f64) -> PslpParams {
        PslpParams {
            mu,
            eps_stop: self.eps,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

fn resolve(common: &CommonArgs) -> Result<Resolved, String> {
    let config: ConfigFile = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("malformed config {}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let case = common
        .case
        .clone()
        .or(config.case)
        .ok_or("no case file given (use --case or a config file)")?;
    Ok(Resolved {
        case,
        out: common.out.clone().or(config.out),
        rescale: common.rescale.or(config.rescale).unwrap_or_default(),
        round: common.round.or(config.round).unwrap_or_default(),
        round_params: RoundParams {
            level_width: common.levels.or(config.levels).unwrap_or(0.05),
        },
        penalty: common.penalty.or(config.penalty).unwrap_or(5e6),
        penalty2: common.penalty2.or(config.penalty2).unwrap_or(5e6),
        eps: common.eps.or(config.eps).unwrap_or(1e-4),
        max_iter: common.max_iter.or(config.max_iter).unwrap_or(300),
    })
}

fn write_outputs(
    out: &Option<PathBuf>,
    case: &ucacopf::PowerCase,
    results: &[(RunReport, DecisionPoint)],
) -> Result<(), String> {
    if let Some(dir) = out {
        report::emit_reports(results, case, dir)
            .map_err(|e| format!("cannot write reports to {}: {e}", dir.display()))?;
        if let Some((_, point)) = results.last() {
            let path = dir.join("point.json");
            std::fs::write(&path, serde_json::to_string(point).unwrap())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
    }
    Ok(())
}

fn print_summary(results: &[(RunReport, DecisionPoint)]) {
    println!("{}", report::SUMMARY_HEADER);
    for (r, _) in results {
        println!("{}", report::summary_row(r));
    }
}

fn run_solve(args: &SolveArgs) -> Result<(), String> {
    if args.pipeline != "relax-round" {
        return Err(format!(
            "unknown pipeline `{}` (use `relax-round`, or the fp/sweep/check subcommands)",
            args.pipeline
        ));
    }
    let r = resolve(&args.common)?;
    let case = load_case(&r.case).map_err(|e| e.to_string())?;
    let net = assemble(&case).map_err(|e| e.to_string())?;
    let (point, report) = drivers::relax_and_round(
        &case,
        &net,
        r.rescale,
        r.round,
        &r.pslp(r.penalty),
        &r.pslp(r.penalty2),
        &r.round_params,
    );
    let results = vec![(report, point)];
    print_summary(&results);
    write_outputs(&r.out, &case, &results)
}

fn run_check(args: &CheckArgs) -> Result<(), String> {
    let case = load_case(&args.case).map_err(|e| e.to_string())?;
    let net = assemble(&case).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&args.point)
        .map_err(|e| format!("cannot read point {}: {e}", args.point.display()))?;
    let point: DecisionPoint = serde_json::from_str(&text)
        .map_err(|e| format!("malformed point {}: {e}", args.point.display()))?;
    let report = check_feasibility(&point, &case, &net, args.tol);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}

fn parse_rescales(s: &str) -> Result<Vec<RescaleMode>, String> {
    if s == "all" {
        return Ok(vec![
            RescaleMode::None,
            RescaleMode::ReRuc,
            RescaleMode::RePower,
        ]);
    }
    s.split(',').map(parse_rescale).collect()
}

fn parse_rounds(s: &str) -> Result<Vec<RoundFormula>, String> {
    if s == "all" {
        return Ok(vec![RoundFormula::Nr, RoundFormula::Er, RoundFormula::UcEr]);
    }
    s.split(',').map(parse_round).collect()
}

fn run_sweep(args: &SweepArgs) -> Result<(), String> {
    let r = resolve(&args.common)?;
    let case = load_case(&r.case).map_err(|e| e.to_string())?;
    let net = assemble(&case).map_err(|e| e.to_string())?;
    let penalties = if args.penalties.is_empty() {
        vec![5e3, 5e4, 5e5, 5e6, 5e7]
    } else {
        args.penalties.clone()
    };
    let rescales = parse_rescales(&args.rescales)?;
    let rounds = parse_rounds(&args.rounds)?;
    let mut results = Vec::new();
    for &penalty in &penalties {
        for &formula in &rounds {
            for &rescale in &rescales {
                let (point, rep) = drivers::relax_and_round(
                    &case,
                    &net,
                    rescale,
                    formula,
                    &r.pslp(penalty),
                    &r.pslp(r.penalty2),
                    &r.round_params,
                );
                results.push((rep, point));
            }
        }
    }
    print_summary(&results);
    write_outputs(&r.out, &case, &results)
}

fn run_fp(args: &FpArgs) -> Result<(), String> {
    let r = resolve(&args.common)?;
    let case = load_case(&r.case).map_err(|e| e.to_string())?;
    let net = assemble(&case).map_err(|e| e.to_string())?;
    let flips = args
        .flips
        .unwrap_or_else(|| FpParams::flips_for(&case, args.flip_frac));
    let mut results = Vec::new();
    for &seed in &args.seed {
        let fp = FpParams {
            maxit: args.maxit,
            maxrst: args.maxrst,
            alpha0: args.alpha0,
            phi_alpha: args.phi_alpha,
            delta_alpha: args.delta_alpha,
            s_flips: flips,
            w_l1: None,
            w_uc: None,
            rng_seed: seed,
        };
        let (point, rep) = drivers::fp_pipeline(
            &case,
            &net,
            r.rescale,
            r.round,
            &r.pslp(r.penalty),
            &r.pslp(args.fp_penalty),
            &r.pslp(r.penalty2),
            &fp,
            &r.round_params,
        );
        results.push((rep, point));
    }
    print_summary(&results);
    write_outputs(&r.out, &case, &results)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Check(args) => run_check(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Fp(args) => run_fp(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
