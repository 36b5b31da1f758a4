//! `chemosim`: run scenarios, re-verify stored trajectories, and tabulate
//! the radial bound constants.

use std::path::PathBuf;
use std::process::ExitCode;

use chemosim::error::Error;
use chemosim::model::scenario::ScenarioConfig;
use chemosim::radial::{compute_bounds, compute_m0};
use chemosim::simulation::{execute, verify_dir, RunSummary, CHECK_NAMES};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "chemosim", version, about = "Chemotaxis-consumption simulator with bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a sweep over it) and check every bound.
    Run(RunArgs),
    /// Recompute every check from the snapshots in a run directory.
    Verify(VerifyArgs),
    /// Print M0, m0, c* and the c_r envelope at r = R.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    file: PathBuf,
    /// Output directory; overrides `output_dir` in the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record every N steps.
    #[arg(long, value_name = "N")]
    cadence: Option<usize>,
    /// `key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long, value_name = "KEY=V1,V2")]
    sweep: Vec<String>,
    /// Skip a check by name.
    #[arg(long = "no-check", value_name = "NAME")]
    no_check: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory written by `chemosim run`.
    dir: PathBuf,
    #[arg(long = "no-check", value_name = "NAME")]
    no_check: Vec<String>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Space dimension.
    #[arg(long)]
    d: usize,
    /// Ball radius.
    #[arg(long = "R", value_name = "R")]
    radius: f64,
    #[arg(long)]
    gamma: f64,
    /// L1 norm of the initial density.
    #[arg(long)]
    l1: f64,
    /// Sup norm of the initial density.
    #[arg(long)]
    linf: f64,
}

/// Exit code for an error that stopped a run before it produced a status.
fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidInput(_) | Error::Io { .. } => 2,
        Error::BoundViolation(_) => 1,
        _ => 3,
    }
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    error_code(e)
}

fn check_names(names: &[String]) -> Result<(), Error> {
    match names.iter().find(|n| !CHECK_NAMES.contains(&n.as_str())) {
        Some(bad) => Err(Error::Config {
            key: "no-check".into(),
            reason: format!("unknown check `{bad}`; known: {}", CHECK_NAMES.join(", ")),
        }),
        None => Ok(()),
    }
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<String>), Error> {
    let bad = |reason: &str| Error::Config {
        key: "sweep".into(),
        reason: format!("`{spec}`: {reason}"),
    };
    let (key, values) = spec.split_once('=').ok_or_else(|| bad("expected key=v1,v2,..."))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
    if key.trim().is_empty() || values.iter().any(String::is_empty) {
        return Err(bad("empty key or value"));
    }
    Ok((key.trim().to_string(), values))
}

/// Expands the sweeps into one scenario per member. Members get distinct ids
/// and, when an output directory is set, distinct subdirectories.
fn members(base: &ScenarioConfig, sweeps: &[(String, Vec<String>)]) -> Result<Vec<ScenarioConfig>, Error> {
    let mut out = vec![(base.clone(), String::new())];
    for (key, values) in sweeps {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for (s, tag) in &out {
            for v in values {
                let mut m = s.with_override(key, v)?;
                m.output_dir = s.output_dir.clone();
                next.push((m, format!("{tag}-{key}={v}")));
            }
        }
        out = next;
    }
    if sweeps.is_empty() {
        return Ok(vec![base.clone()]);
    }
    Ok(out
        .into_iter()
        .map(|(mut s, tag)| {
            s.id = format!("{}{tag}", base.id);
            s.output_dir = base.output_dir.as_ref().map(|d| d.join(&s.id));
            s
        })
        .collect())
}

fn cmd_run(args: RunArgs) -> u8 {
    let setup = || -> Result<Vec<ScenarioConfig>, Error> {
        check_names(&args.no_check)?;
        let mut base = ScenarioConfig::load(&args.file)?;
        if let Some(dir) = &args.out {
            base.output_dir = Some(dir.clone());
        }
        if let Some(n) = args.cadence {
            if n == 0 {
                return Err(Error::Config {
                    key: "cadence".into(),
                    reason: "must be at least 1".into(),
                });
            }
            base.cadence.steps = n;
        }
        let sweeps = args.sweep.iter().map(|s| parse_sweep(s)).collect::<Result<Vec<_>, _>>()?;
        members(&base, &sweeps)
    };
    let scenarios = match setup() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let results: Vec<Result<RunSummary, Error>> = scenarios
        .par_iter()
        .map(|s| execute(s, &args.no_check).map(|o| o.summary))
        .collect();
    let mut code = 0;
    for (s, r) in scenarios.iter().zip(results) {
        let c = match r {
            Ok(summary) => {
                print!("{}", summary.to_text());
                println!("{}", summary.to_json_line());
                summary.exit_code as u8
            }
            Err(e) => {
                eprintln!("error: scenario {}: {e}", s.id);
                error_code(&e)
            }
        };
        code = code.max(c);
    }
    code
}

fn cmd_verify(args: VerifyArgs) -> u8 {
    if let Err(e) = check_names(&args.no_check) {
        return fail(&e);
    }
    let report = match verify_dir(&args.dir, &args.no_check) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let mut files = vec![];
    if report.certificate.is_some() {
        files.push("certificate.csv".to_string());
    }
    let exit_code = report.exit_code();
    let summary = RunSummary {
        schema: 1,
        id: report.scenario.id.clone(),
        status: report.status,
        wall_time: 0.0,
        final_t: report.final_t,
        steps: 0,
        checks: report.checks,
        files,
        message: Some(format!("verified {} snapshot pairs", report.snapshots)),
        exit_code,
    };
    print!("{}", summary.to_text());
    println!("{}", summary.to_json_line());
    exit_code as u8
}

fn cmd_bounds(args: BoundsArgs) -> u8 {
    let m_big = match compute_m0(args.l1, args.linf, args.d, args.radius) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let b = match compute_bounds(m_big, args.gamma, args.radius, args.d) {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    println!("{:<22} {:.16e}", "M0", b.m_big);
    println!("{:<22} {:.16e}", "m0", b.m_small);
    println!("{:<22} {:.16e}", "c*", b.c_star);
    println!("{:<22} {:.16e}", "gamma M0 R / sigma_d", b.gradient_envelope(args.radius));
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
    })
}
