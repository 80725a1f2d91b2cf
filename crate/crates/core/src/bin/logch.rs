//! Command-line front end: `run`, `verify`, `convergence` and `compare`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 failed
//! verification. Failures print one line to stderr of the form
//! `logch-error kind=<kind> code=<code> message=<text>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logch::compare::compare;
use logch::config::RunConfig;
use logch::diagnostics::{bounded_monitors, energy_increases, mass_drift};
use logch::dynamics::PotentialMode;
use logch::io::write_run;
use logch::timestepper::{convergence_study, run, RunOutput, SchemeKind, Snapshot};
use logch::verify::{run_suite, VerifyOptions};
use logch::Error;

#[derive(Parser)]
#[command(name = "logch", version, about = "Cahn-Hilliard with logarithmic potential, solved in g = atanh(u)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every absent key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Final time (overrides `t_end`).
    #[arg(long)]
    t_end: Option<f64>,
    /// Time step (overrides `scheme.dt`).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Time evolution with diagnostics and snapshots written to the output directory.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write a PGM image per snapshot.
        #[arg(long)]
        pgm: bool,
    },
    /// Identity, oracle, certificate and invariant checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of random test fields.
        #[arg(long, default_value_t = 20)]
        fields: usize,
        /// Length of the invariant run.
        #[arg(long, default_value_t = 1000)]
        steps: u64,
    },
    /// Observed temporal order for each scheme.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Halving step sizes; the last one is the reference.
        #[arg(long, value_delimiter = ',', default_value = "4e-5,2e-5,1e-5,5e-6,2.5e-6")]
        dts: Vec<f64>,
        /// Schemes to study (default: both).
        #[arg(long, value_delimiter = ',')]
        scheme: Vec<SchemeKind>,
    },
    /// g formulation against direct-u baselines from the same u0.
    Compare {
        #[command(flatten)]
        common: Common,
        /// truncated:N, phieps:EPS or exactlog; repeatable.
        #[arg(long, value_delimiter = ',', default_value = "truncated:100")]
        baseline: Vec<PotentialMode>,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(t) = common.t_end {
        cfg.t_end = t;
    }
    if let Some(dt) = common.dt {
        cfg.scheme.dt = dt;
    }
    cfg.validate()?;
    println!("# effective configuration");
    for line in cfg.to_toml().lines() {
        println!("#   {line}");
    }
    Ok(cfg)
}

fn summarize(out: &RunOutput) {
    println!("steps               {}", out.final_state.step);
    println!("t                   {}", out.final_state.t);
    println!("mass drift          {:.3e}", mass_drift(&out.records));
    println!("separation floor    {:.6e}", out.separation_floor());
    let rises = energy_increases(&out.records);
    if !rises.is_empty() {
        eprintln!("warning: energy rose at {} record(s)", rises.len());
    }
    for v in bounded_monitors(&out.records) {
        eprintln!("warning: {} = {:.3e} exceeds {:.3e} at t = {}", v.quantity, v.value, v.bound, v.t);
    }
}

fn cmd_run(common: &Common, pgm: bool) -> Result<(), Failure> {
    let cfg = load(common)?;
    match run(&cfg) {
        Ok(out) => {
            let files = write_run(&cfg.out_dir, &cfg, &out, pgm)?;
            summarize(&out);
            println!("wrote {} files to {}", files.len(), cfg.out_dir.display());
            Ok(())
        }
        Err(fail) => {
            let mut partial = fail.partial;
            let last = &partial.final_state;
            if partial.snapshots.last().map(|s| s.step) != Some(last.step) {
                partial.snapshots.push(Snapshot {
                    step: last.step,
                    t: last.t,
                    g: last.g.clone(),
                });
            }
            if !partial.records.is_empty() {
                write_run(&cfg.out_dir, &cfg, &partial, pgm)?;
                eprintln!(
                    "last good state (step {}, t = {}) written to {}",
                    last.step,
                    last.t,
                    cfg.out_dir.display()
                );
            }
            Err(fail.error.into())
        }
    }
}

fn cmd_verify(common: &Common, fields: usize, steps: u64) -> Result<(), Failure> {
    let config = load(common)?;
    let checks = run_suite(&VerifyOptions { config, fields, steps })?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed > 0 {
        return Err(Failure {
            code: 3,
            kind: "verification",
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    Ok(())
}

fn cmd_convergence(common: &Common, dts: &[f64], schemes: &[SchemeKind]) -> Result<(), Failure> {
    let mut cfg = load(common)?;
    let schemes = if schemes.is_empty() {
        vec![SchemeKind::Etd1, SchemeKind::Etdrk2]
    } else {
        schemes.to_vec()
    };
    for kind in schemes {
        cfg.scheme.kind = kind;
        let table = convergence_study(&cfg, dts)?;
        println!("scheme {kind}, reference dt {:e} (extrapolated)", table.reference_dt);
        println!("{:>12} {:>14} {:>8}", "dt", "error", "order");
        for r in &table.rows {
            let order = r.observed_order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
            println!("{:>12e} {:>14.6e} {:>8}", r.dt, r.error, order);
        }
    }
    Ok(())
}

fn cmd_compare(common: &Common, baselines: &[PotentialMode]) -> Result<(), Failure> {
    let cfg = load(common)?;
    let report = compare(&cfg, baselines)?;
    print!("{:>10} {:>20} {:>20} {:>10}", "t", "mass_u[g]", "energy[g]", "max|u|[g]");
    for b in &report.baselines {
        print!(" {:>20} {:>20} {:>14}", format!("energy[{b}]"), format!("mass_u[{b}]"), "max|du|");
    }
    println!();
    for r in &report.rows {
        print!(
            "{:>10.4e} {:>20.13e} {:>20.13e} {:>10.6}",
            r.t, r.transformed.mass_u, r.transformed.energy, r.transformed.max_abs_u
        );
        for (s, d) in r.baselines.iter().zip(&r.max_diff_u) {
            print!(" {:>20.13e} {:>20.13e} {:>14.6e}", s.energy, s.mass_u, d);
        }
        println!();
    }
    for (b, d) in report.baselines.iter().zip(report.final_max_diff_u()) {
        println!("final max|u_g - u_base| vs {b}: {d:.6e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let message = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            eprintln!("logch-error kind=usage code=1 message={message}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Run { common, pgm } => cmd_run(common, *pgm),
        Command::Verify { common, fields, steps } => cmd_verify(common, *fields, *steps),
        Command::Convergence { common, dts, scheme } => cmd_convergence(common, dts, scheme),
        Command::Compare { common, baseline } => cmd_compare(common, baseline),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "logch-error kind={} code={} message={}",
                f.kind,
                f.code,
                f.message.replace('\n', " ")
            );
            ExitCode::from(f.code)
        }
    }
}
