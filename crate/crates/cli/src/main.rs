mod commands;
mod report;
mod suite;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ncdomain::io::{to_report_json, write_report};
use ncdomain::Error;

use commands::Flags;
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "ncdomain", version, about = "Weighted Fock-space models, Berezin kernels and dilations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weight table b_alpha^(m) for |alpha| <= N.
    Coeffs(Flags),
    /// Membership of a tuple in the domain D_f^m.
    CheckDomain(Flags),
    /// Berezin kernel and both forms of the transform.
    Berezin(Flags),
    /// Dilation of a tuple to the constrained shift plus a boundary tuple.
    Dilate(Flags),
    /// Reproducing kernel values and Gram matrix on a point list.
    Kernel(Flags),
    /// Constraint subspaces N_Q and M_Q.
    Variety(Flags),
    /// Runs the check suite on one case or on the curated instances.
    Verify(Flags),
}

/// 1 for assertion and domain failures, 2 for unreadable or malformed input, 3 for resource caps.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. } | Error::Io { .. } => 2,
        Error::TruncationTooLarge { .. } | Error::TailUnattainable { .. } => 3,
        _ => 1,
    }
}

fn run(cli: &Cli) -> ncdomain::Result<(Report, Option<std::path::PathBuf>)> {
    let (report, flags) = match &cli.command {
        Command::Coeffs(f) => (commands::coeffs(f)?, f),
        Command::CheckDomain(f) => (commands::check_domain(f)?, f),
        Command::Berezin(f) => (commands::berezin(f)?, f),
        Command::Dilate(f) => (commands::dilate_cmd(f)?, f),
        Command::Kernel(f) => (commands::kernel(f)?, f),
        Command::Variety(f) => (commands::variety(f)?, f),
        Command::Verify(f) => (suite::verify(f)?, f),
    };
    Ok((report, flags.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, out) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match &out {
        Some(path) => write_report(&report, path),
        None => to_report_json(&report).map(|s| print!("{s}")),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e));
    }
    if !report.passed {
        for a in report.assertions.iter().filter(|a| !a.passed) {
            eprintln!("failed: {} = {:e} (threshold {:e})", a.name, a.value, a.threshold);
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
