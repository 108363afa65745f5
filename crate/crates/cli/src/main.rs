use std::io::{self, BufWriter};
use std::process::ExitCode;

use clap::Parser;
use treeucb::config::RunConfig;
use treeucb::{Cli, CliError, Command, RunSummary};

fn report_run(summary: &RunSummary) {
    let mut line = format!(
        "{} rounds, {} regions, traces in {}",
        summary.rounds,
        summary.partition_size,
        summary.out.display()
    );
    if let (Some(avg), Some(best)) = (summary.avg_regret, summary.best_so_far) {
        line.push_str(&format!(", average regret {avg:.6}, best value {best:.6}"));
    }
    eprintln!("{line}");
}

fn audit_gate(summary: &RunSummary) -> Result<(), CliError> {
    if summary.audit_pass {
        Ok(())
    } else {
        Err(CliError::AuditFailed)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let summary = treeucb::run(RunConfig::from_args(&args)?)?;
            report_run(&summary);
            audit_gate(&summary)
        }
        Command::Serve(args) => {
            let config = RunConfig::from_args(&args)?;
            let stdin = io::stdin();
            let mut output = BufWriter::new(io::stdout().lock());
            let summary = treeucb::serve(config, &mut stdin.lock(), &mut output)?;
            report_run(&summary);
            audit_gate(&summary)
        }
        Command::Audit(args) => {
            let report = treeucb::audit_trace(&args)?;
            println!("{report}");
            if report.pass {
                Ok(())
            } else {
                Err(CliError::AuditFailed)
            }
        }
        Command::GpDemo(args) => {
            print!("{}", treeucb::gp_demo::gp_demo(&args)?);
            Ok(())
        }
        Command::Sweep(args) => {
            let seeds = treeucb::parse_seeds(&args.seeds)?;
            let results = treeucb::sweep(&args)?;
            let table = treeucb::sweep_table(&results, &seeds);
            print!("{table}");
            if let Some(Ok(first)) = results.first() {
                if let Some(dir) = first.out.parent() {
                    let path = dir.join("sweep.csv");
                    std::fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
                }
            }
            if let Some(e) = results.iter().find_map(|r| r.as_ref().err()) {
                return Err(CliError::Objective(format!("at least one run failed: {e}")));
            }
            if results.iter().any(|r| matches!(r, Ok(s) if !s.audit_pass)) {
                return Err(CliError::AuditFailed);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treeucb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
