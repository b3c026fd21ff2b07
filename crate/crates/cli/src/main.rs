mod args;
mod commands;
mod figures;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Report;

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn dispatch(cmd: &Command) -> (leo_sg::Result<Report>, output::Format, Option<&std::path::Path>) {
    let (common, res) = match cmd {
        Command::Geometry(c) => (c, commands::geometry(c)),
        Command::CaseProbs(c) => (c, commands::case_probs(c)),
        Command::Dist(a) => (&a.common, commands::dist(a)),
        Command::Outage(a) => (&a.common, commands::outage_cmd(a)),
        Command::Throughput(a) => (&a.common, commands::throughput_cmd(a)),
        Command::Optimize(a) => (&a.common, commands::optimize(a)),
        Command::Simulate(a) => (&a.common, commands::simulate(a)),
        Command::Sweep(a) => (&a.common, commands::sweep(a)),
        Command::Figure(a) => return (figures::figure(a), a.format, a.out.as_deref()),
    };
    (res, common.format, common.out.as_deref())
}

fn report_error(e: &leo_sg::Error) -> ExitCode {
    eprintln!("error[{}]: {e}", e.name());
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION),
            };
        }
    };
    let (res, format, out) = dispatch(&cli.command);
    let report = match res {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    if let Err(e) = output::emit(&report.table, &report.config, format, out) {
        eprintln!("error[IoError]: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match &report.deferred {
        Some(e) => report_error(e),
        None => ExitCode::SUCCESS,
    }
}
