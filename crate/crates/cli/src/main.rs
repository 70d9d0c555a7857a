mod args;
mod commands;
mod fail;
mod mapref;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::Output;
use fail::Failure;

fn emit(value: &serde_json::Value, out: Option<&std::path::Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn report_failure(f: &Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code() as u8)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_failure(&Failure::usage(e.to_string().trim_end())),
    };
    let echo = &argv[1..];
    match commands::run(&cli.command, &cli.global, echo) {
        Ok(Output::Report(v)) | Ok(Output::Raw(v)) => match emit(&v, cli.global.out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => report_failure(&Failure::input(format!("cannot write report: {e}"))),
        },
        Err(f) => report_failure(&f),
    }
}
