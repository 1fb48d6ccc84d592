mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::{load, Overlay};

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.config.as_deref();
    let name = cli.command.name();
    match cli.command {
        Command::Transform(a) => commands::transform(a.overlay(load(cfg, name)?)),
        Command::Simulate(a) => commands::simulate(a.overlay(load(cfg, name)?)),
        Command::Fit(a) => commands::fit_cmd(a.overlay(load(cfg, name)?)),
        Command::Select(a) => commands::select(a.overlay(load(cfg, name)?)),
        Command::Interpret(a) => commands::interpret_cmd(a.overlay(load(cfg, name)?)),
        Command::Eval(a) => commands::eval(a.overlay(load(cfg, name)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::EXIT_USAGE),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error::exit_code(&e))
        }
    }
}
