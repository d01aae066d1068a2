use std::process::ExitCode;

use clap::Parser;
use lexloop_cli::args::{Cli, Command};
use lexloop_cli::{commands, config, server};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let raw: Vec<_> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&raw) {
        if let Err(e) = config::load_into_env(&path) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    let cli = Cli::parse_from(raw);
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<String> {
    match command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Run(a) => commands::run(&a),
        Command::Init(a) => commands::init(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Senticompare(a) => commands::senticompare(&a),
        Command::Export(a) => commands::export(&a),
        Command::Disagreement(a) => commands::disagreement(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Serve(a) => {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async {
                let state = server::AppState::open(&a.session)?;
                server::serve(state, a.addr, a.cors_origin.as_deref()).await
            })?;
            Ok(String::new())
        }
    }
}
