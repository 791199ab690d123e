mod args;
mod cmd;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use cmd::Ctx;
use error::{CliError, CliResult};
use settings::FileSettings;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and --version go to stdout and are not failures
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("affect: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileSettings::load(path)?,
        None => FileSettings::default(),
    };
    let threads = file.pick(cli.threads, "threads", 0usize)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("--threads {threads}: {e}")))?;
    let model_dir = match cli.model_dir {
        Some(dir) => dir,
        None => file
            .get::<PathBuf>("model-dir")?
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let ctx = Ctx {
        file,
        verbose: cli.verbose,
        model_dir,
    };
    ctx.info(format_args!(
        "# threads = {}\n# model-dir = {}",
        rayon::current_num_threads(),
        ctx.model_dir.display()
    ));
    match cli.command {
        Command::Train(a) => cmd::train::run(&ctx, a),
        Command::Score(a) => cmd::score::run(&ctx, a),
        Command::Steer(a) => cmd::steer::run(&ctx, a),
        Command::Eval(a) => cmd::eval::run(&ctx, a),
        Command::PenaltyGrad(a) => cmd::penalty::run(&ctx, a),
    }
}
