use std::process::ExitCode;

use acoustica_cli::{execute, Cli, CliError, Outcome};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match outcome {
        Outcome::Single(run) => {
            println!("{} files in {}", run.manifest.len(), run.out_dir.display());
            println!("reflection: {:.6e} -> {:.6e}", run.summary.reflection_initial, run.summary.reflection_final);
            ExitCode::SUCCESS
        }
        Outcome::Batch(results) => {
            let total = results.len();
            let mut failed = 0;
            for (path, r) in &results {
                match r {
                    Ok(run) => println!("ok     {} ({} files)", path.display(), run.manifest.len()),
                    Err(e) => {
                        failed += 1;
                        eprintln!("failed {}: {e}", path.display());
                    }
                }
            }
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                let e = CliError::Batch { failed, total };
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        }
    }
}
