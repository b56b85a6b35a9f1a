use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vortexmap::scenes::{available_scenes, SceneSpec};
use vortexmap_cli::{diff_files, exit, run, run_exit_code, DiffError, RunConfig};

#[derive(Parser)]
#[command(name = "vortexmap", version, about = "Vortex-method flow simulation on flow maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scene.
    Run {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one key; repeatable, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Compare two field dumps.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Largest accepted absolute difference.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// List scenes with their defaults.
    Scenes,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, set } => {
            let text = match &config {
                Some(p) => match std::fs::read_to_string(p) {
                    Ok(t) => Some(t),
                    Err(e) => {
                        eprintln!("error: {}: {e}", p.display());
                        return code(exit::IO);
                    }
                },
                None => None,
            };
            let cfg = match RunConfig::from_sources(text.as_deref(), &set) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(exit::CONFIG);
                }
            };
            match run(&cfg, &mut std::io::stderr()) {
                Ok(summary) => {
                    println!("{}", summary.line());
                    code(exit::OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(run_exit_code(&e))
                }
            }
        }
        Command::Diff { a, b, tol } => match diff_files(&a, &b) {
            Ok(r) => {
                println!("max abs diff {:e}  mean abs diff {:e}  ({} values)", r.max_abs, r.mean_abs, r.count);
                code(if r.within(tol) { exit::OK } else { exit::DIFFERENT })
            }
            Err(e @ DiffError::Header(_)) => {
                eprintln!("error: {e}");
                code(exit::DIFFERENT)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(exit::IO)
            }
        },
        Command::Scenes => {
            for name in available_scenes() {
                match SceneSpec::named(name) {
                    Ok(s) => println!("{}  frames {}  frame_dt {:.4}", s.summary(), s.frames, s.frame_dt),
                    Err(e) => eprintln!("error: {e}"),
                }
            }
            code(exit::OK)
        }
    }
}
