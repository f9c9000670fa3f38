use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fronttrack::app;
use fronttrack::config;
use fronttrack::Error;

#[derive(Parser)]
#[command(
    name = "fronttrack",
    version,
    about = "Fractional-step wave-front tracking for 1-D balance laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Dot-path override, e.g. `engine.riemann.tol_rp=1e-9`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, analyze and write all outputs.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (defaults to `out_dir` of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the wave fan of the configured Riemann datum.
    Riemann {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Track sub-discontinuity curves in the logs of a previous run.
    Analyze {
        /// Directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hyperbolicity, dissipation and coupling diagnostics.
    CheckModel {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated state (defaults to the far-left datum state).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Option<Vec<f64>>,
    },
    /// Convergence study over the configured `sweep` pairs.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> Result<(config::RunConfig, PathBuf), Error> {
    let cfg = config::load_config(&args.config, &args.overrides)?;
    let dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, dir))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { cfg, out } => {
            let (c, dir) = load(&cfg)?;
            let out = out.unwrap_or_else(|| c.out_dir.clone());
            let m = app::cmd_run(&c, &dir, &out)?;
            for e in &m.files {
                println!("{}\t{}", e.file, e.rows);
            }
        }
        Command::Riemann { cfg } => {
            let (c, _) = load(&cfg)?;
            print_json(&app::cmd_riemann(&c)?);
        }
        Command::Analyze { run, out } => {
            let m = app::cmd_analyze(&run, &out)?;
            for e in &m.files {
                println!("{}\t{}", e.file, e.rows);
            }
        }
        Command::CheckModel { cfg, state } => {
            let (c, dir) = load(&cfg)?;
            print_json(&app::cmd_check_model(&c, &dir, state)?);
        }
        Command::Sweep { cfg, out } => {
            let (c, dir) = load(&cfg)?;
            let out = out.unwrap_or_else(|| c.out_dir.clone());
            let m = app::cmd_sweep(&c, &dir, &out)?;
            for e in &m.files {
                println!("{}\t{}", e.file, e.rows);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FT_LOG_LEVEL", "error")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
