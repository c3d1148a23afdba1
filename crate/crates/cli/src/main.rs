use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dtc_cli::config::{apply_override, RunConfig};
use dtc_cli::output::{fmt_f64, out_dir};
use dtc_cli::presets;
use dtc_cli::runner::run_to_files;
use dtc_cli::sweep::{run_sweep, write_grid_csv, SweepConfig};

#[derive(Parser)]
#[command(
    name = "dtc",
    about = "Driven spin-chain simulator: subharmonic response of trapped-gas and qubit-circuit chains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write CSV/JSON outputs.
    Run {
        /// Name of a built-in preset (see `list-presets`).
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Path to a JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides DTC_OUT_DIR and the config).
        #[arg(long)]
        out_dir: Option<String>,
        /// Override config fields by dotted path, e.g. --set model.kappa=0.5
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Print the fully resolved configuration instead of running.
        #[arg(long)]
        dump_config: bool,
    },
    /// Run a parameter sweep described by a JSON file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<String>,
    },
    /// List the built-in presets.
    ListPresets,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            preset,
            config,
            out_dir: dir_flag,
            sets,
            dump_config,
        } => {
            let base = match (&preset, &config) {
                (Some(name), None) => presets::preset_config(name)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| format!("reading {}: {e}", path.display()))?;
                    RunConfig::from_json(&text)?
                }
                _ => return Err("exactly one of --preset or --config is required".into()),
            };
            let mut doc = serde_json::to_value(&base)?;
            for assignment in &sets {
                apply_override(&mut doc, assignment)?;
            }
            let config: RunConfig = serde_json::from_value(doc)
                .map_err(|e| format!("after --set overrides: {e}"))?;
            config.validate()?;

            if dump_config {
                println!("{}", config.resolved()?.to_json());
                return Ok(());
            }

            let dir = out_dir(dir_flag.as_deref(), config.out_dir.as_deref());
            let summary = run_to_files(&config, &dir)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("run {} complete", summary.label);
            println!("final stroboscopic m = {}", fmt_f64(summary.final_strobe_m));
            if let Some(p) = &summary.peaks {
                println!(
                    "peak at f/f_D = {:.6}, subharmonic weight = {:.6}, split = {}",
                    p.peak_frequency, p.subharmonic_weight, p.split_detected
                );
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            out_dir: dir_flag,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("reading {}: {e}", config.display()))?;
            let sweep = SweepConfig::from_json(&text)?;
            let rows = run_sweep(&sweep)?;
            let dir = out_dir(dir_flag.as_deref(), sweep.base.out_dir.as_deref());
            let path = dir.join(format!("{}_sweep.csv", sweep.base.label));
            write_grid_csv(&path, &sweep, &rows)?;
            println!("sweep over {} points complete", rows.len());
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::ListPresets => {
            print!("{}", presets::render_table());
            Ok(())
        }
    }
}
