use clap::Parser;
use pulse_switch::runner;
use std::path::PathBuf;
use std::process::ExitCode;

/// Steady-state simulator for square-wave-driven dissipative few-level
/// systems.
#[derive(Parser)]
#[command(name = "pulse-switch", version)]
struct Args {
    /// Run configuration file (JSON). Required unless --figure-pack is set.
    config: Option<PathBuf>,

    /// Output directory for result.csv and meta.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Write one ready-to-run config per reproduced figure (plus a
    /// manifest) into the output directory instead of running.
    #[arg(long)]
    figure_pack: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = if args.figure_pack {
        runner::emit_figure_pack(&args.out).map(|paths| {
            for path in paths {
                println!("{}", path.display());
            }
        })
    } else {
        match &args.config {
            Some(path) => runner::run_file(path, &args.out).map(|out| {
                println!("{}", out.csv_path.display());
                println!("{}", out.meta_path.display());
            }),
            None => {
                eprintln!("error: a config file is required unless --figure-pack is set");
                return ExitCode::from(1);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
