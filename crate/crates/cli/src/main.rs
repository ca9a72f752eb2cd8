use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use ris_corr_cli::{run, Experiment, ExperimentConfig, Format, Overrides};

/// Spatial-temporal correlation and DoF experiments for moving RIS arrays.
#[derive(Debug, Parser)]
#[command(name = "ris-corr", version)]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,

    /// JSON config; lengths in wavelengths, merged over the experiment defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Memory budget for dense matrices, in MiB.
    #[arg(long = "mem-budget", global = true)]
    mem_budget: Option<u64>,

    /// knee | dominant[:c] | power:<γ> | threshold:<δ>
    #[arg(long = "rank-method", global = true)]
    rank_method: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        mem_budget_mib: args.mem_budget,
        rank_method: args.rank_method,
        format: args.format,
    };
    let result = ExperimentConfig::resolve(args.experiment, args.config.as_deref(), &overrides)
        .and_then(|cfg| run(&cfg, &args.out));
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ris-corr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
