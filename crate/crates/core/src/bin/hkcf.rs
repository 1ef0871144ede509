use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use huber_kcf::cli::{compare, comparison_csv, parse_override, run, RunSpec, Variant};
use huber_kcf::eval::AggregateMode;

#[derive(Parser)]
#[command(
    name = "hkcf",
    version,
    about = "Huber-regularized kernelized correlation filter tracker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track sequences and write boxes, metrics and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// huber | huber+scale | ridge | ridge+scale
        #[arg(long, default_value = "huber")]
        variant: Variant,
    },
    /// Run several variants over the same sequences and write comparison.csv.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated variants.
        #[arg(long, value_delimiter = ',', default_value = "huber,ridge")]
        variant: Vec<Variant>,
    },
}

#[derive(Args)]
struct Common {
    /// Dataset root holding one directory per sequence.
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated sequence names (default: all).
    #[arg(long, value_delimiter = ',')]
    seq: Vec<String>,
    /// Flat key=value tracker config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_parser = parse_set)]
    set: Vec<(String, String)>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// per-frame | per-sequence-mean
    #[arg(long, default_value = "per-frame")]
    mode: AggregateMode,
}

fn parse_set(s: &str) -> Result<(String, String), String> {
    parse_override(s).map_err(|e| e.to_string())
}

impl Common {
    fn spec(&self, variant: Variant, out: PathBuf) -> RunSpec {
        RunSpec {
            dataset: self.dataset.clone(),
            sequences: self.seq.clone(),
            variant,
            config_file: self.config.clone(),
            overrides: self.set.clone(),
            out,
            jobs: self.jobs,
            mode: self.mode,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, variant } => {
            run(&common.spec(variant, common.out.clone())).map(|r| r.all_succeeded())
        }
        Command::Compare { common, variant } => {
            let specs: Vec<RunSpec> = variant
                .iter()
                .map(|v| common.spec(*v, common.out.join(v.to_string())))
                .collect();
            compare(&specs).and_then(|rows| {
                let path = common.out.join("comparison.csv");
                fs::create_dir_all(&common.out)
                    .and_then(|_| fs::write(&path, comparison_csv(&rows)))
                    .map_err(|e| huber_kcf::Error::Io { path, source: e })?;
                print!("{}", comparison_csv(&rows));
                Ok(true)
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("hkcf: {e}");
            ExitCode::FAILURE
        }
    }
}
