//! `nsm`: neighborhood-stability tooling on fvecs/ivecs files.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;

#[derive(Parser)]
#[command(name = "nsm", version, about = "Neighborhood stability of vector collections")]
struct Cli {
    /// Worker threads; defaults to NSM_THREADS, then to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Synth(commands::SynthArgs),
    /// Nearest-neighbor table, exact or approximate.
    Knn(commands::KnnArgs),
    /// KMeans or spherical KMeans.
    Cluster(commands::ClusterArgs),
    /// Internal quality measures of a clustering.
    Quality(commands::QualityArgs),
    /// Point-NSM over a sample of points.
    PointNsm(commands::PointNsmArgs),
    /// Accuracy of an inverted-file index built from a clustering.
    IvfEval(commands::IvfEvalArgs),
    /// Spearman correlation between two columns of a CSV table.
    Correlate(commands::CorrelateArgs),
    /// Full clustering ensemble, measures, accuracies and correlations.
    Protocol(commands::ProtocolArgs),
}

fn init_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("NSM_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                Failure::usage(format!("NSM_THREADS must be a positive integer, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Knn(a) => commands::knn(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Quality(a) => commands::quality(a),
        Command::PointNsm(a) => commands::point_nsm(a),
        Command::IvfEval(a) => commands::ivf_eval(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Protocol(a) => commands::protocol(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code as u8)
        }
    }
}
