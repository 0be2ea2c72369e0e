use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use halflight_cli::commands;
use halflight_cli::config;
use halflight_cli::EXIT_ERROR;

/// Verifies the induced geometry of half-lightlike submanifolds given by
/// parametric immersions: frames, structure identities, Newton
/// transformations of foliation shape operators, and the mean-curvature
/// identities they satisfy.
#[derive(Parser)]
#[command(name = "halflight", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump the computed frame and connection data at every sample point.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for analysis.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the configured check suites and write report.csv / report.json.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the report files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Multiply every tolerance by this factor.
        #[arg(long = "tol-scale", default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Print the space-form integral table for one dimension as CSV.
    Recurrence {
        /// Even leaf dimension.
        #[arg(long)]
        n: usize,
        /// Constant curvature, as a rational like -1/2.
        #[arg(long)]
        c: String,
        /// Total volume factor, as a rational.
        #[arg(long = "V")]
        volume: String,
    },
    /// Merge JSON reports and print the combined CSV.
    Report {
        /// Report JSON files to merge.
        #[arg(num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Also write merged.csv / merged.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_workers() {
    #[cfg(feature = "parallel")]
    if let Ok(value) = std::env::var("HALFLIGHT_WORKERS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!(
                "warning: HALFLIGHT_WORKERS=`{value}` is not a positive integer; using default"
            ),
        }
    }
}

fn run() -> i32 {
    let cli = Cli::parse();
    configure_workers();
    let outcome = match cli.cmd {
        Cmd::Analyze { config: path, out } => config::load(&path)
            .map_err(|e| e.to_string())
            .and_then(|cfg| commands::analyze(&cfg, &out).map_err(|e| e.to_string())),
        Cmd::Verify {
            config: path,
            out,
            tol_scale,
        } => config::load(&path)
            .map_err(|e| e.to_string())
            .and_then(|cfg| {
                commands::verify(&cfg, &out, tol_scale).map_err(|e| e.to_string())
            }),
        Cmd::Recurrence { n, c, volume } => {
            commands::recurrence(n, &c, &volume).map_err(|e| e.to_string())
        }
        Cmd::Report { inputs, out } => {
            commands::report_merge(&inputs, out.as_deref()).map_err(|e| e.to_string())
        }
    };
    match outcome {
        Ok(outcome) => outcome.exit_code(),
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_ERROR
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run() as u8)
}
