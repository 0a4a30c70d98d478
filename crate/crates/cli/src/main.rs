use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use online_bisection::harness::{self, ExperimentConfig, HarnessError};
use online_bisection::verify;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "obisect", version, about = "Online bisection against a noisy threshold oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value config file; missing keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the online protocol and write the per-query CSV
    Run {
        #[command(flatten)]
        common: Common,
        /// Overrides output.path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn online, then score the frozen hypothesis on fresh queries
    Batch {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the log-log slope of average error against the horizon
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        t_list: Vec<u64>,
        /// Disable shrinking (ablation)
        #[arg(long)]
        no_shrink: bool,
    },
    /// Run every lemma checker and print one line per check
    VerifyLemmas {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => harness::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Run { common, out } => {
            let mut cfg = load(&common)?;
            if let Some(out) = out {
                cfg.output_path = out;
            }
            let s = harness::run_online(&cfg, Some(&cfg.output_path))?;
            if !common.quiet {
                println!(
                    "T={} avg_error={:.6e} phases={} final_side={:.6e} oracle_calls={} converged={} contained={} csv={}",
                    s.queries,
                    s.avg_error,
                    s.phases,
                    s.final_side,
                    s.oracle_calls,
                    s.converged,
                    s.contained,
                    cfg.output_path.display()
                );
            }
        }
        Command::Batch { common } => {
            let cfg = load(&common)?;
            let r = harness::run_batch(&cfg)?;
            if !common.quiet {
                let verdict = if r.converged {
                    if r.bound_satisfied { "within bound" } else { "BOUND EXCEEDED" }
                } else {
                    "not converged; bound not asserted"
                };
                println!(
                    "mean_abs_error={:.6e} bound={:.6e} final_side={:.6e} converged={} eval_oracle_calls={} ({verdict})",
                    r.mean_abs_error, r.bound, r.final_side, r.converged, r.eval_oracle_calls
                );
            }
        }
        Command::Scaling { common, t_list, no_shrink } => {
            let mut cfg = load(&common)?;
            cfg.shrinking = !no_shrink;
            let r = harness::run_scaling(&cfg, &t_list)?;
            if !common.quiet {
                for p in &r.points {
                    println!("T={} avg_error={:.6e}", p.horizon, p.avg_error);
                }
                println!("slope={:.4}", r.slope);
            }
        }
        Command::VerifyLemmas { seed, quiet } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let reports = verify::run_all(&mut rng)?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            for r in &reports {
                if !quiet || !r.pass {
                    println!("{r}");
                }
            }
            if !quiet {
                println!("{} checks, {failed} failed", reports.len());
            }
            if failed > 0 {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
