use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shred_cli::{
    cmd_baselines, cmd_ensemble, cmd_eval, cmd_generate, cmd_route_table, cmd_sweep, cmd_train, exit_code,
    EnsembleKind, ExperimentConfig,
};
use shred_core::sensing::Split;
use shred_core::ShredError;

#[derive(Parser)]
#[command(
    name = "shred",
    version,
    about = "Full-state reconstruction from moving point sensors"
)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to the config's `out`, then `./shred-out`.
    #[arg(long, global = true, env = "SHRED_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs serially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Mobile,
    Immobile,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured field and write it as a snapshot file.
    Generate,
    /// Train one SHRED model on the stored dataset.
    Train,
    /// Evaluate a trained run on one split and write snapshot images.
    Eval {
        /// Directory written by `train`; defaults to the output directory.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Train ensembles of mobile and/or immobile sensor models.
    Ensemble {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        kind: KindArg,
    },
    /// Test MSE against LSTM hidden width, plus the singular spectrum.
    Sweep {
        /// Comma-separated hidden widths, overriding the config.
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<usize>>,
    },
    /// One model per route combination and partition mode.
    RouteTable,
    /// SHRED against the shallow decoder and linear baselines.
    Baselines,
}

fn run(cli: Cli) -> Result<(), ShredError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("shred-out"));
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ShredError::InvalidArgument(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Generate => {
            let field = cmd_generate(&cfg, &out)?;
            println!(
                "wrote {} snapshots of {} nodes to {}",
                field.len(),
                field.n(),
                out.display()
            );
        }
        Command::Train => {
            let s = cmd_train(&cfg, &out)?;
            println!(
                "best epoch {}: validation mse {:.4e}, test mse {:.4e} (nmse {:.4e})",
                s.best_epoch, s.best_val_mse, s.test_mse, s.test_nmse
            );
        }
        Command::Eval { run, split } => {
            let split = match split {
                SplitArg::Train => Split::Train,
                SplitArg::Val => Split::Val,
                SplitArg::Test => Split::Test,
            };
            let run_dir = run.unwrap_or_else(|| out.clone());
            let r = cmd_eval(&cfg, &out, &run_dir, split)?;
            println!(
                "{} samples: mse {:.4e}, nmse {:.4e}, error mean {:.4e}, error variance {:.4e}",
                r.sample_count(),
                r.mse,
                r.nmse,
                r.error_mean,
                r.error_variance
            );
        }
        Command::Ensemble { count, kind } => {
            let kinds: &[EnsembleKind] = match kind {
                KindArg::Mobile => &[EnsembleKind::Mobile],
                KindArg::Immobile => &[EnsembleKind::Immobile],
                KindArg::Both => &[EnsembleKind::Mobile, EnsembleKind::Immobile],
            };
            let s = cmd_ensemble(&cfg, &out, kinds, count)?;
            for o in &s.outcomes {
                let var = o.pooled.as_ref().map_or(f64::NAN, |p| p.error_variance);
                println!(
                    "{}: {} models, {} failed, pooled error variance {:.4e}",
                    o.label,
                    o.mses.len(),
                    o.failures,
                    var
                );
            }
            if let Some(c) = s.comparison {
                println!("variance ratio {:.4}", c.variance_ratio);
            }
        }
        Command::Sweep { widths } => {
            let r = cmd_sweep(&cfg, &out, widths)?;
            for c in &r.cells {
                println!("h={:<4} mse {:.4e} ({} repeats)", c.hidden, c.mean_mse, c.mses.len());
            }
        }
        Command::RouteTable => {
            for c in cmd_route_table(&cfg, &out)? {
                match c.mse {
                    Some(m) => println!("{:<30} {:<8} {:.4e}", c.route, c.partition, m),
                    None => println!("{:<30} {:<8} failed", c.route, c.partition),
                }
            }
        }
        Command::Baselines => {
            for s in cmd_baselines(&cfg, &out)? {
                println!("{:<7} mse {:.4e} +/- {:.4e}", s.model, s.mse_mean, s.mse_sd);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
