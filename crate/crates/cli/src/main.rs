use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use vinedmp_augment::Split;
use vinedmp_learner::{ModelConfig, PredictOptions, TrainConfig};
use vinedmp_sim::SceneConfig;

use vinedmp_cli::commands::{
    format_rmse, load_model, mean_baseline_rmse, predict_file, split_rmse, success_sim, train_dataset, Policy,
};
use vinedmp_cli::dataset::{parse_size, parse_split, Dataset};
use vinedmp_cli::generate::{gen_dataset, GenOptions};
use vinedmp_cli::server::{serve, AppState};
use vinedmp_cli::{exit_code, UserError};

#[derive(Parser)]
#[command(name = "vinedmp", version, about = "Learn leaf-unveiling movements from images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate simulated scenes with successful demonstrations.
    GenDataset {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train/dev/test weights.
        #[arg(long, default_value = "80/10/10", value_parser = parse_split)]
        split: [u32; 3],
        #[arg(long)]
        out: PathBuf,
        /// Augmented replicas per training sample.
        #[arg(long, default_value_t = 0)]
        augment_factor: usize,
        #[arg(long, default_value = "480x640", value_parser = parse_size)]
        image_size: (u32, u32),
        #[arg(long)]
        busy_background: bool,
    },
    /// Train a model and keep the epoch with the lowest dev loss.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 150)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 40)]
        halve_every: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Side of the square network input.
        #[arg(long, default_value_t = 64)]
        input_size: usize,
        /// Add 1×1 skip connections around each convolution.
        #[arg(long)]
        residual: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Report RMSE at 480×640 and optionally the simulated success rate.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Splits to evaluate; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', default_value = "test")]
        split: Vec<Split>,
        /// Execute predictions on the regenerated scenes.
        #[arg(long)]
        success_sim: bool,
        /// Also report the baseline that always predicts the mean training demonstration.
        #[arg(long)]
        baseline: bool,
    },
    /// Predict a task-plane trajectory and gripper yaw for one image.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        rig: PathBuf,
        /// Written to standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4.0)]
        duration: f64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Static files served for every non-API path.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenDataset {
            count,
            seed,
            split,
            out,
            augment_factor,
            image_size,
            busy_background,
        } => {
            let opts = GenOptions {
                count,
                seed,
                split,
                augment_factor,
                image_size,
                scene: SceneConfig {
                    busy_background,
                    ..SceneConfig::default()
                },
                ..GenOptions::default()
            };
            let s = gen_dataset(&out, &opts, |m| eprintln!("{m}"))?;
            println!(
                "{} samples (train {}, dev {}, test {}), {} augmented, {} scenes rejected",
                s.kept, s.per_split[0], s.per_split[1], s.per_split[2], s.augmented, s.rejected
            );
        }
        Command::Train {
            data,
            out,
            epochs,
            batch,
            lr,
            halve_every,
            seed,
            input_size,
            residual,
            quiet,
        } => {
            let config = TrainConfig {
                epochs,
                batch_size: batch,
                lr0: lr,
                lr_halving_period: halve_every,
                seed,
                ..TrainConfig::default()
            };
            let model = ModelConfig {
                input_size,
                residual,
                ..ModelConfig::default()
            };
            let outcome = train_dataset(&data, &out, &model, &config, |s| {
                if !quiet {
                    eprintln!(
                        "epoch {:>3}/{} lr {:.2e} train {:.4e} dev {:.4e}",
                        s.epoch + 1,
                        s.epochs,
                        s.lr,
                        s.train_loss,
                        s.dev_loss
                    );
                }
            })?;
            println!(
                "best epoch {} (dev loss {:.4e}); wrote {}",
                outcome.report.best_epoch + 1,
                outcome.report.best_dev_loss,
                out.display()
            );
        }
        Command::Eval {
            data,
            model,
            split,
            success_sim: sim,
            baseline,
        } => {
            let ds = Dataset::open(&data)?;
            let model = load_model(&model)?;
            let (size, points) = (model.config().input_size, TrainConfig::default().num_loss_points);
            let train = if baseline {
                Some(ds.examples_for(ds.original_train(), size, points)?)
            } else {
                None
            };
            for s in split {
                if ds.manifest.split(s).next().is_none() {
                    return Err(UserError(format!("split {} is empty", s.as_str())).into());
                }
                let examples = ds.examples(s, size, points)?;
                println!("{}", format_rmse(s, &split_rmse(&model, &examples)?));
                if let Some(train) = &train {
                    println!("{} (mean baseline)", format_rmse(s, &mean_baseline_rmse(train, &examples)));
                }
                if sim {
                    let r = success_sim(&ds, s, &Policy::Model(&model))?;
                    println!(
                        "{} success: {}/{} ({:.1}%)",
                        s.as_str(),
                        r.successes,
                        r.trials,
                        100.0 * r.rate()
                    );
                }
            }
        }
        Command::Predict {
            model,
            image,
            rig,
            out,
            duration,
        } => {
            let opts = PredictOptions {
                duration,
                ..PredictOptions::default()
            };
            let record = predict_file(&model, &image, &rig, &opts)?;
            let json = serde_json::to_string_pretty(&record)? + "\n";
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    let (s, g) = (record.trajectory.first(), record.trajectory.last());
                    println!(
                        "{} points from ({:.4}, {:.4}, {:.4}) to ({:.4}, {:.4}, {:.4}) m, yaw {:.4} rad; wrote {}",
                        record.trajectory.len(),
                        s[0],
                        s[1],
                        s[2],
                        g[0],
                        g[1],
                        g[2],
                        record.yaw,
                        path.display()
                    );
                }
                None => print!("{json}"),
            }
        }
        Command::Serve {
            port,
            data,
            model,
            assets,
        } => {
            let model = model.map(|p| load_model(&p)).transpose()?;
            let state = AppState::new(&data, model)?;
            tokio::runtime::Runtime::new()?.block_on(serve(port, state, assets))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
