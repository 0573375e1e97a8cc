use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xcsf_ae::experiment::{self, Corruption, ReconstructOptions};
use xcsf_ae::{CutoutSpec, ExperimentConfig, ImageShape};

/// Overrides every output directory when set.
const OUTPUT_ENV: &str = "XCSF_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "xcsf", version, about = "Train and inspect XCSF autoencoder populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a population from a config file.
    Run { config: PathBuf },
    /// Continue training from a saved checkpoint.
    Resume {
        checkpoint: PathBuf,
        #[arg(long)]
        trials: u64,
    },
    /// Reconstruct (optionally corrupted) samples with a saved population.
    Reconstruct {
        checkpoint: PathBuf,
        data: PathBuf,
        /// Salt-and-pepper noise fraction.
        #[arg(long, conflicts_with = "cutout")]
        noise: Option<f64>,
        /// Zero a random rectangle of each image.
        #[arg(long)]
        cutout: bool,
        /// Number of samples; 0 reconstructs every candidate row.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Only write the report, no images.
        #[arg(long)]
        no_images: bool,
        /// The dataset's last CSV column holds labels.
        #[arg(long)]
        label_column: bool,
        /// Image layout as HxW or HxWxC.
        #[arg(long)]
        image_shape: Option<ImageShape>,
        /// Output directory (default: `reconstruction` next to the checkpoint).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn env_output() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn checkpoint_dir(ckpt: &Path) -> PathBuf {
    ckpt.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn execute(command: Command) -> xcsf_ae::Result<()> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = env_output().unwrap_or_else(|| cfg.output_dir.clone());
            let m = experiment::run(&cfg, &out)?;
            println!("trained {} trials; outputs in {}", m.end_trial, out.display());
        }
        Command::Resume { checkpoint, trials } => {
            let out = env_output().unwrap_or_else(|| checkpoint_dir(&checkpoint));
            let m = experiment::resume(&checkpoint, trials, &out)?;
            println!(
                "resumed trials {}..{}; outputs in {}",
                m.start_trial,
                m.end_trial,
                out.display()
            );
        }
        Command::Reconstruct {
            checkpoint,
            data,
            noise,
            cutout,
            samples,
            no_images,
            label_column,
            image_shape,
            out,
        } => {
            let corruption = match (noise, cutout) {
                (Some(f), _) => {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(xcsf_ae::Error::InvalidConfig(format!(
                            "noise fraction {f} outside [0, 1]"
                        )));
                    }
                    Corruption::SaltPepper(f)
                }
                (None, true) => Corruption::Cutout(CutoutSpec::default()),
                (None, false) => Corruption::None,
            };
            let opts = ReconstructOptions {
                corruption,
                samples: (samples > 0).then_some(samples),
                export_images: !no_images,
                label_column,
                image_shape,
            };
            let out = out
                .or_else(env_output)
                .unwrap_or_else(|| checkpoint_dir(&checkpoint).join("reconstruction"));
            let report = experiment::reconstruct(&checkpoint, &data, &opts, &out)?;
            println!(
                "{} samples: corrupted-input MSE {:.6}, reconstruction MSE {:.6}",
                report.samples.len(),
                report.mean_corrupted_mse,
                report.mean_reconstruction_mse
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
