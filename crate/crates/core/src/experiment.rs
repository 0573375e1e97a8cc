//! Config-driven training runs, checkpoint/resume and reconstruction export.
//!
//! A run directory holds `metrics.csv`, `population.ckpt` and
//! `manifest.json`. The checkpoint stores the full training state, so a
//! resumed run continues the exact stream an uninterrupted run would produce.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::checkpoint::{self, Reader, Writer};
use crate::config::ExperimentConfig;
use crate::data::{self, CutoutSpec, Dataset, ImageShape};
use crate::error::{Error, Result};
use crate::metrics::{self, Checkpoint, CSV_HEADER};
use crate::xcsf::Xcsf;

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "population.ckpt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "reconstruction.csv";

const TRAIN_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const CORRUPTION_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Identity of a dataset file: its shape and the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub features: usize,
    pub sha256: String,
}

impl Fingerprint {
    fn of(path: &Path, data: &Dataset) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let hash = Sha256::digest(&bytes);
        Ok(Fingerprint {
            rows: data.rows(),
            features: data.n_features(),
            sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputPaths {
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
}

/// Everything needed to repeat a run given the dataset file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub seed: u64,
    pub dataset: PathBuf,
    pub fingerprint: Fingerprint,
    pub rng: &'static str,
    pub outputs: OutputPaths,
    pub start_trial: u64,
    pub end_trial: u64,
}

/// Trial statistics accumulated since the last metrics row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Window {
    error_sum: f64,
    match_sum: f64,
    trials: u64,
}

/// A dataset, its split and a learning system, advanced trial by trial.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub data: Dataset,
    pub system: Xcsf,
    pub fingerprint: Fingerprint,
    window: Window,
}

fn load_dataset(config: &ExperimentConfig) -> Result<(Dataset, Fingerprint)> {
    let mut data = data::load(&config.dataset, config.label_column)?;
    if let Some(shape) = config.image_shape {
        if shape.len() != data.n_features() {
            return Err(Error::data(
                &config.dataset,
                format!("image shape {shape} does not cover {} features", data.n_features()),
            ));
        }
        data.image_shape = Some(shape);
    }
    let fingerprint = Fingerprint::of(&config.dataset, &data)?;
    let data = data.split(config.train_ratio, &mut stream_rng(config.seed, SPLIT_STREAM))?;
    if data.train_idx.is_empty() {
        return Err(Error::data(&config.dataset, "training split is empty"));
    }
    Ok((data, fingerprint))
}

impl Experiment {
    /// Loads and splits the dataset and builds the initial population.
    pub fn new(mut config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        if let Ok(abs) = fs::canonicalize(&config.dataset) {
            config.dataset = abs;
        }
        let (data, fingerprint) = load_dataset(&config)?;
        let system = Xcsf::new(
            config.params.clone(),
            data.n_features(),
            stream_rng(config.seed, TRAIN_STREAM),
        )?;
        Ok(Experiment {
            config,
            data,
            system,
            fingerprint,
            window: Window::default(),
        })
    }

    pub fn trial(&self) -> u64 {
        self.system.pop.trial
    }

    /// Runs one trial on a training row drawn uniformly with replacement.
    pub fn step(&mut self) -> Result<()> {
        let k = self.system.rng.random_range(0..self.data.train_idx.len());
        let row = self.data.train_idx[k];
        let out = self.system.run_trial(self.data.row(row))?;
        self.window.error_sum += out.error;
        self.window.match_sum += out.match_micro as f64;
        self.window.trials += 1;
        Ok(())
    }

    /// Trains for `trials` more trials, producing a metrics row whenever the
    /// trial counter reaches a multiple of the checkpoint interval.
    pub fn train<F: FnMut(&Checkpoint) -> Result<()>>(&mut self, trials: u64, mut on_row: F) -> Result<()> {
        for _ in 0..trials {
            self.step()?;
            if self.trial().is_multiple_of(self.config.checkpoint_interval) {
                let row = self.measure()?;
                on_row(&row)?;
            }
        }
        Ok(())
    }

    /// Mean system-prediction MSE over `rows` without learning, and the mean
    /// micro match-set size.
    pub fn evaluate_rows(&self, rows: &[usize]) -> Result<(f64, f64)> {
        if rows.is_empty() {
            return Ok((f64::NAN, f64::NAN));
        }
        let (mut err, mut size) = (0.0, 0.0);
        for &i in rows {
            let x = self.data.row(i);
            let e = self.system.evaluate(x)?;
            err += metrics::mse(&e.prediction, x);
            size += e.match_micro as f64;
        }
        let n = rows.len() as f64;
        Ok((err / n, size / n))
    }

    /// Produces the metrics row for the current state and clears the trial
    /// window. Before any trial has run, the training columns come from an
    /// evaluation pass over the training split.
    pub fn measure(&mut self) -> Result<Checkpoint> {
        let (train_mse, m_size) = if self.window.trials == 0 {
            self.evaluate_rows(&self.data.train_idx)?
        } else {
            let n = self.window.trials as f64;
            (self.window.error_sum / n, self.window.match_sum / n)
        };
        self.window = Window::default();
        let (valid_mse, _) = self.evaluate_rows(&self.data.valid_idx)?;
        let mfrac = self
            .system
            .best_classifier(self.data.iter_rows())
            .map_or(0.0, |(_, f)| f);
        let s = metrics::population_stats(&self.system);
        Ok(Checkpoint {
            trial: self.trial(),
            train_mse,
            valid_mse,
            mfrac,
            c_h: s.c_h,
            p_h: s.p_h,
            c_w: s.c_w,
            p_w: s.p_w,
            c_w_total: s.c_w_total,
            p_w_total: s.p_w_total,
            m_size,
            macro_count: s.macro_count,
            mean_mu: s.mean_mu,
        })
    }

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(self.config.to_text().as_bytes());
        w.u64(self.fingerprint.rows as u64);
        w.u64(self.fingerprint.features as u64);
        w.bytes(self.fingerprint.sha256.as_bytes());
        w.f64(self.window.error_sum);
        w.f64(self.window.match_sum);
        w.u64(self.window.trials);
        checkpoint::write_rng(&mut w, &self.system.rng);
        checkpoint::write_population(&mut w, &self.system.pop);
        w.into_inner()
    }

    /// Writes the full training state atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_file(path, &self.encode())
    }

    /// Restores a saved state, reloading the dataset it names and checking
    /// that the file is unchanged.
    pub fn load(path: &Path) -> Result<Self> {
        let payload = checkpoint::read_file(path)?;
        let bad = |message: String| Error::Checkpoint {
            path: path.into(),
            message,
        };
        let mut r = Reader::new(&payload);
        let parsed = (|| -> std::result::Result<_, String> {
            let text = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| "config is not UTF-8")?;
            let rows = r.usize()?;
            let features = r.usize()?;
            let sha256 = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| "bad dataset hash")?;
            let window = Window {
                error_sum: r.f64()?,
                match_sum: r.f64()?,
                trials: r.u64()?,
            };
            let rng = checkpoint::read_rng(&mut r)?;
            let pop = checkpoint::read_population(&mut r)?;
            r.finish()?;
            Ok((text, Fingerprint { rows, features, sha256 }, window, rng, pop))
        })();
        let (text, saved, window, rng, pop) = parsed.map_err(bad)?;
        let config = ExperimentConfig::parse(&text).map_err(|e| bad(e.to_string()))?;
        let (data, fingerprint) = load_dataset(&config)?;
        if fingerprint != saved {
            return Err(Error::data(
                &config.dataset,
                "dataset differs from the one the checkpoint was trained on",
            ));
        }
        let system = Xcsf::from_parts(config.params.clone(), data.n_features(), pop, rng)?;
        system.check_invariants().map_err(|e| bad(e.to_string()))?;
        Ok(Experiment {
            config,
            data,
            system,
            fingerprint,
            window,
        })
    }

    fn manifest(&self, out_dir: &Path, start_trial: u64) -> RunManifest {
        RunManifest {
            config: self.config.to_text(),
            seed: self.config.seed,
            dataset: self.config.dataset.clone(),
            fingerprint: self.fingerprint.clone(),
            rng: "ChaCha8",
            outputs: OutputPaths {
                metrics: out_dir.join(METRICS_FILE),
                checkpoint: out_dir.join(CHECKPOINT_FILE),
            },
            start_trial,
            end_trial: self.trial(),
        }
    }

    fn finish(&self, out_dir: &Path, start_trial: u64) -> Result<RunManifest> {
        self.save(&out_dir.join(CHECKPOINT_FILE))?;
        let manifest = self.manifest(out_dir, start_trial);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, json + "\n").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(manifest)
    }
}

struct MetricsWriter {
    file: File,
    path: PathBuf,
}

impl MetricsWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let mut file = File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        writeln!(file, "{CSV_HEADER}").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(MetricsWriter { file, path })
    }

    fn append(path: PathBuf) -> Result<Self> {
        if !path.exists() {
            return Self::create(path);
        }
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Ok(MetricsWriter { file, path })
    }

    fn row(&mut self, c: &Checkpoint) -> Result<()> {
        writeln!(self.file, "{}", c.csv_row()).map_err(|e| Error::io(format!("writing {}", self.path.display()), e))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

/// Trains from scratch for the configured budget, writing the metrics
/// stream (starting with a trial-0 row), the final checkpoint and the
/// manifest into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let mut exp = Experiment::new(config.clone())?;
    create_dir(out_dir)?;
    let mut metrics = MetricsWriter::create(out_dir.join(METRICS_FILE))?;
    let first = exp.measure()?;
    metrics.row(&first)?;
    exp.train(config.trials, |c| metrics.row(c))?;
    exp.finish(out_dir, 0)
}

/// Continues a saved run for `extra_trials`, appending to the metrics stream
/// in `out_dir`. Zero extra trials leaves every file untouched.
pub fn resume(checkpoint_path: &Path, extra_trials: u64, out_dir: &Path) -> Result<RunManifest> {
    let mut exp = Experiment::load(checkpoint_path)?;
    let start = exp.trial();
    if extra_trials == 0 {
        return Ok(exp.manifest(out_dir, start));
    }
    create_dir(out_dir)?;
    let mut metrics = MetricsWriter::append(out_dir.join(METRICS_FILE))?;
    exp.train(extra_trials, |c| metrics.row(c))?;
    exp.finish(out_dir, start)
}

/// Input corruption applied before reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corruption {
    None,
    SaltPepper(f64),
    Cutout(CutoutSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub row: usize,
    /// MSE of the corrupted input against the clean original.
    pub corrupted_mse: f64,
    /// MSE of the system reconstruction against the clean original.
    pub reconstruction_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub samples: Vec<SampleResult>,
    pub mean_corrupted_mse: f64,
    pub mean_reconstruction_mse: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub corruption: Corruption,
    /// Number of rows to reconstruct; `None` uses every candidate row.
    pub samples: Option<usize>,
    pub export_images: bool,
    pub label_column: bool,
    pub image_shape: Option<ImageShape>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            corruption: Corruption::None,
            samples: Some(10),
            export_images: true,
            label_column: false,
            image_shape: None,
        }
    }
}

/// Binary 8-bit graymap with maxval 255 and values round(v · 255).
pub fn write_pgm(path: &Path, pixels: &[f64], width: usize, height: usize) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn export_image(dir: &Path, stem: &str, x: &[f64], shape: ImageShape) -> Result<()> {
    let plane = shape.height * shape.width;
    if shape.channels == 1 {
        return write_pgm(&dir.join(format!("{stem}.pgm")), x, shape.width, shape.height);
    }
    for c in 0..shape.channels {
        let px = &x[c * plane..(c + 1) * plane];
        write_pgm(&dir.join(format!("{stem}_c{c}.pgm")), px, shape.width, shape.height)?;
    }
    Ok(())
}

/// Reconstructs sampled rows of `dataset_path` with a saved population.
///
/// When the dataset is the one the run trained on, samples come from its
/// validation split; otherwise any row may be drawn. Writes a per-sample
/// report and, if requested, original/corrupted/reconstructed graymaps.
pub fn reconstruct(
    checkpoint_path: &Path,
    dataset_path: &Path,
    opts: &ReconstructOptions,
    out_dir: &Path,
) -> Result<ReconstructionReport> {
    let exp = Experiment::load(checkpoint_path)?;
    let mut data = data::load(dataset_path, opts.label_column)?;
    if data.n_features() != exp.system.n_features {
        return Err(Error::data(
            dataset_path,
            format!(
                "{} features, population expects {}",
                data.n_features(),
                exp.system.n_features
            ),
        ));
    }
    if let Some(shape) = opts.image_shape.or(exp.config.image_shape) {
        if shape.len() != data.n_features() {
            return Err(Error::data(
                dataset_path,
                format!("image shape {shape} does not match feature count"),
            ));
        }
        data.image_shape = Some(shape);
    }
    let same = Fingerprint::of(dataset_path, &data)? == exp.fingerprint;
    let pool: Vec<usize> = if same && !exp.data.valid_idx.is_empty() {
        exp.data.valid_idx.clone()
    } else {
        (0..data.rows()).collect()
    };
    let mut rng = stream_rng(exp.config.seed, CORRUPTION_STREAM);
    let count = opts.samples.map_or(pool.len(), |n| n.min(pool.len()));
    let mut rows: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), count)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    rows.sort_unstable();

    create_dir(out_dir)?;
    let mut samples = Vec::with_capacity(rows.len());
    let mut images = Vec::new();
    for &row in &rows {
        let clean = data.row(row);
        let noisy = match opts.corruption {
            Corruption::None => clean.to_vec(),
            Corruption::SaltPepper(f) => data::salt_pepper(clean, f, &mut rng),
            Corruption::Cutout(spec) => data::cutout(clean, data.image_shape, spec, &mut rng)?,
        };
        let recon = exp.system.evaluate(&noisy)?.prediction;
        samples.push(SampleResult {
            row,
            corrupted_mse: metrics::mse(&noisy, clean),
            reconstruction_mse: metrics::mse(&recon, clean),
        });
        if opts.export_images {
            images.push((row, noisy, recon));
        }
    }
    let n = samples.len().max(1) as f64;
    let report = ReconstructionReport {
        mean_corrupted_mse: samples.iter().map(|s| s.corrupted_mse).sum::<f64>() / n,
        mean_reconstruction_mse: samples.iter().map(|s| s.reconstruction_mse).sum::<f64>() / n,
        samples,
    };

    let mut csv = String::from("row,corrupted_mse,reconstruction_mse\n");
    for s in &report.samples {
        csv += &format!("{},{},{}\n", s.row, s.corrupted_mse, s.reconstruction_mse);
    }
    let path = out_dir.join(REPORT_FILE);
    fs::write(&path, csv).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;

    if opts.export_images {
        let shape = data.image_shape.ok_or(Error::MissingImageShape)?;
        for (row, noisy, recon) in images {
            export_image(out_dir, &format!("{row}_original"), data.row(row), shape)?;
            export_image(out_dir, &format!("{row}_corrupted"), &noisy, shape)?;
            export_image(out_dir, &format!("{row}_reconstruction"), &recon, shape)?;
        }
    }
    Ok(report)
}
