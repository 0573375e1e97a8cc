//! Experiment configuration in a flat `key = value` text format.
//!
//! Blank lines and `#` comments are ignored; unknown keys are errors. Keys
//! left out take their default value. [`ExperimentConfig::to_text`] writes
//! every key, so a saved snapshot fully determines a run.

use std::path::{Path, PathBuf};

use crate::data::ImageShape;
use crate::error::{Error, Result};
use crate::xcsf::{Mode, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: Params,
    pub dataset: PathBuf,
    /// Drop the last CSV column (class labels).
    pub label_column: bool,
    /// Overrides the image layout of CSV data for image export.
    pub image_shape: Option<ImageShape>,
    pub seed: u64,
    pub trials: u64,
    pub checkpoint_interval: u64,
    /// Fraction of rows used for training.
    pub train_ratio: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: Params::default(),
            dataset: PathBuf::new(),
            label_column: false,
            image_shape: None,
            seed: 1,
            trials: 100_000,
            checkpoint_interval: 1000,
            train_ratio: 0.9,
            output_dir: PathBuf::from("output"),
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

impl ExperimentConfig {
    /// Parses configuration text. Relative paths stay as written; see
    /// [`ExperimentConfig::load`] for file-relative resolution.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: n + 1,
                message: format!("expected key = value, found '{line}'"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|message| Error::Config { line: n + 1, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative dataset and output paths
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.dataset.is_relative() {
            cfg.dataset = base.join(&cfg.dataset);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match key {
            "pop_size" => p.pop_size = parse_num(v)?,
            "pop_init" => p.pop_init = parse_bool(v)?,
            "epsilon0" => p.epsilon0 = parse_num(v)?,
            "beta" => p.beta = parse_num(v)?,
            "alpha" => p.alpha = parse_num(v)?,
            "nu" => p.nu = parse_num(v)?,
            "delta" => p.delta = parse_num(v)?,
            "theta_del" => p.theta_del = parse_num(v)?,
            "init_fitness" => p.init_fitness = parse_num(v)?,
            "init_error" => p.init_error = parse_num(v)?,
            "fitness_reduction" => p.fitness_reduction = parse_num(v)?,
            "error_reduction" => p.error_reduction = parse_num(v)?,
            "theta_ea" => p.theta_ea = parse_num(v)?,
            "lambda" => p.lambda = parse_num(v)?,
            "chi" => p.crossover = parse_num(v)?,
            "mu_min" => p.mu_min = parse_num(v)?,
            "momentum" => p.momentum = parse_num(v)?,
            "h_init" => p.h_init = parse_num(v)?,
            "h_mutate" => p.h_mutate = parse_num(v)?,
            "neuron_growth" => p.neuron_growth = v.parse()?,
            "h_max" => {
                p.h_max = match v.to_ascii_lowercase().as_str() {
                    "none" | "unbounded" => None,
                    _ => Some(parse_num(v)?),
                }
            }
            "connection_mutation" => p.connection_mutation = parse_bool(v)?,
            "mode" => p.mode = v.parse::<Mode>()?,
            "stale_limit" => p.stale_limit = parse_num(v)?,
            "match_threshold" => p.match_threshold = parse_num(v)?,
            "cover_attempts" => p.cover_attempts = parse_num(v)?,
            "dataset" => self.dataset = PathBuf::from(v),
            "label_column" => self.label_column = parse_bool(v)?,
            "image_shape" => {
                self.image_shape = match v.to_ascii_lowercase().as_str() {
                    "none" => None,
                    _ => Some(v.parse()?),
                }
            }
            "seed" => self.seed = parse_num(v)?,
            "trials" => self.trials = parse_num(v)?,
            "checkpoint_interval" => self.checkpoint_interval = parse_num(v)?,
            "train_ratio" => self.train_ratio = parse_num(v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.checkpoint_interval == 0 {
            return Err(Error::InvalidConfig("checkpoint_interval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.train_ratio) {
            return Err(Error::InvalidConfig("train_ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let h_max = p.h_max.map_or("none".to_string(), |h| h.to_string());
        let shape = self.image_shape.map_or("none".to_string(), |s| s.to_string());
        let lines = [
            ("pop_size", p.pop_size.to_string()),
            ("pop_init", p.pop_init.to_string()),
            ("epsilon0", p.epsilon0.to_string()),
            ("beta", p.beta.to_string()),
            ("alpha", p.alpha.to_string()),
            ("nu", p.nu.to_string()),
            ("delta", p.delta.to_string()),
            ("theta_del", p.theta_del.to_string()),
            ("init_fitness", p.init_fitness.to_string()),
            ("init_error", p.init_error.to_string()),
            ("fitness_reduction", p.fitness_reduction.to_string()),
            ("error_reduction", p.error_reduction.to_string()),
            ("theta_ea", p.theta_ea.to_string()),
            ("lambda", p.lambda.to_string()),
            ("chi", p.crossover.to_string()),
            ("mu_min", p.mu_min.to_string()),
            ("momentum", p.momentum.to_string()),
            ("h_init", p.h_init.to_string()),
            ("h_mutate", p.h_mutate.to_string()),
            ("neuron_growth", p.neuron_growth.as_str().to_string()),
            ("h_max", h_max),
            ("connection_mutation", p.connection_mutation.to_string()),
            ("mode", p.mode.as_str().to_string()),
            ("stale_limit", p.stale_limit.to_string()),
            ("match_threshold", p.match_threshold.to_string()),
            ("cover_attempts", p.cover_attempts.to_string()),
            ("dataset", self.dataset.display().to_string()),
            ("label_column", self.label_column.to_string()),
            ("image_shape", shape),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("checkpoint_interval", self.checkpoint_interval.to_string()),
            ("train_ratio", self.train_ratio.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
