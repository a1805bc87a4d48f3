//! Run configuration: command-line flags layered over an optional
//! `key = value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use termfit_core::calibration::default_bounds;
use termfit_core::{DeConfig, Model};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Ns,
    Svensson,
    Both,
}

impl ModelChoice {
    pub fn models(self) -> &'static [Model] {
        match self {
            ModelChoice::Ns => &[Model::NelsonSiegel],
            ModelChoice::Svensson => &[Model::Svensson],
            ModelChoice::Both => &[Model::NelsonSiegel, Model::Svensson],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Flags shared by the pipeline subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Input file or directory
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Significance level for the normality and comparison tests
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fill missing tenors from the most recent earlier auction
    #[arg(long)]
    pub impute: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// DE population size
    #[arg(long)]
    pub de_pop: Option<usize>,
    /// DE differential weight
    #[arg(long)]
    pub de_f: Option<f64>,
    /// DE crossover probability
    #[arg(long)]
    pub de_cr: Option<f64>,
    /// DE generation cap
    #[arg(long)]
    pub de_gens: Option<usize>,
    /// Worker threads for per-date fitting (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub out: PathBuf,
    pub model: ModelChoice,
    pub alpha: f64,
    pub impute: bool,
    pub format: Format,
    pub de: DeConfig,
    pub threads: Option<usize>,
}

const KEYS: [&str; 12] =
    ["input", "out", "model", "seed", "alpha", "impute", "format", "de_pop", "de_f", "de_cr", "de_gens", "threads"];

/// Parses `key = value` lines; `#` starts a comment, values may be quoted and
/// dashes in keys are read as underscores.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::validation(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v);
        out.insert(key, v.to_string());
    }
    Ok(out)
}

fn from_file<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::validation(format!("config: cannot parse {key} = `{v}`"))))
        .transpose()
}

fn enum_from_file<T: ValueEnum>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    file.get(key)
        .map(|v| T::from_str(v, true).map_err(|_| CliError::validation(format!("config: invalid {key} = `{v}`"))))
        .transpose()
}

impl RunArgs {
    /// Merges flags over the config file, fills defaults and validates.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => parse_config_file(&std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
            None => BTreeMap::new(),
        };
        let path = |flag: &Option<PathBuf>, key: &str| -> Result<PathBuf, CliError> {
            let p = flag.clone().or_else(|| file.get(key).map(PathBuf::from));
            match p {
                Some(p) if !p.as_os_str().is_empty() => Ok(p),
                _ => Err(CliError::validation(format!("--{key} is required"))),
            }
        };
        let defaults = DeConfig::default();
        let de = DeConfig {
            population_size: self.de_pop.or(from_file(&file, "de_pop")?),
            weight_f: self.de_f.or(from_file(&file, "de_f")?).unwrap_or(defaults.weight_f),
            crossover_cr: self.de_cr.or(from_file(&file, "de_cr")?).unwrap_or(defaults.crossover_cr),
            max_generations: self.de_gens.or(from_file(&file, "de_gens")?).unwrap_or(defaults.max_generations),
            seed: self.seed.or(from_file(&file, "seed")?).unwrap_or(0),
            ..defaults
        };
        let cfg = RunConfig {
            input: path(&self.input, "input")?,
            out: path(&self.out, "out")?,
            model: self.model.or(enum_from_file(&file, "model")?).unwrap_or(ModelChoice::Both),
            alpha: self.alpha.or(from_file(&file, "alpha")?).unwrap_or(0.05),
            impute: self.impute || from_file(&file, "impute")?.unwrap_or(false),
            format: self.format.or(enum_from_file(&file, "format")?).unwrap_or(Format::Json),
            de,
            threads: self.threads.or(from_file(&file, "threads")?),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::validation(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        if self.threads == Some(0) {
            return Err(CliError::validation("threads must be positive"));
        }
        for m in self.model.models() {
            self.de.validate(&default_bounds(*m)).map_err(|e| CliError::validation(e.to_string()))?;
        }
        Ok(())
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// `dir/name` when `input` is a directory, else `input` itself.
pub fn file_or_in_dir(input: &Path, name: &str) -> PathBuf {
    if input.is_dir() {
        input.join(name)
    } else {
        input.to_path_buf()
    }
}
