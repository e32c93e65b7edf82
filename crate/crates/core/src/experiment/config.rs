//! Line-oriented `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::screening::ScreeningRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    Mnist,
    Bow,
    SyntheticPsf,
    SyntheticRandom,
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mnist" => Ok(Dataset::Mnist),
            "bow" => Ok(Dataset::Bow),
            "synthetic-psf" => Ok(Dataset::SyntheticPsf),
            "synthetic-random" => Ok(Dataset::SyntheticRandom),
            other => Err(Error::Config(format!("unknown dataset `{other}`"))),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Mnist => "mnist",
            Dataset::Bow => "bow",
            Dataset::SyntheticPsf => "synthetic-psf",
            Dataset::SyntheticRandom => "synthetic-random",
        })
    }
}

/// How weights are drawn for single-subproblem benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Unit,
    /// Uniform in `[0.5, 2]`.
    Random,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unit" => Ok(WeightMode::Unit),
            "random" => Ok(WeightMode::Random),
            other => Err(Error::Config(format!("unknown weight mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    /// `λ/λ_max` values. Zero is evaluated at [`MIN_RATIO`].
    pub lambda_grid: Vec<f64>,
    /// Monte-Carlo trials (N1).
    pub n_monte_carlo: usize,
    /// Test images or targets per trial (N3).
    pub batch: usize,
    pub screening: ScreeningRule,
    pub seed: u64,
    pub out: PathBuf,

    pub gap_tol: f64,
    pub max_sweeps: usize,
    pub max_outer: usize,
    pub conv_tol: f64,
    /// Timing repetitions; the median is reported.
    pub repeats: usize,
    /// Also run without screening to measure `t_ori` and the solution gap.
    pub compare_unscreened: bool,
    /// Walk the grid from the largest ratio down, warm-starting each solve
    /// from the previous one and screening with its residual as a hint.
    pub sequential: bool,
    pub weights: WeightMode,

    pub rows: usize,
    pub cols: usize,
    pub sparsity: usize,
    pub noise_std: f64,

    pub mnist_dir: PathBuf,
    pub dict_per_class: usize,

    pub bow_path: Option<PathBuf>,
    pub bow_words: usize,
    pub bow_docs: usize,

    pub width: usize,
    pub height: usize,
    pub sources: usize,
    pub intensity_min: f64,
    pub intensity_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub box_half: f64,
    pub merge_radius: f64,
}

/// Stand-in for a zero ratio, where `λ` must still be positive.
pub const MIN_RATIO: f64 = 0.01;

pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

pub fn default_mnist_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mnist-sample")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: Dataset::SyntheticRandom,
            lambda_grid: default_grid(),
            n_monte_carlo: 5,
            batch: 20,
            screening: ScreeningRule::Tht,
            seed: 0,
            out: PathBuf::from("out"),
            gap_tol: 1e-10,
            max_sweeps: 50_000,
            max_outer: 30,
            conv_tol: 1e-6,
            repeats: 3,
            compare_unscreened: true,
            sequential: true,
            weights: WeightMode::Unit,
            rows: 100,
            cols: 1000,
            sparsity: 10,
            noise_std: 0.01,
            mnist_dir: default_mnist_dir(),
            dict_per_class: 100,
            bow_path: None,
            bow_words: 500,
            bow_docs: 2000,
            width: 28,
            height: 28,
            sources: 4,
            intensity_min: 5.0,
            intensity_max: 10.0,
            sigma_min: 0.8,
            sigma_max: 1.2,
            box_half: 1.5,
            merge_radius: 1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "`{key}`: expected a boolean, got `{v}`"
        ))),
    }
}

/// Parses `0,0.1,0.5` (brackets optional).
pub fn parse_ratios(s: &str) -> Result<Vec<f64>> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|t| parse::<f64>("ratios", t.trim()))
        .collect()
}

impl ExperimentConfig {
    pub fn for_dataset(dataset: Dataset) -> Self {
        let mut c = ExperimentConfig {
            dataset,
            ..Default::default()
        };
        if dataset == Dataset::SyntheticPsf {
            c.cols = 2000;
            c.batch = 5;
            c.noise_std = 0.1;
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "dataset" => self.dataset = v.parse()?,
            "lambda_grid" | "ratios" => self.lambda_grid = parse_ratios(v)?,
            "grid_len" => {
                let n: usize = parse(key, v)?;
                if n != self.lambda_grid.len() {
                    return Err(Error::Config(format!(
                        "grid_len {n} does not match lambda_grid of length {}",
                        self.lambda_grid.len()
                    )));
                }
            }
            "n_monte_carlo" => self.n_monte_carlo = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "screening" => self.screening = v.parse()?,
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "gap_tol" => self.gap_tol = parse(key, v)?,
            "max_sweeps" => self.max_sweeps = parse(key, v)?,
            "max_outer" => self.max_outer = parse(key, v)?,
            "conv_tol" => self.conv_tol = parse(key, v)?,
            "repeats" => self.repeats = parse(key, v)?,
            "compare_unscreened" => self.compare_unscreened = parse_bool(key, v)?,
            "sequential" => self.sequential = parse_bool(key, v)?,
            "weights" => self.weights = v.parse()?,
            "rows" => self.rows = parse(key, v)?,
            "cols" => self.cols = parse(key, v)?,
            "sparsity" => self.sparsity = parse(key, v)?,
            "noise_std" => self.noise_std = parse(key, v)?,
            "mnist_dir" => self.mnist_dir = PathBuf::from(v),
            "dict_per_class" => self.dict_per_class = parse(key, v)?,
            "bow_path" => self.bow_path = Some(PathBuf::from(v)),
            "bow_words" => self.bow_words = parse(key, v)?,
            "bow_docs" => self.bow_docs = parse(key, v)?,
            "width" => self.width = parse(key, v)?,
            "height" => self.height = parse(key, v)?,
            "sources" => self.sources = parse(key, v)?,
            "intensity_min" => self.intensity_min = parse(key, v)?,
            "intensity_max" => self.intensity_max = parse(key, v)?,
            "sigma_min" => self.sigma_min = parse(key, v)?,
            "sigma_max" => self.sigma_max = parse(key, v)?,
            "box_half" => self.box_half = parse(key, v)?,
            "merge_radius" => self.merge_radius = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedLine {
                line: k + 1,
                reason: format!("expected key = value, got `{line}`"),
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>, base: ExperimentConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = base;
        c.apply_text(&text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.lambda_grid.is_empty() {
            return bad("empty lambda grid".into());
        }
        if let Some(r) = self.lambda_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("ratio {r} outside [0, 1]"));
        }
        if self.n_monte_carlo == 0 || self.batch == 0 || self.repeats == 0 {
            return bad("n_monte_carlo, batch and repeats must be >= 1".into());
        }
        if self.rows == 0 || self.cols == 0 || self.width == 0 || self.height == 0 {
            return bad("dimensions must be >= 1".into());
        }
        if !(self.gap_tol > 0.0) || !(self.conv_tol > 0.0) || self.max_outer == 0 {
            return bad("gap_tol, conv_tol and max_outer must be positive".into());
        }
        if !(self.intensity_min >= 0.0 && self.intensity_max >= self.intensity_min) {
            return bad("intensity range must be nonnegative and ordered".into());
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise_std must be nonnegative".into());
        }
        Ok(())
    }

    /// Effective `λ/λ_max` for a grid entry.
    pub fn effective_ratio(r: f64) -> f64 {
        r.max(MIN_RATIO)
    }
}
