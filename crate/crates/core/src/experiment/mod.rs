//! Experiment drivers: λ-grid sweeps, Monte-Carlo loops, timing.
//!
//! Every driver is a function of `(config, seed)`. Trial `t` of a
//! Monte-Carlo loop uses seed `config.seed + t`.

mod bench;
mod classification;
mod config;
mod imaging;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub use bench::{bench_problem, run_sbl_solve, run_screen_bench, BenchSettings, SblSolveReport};
pub use classification::{
    load_mnist, run_classification, run_classification_on, AccuracyRow, ClassificationReport,
    MnistData,
};
pub use config::{default_grid, parse_ratios, Dataset, ExperimentConfig, WeightMode, MIN_RATIO};
pub use imaging::{run_imaging, ImagingReport, ImagingRow, PsfScene};

use crate::apps::psf::{generate_target, sample_dictionary, PsfParams, PsfPrior};
use crate::error::{Error, Result};
use crate::io::bow::{load_bow, BowSubset};
use crate::io::csv::round12;
use crate::problem::{lambda_max, normalize_columns, Problem, WeightVector};
use crate::sbl::SblConfig;
use crate::screening::ScreeningRule;
use crate::wlasso::SolverConfig;

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub ratio: f64,
    /// Unscreened solve, seconds.
    pub t_ori: f64,
    /// Screening, seconds.
    pub t_scr: f64,
    /// Reduced solve, seconds.
    pub t_red: f64,
    pub screening_pct: f64,
    /// `(t_scr + t_red) / t_ori`.
    pub speedup: f64,
    pub max_diff: f64,
    /// Accuracy, group IoU or PSNR, depending on the experiment.
    pub metric: f64,
    pub stderr: f64,
}

impl RunRecord {
    pub fn fields(&self) -> [f64; 9] {
        [
            self.ratio,
            self.t_ori,
            self.t_scr,
            self.t_red,
            self.screening_pct,
            self.speedup,
            self.max_diff,
            self.metric,
            self.stderr,
        ]
    }

    pub fn from_fields(v: [f64; 9]) -> Self {
        RunRecord {
            ratio: v[0],
            t_ori: v[1],
            t_scr: v[2],
            t_red: v[3],
            screening_pct: v[4],
            speedup: v[5],
            max_diff: v[6],
            metric: v[7],
            stderr: v[8],
        }
    }

    /// Rounds the times first so the speedup recomputes exactly from the
    /// emitted fields. Metric and stderr start as NaN.
    pub fn timed(ratio: f64, t_ori: f64, t_scr: f64, t_red: f64, pct: f64, max_diff: f64) -> Self {
        let (t_ori, t_scr, t_red) = (round12(t_ori), round12(t_scr), round12(t_red));
        let speedup = if t_ori > 0.0 {
            (t_scr + t_red) / t_ori
        } else {
            f64::NAN
        };
        RunRecord {
            ratio,
            t_ori,
            t_scr,
            t_red,
            screening_pct: pct,
            speedup,
            max_diff,
            metric: f64::NAN,
            stderr: f64::NAN,
        }
    }
}

/// Mean and standard error `s/√n` (sample standard deviation).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs `f` `reps` times and returns its last value with the median
/// wall-clock time in seconds.
pub fn timed_median<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(reps.max(1));
    let mut last = None;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        let v = f()?;
        times.push(t.elapsed().as_secs_f64());
        last = Some(v);
    }
    Ok((last.expect("at least one repetition"), median(&mut times)))
}

impl ExperimentConfig {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            gap_tol: self.gap_tol,
            max_sweeps: self.max_sweeps,
            ..SolverConfig::default()
        }
    }

    pub fn sbl(&self, screening: ScreeningRule) -> SblConfig {
        SblConfig {
            conv_tol: self.conv_tol,
            max_outer: self.max_outer,
            screening,
            residual_hint: self.sequential,
            solver: self.solver(),
            ..SblConfig::default()
        }
    }

    pub fn prior(&self) -> PsfPrior {
        PsfPrior {
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
        }
    }
}

/// Gaussian dictionary with a `sparsity`-sparse response plus noise, all
/// columns and the response at unit norm.
pub fn random_instance(
    rows: usize,
    cols: usize,
    sparsity: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (dict, _) = normalize_columns(&raw)?;
    let mut y = DVector::zeros(rows);
    for i in rand::seq::index::sample(&mut rng, cols, sparsity.min(cols)) {
        let mag = rng.random_range(1.0..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        y.axpy(mag, &dict.column(i), 1.0);
    }
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("finite std");
        y += DVector::from_fn(rows, |_, _| normal.sample(&mut rng));
    }
    let norm = y.norm();
    if norm > 0.0 {
        y /= norm;
    }
    Problem::new(dict, y, 1.0)
}

/// Random point sources kept two pixels inside the grid.
pub fn random_sources(config: &ExperimentConfig, rng: &mut impl Rng) -> Vec<(PsfParams, f64)> {
    let prior = config.prior();
    let margin = |len: usize| {
        let hi = len as f64 - 1.0;
        if hi > 4.0 {
            (2.0, hi - 2.0)
        } else {
            (0.0, hi.max(0.0))
        }
    };
    let (x_lo, x_hi) = margin(config.width);
    let (y_lo, y_hi) = margin(config.height);
    (0..config.sources)
        .map(|_| {
            let mut p = prior.sample(config.width, config.height, rng);
            p.x0 = rng.random_range(x_lo..=x_hi);
            p.y0 = rng.random_range(y_lo..=y_hi);
            let w = if config.intensity_max > config.intensity_min {
                rng.random_range(config.intensity_min..config.intensity_max)
            } else {
                config.intensity_min
            };
            (p, w)
        })
        .collect()
}

/// The single subproblem a benchmark runs on, at `λ = λ_max`.
pub fn bench_instance(config: &ExperimentConfig) -> Result<(Problem, WeightVector)> {
    let problem = match config.dataset {
        Dataset::SyntheticRandom => random_instance(
            config.rows,
            config.cols,
            config.sparsity,
            config.noise_std,
            config.seed,
        )?,
        Dataset::SyntheticPsf => {
            let d = sample_dictionary(
                config.cols,
                config.width,
                config.height,
                &config.prior(),
                config.seed,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
            let sources = random_sources(config, &mut rng);
            let (_, noisy) = generate_target(
                &sources,
                config.width,
                config.height,
                config.noise_std * config.noise_std,
                config.seed.wrapping_add(2),
            )?;
            Problem::from_shared(d.dict, noisy.to_vector(), 1.0)?
        }
        Dataset::Mnist => {
            let data = load_mnist(&config.mnist_dir)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let (dict, _) =
                classification::draw_dictionary(&data, config.dict_per_class, &mut rng)?;
            let k = rng.random_range(0..data.test.len());
            dict.problem_for(&data.test.images.column(k).into_owned(), 1.0)?
        }
        Dataset::Bow => {
            let path = config
                .bow_path
                .as_ref()
                .ok_or_else(|| Error::Config("dataset bow needs bow_path".into()))?;
            load_bow(
                path,
                BowSubset {
                    words: config.bow_words,
                    docs: config.bow_docs,
                },
                config.seed,
            )?
        }
    };
    let lam = lambda_max(&problem);
    if !(lam > 0.0) {
        return Err(Error::DegenerateResponse);
    }
    let problem = problem.with_noise_level(lam)?;
    let weights = match config.weights {
        WeightMode::Unit => WeightVector::unit(problem.cols()),
        WeightMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(7));
            WeightVector::new(DVector::from_fn(problem.cols(), |_, _| {
                rng.random_range(0.5..=2.0)
            }))?
        }
    };
    Ok((problem, weights))
}
