use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bench::{inner_times, max_abs_diff};
use super::{mean_stderr, ExperimentConfig, RunRecord};
use crate::apps::classify::{classify, LabeledDictionary, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::io::idx::{load_idx, IdxImages};
use crate::sbl;
use crate::screening::ScreeningRule;

#[derive(Debug, Clone)]
pub struct MnistData {
    pub train: IdxImages,
    pub test: IdxImages,
}

/// Reads `train-*` and `t10k-*` IDX pairs from `dir`.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<MnistData> {
    let dir = dir.as_ref();
    Ok(MnistData {
        train: load_idx(
            dir.join("train-images-idx3-ubyte"),
            dir.join("train-labels-idx1-ubyte"),
        )?,
        test: load_idx(
            dir.join("t10k-images-idx3-ubyte"),
            dir.join("t10k-labels-idx1-ubyte"),
        )?,
    })
}

/// `per_class` random training images of every digit, grouped by digit.
pub(crate) fn draw_dictionary(
    data: &MnistData,
    per_class: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(LabeledDictionary, Vec<usize>)> {
    let mut chosen = Vec::with_capacity(per_class * NUM_CLASSES);
    for k in 0..NUM_CLASSES as u8 {
        let pool: Vec<usize> = (0..data.train.len())
            .filter(|&i| data.train.labels[i] == k)
            .collect();
        if pool.len() < per_class {
            return Err(Error::Config(format!(
                "digit {k} has {} training images, {per_class} requested",
                pool.len()
            )));
        }
        let mut pick: Vec<usize> = sample(rng, pool.len(), per_class)
            .into_iter()
            .map(|j| pool[j])
            .collect();
        pick.sort_unstable();
        chosen.extend(pick);
    }
    let raw = DMatrix::from_fn(data.train.images.nrows(), chosen.len(), |r, c| {
        data.train.images[(r, chosen[c])]
    });
    let labels = chosen.iter().map(|&i| data.train.labels[i]).collect();
    Ok((LabeledDictionary::new(&raw, labels)?, chosen))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub ratio: f64,
    pub mean: f64,
    pub stderr: f64,
    pub per_trial: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    /// `metric` is mean accuracy; times are per test image.
    pub records: Vec<RunRecord>,
    pub table: Vec<AccuracyRow>,
}

pub fn run_classification(config: &ExperimentConfig) -> Result<ClassificationReport> {
    config.validate()?;
    run_classification_on(config, &load_mnist(&config.mnist_dir)?)
}

#[derive(Default, Clone)]
struct Acc {
    t_ori: f64,
    t_scr: f64,
    t_red: f64,
    pct: f64,
    diff: f64,
    runs: usize,
    per_trial: Vec<f64>,
}

pub fn run_classification_on(
    config: &ExperimentConfig,
    data: &MnistData,
) -> Result<ClassificationReport> {
    let grid = &config.lambda_grid;
    let mut acc = vec![Acc::default(); grid.len()];
    for trial in 0..config.n_monte_carlo {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(trial as u64));
        let (dict, _) = draw_dictionary(data, config.dict_per_class, &mut rng)?;
        if config.batch > data.test.len() {
            return Err(Error::Config(format!(
                "batch {} exceeds {} test images",
                config.batch,
                data.test.len()
            )));
        }
        let tests = sample(&mut rng, data.test.len(), config.batch).into_vec();
        for (g, &ratio) in grid.iter().enumerate() {
            let ratio = ExperimentConfig::effective_ratio(ratio);
            let mut correct = 0usize;
            for &k in &tests {
                let image: DVector<f64> = data.test.images.column(k).into_owned();
                let p = dict.problem_for(&image, ratio)?;
                let screened = sbl::run(&p, &config.sbl(config.screening))?;
                let (t_scr, t_red) = inner_times(&screened);
                let a = &mut acc[g];
                a.t_scr += t_scr;
                a.t_red += t_red;
                a.pct += screened.state.mean_rejection();
                a.runs += 1;
                if config.compare_unscreened && config.screening != ScreeningRule::Off {
                    let plain = sbl::run(&p, &config.sbl(ScreeningRule::Off))?;
                    a.t_ori += inner_times(&plain).1;
                    a.diff = a
                        .diff
                        .max(max_abs_diff(&plain.state.gamma, &screened.state.gamma));
                }
                match classify(&screened.solution.theta, &dict) {
                    Ok(c) if c.predicted == data.test.labels[k] => correct += 1,
                    Ok(_) | Err(Error::Undecidable) => {}
                    Err(e) => return Err(e),
                }
            }
            acc[g].per_trial.push(correct as f64 / tests.len() as f64);
        }
    }

    let compared = config.compare_unscreened && config.screening != ScreeningRule::Off;
    let mut records = Vec::with_capacity(grid.len());
    let mut table = Vec::with_capacity(grid.len());
    for (a, &ratio) in acc.iter().zip(grid) {
        let runs = a.runs.max(1) as f64;
        let (mean, stderr) = mean_stderr(&a.per_trial);
        let t_ori = if compared { a.t_ori / runs } else { f64::NAN };
        let diff = if compared { a.diff } else { f64::NAN };
        let mut rec = RunRecord::timed(
            ratio,
            t_ori,
            a.t_scr / runs,
            a.t_red / runs,
            a.pct / runs,
            diff,
        );
        rec.metric = mean;
        rec.stderr = stderr;
        records.push(rec);
        table.push(AccuracyRow {
            ratio,
            mean,
            stderr,
            per_trial: a.per_trial.clone(),
        });
    }
    Ok(ClassificationReport { records, table })
}
