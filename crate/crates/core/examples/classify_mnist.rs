//! Classifies digits by sparse representation over a dictionary of
//! training images, using the bundled IDX sample.
//!
//! Run with `cargo run --release --example classify_mnist [idx_dir]`.

use safe_sbl::apps::classify::{classify, LabeledDictionary};
use safe_sbl::experiment::{load_mnist, run_classification_on, Dataset, ExperimentConfig};
use safe_sbl::sbl;

fn main() -> safe_sbl::Result<()> {
    let mut config = ExperimentConfig {
        n_monte_carlo: 3,
        batch: 10,
        lambda_grid: vec![0.05, 0.1, 0.3, 0.6],
        ..ExperimentConfig::for_dataset(Dataset::Mnist)
    };
    if let Some(dir) = std::env::args().nth(1) {
        config.mnist_dir = dir.into();
    }
    let data = load_mnist(&config.mnist_dir)?;
    println!(
        "{} training and {} test images",
        data.train.len(),
        data.test.len()
    );

    // One image by hand: the first ten training images of each digit form
    // the dictionary.
    let mut chosen = Vec::new();
    for digit in 0..10u8 {
        chosen.extend(
            (0..data.train.len())
                .filter(|&k| data.train.labels[k] == digit)
                .take(10),
        );
    }
    let raw = data.train.images.select_columns(&chosen);
    let labels = chosen.iter().map(|&k| data.train.labels[k]).collect();
    let dict = LabeledDictionary::new(&raw, labels)?;
    let image = data.test.images.column(0).into_owned();
    let problem = dict.problem_for(&image, 0.1)?;
    let fit = sbl::run(&problem, &config.sbl(config.screening))?;
    let c = classify(&fit.solution.theta, &dict)?;
    println!(
        "test image 0: label {}, predicted {}",
        data.test.labels[0], c.predicted
    );
    let prob: Vec<String> = c.prob.iter().map(|p| format!("{p:.2}")).collect();
    println!("prob [{}]", prob.join(" "));

    // The Monte-Carlo protocol.
    let report = run_classification_on(&config, &data)?;
    for (row, rec) in report.table.iter().zip(&report.records) {
        println!(
            "ratio {:.2}: accuracy {:.3} +/- {:.3}, rejected {:.1}%",
            row.ratio,
            row.mean,
            row.stderr,
            100.0 * rec.screening_pct
        );
    }
    Ok(())
}
