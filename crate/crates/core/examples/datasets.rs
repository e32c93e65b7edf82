//! Reads the two supported dataset formats: IDX image files and UCI
//! bag-of-words triplets. A tiny corpus is built in memory so the example
//! needs no downloads.
//!
//! Run with `cargo run --release --example datasets`.

use std::io::Cursor;

use safe_sbl::experiment::load_mnist;
use safe_sbl::experiment::{bench_problem, BenchSettings, ExperimentConfig};
use safe_sbl::io::idx::{encode_idx, idx_from_bytes};
use safe_sbl::io::{parse_bow, BowSubset};
use safe_sbl::WeightVector;

fn main() -> safe_sbl::Result<()> {
    let mnist = load_mnist(ExperimentConfig::default().mnist_dir)?;
    let train = &mnist.train;
    println!(
        "IDX: {} images of {}x{}, first label {}",
        train.len(),
        train.rows,
        train.cols,
        train.labels[0]
    );
    let first = train.images.columns(0, 3).into_owned();
    let (img_bytes, label_bytes) = encode_idx(&first, train.rows, train.cols, &train.labels[..3]);
    let back = idx_from_bytes(&img_bytes, &label_bytes)?;
    println!("IDX round trip exact: {}", back.images == first);

    // docs, words, nonzero count, then `doc word count` triplets (1-based).
    let mut text = String::from("6\n5\n14\n");
    for (d, w, c) in [
        (1, 1, 3),
        (1, 2, 1),
        (2, 2, 2),
        (2, 3, 1),
        (3, 1, 1),
        (3, 4, 2),
        (4, 5, 4),
        (4, 1, 1),
        (5, 2, 1),
        (5, 5, 2),
        (6, 3, 3),
        (6, 4, 1),
        (6, 1, 2),
        (3, 5, 1),
    ] {
        text.push_str(&format!("{d} {w} {c}\n"));
    }
    let corpus = parse_bow(Cursor::new(text))?;
    println!(
        "BOW: {} docs, {} words, {} entries",
        corpus.docs,
        corpus.words,
        corpus.entries.len()
    );
    let problem = corpus.to_problem(BowSubset { words: 5, docs: 5 }, 1)?;
    println!(
        "problem {}x{} at lambda_max {:.4}",
        problem.rows(),
        problem.cols(),
        problem.noise_level()
    );

    let settings = ExperimentConfig::default().bench_settings();
    let settings = BenchSettings {
        repeats: 1,
        ..settings
    };
    let w = WeightVector::unit(problem.cols());
    for r in bench_problem(&problem, &w, &[0.9, 0.5, 0.1], &settings, |_| {})? {
        println!(
            "ratio {:.1}: {:.0}% rejected",
            r.ratio,
            100.0 * r.screening_pct
        );
    }
    Ok(())
}
