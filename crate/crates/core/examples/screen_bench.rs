//! Times screened against unscreened solves along a grid of `λ/λ_max` on
//! a synthetic point-source instance, then writes a CSV and plots.
//!
//! Run with `cargo run --release --example screen_bench [out_dir]`.

use safe_sbl::experiment::{run_screen_bench, Dataset, ExperimentConfig};
use safe_sbl::io::{emit_csv, emit_plots};

fn main() -> safe_sbl::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/screen_bench".into());
    let config = ExperimentConfig {
        cols: 4000,
        out: out.into(),
        ..ExperimentConfig::for_dataset(Dataset::SyntheticPsf)
    };

    println!("ratio   rejected  speedup   max diff");
    let records = run_screen_bench(&config, |r| {
        println!(
            "{:5.2}   {:7.1}%  {:7.3}   {:.1e}",
            r.ratio,
            100.0 * r.screening_pct,
            r.speedup,
            r.max_diff
        );
    })?;

    std::fs::create_dir_all(&config.out).expect("create output dir");
    emit_csv(&records, config.out.join("screen_bench.csv"))?;
    for path in emit_plots(&records, &config.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
