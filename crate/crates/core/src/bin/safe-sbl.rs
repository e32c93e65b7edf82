use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use safe_sbl::experiment::{
    parse_ratios, run_classification, run_imaging, run_sbl_solve, run_screen_bench, Dataset,
    ExperimentConfig, RunRecord,
};
use safe_sbl::io::{emit_csv, emit_plots};
use safe_sbl::screening::ScreeningRule;
use safe_sbl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "safe-sbl",
    version,
    about = "Screened sparse Bayesian learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time weighted l1 solves with and without screening over a ratio grid.
    ScreenBench(Common),
    /// Monte-Carlo digit classification on an IDX dataset.
    Classify(Common),
    /// Point-source localization and denoising on synthetic images.
    Reconstruct(Common),
    /// Full SBL runs on the benchmark instance, one per ratio.
    SblSolve(Common),
}

#[derive(Args)]
struct Common {
    /// Line-oriented `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_rule)]
    screening: Option<ScreeningRule>,
    /// Comma-separated lambda/lambda_max values, e.g. 0,0.1,0.5.
    #[arg(long)]
    ratios: Option<String>,
}

fn parse_rule(s: &str) -> std::result::Result<ScreeningRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn resolve(&self, dataset: Option<Dataset>) -> Result<ExperimentConfig> {
        let base = dataset
            .map(ExperimentConfig::for_dataset)
            .unwrap_or_default();
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, base)?,
            None => base,
        };
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if let Some(rule) = self.screening {
            c.screening = rule;
        }
        if let Some(r) = &self.ratios {
            c.lambda_grid = parse_ratios(r)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_outputs(records: &[RunRecord], dir: &Path, stem: &str) -> Result<()> {
    emit_csv(records, dir.join(format!("{stem}.csv")))?;
    let plots = dir.join(format!("{stem}-plots"));
    create_dir(&plots)?;
    emit_plots(records, &plots)?;
    Ok(())
}

fn print_record(r: &RunRecord) {
    eprintln!(
        "ratio {:.3}: rejected {:.1}%, speedup {:.3}, max diff {:.2e}",
        r.ratio,
        100.0 * r.screening_pct,
        r.speedup,
        r.max_diff
    );
}

/// Runs a streaming experiment, keeping whatever rows finished if it fails.
fn streamed(
    dir: &Path,
    stem: &str,
    run: impl FnOnce(&mut dyn FnMut(&RunRecord)) -> Result<()>,
) -> Result<()> {
    let mut done = Vec::new();
    let result = run(&mut |r: &RunRecord| {
        print_record(r);
        done.push(r.clone());
    });
    if result.is_err() && !done.is_empty() {
        let _ = emit_csv(&done, dir.join(format!("{stem}.partial.csv")));
    }
    result?;
    write_outputs(&done, dir, stem)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::ScreenBench(a) => {
            let c = a.resolve(None)?;
            create_dir(&c.out)?;
            streamed(&c.out, "screen-bench", |f| {
                run_screen_bench(&c, f).map(drop)
            })
        }
        Command::SblSolve(a) => {
            let c = a.resolve(None)?;
            create_dir(&c.out)?;
            streamed(&c.out, "sbl-solve", |f| run_sbl_solve(&c, f).map(drop))
        }
        Command::Classify(a) => {
            let c = a.resolve(Some(Dataset::Mnist))?;
            create_dir(&c.out)?;
            let report = run_classification(&c)?;
            for row in &report.table {
                eprintln!(
                    "ratio {:.3}: accuracy {:.3} +/- {:.3}",
                    row.ratio, row.mean, row.stderr
                );
            }
            write_outputs(&report.records, &c.out, "classify")
        }
        Command::Reconstruct(a) => {
            let c = a.resolve(Some(Dataset::SyntheticPsf))?;
            let images = c.out.join("images");
            create_dir(&images)?;
            let report = run_imaging(&c, Some(&images))?;
            for (i, p) in report.iou_records.iter().zip(&report.psnr_records) {
                eprintln!(
                    "ratio {:.3}: group IoU {:.3}, PSNR {:.2} dB, rejected {:.1}%",
                    i.ratio,
                    i.metric,
                    p.metric,
                    100.0 * i.screening_pct
                );
            }
            write_outputs(&report.iou_records, &c.out, "reconstruct-iou")?;
            write_outputs(&report.psnr_records, &c.out, "reconstruct-psnr")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
