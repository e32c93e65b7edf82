//! Localizes point sources in noisy synthetic images and denoises them.
//!
//! Run with `cargo run --release --example psf_imaging [out_dir]`.

use std::path::PathBuf;

use safe_sbl::apps::metrics::{group_iou, localize, psnr};
use safe_sbl::experiment::{run_imaging, Dataset, ExperimentConfig, PsfScene};
use safe_sbl::problem::lambda_max;
use safe_sbl::sbl;

fn main() -> safe_sbl::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "out/psf_imaging".into()),
    );
    let config = ExperimentConfig {
        batch: 4,
        lambda_grid: vec![0.05, 0.1, 0.3, 0.5, 0.7],
        ..ExperimentConfig::for_dataset(Dataset::SyntheticPsf)
    };

    // A single target, end to end.
    let scene = PsfScene::generate(&config)?;
    let target = &scene.targets[0];
    let base = scene.problem(target)?;
    let problem = base.with_noise_level(0.1 * lambda_max(&base))?;
    let fit = sbl::run(&problem, &config.sbl(config.screening))?;
    let boxes = localize(
        &fit.solution.theta,
        &scene.dictionary.params,
        config.box_half,
        config.merge_radius,
    )?;
    let truths = target.truth_boxes(config.box_half);
    let recon = scene.reconstruct(&fit.solution.theta)?;
    println!("{} sources, {} detections", truths.len(), boxes.len());
    for b in &boxes {
        println!("  detection at ({:.2}, {:.2})", b.cx, b.cy);
    }
    for (p, w) in &target.sources {
        println!("  source at ({:.2}, {:.2}) intensity {w:.2}", p.x0, p.y0);
    }
    println!("group IoU {:.3}", group_iou(&boxes, &truths)?);
    println!(
        "PSNR noisy {:.2} dB, reconstructed {:.2} dB",
        psnr(&target.clean, &target.noisy)?,
        psnr(&target.clean, &recon)?
    );

    // The full sweep, with images of the first target.
    let images = out.join("images");
    std::fs::create_dir_all(&images).expect("create output dir");
    let report = run_imaging(&config, Some(&images))?;
    for row in &report.rows {
        println!(
            "ratio {:.2}: IoU {:.3} (random {:.3}), PSNR {:.2} dB vs noisy {:.2} dB",
            row.ratio, row.iou, row.iou_random, row.psnr_recon, row.psnr_noisy
        );
    }
    println!("images in {}", images.display());
    Ok(())
}
