use std::path::Path;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bench::{inner_times, max_abs_diff};
use super::{mean_stderr, random_sources, ExperimentConfig, RunRecord};
use crate::apps::metrics::{group_iou, localize, psnr, DetectionBox};
use crate::apps::psf::{generate_target, sample_dictionary, ImageGrid, PsfDictionary, PsfParams};
use crate::error::Result;
use crate::io::plot::write_png;
use crate::problem::{lambda_max, Problem};
use crate::sbl;
use crate::screening::ScreeningRule;

/// A sampled dictionary and a batch of noisy targets.
#[derive(Debug, Clone)]
pub struct PsfScene {
    pub dictionary: PsfDictionary,
    pub targets: Vec<Target>,
}

#[derive(Debug, Clone)]
pub struct Target {
    pub sources: Vec<(PsfParams, f64)>,
    pub clean: ImageGrid,
    pub noisy: ImageGrid,
}

impl Target {
    pub fn truth_boxes(&self, half: f64) -> Vec<DetectionBox> {
        self.sources
            .iter()
            .map(|(p, _)| DetectionBox::new(p.x0, p.y0, half))
            .collect()
    }
}

impl PsfScene {
    /// Dictionary from `seed`, target `k` from `seed + 1 + k`.
    pub fn generate(config: &ExperimentConfig) -> Result<Self> {
        let dictionary = sample_dictionary(
            config.cols,
            config.width,
            config.height,
            &config.prior(),
            config.seed,
        )?;
        let mut targets = Vec::with_capacity(config.batch);
        for k in 0..config.batch {
            let seed = config.seed.wrapping_add(1 + k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sources = random_sources(config, &mut rng);
            let (clean, noisy) = generate_target(
                &sources,
                config.width,
                config.height,
                config.noise_std * config.noise_std,
                seed ^ 0x5eed,
            )?;
            targets.push(Target {
                sources,
                clean,
                noisy,
            });
        }
        Ok(PsfScene {
            dictionary,
            targets,
        })
    }

    pub fn problem(&self, target: &Target) -> Result<Problem> {
        Problem::from_shared(self.dictionary.dict.clone(), target.noisy.to_vector(), 1.0)
    }

    pub fn reconstruct(&self, theta: &DVector<f64>) -> Result<ImageGrid> {
        ImageGrid::from_vector(
            self.dictionary.width,
            self.dictionary.height,
            &(self.dictionary.dict.as_ref() * theta),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingRow {
    pub ratio: f64,
    pub iou: f64,
    pub iou_stderr: f64,
    /// Group IoU of random supports of the same sizes.
    pub iou_random: f64,
    pub psnr_recon: f64,
    pub psnr_recon_stderr: f64,
    pub psnr_noisy: f64,
    pub support: f64,
}

#[derive(Debug, Clone)]
pub struct ImagingReport {
    /// `metric` is the mean group IoU.
    pub iou_records: Vec<RunRecord>,
    /// `metric` is the mean reconstruction PSNR.
    pub psnr_records: Vec<RunRecord>,
    pub rows: Vec<ImagingRow>,
}

impl ImagingReport {
    /// The row with the highest reconstruction PSNR.
    pub fn best(&self) -> Option<&ImagingRow> {
        self.rows
            .iter()
            .max_by(|a, b| a.psnr_recon.total_cmp(&b.psnr_recon))
    }
}

/// Sweeps the grid over every target. With `image_dir`, writes PNGs of the
/// first target's clean and noisy images and its reconstruction per ratio.
pub fn run_imaging(config: &ExperimentConfig, image_dir: Option<&Path>) -> Result<ImagingReport> {
    config.validate()?;
    let scene = PsfScene::generate(config)?;
    let n = scene.dictionary.params.len();
    if let Some(dir) = image_dir {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        write_png(&scene.targets[0].clean, dir.join("original.png"))?;
        write_png(&scene.targets[0].noisy, dir.join("noisy.png"))?;
    }
    let compared = config.compare_unscreened && config.screening != ScreeningRule::Off;
    let mut iou_records = Vec::new();
    let mut psnr_records = Vec::new();
    let mut rows = Vec::new();
    for &ratio in &config.lambda_grid {
        let eff = ExperimentConfig::effective_ratio(ratio);
        let (mut ious, mut rand_ious, mut psnrs, mut noisy_psnrs) =
            (vec![], vec![], vec![], vec![]);
        let (mut t_ori, mut t_scr, mut t_red, mut pct, mut diff, mut support) =
            (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0);
        for (k, target) in scene.targets.iter().enumerate() {
            let base = scene.problem(target)?;
            let p = base.with_noise_level(eff * lambda_max(&base))?;
            let r = sbl::run(&p, &config.sbl(config.screening))?;
            let (s, red) = inner_times(&r);
            t_scr += s;
            t_red += red;
            pct += r.state.mean_rejection();
            if compared {
                let plain = sbl::run(&p, &config.sbl(ScreeningRule::Off))?;
                t_ori += inner_times(&plain).1;
                diff = diff.max(max_abs_diff(&plain.state.gamma, &r.state.gamma));
            }
            let theta = &r.solution.theta;
            let recon = scene.reconstruct(theta)?;
            if k == 0 {
                if let Some(dir) = image_dir {
                    write_png(&recon, dir.join(format!("recon_{ratio:.2}.png")))?;
                }
            }
            psnrs.push(psnr(&target.clean, &recon)?);
            noisy_psnrs.push(psnr(&target.clean, &target.noisy)?);

            let truths = target.truth_boxes(config.box_half);
            let dets = localize(
                theta,
                &scene.dictionary.params,
                config.box_half,
                config.merge_radius,
            )?;
            ious.push(if dets.is_empty() {
                0.0
            } else {
                group_iou(&dets, &truths)?
            });
            let m = r.solution.support.len();
            support += m as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(10_000 + k as u64));
            let mut random = DVector::zeros(n);
            for i in sample(&mut rng, n, m.min(n)) {
                random[i] = 1.0;
            }
            let rdets = localize(
                &random,
                &scene.dictionary.params,
                config.box_half,
                config.merge_radius,
            )?;
            rand_ious.push(if rdets.is_empty() {
                0.0
            } else {
                group_iou(&rdets, &truths)?
            });
        }
        let t = scene.targets.len() as f64;
        let t_ori = if compared { t_ori / t } else { f64::NAN };
        let diff = if compared { diff } else { f64::NAN };
        let base = RunRecord::timed(ratio, t_ori, t_scr / t, t_red / t, pct / t, diff);
        let (iou, iou_se) = mean_stderr(&ious);
        let (ps, ps_se) = mean_stderr(&psnrs);
        let mut a = base.clone();
        a.metric = iou;
        a.stderr = iou_se;
        let mut b = base;
        b.metric = ps;
        b.stderr = ps_se;
        iou_records.push(a);
        psnr_records.push(b);
        rows.push(ImagingRow {
            ratio,
            iou,
            iou_stderr: iou_se,
            iou_random: mean_stderr(&rand_ious).0,
            psnr_recon: ps,
            psnr_recon_stderr: ps_se,
            psnr_noisy: mean_stderr(&noisy_psnrs).0,
            support: support / t,
        });
    }
    Ok(ImagingReport {
        iou_records,
        psnr_records,
        rows,
    })
}
