mod common;

use nalgebra::DVector;

use common::gaussian_mass;
use safe_sbl::apps::psf::{
    generate_target, render_feature, sample_dictionary, PsfParams, PsfPrior,
};
use safe_sbl::apps::{classify, group_iou, iou, localize, psnr, DetectionBox, LabeledDictionary};
use safe_sbl::experiment::{
    load_mnist, run_classification_on, Dataset, ExperimentConfig, PsfScene,
};
use safe_sbl::problem::lambda_max;
use safe_sbl::sbl;
use safe_sbl::screening::ScreeningRule;

#[test]
fn delta_e_matches_quadrature() {
    use safe_sbl::apps::psf::delta_e;
    for &sigma in &[0.3, 0.8, 1.0, 1.7, 4.0] {
        for k in -12..=12 {
            let u = 0.37 * k as f64;
            let want = gaussian_mass(u - 0.5, u + 0.5, sigma, 2000);
            assert!(
                (delta_e(u, sigma) - want).abs() < 1e-6,
                "u {u} sigma {sigma}"
            );
        }
    }
}

#[test]
fn rendered_feature_is_separable_product() {
    let p = PsfParams::new(6.3, 2.8, 1.1);
    let img = render_feature(&p, 11, 7);
    for y in 0..7 {
        for x in 0..11 {
            let want = gaussian_mass(x as f64 - 6.3 - 0.5, x as f64 - 6.3 + 0.5, 1.1, 2000)
                * gaussian_mass(y as f64 - 2.8 - 0.5, y as f64 - 2.8 + 0.5, 1.1, 2000);
            assert!((img.get(x, y) - want).abs() < 1e-6);
        }
    }
    // The brightest pixel is the one holding the center.
    let (mut bx, mut by) = (0, 0);
    for y in 0..7 {
        for x in 0..11 {
            if img.get(x, y) > img.get(bx, by) {
                (bx, by) = (x, y);
            }
        }
    }
    assert_eq!((bx, by), (6, 3));
}

#[test]
fn full_size_dictionary_shape() {
    let d = sample_dictionary(10_000, 28, 28, &PsfPrior::default(), 4).unwrap();
    assert_eq!(d.dict.shape(), (784, 10_000));
    assert_eq!(d.params.len(), 10_000);
    assert!(d.dict.column_iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn group_iou_against_pairwise_table() {
    let dets = [
        DetectionBox::new(2.0, 2.0, 1.5),
        DetectionBox::new(2.8, 2.3, 1.5),
        DetectionBox::new(9.0, 1.0, 1.5),
    ];
    let truths = [
        DetectionBox::new(2.5, 2.0, 1.5),
        DetectionBox::new(8.0, 1.5, 1.5),
    ];
    // Overlap area of two equal squares, by hand.
    let pair = |a: &DetectionBox, b: &DetectionBox| {
        let ox = (3.0 - (a.cx - b.cx).abs()).max(0.0);
        let oy = (3.0 - (a.cy - b.cy).abs()).max(0.0);
        let i = ox * oy;
        i / (18.0 - i)
    };
    let mut total = 0.0;
    for d in &dets {
        let best = truths.iter().map(|t| pair(d, t)).fold(0.0, f64::max);
        total += best;
    }
    let want = total / 3.0;
    assert!((group_iou(&dets, &truths).unwrap() - want).abs() < 1e-12);
    // Fewer detections than truths: averaged over truths instead.
    let want_rev: f64 = truths.iter().map(|t| pair(t, &dets[0])).sum::<f64>() / 2.0;
    assert!((group_iou(&dets[..1], &truths).unwrap() - want_rev).abs() < 1e-12);
    for d in &dets {
        for t in &truths {
            assert!((iou(d, t) - pair(d, t)).abs() < 1e-12);
        }
    }
}

#[test]
fn psnr_falls_as_noise_grows() {
    let src = [(PsfParams::new(10.0, 12.0, 1.0), 8.0)];
    let mut last = f64::INFINITY;
    for &var in &[1e-4, 1e-3, 1e-2, 1e-1] {
        let (clean, noisy) = generate_target(&src, 28, 28, var, 5).unwrap();
        let v = psnr(&clean, &noisy).unwrap();
        assert!(v < last, "variance {var}: {v} after {last}");
        last = v;
    }
}

#[test]
fn localize_merges_to_weighted_centroid() {
    let params = vec![
        PsfParams::new(5.0, 5.0, 1.0),
        PsfParams::new(5.6, 5.0, 1.0),
        PsfParams::new(5.0, 5.8, 1.0),
        PsfParams::new(20.0, 20.0, 1.0),
    ];
    let theta = DVector::from_vec(vec![4.0, -2.0, 2.0, 1.0]);
    let boxes = localize(&theta, &params, 1.5, 1.0).unwrap();
    assert_eq!(boxes.len(), 2);
    assert!((boxes[0].cx - (4.0 * 5.0 + 2.0 * 5.6 + 2.0 * 5.0) / 8.0).abs() < 1e-12);
    assert!((boxes[0].cy - (4.0 * 5.0 + 2.0 * 5.0 + 2.0 * 5.8) / 8.0).abs() < 1e-12);
    assert_eq!(boxes[1], DetectionBox::new(20.0, 20.0, 1.5));
}

#[test]
fn four_sources_are_located() {
    let cfg = ExperimentConfig {
        batch: 1,
        seed: 21,
        ..ExperimentConfig::for_dataset(Dataset::SyntheticPsf)
    };
    let scene = PsfScene::generate(&cfg).unwrap();
    let target = &scene.targets[0];
    let base = scene.problem(target).unwrap();
    let lam_max = lambda_max(&base);
    let mut best: Option<(f64, sbl::SblResult)> = None;
    for &ratio in &[0.05, 0.1, 0.2, 0.3, 0.5] {
        let p = base.with_noise_level(ratio * lam_max).unwrap();
        let r = sbl::run(&p, &cfg.sbl(ScreeningRule::Tht)).unwrap();
        let plain = sbl::run(&p, &cfg.sbl(ScreeningRule::Off)).unwrap();
        assert_eq!(r.solution.support, plain.solution.support);
        let v = psnr(
            &target.clean,
            &scene.reconstruct(&r.solution.theta).unwrap(),
        )
        .unwrap();
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, r));
        }
    }
    let (_, r) = best.unwrap();
    let dets = localize(&r.solution.theta, &scene.dictionary.params, 1.5, 1.0).unwrap();
    let found = target
        .sources
        .iter()
        .filter(|(s, _)| dets.iter().any(|d| (d.cx - s.x0).hypot(d.cy - s.y0) <= 1.5))
        .count();
    assert!(found >= 3, "{found} of 4 sources within 1.5 px");
}

#[test]
fn classification_summary_recomputes() {
    let cfg = ExperimentConfig {
        dataset: Dataset::Mnist,
        lambda_grid: vec![0.1, 0.5],
        n_monte_carlo: 3,
        batch: 6,
        dict_per_class: 12,
        compare_unscreened: false,
        seed: 8,
        ..ExperimentConfig::default()
    };
    let data = load_mnist(&cfg.mnist_dir).unwrap();
    let rep = run_classification_on(&cfg, &data).unwrap();
    for (row, rec) in rep.table.iter().zip(&rep.records) {
        let t = &row.per_trial;
        assert_eq!(t.len(), 3);
        let mean = t.iter().sum::<f64>() / 3.0;
        let var = t.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 2.0;
        assert!((row.mean - mean).abs() < 1e-12);
        assert!((row.stderr - (var / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(rec.metric, row.mean);
        assert!(t.iter().all(|a| (a * 6.0 - (a * 6.0).round()).abs() < 1e-9));
    }
}

#[test]
fn classifier_reads_a_self_match() {
    let data = load_mnist(ExperimentConfig::default().mnist_dir).unwrap();
    let cols: Vec<usize> = (0..60).collect();
    let raw = nalgebra::DMatrix::from_fn(784, cols.len(), |r, c| data.train.images[(r, c)]);
    let labels = cols.iter().map(|&i| data.train.labels[i]).collect();
    let dict = LabeledDictionary::new(&raw, labels).unwrap();
    let image = data.train.images.column(17).into_owned();
    let p = dict.problem_for(&image, 0.05).unwrap();
    let r = sbl::run(&p, &ExperimentConfig::default().sbl(ScreeningRule::Tht)).unwrap();
    let c = classify(&r.solution.theta, &dict).unwrap();
    assert_eq!(c.predicted, data.train.labels[17]);
    let norm: f64 = c.prob.iter().map(|p| p * p).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
}
