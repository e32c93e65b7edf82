mod common;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use safe_sbl::problem::{lambda_max, sparse_residual, Problem, WeightVector};
use safe_sbl::screening::{
    build_sphere, dome_test, feasible_point, pad_solution, reduce_problem, region_test, screen,
    screen_with_hint, select_plane_1, select_plane_2, sphere_test, tht_test, w_tht_screen, Dome,
    Region, RegionKind, ScreenMask, Screener, ScreeningRule, TwoPlaneRegion,
};
use safe_sbl::wlasso::{self, SolverConfig};

use common::*;

const RULES: [ScreeningRule; 3] = [
    ScreeningRule::Sphere,
    ScreeningRule::Dome,
    ScreeningRule::Tht,
];

fn solver() -> SolverConfig {
    SolverConfig::absolute(1e-12)
}

/// Columns with norms spread over `[0.5, 2]`.
fn uneven_problem(m: usize, n: usize, seed: u64, ratio: f64) -> Problem {
    let base = random_problem(m, n, seed);
    let mut r = rng(seed + 7);
    let scales: Vec<f64> = (0..n).map(|_| r.random_range(0.5..2.0)).collect();
    let dict = DMatrix::from_fn(m, n, |i, j| base.dict()[(i, j)] * scales[j]);
    let p = Problem::new(dict, base.response().clone(), 1.0).unwrap();
    let lam = lambda_max(&p);
    p.with_noise_level(ratio * lam).unwrap()
}

fn full_solve(p: &Problem, w: &WeightVector) -> DVector<f64> {
    wlasso::solve(p, w, &solver(), None).unwrap().theta
}

fn assert_safe(mask: &ScreenMask, theta: &DVector<f64>, what: &str) {
    for (i, &r) in mask.rejected.iter().enumerate() {
        assert!(
            !(r && theta[i] != 0.0),
            "{what}: rejected active feature {i}"
        );
    }
}

#[test]
fn feasible_point_passes_constraint_scan() {
    for seed in 0..10 {
        let p = uneven_problem(20, 100, seed, 0.4);
        let w = random_weights(100, seed + 100);
        let eta = feasible_point(&p, &w, lambda_max(&p)).unwrap();
        for i in 0..100 {
            let c = p.dict().column(i).dot(&eta).abs();
            assert!(
                c <= p.noise_level() * w.get(i) * (1.0 + 1e-12),
                "seed {seed} feature {i}"
            );
        }
    }
}

#[test]
fn sphere_contains_dual_optimum() {
    for seed in 0..10 {
        let p = uneven_problem(20, 100, seed, 0.3);
        let w = random_weights(100, seed + 100);
        let theta = full_solve(&p, &w);
        let eta_hat = sparse_residual(&p, &theta);
        let sphere = build_sphere(&p, &feasible_point(&p, &w, lambda_max(&p)).unwrap()).unwrap();
        assert!((&eta_hat - &sphere.center).norm() <= sphere.radius + 1e-9);
    }
}

#[test]
fn every_region_is_safe() {
    for seed in 0..30 {
        for ratio in [0.2, 0.5, 0.8] {
            let p = uneven_problem(20, 100, seed, ratio);
            let w = random_weights(100, seed + 100);
            let theta = full_solve(&p, &w);
            let eta = feasible_point(&p, &w, lambda_max(&p)).unwrap();
            let sphere = build_sphere(&p, &eta).unwrap();
            assert_safe(&sphere_test(&sphere, &p, &w).unwrap(), &theta, "sphere");
            let Ok(h1) = select_plane_1(&sphere, &p, &w) else {
                continue;
            };
            let dome = Dome::new(sphere.clone(), h1.clone()).unwrap();
            assert_safe(&dome_test(&dome, &p, &w).unwrap(), &theta, "dome");
            // The plane-defining feature survives its own constraint.
            if theta[h1.feature] != 0.0 {
                assert!(!dome_test(&dome, &p, &w).unwrap().rejected[h1.feature]);
            }
            let Ok(h2) = select_plane_2(&dome, &p, &w) else {
                continue;
            };
            let Ok(region) = TwoPlaneRegion::new(sphere.clone(), h1.clone(), h2.clone()) else {
                continue;
            };
            let mask = tht_test(&region, &p, &w).unwrap();
            assert_safe(&mask, &theta, "two planes");
            for f in [h1.feature, h2.feature] {
                assert!(!(theta[f] != 0.0 && mask.rejected[f]));
            }
            assert_eq!(
                region_test(&Region::TwoPlane(region), &p, &w).unwrap(),
                mask
            );
        }
    }
}

#[test]
fn screened_solve_matches_full_solve() {
    for seed in 0..20 {
        let p = uneven_problem(20, 100, seed, 0.5);
        let w = random_weights(100, seed + 100);
        let theta = full_solve(&p, &w);
        for rule in RULES {
            let o = screen(&p, &w, rule).unwrap();
            assert_safe(&o.mask, &theta, &rule.to_string());
            let (rp, rw, map) = reduce_problem(&p, &w, &o.mask).unwrap();
            let red = wlasso::solve(&rp, &rw, &solver(), None).unwrap();
            let padded = pad_solution(&red.theta, &map, 100).unwrap();
            assert!((&padded - &theta).amax() <= 1e-8, "seed {seed} {rule}");
        }
    }
}

#[test]
fn any_hint_is_safe() {
    let mut r = rng(11);
    for seed in 0..20 {
        let p = uneven_problem(20, 100, seed, 0.4);
        let w = random_weights(100, seed + 100);
        let theta = full_solve(&p, &w);
        let near = sparse_residual(&p, &(&theta * 0.9));
        let noise = gaussian_vec(&mut r, 20);
        for hint in [near, noise, DVector::zeros(20)] {
            for rule in RULES {
                let o = screen_with_hint(&p, &w, rule, Some(&hint)).unwrap();
                assert_safe(&o.mask, &theta, "hinted");
            }
        }
    }
}

#[test]
fn a_good_hint_never_hurts() {
    for seed in 0..10 {
        let p = uneven_problem(30, 200, seed, 0.5);
        let w = WeightVector::unit(200);
        let hint = sparse_residual(&p, &full_solve(&p, &w));
        let plain = screen(&p, &w, ScreeningRule::Sphere).unwrap().mask;
        let hinted = screen_with_hint(&p, &w, ScreeningRule::Sphere, Some(&hint))
            .unwrap()
            .mask;
        assert!(plain.is_subset_of(&hinted));
    }
}

#[test]
fn first_plane_matches_signed_scan() {
    for seed in 0..10 {
        let p = uneven_problem(20, 100, seed, 0.5);
        let w = random_weights(100, seed + 100);
        let sphere = build_sphere(&p, &feasible_point(&p, &w, lambda_max(&p)).unwrap()).unwrap();
        let h = select_plane_1(&sphere, &p, &w).unwrap();
        let (mut best, mut arg) = (f64::NEG_INFINITY, (0, 0.0));
        for i in 0..100 {
            let col = p.dict().column(i);
            for s in [1.0, -1.0] {
                let v = (s * col.dot(&sphere.center) - p.noise_level() * w.get(i)) / col.norm();
                if v > best {
                    best = v;
                    arg = (i, s);
                }
            }
        }
        assert_eq!((h.feature, h.sign), arg);
        assert!((h.psi - best / sphere.radius).abs() < 1e-12);
    }
}

#[test]
fn second_plane_matches_signed_scan() {
    for seed in 0..10 {
        let p = uneven_problem(20, 100, seed, 0.5);
        let w = random_weights(100, seed + 100);
        let sphere = build_sphere(&p, &feasible_point(&p, &w, lambda_max(&p)).unwrap()).unwrap();
        let h1 = select_plane_1(&sphere, &p, &w).unwrap();
        let dome = Dome::new(sphere, h1.clone()).unwrap();
        let h2 = select_plane_2(&dome, &p, &w).unwrap();
        let (mut best, mut arg) = (f64::NEG_INFINITY, (0, 0.0));
        for i in (0..100).filter(|&i| i != h1.feature) {
            let col = p.dict().column(i);
            if (col.dot(&h1.normal) / col.norm()).abs() > 1.0 - 1e-9 {
                continue;
            }
            for s in [1.0, -1.0] {
                let v = (s * col.dot(&dome.center) - p.noise_level() * w.get(i)) / col.norm();
                if v > best {
                    best = v;
                    arg = (i, s);
                }
            }
        }
        assert_eq!((h2.feature, h2.sign), arg);
    }
}

#[test]
fn screening_is_permutation_invariant() {
    let mut r = rng(21);
    for seed in 0..5 {
        let p = uneven_problem(20, 100, seed, 0.6);
        let w = random_weights(100, seed + 100);
        let mut perm: Vec<usize> = (0..100).collect();
        for i in (1..100).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let dict = DMatrix::from_fn(20, 100, |i, j| p.dict()[(i, perm[j])]);
        let q = Problem::new(dict, p.response().clone(), p.noise_level()).unwrap();
        let wq = WeightVector::new(DVector::from_fn(100, |j, _| w.get(perm[j]))).unwrap();
        for rule in RULES {
            let a = screen(&p, &w, rule).unwrap().mask;
            let b = screen(&q, &wq, rule).unwrap().mask;
            for j in 0..100 {
                assert_eq!(b.rejected[j], a.rejected[perm[j]], "seed {seed} {rule}");
            }
        }
    }
}

#[test]
fn rejection_grows_with_ratio() {
    let p = uneven_problem(40, 400, 3, 1.0);
    let w = WeightVector::unit(400);
    let lam_max = p.noise_level();
    let mut last = 0;
    let mut rises = 0;
    for k in 1..=10 {
        let q = p.with_noise_level(k as f64 / 10.0 * lam_max).unwrap();
        let n = w_tht_screen(&q, &w).unwrap().count_rejected();
        if n >= last {
            rises += 1;
        }
        last = n;
    }
    assert!(rises >= 9);
    let low = p.with_noise_level(0.01 * lam_max).unwrap();
    assert!(w_tht_screen(&low, &w).unwrap().count_rejected() <= 4);
}

#[test]
fn lambda_max_keeps_only_argmax() {
    let base = random_problem(20, 100, 8);
    let p = base.with_noise_level(lambda_max(&base)).unwrap();
    let w = WeightVector::unit(100);
    for rule in RULES {
        let o = screen(&p, &w, rule).unwrap();
        assert_eq!(o.region, RegionKind::Exact);
        assert_eq!(o.mask.count_rejected(), 99);
    }
}

#[test]
fn pad_restores_positions() {
    let p = random_problem(10, 30, 4);
    let w = WeightVector::unit(30);
    let mut r = rng(4);
    let mask = ScreenMask {
        rejected: (0..30).map(|_| r.random_bool(0.5)).collect(),
    };
    let (rp, rw, map) = reduce_problem(&p, &w, &mask).unwrap();
    assert_eq!(rp.cols(), 30 - mask.count_rejected());
    assert_eq!(rw.len(), rp.cols());
    let full = DVector::from_fn(30, |i, _| {
        if mask.rejected[i] {
            0.0
        } else {
            i as f64 + 1.0
        }
    });
    let back = pad_solution(&map.restrict(&full), &map, 30).unwrap();
    assert_eq!(back, full);
    for (k, &i) in map.kept().iter().enumerate() {
        assert_eq!(rp.column(k), p.column(i));
    }
}

#[test]
fn reused_screener_matches_fresh_screens() {
    let p = uneven_problem(30, 200, 41, 0.5);
    let screener = Screener::new(&p);
    for k in 0..40u64 {
        let w = random_weights(200, 1000 + k % 7);
        let hint = (k % 2 == 1).then(|| sparse_residual(&p, &full_solve(&p, &w)));
        for rule in RULES {
            let a = screener.screen(&w, rule, hint.as_ref()).unwrap();
            let b = screen_with_hint(&p, &w, rule, hint.as_ref()).unwrap();
            assert_eq!(a.mask, b.mask);
            assert_eq!(a.region, b.region);
        }
    }
}
