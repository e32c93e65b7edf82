//! Builds the sphere, dome and two-plane regions step by step and compares
//! how many features each one rejects.
//!
//! Run with `cargo run --release --example screening_regions`.

use nalgebra::DVector;

use safe_sbl::experiment::random_instance;
use safe_sbl::problem::lambda_max;
use safe_sbl::screening::{
    build_sphere, dome_test, feasible_point, screen, select_plane_1, select_plane_2, sphere_test,
    tht_test, Dome, ScreeningRule, TwoPlaneRegion,
};
use safe_sbl::wlasso::{self, SolverConfig};
use safe_sbl::WeightVector;

fn main() -> safe_sbl::Result<()> {
    let base = random_instance(100, 1000, 2, 0.01, 3)?;
    let lam_max = lambda_max(&base);
    let problem = base.with_noise_level(0.8 * lam_max)?;
    let weights = WeightVector::new(DVector::from_fn(problem.cols(), |i, _| {
        1.0 - 0.4 * ((i % 7) as f64 / 6.0)
    }))?;
    let n = problem.cols();

    let eta = feasible_point(&problem, &weights, lam_max)?;
    let sphere = build_sphere(&problem, &eta)?;
    let plane1 = select_plane_1(&sphere, &problem, &weights)?;
    let dome = Dome::new(sphere.clone(), plane1.clone())?;
    let plane2 = select_plane_2(&dome, &problem, &weights)?;
    let region = TwoPlaneRegion::new(sphere.clone(), plane1.clone(), plane2.clone())?;

    println!("radius {:.4}", sphere.radius);
    println!("plane 1: feature {} psi {:.4}", plane1.feature, plane1.psi);
    println!(
        "plane 2: feature {} psi {:.4} tau {:.4}",
        plane2.feature, plane2.psi, region.tau
    );

    let s = sphere_test(&sphere, &problem, &weights)?;
    let d = dome_test(&dome, &problem, &weights)?;
    let t = tht_test(&region, &problem, &weights)?;
    println!(
        "rejected of {n}: sphere {}, dome {}, two planes {}",
        s.count_rejected(),
        d.count_rejected(),
        t.count_rejected()
    );
    assert!(s.is_subset_of(&d) && d.is_subset_of(&t));

    // `screen` runs the same pipeline with its own, slightly tighter,
    // feasible point and falls back gracefully on degenerate geometry.
    for rule in [
        ScreeningRule::Sphere,
        ScreeningRule::Dome,
        ScreeningRule::Tht,
    ] {
        let out = screen(&problem, &weights, rule)?;
        println!(
            "{rule:>6}: {:?}, {} rejected",
            out.region,
            out.mask.count_rejected()
        );
    }

    // Rejected features are zero at the optimum.
    let sol = wlasso::solve(&problem, &weights, &SolverConfig::default(), None)?;
    let mask = screen(&problem, &weights, ScreeningRule::Tht)?.mask;
    let wrong = sol.support.iter().filter(|&&i| mask.rejected[i]).count();
    println!(
        "support {:?}, rejected support features: {wrong}",
        sol.support
    );
    Ok(())
}
