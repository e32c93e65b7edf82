//! Solves a small weighted lasso and checks the certificate it comes with.
//!
//! Run with `cargo run --release --example weighted_lasso`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use safe_sbl::problem::lambda_max;
use safe_sbl::wlasso::{self, dual_point, duality_gap, kkt_check, SolverConfig};
use safe_sbl::{Problem, WeightVector};

fn main() -> safe_sbl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, n) = (40, 120);
    let dict = DMatrix::from_fn(m, n, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let mut truth = DVector::zeros(n);
    truth[3] = 2.0;
    truth[50] = -1.5;
    truth[97] = 1.0;
    let noise = DVector::from_fn(m, |_, _| {
        let e: f64 = StandardNormal.sample(&mut rng);
        0.05 * e
    });
    let y = &dict * &truth + noise;

    let (probe, _) = Problem::normalized(&dict, y, 1.0)?;
    let problem = probe.with_noise_level(0.1 * lambda_max(&probe))?;

    // Penalize the second half of the features twice as hard.
    let weights = WeightVector::new(DVector::from_fn(
        n,
        |i, _| if i < n / 2 { 1.0 } else { 2.0 },
    ))?;

    let sol = wlasso::solve(&problem, &weights, &SolverConfig::default(), None)?;
    println!("support {:?}", sol.support);
    println!("certified gap {:.2e}", sol.duality_gap);

    let dual = dual_point(&problem, &weights, &sol.theta)?;
    let gap = duality_gap(&problem, &weights, &sol.theta, &dual)?;
    let kkt = kkt_check(&problem, &weights, &sol.theta, 1e-6)?;
    println!(
        "recomputed gap {gap:.2e}, dual scale {:.6}",
        dual.feasibility_scale
    );
    println!(
        "kkt satisfied: {} (worst violation {:.1e})",
        kkt.satisfied, kkt.worst_violation
    );
    Ok(())
}
