//! Recovers a sparse vector with sparse Bayesian learning, with and without
//! screening, and prints the loss trace and the per-step rejection counts.
//!
//! Run with `cargo run --release --example sbl_recovery`.

use safe_sbl::experiment::random_instance;
use safe_sbl::problem::lambda_max;
use safe_sbl::sbl::{self, SblConfig};
use safe_sbl::screening::ScreeningRule;

fn main() -> safe_sbl::Result<()> {
    let base = random_instance(60, 400, 4, 0.01, 5)?;
    let problem = base.with_noise_level(0.3 * lambda_max(&base))?;

    let config = SblConfig::default().with_screening(ScreeningRule::Tht);
    let screened = sbl::run(&problem, &config)?;
    let plain = sbl::run(&problem, &config.clone().with_screening(ScreeningRule::Off))?;

    let state = &screened.state;
    println!(
        "outer steps {} (converged: {})",
        state.iteration, state.converged
    );
    for (t, (loss, step)) in state.loss_history.iter().zip(&state.iterations).enumerate() {
        println!(
            "step {:2}: loss {:12.6}  rejected {:4} via {:?}",
            t + 1,
            loss,
            step.rejected,
            step.region
        );
    }
    println!("support {:?}", screened.solution.support);
    println!(
        "max |gamma screened - gamma plain| = {:.1e}",
        (&state.gamma - &plain.state.gamma).amax()
    );

    let posterior = sbl::posterior_mean(&problem, &state.gamma, true)?;
    if let Some(cov) = &posterior.covariance {
        let spread: Vec<String> = screened
            .solution
            .support
            .iter()
            .map(|&i| {
                format!(
                    "{i}: {:.3} +/- {:.3}",
                    posterior.mean[i],
                    cov[(i, i)].sqrt()
                )
            })
            .collect();
        println!("posterior {}", spread.join(", "));
    }
    Ok(())
}
