use nalgebra::DVector;

use super::{bench_instance, timed_median, ExperimentConfig, RunRecord};
use crate::error::Result;
use crate::problem::{sparse_residual, Problem, WeightVector};
use crate::sbl::{self, SblResult};
use crate::screening::{pad_solution, reduce_problem, screen_with_hint, ScreeningRule};
use crate::wlasso::{self, SolverConfig};

/// How [`bench_problem`] measures each ratio.
#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub rule: ScreeningRule,
    pub solver: SolverConfig,
    /// Timing repetitions; the median is reported.
    pub repeats: usize,
    /// See [`ExperimentConfig::sequential`].
    pub sequential: bool,
}

impl ExperimentConfig {
    pub fn bench_settings(&self) -> BenchSettings {
        BenchSettings {
            rule: self.screening,
            solver: self.solver(),
            repeats: self.repeats,
            sequential: self.sequential,
        }
    }
}

/// Times one weighted ℓ1 solve per ratio with and without screening.
/// `problem` must carry `λ = λ_max`; `on_record` sees each row as soon as
/// it is measured. Sequential runs visit the ratios in decreasing order.
pub fn bench_problem(
    problem: &Problem,
    weights: &WeightVector,
    ratios: &[f64],
    settings: &BenchSettings,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>> {
    let lam_max = problem.noise_level();
    let n = problem.cols();
    let (solver, reps) = (&settings.solver, settings.repeats);
    let mut order = ratios.to_vec();
    if settings.sequential {
        order.sort_by(|a, b| b.total_cmp(a));
    }
    // Previous unscreened and screened solutions.
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut out = Vec::with_capacity(order.len());
    for &ratio in &order {
        let p = problem.with_noise_level(ExperimentConfig::effective_ratio(ratio) * lam_max)?;
        let warm = prev.as_ref().map(|(o, _)| o);
        let (full, t_ori) = timed_median(reps, || wlasso::solve(&p, weights, solver, warm))?;
        let ((outcome, hint_theta), t_scr) = timed_median(reps, || {
            let hint = prev.as_ref().map(|(_, s)| sparse_residual(&p, s));
            Ok((
                screen_with_hint(&p, weights, settings.rule, hint.as_ref())?,
                hint.is_some(),
            ))
        })?;
        let (rp, rw, map) = reduce_problem(&p, weights, &outcome.mask)?;
        let warm_red = match (&prev, hint_theta) {
            (Some((_, s)), true) => Some(map.restrict(s)),
            _ => None,
        };
        let (reduced, t_red) =
            timed_median(reps, || wlasso::solve(&rp, &rw, solver, warm_red.as_ref()))?;
        let theta_s = pad_solution(&reduced.theta, &map, n)?;
        let diff = (&full.theta - &theta_s).amax();
        let pct = outcome.mask.count_rejected() as f64 / n as f64;
        let rec = RunRecord::timed(ratio, t_ori, t_scr, t_red, pct, diff);
        on_record(&rec);
        out.push(rec);
        if settings.sequential {
            prev = Some((full.theta, theta_s));
        }
    }
    Ok(out)
}

pub fn run_screen_bench(
    config: &ExperimentConfig,
    on_record: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let (problem, weights) = bench_instance(config)?;
    bench_problem(
        &problem,
        &weights,
        &config.lambda_grid,
        &config.bench_settings(),
        on_record,
    )
}

#[derive(Debug, Clone)]
pub struct SblSolveReport {
    /// `metric` is the support size, `max_diff` is `‖γ_s − γ_o‖∞`.
    pub records: Vec<RunRecord>,
    pub solutions: Vec<(f64, SblResult)>,
}

/// Full SBL runs on the benchmark instance, one per ratio.
pub fn run_sbl_solve(
    config: &ExperimentConfig,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<SblSolveReport> {
    config.validate()?;
    let (problem, _) = bench_instance(config)?;
    let lam_max = problem.noise_level();
    let mut records = Vec::new();
    let mut solutions = Vec::new();
    for &ratio in &config.lambda_grid {
        let p = problem.with_noise_level(ExperimentConfig::effective_ratio(ratio) * lam_max)?;
        let screened = sbl::run(&p, &config.sbl(config.screening))?;
        let (t_scr, t_red) = inner_times(&screened);
        let (t_ori, diff) = if config.compare_unscreened {
            let plain = sbl::run(&p, &config.sbl(ScreeningRule::Off))?;
            (
                inner_times(&plain).1,
                max_abs_diff(&plain.state.gamma, &screened.state.gamma),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        let mut rec = RunRecord::timed(
            ratio,
            t_ori,
            t_scr,
            t_red,
            screened.state.mean_rejection(),
            diff,
        );
        rec.metric = screened.solution.support.len() as f64;
        rec.stderr = 0.0;
        on_record(&rec);
        records.push(rec);
        solutions.push((ratio, screened));
    }
    Ok(SblSolveReport { records, solutions })
}

/// Total screening and inner-solve seconds over all outer steps.
pub(crate) fn inner_times(r: &SblResult) -> (f64, f64) {
    r.state.iterations.iter().fold((0.0, 0.0), |(a, b), s| {
        (
            a + s.screen_time.as_secs_f64(),
            b + s.solve_time.as_secs_f64(),
        )
    })
}

pub(crate) fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}
