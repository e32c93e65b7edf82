//! Sparse Bayesian learning by majorization-minimization.
//!
//! Each outer step majorizes the `log det Σ_Y` term of the evidence loss
//! by its tangent plane at the current `γ`, which turns the update into a
//! weighted ℓ1 problem with weights `u = sqrt(γ_h)`. The inner problem is
//! solved by [`crate::wlasso`], optionally after safe screening, and then
//!
//! ```text
//! γ_i   = |θ_i| / sqrt(γ_h_i)
//! γ_h   = diag(Φᵀ Σ_Y⁻¹ Φ),   Σ_Y = λI + Φ diag(γ) Φᵀ
//! ```
//!
//! `Σ_Y` is never inverted. When `γ` has fewer nonzeros than `Y` has rows
//! the Woodbury form `Σ_Y = λ(I + UUᵀ)`, `U = Φ_A diag(sqrt(γ_A/λ))`, is
//! factored at size `|A|`; otherwise the `N×N` matrix is.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::problem::{dot, sparse_residual, Problem, SparseSolution, WeightVector};
use crate::screening::{
    pad_solution, reduce_problem, RegionKind, ScreenMask, Screener, ScreeningRule,
};
use crate::wlasso::{self, SolverConfig};

/// Lower bound applied to `γ_h` before taking square roots.
pub const GAMMA_H_FLOOR: f64 = 1e-12;

/// Slack allowed on the per-step loss decrease.
pub const DESCENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SblConfig {
    /// Pruning threshold; see `prune_relative`.
    pub prune_eps: f64,
    /// When set, the threshold is `prune_eps · max(max γ, 1e-300)`.
    pub prune_relative: bool,
    /// Stop when `‖γ^{t+1} − γ^t‖∞` falls below this.
    pub conv_tol: f64,
    pub max_outer: usize,
    pub screening: ScreeningRule,
    /// Offer the residual of the previous `θ^tmp` to the screening test as
    /// a candidate feasible point.
    pub residual_hint: bool,
    pub solver: SolverConfig,
    /// Keep every `θ^tmp` in [`SblState::theta_history`].
    pub record_history: bool,
}

impl Default for SblConfig {
    fn default() -> Self {
        SblConfig {
            prune_eps: 1e-4,
            prune_relative: true,
            conv_tol: 1e-6,
            max_outer: 30,
            screening: ScreeningRule::Off,
            residual_hint: true,
            solver: SolverConfig::default(),
            record_history: false,
        }
    }
}

impl SblConfig {
    pub fn with_screening(mut self, screening: ScreeningRule) -> Self {
        self.screening = screening;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prune_eps > 0.0) || !(self.conv_tol > 0.0) || self.max_outer == 0 {
            return Err(Error::Config(format!(
                "sbl config needs prune_eps > 0, conv_tol > 0, max_outer >= 1 (got {self:?})"
            )));
        }
        self.solver.validate()
    }

    /// Absolute pruning threshold for `gamma`.
    pub fn prune_threshold(&self, gamma: &DVector<f64>) -> f64 {
        if self.prune_relative {
            self.prune_eps * gamma.amax().max(1e-300)
        } else {
            self.prune_eps
        }
    }
}

/// Bookkeeping for one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub region: RegionKind,
    pub rejected: usize,
    pub screen_time: Duration,
    pub solve_time: Duration,
    pub inner_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SblState {
    pub gamma: DVector<f64>,
    pub gamma_h: DVector<f64>,
    pub theta_tmp: DVector<f64>,
    /// `Loss(γ^t)` for `t = 1, 2, …`.
    pub loss_history: Vec<f64>,
    pub iteration: usize,
    pub converged: bool,
    /// Times a `γ_h` entry was raised to [`GAMMA_H_FLOOR`].
    pub gamma_h_floored: usize,
    /// Steps whose loss rose by more than [`DESCENT_SLACK`].
    pub descent_violations: usize,
    pub iterations: Vec<IterationStats>,
    pub theta_history: Vec<DVector<f64>>,
}

impl SblState {
    fn new(n: usize) -> Self {
        SblState {
            gamma: DVector::zeros(n),
            gamma_h: init_gamma_h(n),
            theta_tmp: DVector::zeros(n),
            loss_history: Vec::new(),
            iteration: 0,
            converged: false,
            gamma_h_floored: 0,
            descent_violations: 0,
            iterations: Vec::new(),
            theta_history: Vec::new(),
        }
    }

    /// Mean fraction of features rejected per outer step.
    pub fn mean_rejection(&self) -> f64 {
        let n = self.gamma.len();
        if self.iterations.is_empty() || n == 0 {
            return 0.0;
        }
        self.iterations
            .iter()
            .map(|s| s.rejected as f64)
            .sum::<f64>()
            / (self.iterations.len() * n) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: DVector<f64>,
    pub covariance: Option<DMatrix<f64>>,
}

pub fn init_gamma_h(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

pub fn weights_from_gamma_h(gamma_h: &DVector<f64>) -> Result<WeightVector> {
    WeightVector::new(gamma_h.map(f64::sqrt))
}

pub fn gamma_from_theta(theta: &DVector<f64>, gamma_h: &DVector<f64>) -> DVector<f64> {
    theta.zip_map(gamma_h, |t, g| t.abs() / g.sqrt())
}

/// `Σ_Y = λI + Φ diag(γ) Φᵀ`, assembled densely.
pub fn sigma_y(problem: &Problem, gamma: &DVector<f64>) -> DMatrix<f64> {
    let m = problem.rows();
    let mut s = DMatrix::from_diagonal_element(m, m, problem.noise_level());
    for (i, &g) in gamma.iter().enumerate() {
        if g > 0.0 {
            let col = DVector::from_column_slice(problem.column(i));
            s.ger(g, &col, &col, 1.0);
        }
    }
    s
}

/// `log det Σ_Y + Yᵀ Σ_Y⁻¹ Y`.
pub fn loss(problem: &Problem, gamma: &DVector<f64>) -> Result<f64> {
    check_len(problem, gamma)?;
    let f = SigmaFactor::new(problem, gamma)?;
    Ok(f.loss(problem))
}

/// `γ_h_i = φ_iᵀ Σ_Y⁻¹ φ_i`.
pub fn update_gamma_h(problem: &Problem, gamma: &DVector<f64>) -> Result<DVector<f64>> {
    check_len(problem, gamma)?;
    Ok(DVector::from_vec(
        SigmaFactor::new(problem, gamma)?.diag_quad(problem),
    ))
}

/// `μ = Γ Φᵀ Σ_Y⁻¹ Y`, and optionally `(Γ⁻¹ + ΦᵀΦ/λ)⁻¹` on the support of
/// `γ` (zero elsewhere).
pub fn posterior_mean(
    problem: &Problem,
    gamma: &DVector<f64>,
    with_covariance: bool,
) -> Result<Posterior> {
    check_len(problem, gamma)?;
    let f = SigmaFactor::new(problem, gamma)?;
    let v = f.solve(problem.response());
    let mut mean = DVector::zeros(problem.cols());
    for (i, &g) in gamma.iter().enumerate() {
        if g > 0.0 {
            mean[i] = g * dot(problem.column(i), v.as_slice());
        }
    }
    let covariance = with_covariance
        .then(|| support_covariance(problem, gamma))
        .transpose()?;
    Ok(Posterior { mean, covariance })
}

fn support_covariance(problem: &Problem, gamma: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = problem.cols();
    let support: Vec<usize> = (0..n).filter(|&i| gamma[i] > 0.0).collect();
    let mut cov = DMatrix::zeros(n, n);
    if support.is_empty() {
        return Ok(cov);
    }
    let lam = problem.noise_level();
    let root: Vec<f64> = support.iter().map(|&i| gamma[i].sqrt()).collect();
    let u = scaled_columns(problem, &support, &root, 1.0 / lam.sqrt());
    let b = gram_plus_identity(&u);
    let binv = Cholesky::new(b)
        .ok_or(Error::FactorizationFailure)?
        .inverse();
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            cov[(i, j)] = root[a] * binv[(a, b)] * root[b];
        }
    }
    Ok(cov)
}

/// `keep_i = γ_i > ε`.
pub fn prune(gamma: &DVector<f64>, eps: f64) -> Vec<bool> {
    gamma.iter().map(|&g| g > eps).collect()
}

fn check_len(problem: &Problem, gamma: &DVector<f64>) -> Result<()> {
    if gamma.len() != problem.cols() {
        return Err(Error::LengthMismatch {
            expected: problem.cols(),
            actual: gamma.len(),
        });
    }
    if gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidProblem(
            "gamma must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// `Φ_S diag(scale_k · s)` as an `N × |S|` matrix.
fn scaled_columns(problem: &Problem, support: &[usize], scale: &[f64], s: f64) -> DMatrix<f64> {
    let m = problem.rows();
    let mut u = DMatrix::zeros(m, support.len());
    for (k, &i) in support.iter().enumerate() {
        let f = scale[k] * s;
        for (dst, &src) in u.column_mut(k).iter_mut().zip(problem.column(i)) {
            *dst = f * src;
        }
    }
    u
}

fn gram_plus_identity(u: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = u.tr_mul(u);
    for k in 0..b.nrows() {
        b[(k, k)] += 1.0;
    }
    b
}

/// A Cholesky factor of `Σ_Y`, either directly or through Woodbury.
struct SigmaFactor {
    lam: f64,
    kind: FactorKind,
}

enum FactorKind {
    /// `Σ_Y = λI`.
    Scaled,
    /// `Σ_Y = λ(I + UUᵀ)` with `L Lᵀ = I + UᵀU`.
    LowRank { u: DMatrix<f64>, l: DMatrix<f64> },
    /// `L Lᵀ = Σ_Y`.
    Dense { l: DMatrix<f64> },
}

fn lower(chol: Cholesky<f64, Dyn>) -> DMatrix<f64> {
    chol.unpack()
}

fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    l.solve_lower_triangular_mut(&mut x);
    x
}

impl SigmaFactor {
    fn new(problem: &Problem, gamma: &DVector<f64>) -> Result<Self> {
        let lam = problem.noise_level();
        let support: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] > 0.0).collect();
        let kind = if support.is_empty() {
            FactorKind::Scaled
        } else {
            let root: Vec<f64> = support.iter().map(|&i| gamma[i].sqrt()).collect();
            let u = scaled_columns(problem, &support, &root, 1.0 / lam.sqrt());
            if support.len() < problem.rows() {
                let l = lower(
                    Cholesky::new(gram_plus_identity(&u)).ok_or(Error::FactorizationFailure)?,
                );
                FactorKind::LowRank { u, l }
            } else {
                let mut s = &u * u.transpose();
                for k in 0..s.nrows() {
                    s[(k, k)] += 1.0;
                }
                s *= lam;
                let l = lower(Cholesky::new(s).ok_or(Error::FactorizationFailure)?);
                if l.diagonal().iter().any(|&d| !(d > 0.0)) {
                    return Err(Error::FactorizationFailure);
                }
                FactorKind::Dense { l }
            }
        };
        Ok(SigmaFactor { lam, kind })
    }

    fn log_det(&self, m: usize) -> f64 {
        let diag_log = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        match &self.kind {
            FactorKind::Scaled => m as f64 * self.lam.ln(),
            FactorKind::LowRank { l, .. } => m as f64 * self.lam.ln() + diag_log(l),
            FactorKind::Dense { l } => diag_log(l),
        }
    }

    /// `Σ_Y⁻¹ v`.
    fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            FactorKind::Scaled => v / self.lam,
            FactorKind::LowRank { u, l } => {
                let mut w = u.tr_mul(v);
                l.solve_lower_triangular_mut(&mut w);
                l.tr_solve_lower_triangular_mut(&mut w);
                (v - u * w) / self.lam
            }
            FactorKind::Dense { l } => {
                let mut w = v.clone();
                l.solve_lower_triangular_mut(&mut w);
                l.tr_solve_lower_triangular_mut(&mut w);
                w
            }
        }
    }

    /// `Yᵀ Σ_Y⁻¹ Y`, computed as a squared norm.
    fn quad(&self, v: &DVector<f64>) -> f64 {
        match &self.kind {
            FactorKind::Scaled => v.norm_squared() / self.lam,
            FactorKind::LowRank { u, l } => {
                let mut w = u.tr_mul(v);
                l.solve_lower_triangular_mut(&mut w);
                (v.norm_squared() - w.norm_squared()) / self.lam
            }
            FactorKind::Dense { l } => {
                let mut w = v.clone();
                l.solve_lower_triangular_mut(&mut w);
                w.norm_squared()
            }
        }
    }

    fn loss(&self, problem: &Problem) -> f64 {
        self.log_det(problem.rows()) + self.quad(problem.response())
    }

    /// `φ_iᵀ Σ_Y⁻¹ φ_i` for every column.
    fn diag_quad(&self, problem: &Problem) -> Vec<f64> {
        let phi = problem.dict();
        let sq_norms = problem.column_norms().into_iter().map(|v| v * v);
        match &self.kind {
            FactorKind::Scaled => sq_norms.map(|v| v / self.lam).collect(),
            FactorKind::LowRank { u, l } => {
                let z = solve_lower(l, &u.tr_mul(phi));
                sq_norms
                    .zip(z.column_iter())
                    .map(|(s, c)| (s - c.norm_squared()) / self.lam)
                    .collect()
            }
            FactorKind::Dense { l } => solve_lower(l, phi)
                .column_iter()
                .map(|c| c.norm_squared())
                .collect(),
        }
    }
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct SblResult {
    /// `θ^tmp` of the last step with pruned entries zeroed.
    pub solution: SparseSolution,
    pub state: SblState,
    /// Posterior under the pruned `γ`.
    pub posterior: Posterior,
    pub keep: Vec<bool>,
}

/// Runs the MM loop until `γ` settles or `max_outer` steps have run.
pub fn run(problem: &Problem, config: &SblConfig) -> Result<SblResult> {
    config.validate()?;
    let n = problem.cols();
    let mut state = SblState::new(n);
    let response_is_zero = problem.response().iter().all(|&v| v == 0.0);
    // The setup pass is billed to the first iteration's screening time.
    let t_setup = Instant::now();
    let screener = (config.screening != ScreeningRule::Off && !response_is_zero)
        .then(|| Screener::new(problem));
    let mut setup = Some(t_setup.elapsed());

    for _ in 0..config.max_outer {
        state.iteration += 1;
        let weights = weights_from_gamma_h(&state.gamma_h)?;

        let t0 = Instant::now();
        let (mask, region) = match &screener {
            None => (ScreenMask::keep_all(n), RegionKind::None),
            Some(s) => {
                let hint = (config.residual_hint && state.theta_tmp.iter().any(|&t| t != 0.0))
                    .then(|| sparse_residual(problem, &state.theta_tmp));
                let o = s.screen(&weights, config.screening, hint.as_ref())?;
                (o.mask, o.region)
            }
        };
        let rejected = mask.count_rejected();
        let screen_time = t0.elapsed() + setup.take().unwrap_or_default();

        let t1 = Instant::now();
        let (theta, gap) = if rejected == 0 {
            let s = wlasso::solve(problem, &weights, &config.solver, Some(&state.theta_tmp))?;
            (s.theta, s.duality_gap)
        } else {
            let (rp, rw, map) = reduce_problem(problem, &weights, &mask)?;
            let warm = map.restrict(&state.theta_tmp);
            let s = wlasso::solve(&rp, &rw, &config.solver, Some(&warm))?;
            (pad_solution(&s.theta, &map, n)?, s.duality_gap)
        };
        let solve_time = t1.elapsed();
        state.iterations.push(IterationStats {
            region,
            rejected,
            screen_time,
            solve_time,
            inner_gap: gap,
        });

        let gamma = gamma_from_theta(&theta, &state.gamma_h);
        let factor = SigmaFactor::new(problem, &gamma)?;
        let l = factor.loss(problem);
        if let Some(&prev) = state.loss_history.last() {
            if l > prev + DESCENT_SLACK * prev.abs().max(1.0) {
                state.descent_violations += 1;
            }
        }
        state.loss_history.push(l);

        let mut gamma_h = DVector::from_vec(factor.diag_quad(problem));
        for g in gamma_h.iter_mut() {
            if !(*g >= GAMMA_H_FLOOR) {
                *g = GAMMA_H_FLOOR;
                state.gamma_h_floored += 1;
            }
        }
        let delta = (&gamma - &state.gamma).amax();
        state.gamma = gamma;
        state.gamma_h = gamma_h;
        if config.record_history {
            state.theta_history.push(theta.clone());
        }
        state.theta_tmp = theta;
        if delta < config.conv_tol {
            state.converged = true;
            break;
        }
    }

    let eps = config.prune_threshold(&state.gamma);
    let keep = prune(&state.gamma, eps);
    let mut theta = state.theta_tmp.clone();
    let mut gamma_opt = state.gamma.clone();
    for i in 0..n {
        if !keep[i] {
            theta[i] = 0.0;
            gamma_opt[i] = 0.0;
        }
    }
    let gap = state.iterations.last().map_or(0.0, |s| s.inner_gap);
    let posterior = posterior_mean(problem, &gamma_opt, false)?;
    Ok(SblResult {
        solution: SparseSolution::new(theta, gap),
        state,
        posterior,
        keep,
    })
}
