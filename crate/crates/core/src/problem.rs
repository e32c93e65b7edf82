//! Shared domain types: the regression problem, per-feature ℓ1 weights,
//! sparse solutions and screening partitions.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column norms below this are treated as zero.
pub const ZERO_COLUMN_NORM: f64 = 1e-300;

/// A linear system `Y = Φθ + V` with noise variance `λ`.
///
/// The dictionary is stored column-major behind an `Arc`, so changing the
/// noise level (as every λ-sweep does) never copies the matrix.
#[derive(Debug, Clone)]
pub struct Problem {
    dict: Arc<DMatrix<f64>>,
    response: DVector<f64>,
    noise_level: f64,
}

impl Problem {
    /// Validates and wraps an already-assembled dictionary.
    pub fn new(dict: DMatrix<f64>, response: DVector<f64>, noise_level: f64) -> Result<Self> {
        Self::from_shared(Arc::new(dict), response, noise_level)
    }

    pub fn from_shared(
        dict: Arc<DMatrix<f64>>,
        response: DVector<f64>,
        noise_level: f64,
    ) -> Result<Self> {
        if dict.nrows() == 0 || dict.ncols() == 0 {
            return Err(Error::InvalidProblem(format!(
                "dictionary must be non-empty, got {}x{}",
                dict.nrows(),
                dict.ncols()
            )));
        }
        if let Some(i) = dict
            .column_iter()
            .position(|c| !(c.norm() >= ZERO_COLUMN_NORM))
        {
            return Err(Error::ZeroColumn(i));
        }
        let problem = Problem {
            dict,
            response,
            noise_level,
        };
        problem.check_response_and_noise()?;
        Ok(problem)
    }

    /// Normalizes the columns of `raw` to unit norm first; returns the
    /// problem together with the per-column scale factors.
    pub fn normalized(
        raw: &DMatrix<f64>,
        response: DVector<f64>,
        noise_level: f64,
    ) -> Result<(Self, DVector<f64>)> {
        let (dict, scales) = normalize_columns(raw)?;
        Ok((Self::new(dict, response, noise_level)?, scales))
    }

    /// Reduced problems may legitimately have zero columns.
    pub(crate) fn from_reduced(
        dict: DMatrix<f64>,
        response: DVector<f64>,
        noise_level: f64,
    ) -> Self {
        Problem {
            dict: Arc::new(dict),
            response,
            noise_level,
        }
    }

    fn check_response_and_noise(&self) -> Result<()> {
        if self.response.len() != self.dict.nrows() {
            return Err(Error::LengthMismatch {
                expected: self.dict.nrows(),
                actual: self.response.len(),
            });
        }
        if !(self.noise_level > 0.0 && self.noise_level.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "noise level must be positive and finite, got {}",
                self.noise_level
            )));
        }
        if self.response.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(
                "response has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    /// Same dictionary and response at a different noise level.
    pub fn with_noise_level(&self, noise_level: f64) -> Result<Self> {
        let p = Problem {
            dict: Arc::clone(&self.dict),
            response: self.response.clone(),
            noise_level,
        };
        p.check_response_and_noise()?;
        Ok(p)
    }

    /// Same dictionary with a new response vector.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        let p = Problem {
            dict: Arc::clone(&self.dict),
            response,
            noise_level: self.noise_level,
        };
        p.check_response_and_noise()?;
        Ok(p)
    }

    pub fn dict(&self) -> &DMatrix<f64> {
        &self.dict
    }

    pub fn shared_dict(&self) -> Arc<DMatrix<f64>> {
        Arc::clone(&self.dict)
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    /// Number of observations `N`.
    pub fn rows(&self) -> usize {
        self.dict.nrows()
    }

    /// Number of features `n`.
    pub fn cols(&self) -> usize {
        self.dict.ncols()
    }

    /// Column `i` as a contiguous slice.
    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let n_rows = self.dict.nrows();
        &self.dict.as_slice()[i * n_rows..(i + 1) * n_rows]
    }

    /// `Φᵀv` for a vector of length `N`.
    pub fn correlations(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols()).map(|i| dot(self.column(i), v)).collect()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|i| dot(self.column(i), self.column(i)).sqrt())
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Independent accumulators over exact chunks let the compiler vectorize
    // the reduction without bounds checks.
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    let mut acc = [0.0f64; 8];
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

#[inline]
/// `Y − Φθ`, touching only the support of `θ`.
pub fn sparse_residual(problem: &Problem, theta: &DVector<f64>) -> DVector<f64> {
    let mut r = problem.response().clone();
    for (i, &t) in theta.iter().enumerate() {
        if t != 0.0 {
            axpy(-t, problem.column(i), r.as_mut_slice());
        }
    }
    r
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Per-feature ℓ1 weights `u`, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    u: DVector<f64>,
    u_min: f64,
}

impl WeightVector {
    pub fn new(u: DVector<f64>) -> Result<Self> {
        if let Some((index, &value)) = u
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(WeightVector { u, u_min })
    }

    /// All-ones weights: the plain lasso.
    pub fn unit(n: usize) -> Self {
        WeightVector {
            u: DVector::from_element(n, 1.0),
            u_min: if n == 0 { f64::INFINITY } else { 1.0 },
        }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.u[i]
    }

    /// Smallest weight; `+inf` for an empty vector.
    pub fn min(&self) -> f64 {
        self.u_min
    }

    /// Weights restricted to `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> WeightVector {
        let u = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.u[i]));
        let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
        WeightVector { u, u_min }
    }
}

/// A solution vector with its support and certified duality gap.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub theta: DVector<f64>,
    pub support: Vec<usize>,
    pub duality_gap: f64,
}

impl SparseSolution {
    pub fn new(theta: DVector<f64>, duality_gap: f64) -> Self {
        let tol = support_tol(&theta);
        let support = theta
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(i, _)| i)
            .collect();
        SparseSolution {
            theta,
            support,
            duality_gap: duality_gap.max(0.0),
        }
    }

    pub fn zeros(n: usize) -> Self {
        SparseSolution {
            theta: DVector::zeros(n),
            support: Vec::new(),
            duality_gap: 0.0,
        }
    }
}

/// Support threshold `1e-6 · max(1, ‖θ‖∞)`.
pub fn support_tol(theta: &DVector<f64>) -> f64 {
    1e-6 * theta.amax().max(1.0)
}

/// Split of the feature indices into selected and rejected sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub selected: Vec<usize>,
    pub rejected: Vec<usize>,
}

impl Partition {
    /// Builds the partition from a rejection mask (`true` = rejected).
    pub fn from_rejected(mask: &[bool]) -> Self {
        let mut p = Partition::default();
        for (i, &r) in mask.iter().enumerate() {
            if r {
                p.rejected.push(i);
            } else {
                p.selected.push(i);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.selected.len() + self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scales every column to unit Euclidean norm.
///
/// Returns the normalized matrix and the original column norms, so that
/// `scale[i] * out.column(i)` reproduces `raw.column(i)`.
pub fn normalize_columns(raw: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut out = raw.clone();
    let mut scales = DVector::zeros(raw.ncols());
    for (i, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm >= ZERO_COLUMN_NORM) {
            return Err(Error::ZeroColumn(i));
        }
        col /= norm;
        scales[i] = norm;
    }
    Ok((out, scales))
}

/// `max_i |φ_iᵀ Y|` together with the smallest index attaining it.
pub fn lambda_max_argmax(problem: &Problem) -> (f64, usize) {
    let y = problem.response().as_slice();
    let mut best = (0.0, 0);
    for i in 0..problem.cols() {
        let v = dot(problem.column(i), y).abs();
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

/// `max_i |φ_iᵀ Y|`: the smallest unit-weight λ at which zero is optimal.
pub fn lambda_max(problem: &Problem) -> f64 {
    lambda_max_argmax(problem).0
}

/// Fraction of rejected features, `#S̄ / n`.
pub fn screening_percentage(partition: &Partition) -> f64 {
    if partition.is_empty() {
        return 0.0;
    }
    partition.rejected.len() as f64 / partition.len() as f64
}

/// `(t_scr + t_red) / t_ori`; values below one mean screening paid off.
pub fn speedup_factor(t_scr: f64, t_red: f64, t_ori: f64) -> Result<f64> {
    if !(t_ori > 0.0) {
        return Err(Error::NonPositiveBaseline(t_ori));
    }
    Ok((t_scr + t_red) / t_ori)
}
