use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Problem, WeightVector};
use crate::screening::ScreenMask;

/// Original positions of the columns kept by a reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    kept: Vec<usize>,
    original_len: usize,
}

impl IndexMap {
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Restricts a full-length vector to the kept positions.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.kept.len(), self.kept.iter().map(|&i| full[i]))
    }
}

/// Drops the rejected columns. Rejecting everything yields a zero-column
/// problem, whose solution is empty.
pub fn reduce_problem(
    problem: &Problem,
    weights: &WeightVector,
    mask: &ScreenMask,
) -> Result<(Problem, WeightVector, IndexMap)> {
    let n = problem.cols();
    if mask.len() != n || weights.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: if mask.len() != n {
                mask.len()
            } else {
                weights.len()
            },
        });
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !mask.rejected[i]).collect();
    let rows = problem.rows();
    let mut data = Vec::with_capacity(rows * kept.len());
    for &i in &kept {
        data.extend_from_slice(problem.column(i));
    }
    let dict = DMatrix::from_vec(rows, kept.len(), data);
    let reduced = Problem::from_reduced(dict, problem.response().clone(), problem.noise_level());
    let w = weights.select(&kept);
    Ok((
        reduced,
        w,
        IndexMap {
            kept,
            original_len: n,
        },
    ))
}

/// Scatters a reduced solution back to full length, zeros elsewhere.
pub fn pad_solution(
    reduced_theta: &DVector<f64>,
    map: &IndexMap,
    n: usize,
) -> Result<DVector<f64>> {
    if reduced_theta.len() != map.kept.len() {
        return Err(Error::LengthMismatch {
            expected: map.kept.len(),
            actual: reduced_theta.len(),
        });
    }
    if n != map.original_len {
        return Err(Error::LengthMismatch {
            expected: map.original_len,
            actual: n,
        });
    }
    let mut full = DVector::zeros(n);
    for (k, &i) in map.kept.iter().enumerate() {
        full[i] = reduced_theta[k];
    }
    Ok(full)
}
