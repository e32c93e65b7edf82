//! Classification by sparse representation: a test image is regressed on a
//! dictionary of labeled training images, and the class whose columns carry
//! the most absolute weight wins.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{normalize_columns, Problem};

pub const NUM_CLASSES: usize = 10;

/// Unit-norm training columns with their digit labels.
#[derive(Debug, Clone)]
pub struct LabeledDictionary {
    dict: Arc<DMatrix<f64>>,
    labels: Vec<u8>,
}

impl LabeledDictionary {
    /// Normalizes the columns of `raw`.
    pub fn new(raw: &DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != raw.ncols() {
            return Err(Error::LengthMismatch {
                expected: raw.ncols(),
                actual: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::InvalidProblem(format!("label {l} is not a digit")));
        }
        let (dict, _) = normalize_columns(raw)?;
        Ok(LabeledDictionary {
            dict: Arc::new(dict),
            labels,
        })
    }

    pub fn dict(&self) -> &Arc<DMatrix<f64>> {
        &self.dict
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The regression problem for one test image, normalized to unit norm,
    /// at `λ = ratio · λ_max`.
    pub fn problem_for(&self, image: &DVector<f64>, ratio: f64) -> Result<Problem> {
        let norm = image.norm();
        if !(norm > 0.0) {
            return Err(Error::DegenerateResponse);
        }
        let y = image / norm;
        let lam_max = self.dict.tr_mul(&y).amax();
        Problem::from_shared(self.dict.clone(), y, ratio * lam_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub predicted: u8,
    /// `ABS_k / ‖ABS‖₂`.
    pub prob: [f64; NUM_CLASSES],
}

/// Sums `|θ_i|` per class and picks the largest, smallest digit on ties.
pub fn classify(theta: &DVector<f64>, dict: &LabeledDictionary) -> Result<Classification> {
    if theta.len() != dict.len() {
        return Err(Error::LengthMismatch {
            expected: dict.len(),
            actual: theta.len(),
        });
    }
    let mut abs = [0.0; NUM_CLASSES];
    for (t, &l) in theta.iter().zip(&dict.labels) {
        abs[l as usize] += t.abs();
    }
    let norm = abs.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Undecidable);
    }
    let prob = abs.map(|a| a / norm);
    let mut predicted = 0;
    for k in 1..NUM_CLASSES {
        if prob[k] > prob[predicted] {
            predicted = k;
        }
    }
    Ok(Classification {
        predicted: predicted as u8,
        prob,
    })
}
