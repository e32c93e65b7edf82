//! Pixel-integrated 2D Gaussian point spread functions.
//!
//! A point source at `(x0, y0)` with width `σ` deposits
//! `ΔE(x − x0, σ)·ΔE(y − y0, σ)` of its intensity in the pixel centered at
//! integer coordinates `(x, y)`. Images vectorize row-major: pixel
//! `(x, y)` sits at index `y·width + x`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::problem::normalize_columns;

/// Gaussian mass in `[u − ½, u + ½]` for a centered Gaussian of width `sigma`.
pub fn delta_e(u: f64, sigma: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * sigma;
    let a = (u - 0.5) / s;
    let b = (u + 0.5) / s;
    // Subtracting erfc values keeps relative precision far in the tails.
    let v = if a > 0.0 {
        0.5 * (libm::erfc(a) - libm::erfc(b))
    } else if b < 0.0 {
        0.5 * (libm::erfc(-b) - libm::erfc(-a))
    } else {
        0.5 * (libm::erf(b) - libm::erf(a))
    };
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfParams {
    pub x0: f64,
    pub y0: f64,
    pub sigma_xy: f64,
    pub bg: f64,
}

impl PsfParams {
    pub fn new(x0: f64, y0: f64, sigma_xy: f64) -> Self {
        PsfParams {
            x0,
            y0,
            sigma_xy,
            bg: 0.0,
        }
    }
}

/// A `height × width` image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub pixels: DMatrix<f64>,
}

impl ImageGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        ImageGrid {
            width,
            height,
            pixels: DMatrix::zeros(height, width),
        }
    }

    /// Rebuilds an image from its row-major vectorization.
    pub fn from_vector(width: usize, height: usize, v: &DVector<f64>) -> Result<Self> {
        if v.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                v.len()
            )));
        }
        Ok(ImageGrid {
            width,
            height,
            pixels: DMatrix::from_row_slice(height, width, v.as_slice()),
        })
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.width * self.height,
            (0..self.height).flat_map(|y| (0..self.width).map(move |x| self.pixels[(y, x)])),
        )
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[(y, x)]
    }

    pub fn max(&self) -> f64 {
        self.pixels.max()
    }
}

pub fn render_feature(params: &PsfParams, width: usize, height: usize) -> ImageGrid {
    let ex: Vec<f64> = (0..width)
        .map(|x| delta_e(x as f64 - params.x0, params.sigma_xy))
        .collect();
    let ey: Vec<f64> = (0..height)
        .map(|y| delta_e(y as f64 - params.y0, params.sigma_xy))
        .collect();
    ImageGrid {
        width,
        height,
        pixels: DMatrix::from_fn(height, width, |y, x| ey[y] * ex[x] + params.bg),
    }
}

/// Sampling prior for dictionary features: centers uniform over the pixel
/// grid, widths uniform in `[sigma_min, sigma_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfPrior {
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for PsfPrior {
    fn default() -> Self {
        PsfPrior {
            sigma_min: 0.8,
            sigma_max: 1.2,
        }
    }
}

impl PsfPrior {
    fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_max >= self.sigma_min) {
            return Err(Error::Config(format!("bad sigma range {self:?}")));
        }
        Ok(())
    }

    pub fn sample(&self, width: usize, height: usize, rng: &mut impl Rng) -> PsfParams {
        let sigma = if self.sigma_max > self.sigma_min {
            rng.random_range(self.sigma_min..self.sigma_max)
        } else {
            self.sigma_min
        };
        PsfParams::new(
            rng.random_range(0.0..=(width - 1) as f64),
            rng.random_range(0.0..=(height - 1) as f64),
            sigma,
        )
    }
}

/// Unit-norm rendered features and the parameters that produced them.
#[derive(Debug, Clone)]
pub struct PsfDictionary {
    pub dict: Arc<DMatrix<f64>>,
    pub params: Vec<PsfParams>,
    pub width: usize,
    pub height: usize,
}

pub fn sample_dictionary(
    n: usize,
    width: usize,
    height: usize,
    prior: &PsfPrior,
    seed: u64,
) -> Result<PsfDictionary> {
    if n == 0 || width == 0 || height == 0 {
        return Err(Error::InvalidProblem("empty dictionary or grid".into()));
    }
    prior.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<PsfParams> = (0..n)
        .map(|_| prior.sample(width, height, &mut rng))
        .collect();
    let m = width * height;
    let mut raw = DMatrix::zeros(m, n);
    for (k, p) in params.iter().enumerate() {
        raw.set_column(k, &render_feature(p, width, height).to_vector());
    }
    let (dict, _) = normalize_columns(&raw)?;
    Ok(PsfDictionary {
        dict: Arc::new(dict),
        params,
        width,
        height,
    })
}

/// Sums weighted sources into a clean image and adds Gaussian noise of
/// variance `noise_var` per pixel.
pub fn generate_target(
    sources: &[(PsfParams, f64)],
    width: usize,
    height: usize,
    noise_var: f64,
    seed: u64,
) -> Result<(ImageGrid, ImageGrid)> {
    if let Some((_, w)) = sources.iter().find(|(_, w)| !(*w >= 0.0)) {
        return Err(Error::DomainError(format!(
            "source intensity {w} is negative"
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::DomainError(format!("noise variance {noise_var}")));
    }
    let mut clean = ImageGrid::zeros(width, height);
    for (p, w) in sources {
        clean.pixels += render_feature(p, width, height).pixels * *w;
    }
    let mut noisy = clean.clone();
    if noise_var > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_var.sqrt()).expect("finite std");
        for y in 0..height {
            for x in 0..width {
                noisy.pixels[(y, x)] += normal.sample(&mut rng);
            }
        }
    }
    Ok((clean, noisy))
}
