//! Detection and reconstruction metrics.

use nalgebra::DVector;

use crate::apps::psf::{ImageGrid, PsfParams};
use crate::error::{Error, Result};
use crate::problem::support_tol;

/// Axis-aligned square centered at `(cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBox {
    pub cx: f64,
    pub cy: f64,
    pub half: f64,
}

impl DetectionBox {
    pub const DEFAULT_HALF: f64 = 1.5;

    pub fn new(cx: f64, cy: f64, half: f64) -> Self {
        DetectionBox { cx, cy, half }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half * self.half
    }
}

fn overlap(c1: f64, h1: f64, c2: f64, h2: f64) -> f64 {
    ((c1 + h1).min(c2 + h2) - (c1 - h1).max(c2 - h2)).max(0.0)
}

pub fn iou(a: &DetectionBox, b: &DetectionBox) -> f64 {
    let inter = overlap(a.cx, a.half, b.cx, b.half) * overlap(a.cy, a.half, b.cy, b.half);
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).min(1.0)
}

/// Averages best-match IoU over the larger of the two sets: over detections
/// when there are more detections than truths, otherwise over truths.
pub fn group_iou(detections: &[DetectionBox], truths: &[DetectionBox]) -> Result<f64> {
    if detections.is_empty() {
        return Err(Error::EmptySet("detection"));
    }
    if truths.is_empty() {
        return Err(Error::EmptySet("truth"));
    }
    let best = |b: &DetectionBox, others: &[DetectionBox]| {
        others.iter().map(|o| iou(b, o)).fold(0.0, f64::max)
    };
    let (outer, inner) = if detections.len() > truths.len() {
        (detections, truths)
    } else {
        (truths, detections)
    };
    Ok(outer.iter().map(|b| best(b, inner)).sum::<f64>() / outer.len() as f64)
}

/// `20·log10(max(original) / sqrt(MSE))`; `+∞` when the images are equal.
pub fn psnr(original: &ImageGrid, reconstructed: &ImageGrid) -> Result<f64> {
    if original.width != reconstructed.width || original.height != reconstructed.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            original.width, original.height, reconstructed.width, reconstructed.height
        )));
    }
    let peak = original.max();
    if !(peak > 0.0) {
        return Err(Error::DomainError(
            "original image has no positive intensity".into(),
        ));
    }
    let mse = (&original.pixels - &reconstructed.pixels).norm_squared()
        / (original.width * original.height) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (peak / mse.sqrt()).log10())
}

/// One box per support feature; features whose centers lie within
/// `merge_radius` of an existing group's `|θ|`-weighted centroid join it.
/// Groups are seeded in order of decreasing `|θ|`.
pub fn localize(
    theta: &DVector<f64>,
    params: &[PsfParams],
    half: f64,
    merge_radius: f64,
) -> Result<Vec<DetectionBox>> {
    if theta.len() != params.len() {
        return Err(Error::LengthMismatch {
            expected: params.len(),
            actual: theta.len(),
        });
    }
    let tol = support_tol(theta);
    let mut support: Vec<usize> = (0..theta.len()).filter(|&i| theta[i].abs() > tol).collect();
    support.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()).then(a.cmp(&b)));

    // (weight, Σ w·x, Σ w·y)
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for i in support {
        let w = theta[i].abs();
        let (x, y) = (params[i].x0, params[i].y0);
        let hit = groups.iter_mut().find(|(gw, gx, gy)| {
            let (dx, dy) = (gx / gw - x, gy / gw - y);
            (dx * dx + dy * dy).sqrt() <= merge_radius
        });
        match hit {
            Some(g) => {
                g.0 += w;
                g.1 += w * x;
                g.2 += w * y;
            }
            None => groups.push((w, w * x, w * y)),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(w, sx, sy)| DetectionBox::new(sx / w, sy / w, half))
        .collect())
}
