//! Safe feature elimination for one weighted ℓ1 subproblem.
//!
//! The dual optimum `η̂` is the projection of `Y` onto the feasible set
//! `{η : |φ_iᵀη| ≤ λu_i}`. Any feasible point `η′` therefore bounds it in
//! the sphere `B(Y, ‖η′ − Y‖)`. Cutting that sphere with one or two of the
//! dual constraints gives a dome or a two-half-space region; a feature is
//! rejected when `|φ_iᵀη| < λu_i` holds for every `η` in the region, which
//! forces `θ̂_i = 0`.
//!
//! [`screen`] runs the whole ladder (two planes, then dome, then sphere,
//! then the exact test when the radius collapses) in `O(Nn)`. The
//! region-level functions ([`sphere_test`], [`dome_test`], [`tht_test`])
//! are also exposed for callers that build regions themselves.

mod bounds;
mod reduce;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use nalgebra::DVector;

pub use bounds::{m1, m2, planes_intersect};
pub use reduce::{pad_solution, reduce_problem, IndexMap};

use crate::error::{Error, Result};
use crate::problem::{dot, Partition, Problem, WeightVector};
use bounds::{m1_unchecked, m2_unchecked};

/// Relative margin on every rejection test. The features that define the
/// cutting planes lie exactly on the test boundary, so without it rounding
/// alone can reject them.
const MARGIN: f64 = 1e-12;

/// Features whose normalized projection on the first normal exceeds this
/// are parallel to it and cannot define a second plane.
const PARALLEL_COS: f64 = 1.0 - 1e-9;

/// Which region test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScreeningRule {
    Off,
    Sphere,
    Dome,
    Tht,
}

impl fmt::Display for ScreeningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScreeningRule::Off => "off",
            ScreeningRule::Sphere => "sphere",
            ScreeningRule::Dome => "dome",
            ScreeningRule::Tht => "tht",
        })
    }
}

impl FromStr for ScreeningRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(ScreeningRule::Off),
            "sphere" => Ok(ScreeningRule::Sphere),
            "dome" => Ok(ScreeningRule::Dome),
            "tht" | "w-tht" | "wtht" => Ok(ScreeningRule::Tht),
            other => Err(Error::Config(format!("unknown screening rule `{other}`"))),
        }
    }
}

/// Rejection mask: `rejected[i]` means feature `i` is provably inactive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreenMask {
    pub rejected: Vec<bool>,
}

impl ScreenMask {
    pub fn keep_all(n: usize) -> Self {
        ScreenMask {
            rejected: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    pub fn count_rejected(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }

    pub fn partition(&self) -> Partition {
        Partition::from_rejected(&self.rejected)
    }

    /// Every feature rejected here is also rejected by `other`.
    pub fn is_subset_of(&self, other: &ScreenMask) -> bool {
        self.len() == other.len()
            && self
                .rejected
                .iter()
                .zip(&other.rejected)
                .all(|(&a, &b)| !a || b)
    }
}

/// `B(c, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub center: DVector<f64>,
    pub radius: f64,
}

/// A dual constraint `nᵀη ≤ h` taken from a signed, normalized feature.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub offset: f64,
    /// `(nᵀc − h)/r` relative to the sphere it cuts.
    pub psi: f64,
    pub feature: usize,
    /// `+1` or `−1`: the sign applied to the feature.
    pub sign: f64,
}

/// Sphere cut by one half-space, with its circumsphere `B(c_d, r_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dome {
    pub sphere: Sphere,
    pub plane: HalfSpace,
    pub center: DVector<f64>,
    pub radius: f64,
}

impl Dome {
    pub fn new(sphere: Sphere, plane: HalfSpace) -> Result<Self> {
        if !(plane.psi.abs() <= 1.0 + 1e-9) {
            return Err(Error::DomainError(format!(
                "dome needs |psi_d| <= 1, got {}",
                plane.psi
            )));
        }
        let psi = plane.psi.clamp(-1.0, 1.0);
        let center = &sphere.center - &plane.normal * (psi * sphere.radius);
        let radius = sphere.radius * (1.0 - psi * psi).max(0.0).sqrt();
        Ok(Dome {
            sphere,
            plane,
            center,
            radius,
        })
    }
}

/// Sphere cut by two half-spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPlaneRegion {
    pub sphere: Sphere,
    pub planes: [HalfSpace; 2],
    /// `n₁ᵀn₂`.
    pub tau: f64,
}

impl TwoPlaneRegion {
    pub fn new(sphere: Sphere, first: HalfSpace, second: HalfSpace) -> Result<Self> {
        let tau = first.normal.dot(&second.normal);
        for p in [&first, &second] {
            if !(p.psi.abs() <= 1.0 + 1e-9) {
                return Err(Error::DomainError(format!("|psi| = {} exceeds 1", p.psi)));
            }
        }
        if tau.abs() > PARALLEL_COS {
            return Err(Error::NoSecondPlane);
        }
        if !planes_intersect(first.psi, second.psi, tau) {
            return Err(Error::DomainError(
                "half-spaces do not intersect on the sphere".into(),
            ));
        }
        Ok(TwoPlaneRegion {
            sphere,
            planes: [first, second],
            tau,
        })
    }
}

/// A dual-bounding region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Sphere(Sphere),
    Dome(Dome),
    TwoPlane(TwoPlaneRegion),
}

/// The region that actually produced a mask after fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Screening disabled.
    None,
    /// Radius zero: the dual optimum is `Y` itself.
    Exact,
    Sphere,
    Dome,
    TwoPlane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenOutcome {
    pub mask: ScreenMask,
    pub region: RegionKind,
}

fn check_weights(problem: &Problem, weights: &WeightVector) -> Result<()> {
    if weights.len() != problem.cols() {
        return Err(Error::LengthMismatch {
            expected: problem.cols(),
            actual: weights.len(),
        });
    }
    Ok(())
}

fn check_center(problem: &Problem, v: &DVector<f64>) -> Result<()> {
    if v.len() != problem.rows() {
        return Err(Error::LengthMismatch {
            expected: problem.rows(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// Scaled response `η′ = Y · min(1, λu_min/λ_max)`, a dual-feasible point.
pub fn feasible_point(
    problem: &Problem,
    weights: &WeightVector,
    lam_max: f64,
) -> Result<DVector<f64>> {
    check_weights(problem, weights)?;
    if problem.response().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateResponse);
    }
    if !(lam_max >= 0.0) {
        return Err(Error::DomainError(format!("lambda_max = {lam_max}")));
    }
    Ok(problem.response() * feasible_scale(problem, weights, lam_max))
}

fn feasible_scale(problem: &Problem, weights: &WeightVector, lam_max: f64) -> f64 {
    if lam_max > 0.0 {
        (problem.noise_level() * weights.min() / lam_max).min(1.0)
    } else {
        1.0
    }
}

/// Largest `s ≤ 1` with `s·|φ_iᵀY| ≤ λu_i` for every feature. Never smaller
/// than the scale used by [`feasible_point`], so the sphere around `Y` is at
/// least as tight. Matters once the weights spread over orders of magnitude.
fn weighted_scale(rho: &[f64], lam: f64, weights: &WeightVector) -> f64 {
    rho.iter()
        .zip(weights.as_vector().iter())
        .filter(|(r, _)| **r != 0.0)
        .map(|(r, u)| lam * u / r.abs())
        .fold(1.0, f64::min)
}

/// Distance from `Y` to the closest feasible multiple of `h`.
fn hint_radius(problem: &Problem, weights: &WeightVector, h: &DVector<f64>, corr: &[f64]) -> f64 {
    let y = problem.response();
    let hh = h.norm_squared();
    if !(hh > 0.0) {
        return f64::INFINITY;
    }
    let lam = problem.noise_level();
    let bound = corr
        .iter()
        .enumerate()
        .filter(|&(_, c)| *c != 0.0)
        .map(|(i, c)| lam * weights.get(i) / c.abs())
        .fold(f64::INFINITY, f64::min);
    let s = (h.dot(y) / hh).clamp(-bound, bound);
    (h * s - y).norm()
}

/// `B(Y, ‖η′ − Y‖)`.
pub fn build_sphere(problem: &Problem, feasible: &DVector<f64>) -> Result<Sphere> {
    check_center(problem, feasible)?;
    Ok(Sphere {
        center: problem.response().clone(),
        radius: (feasible - problem.response()).norm(),
    })
}

fn projections(problem: &Problem, v: &DVector<f64>) -> Vec<f64> {
    problem.correlations(v.as_slice())
}

// Mask kernels, shared by the region-level API and the pipeline.

fn sphere_mask(rho: &[f64], norms: &[f64], lam: f64, w: &WeightVector, r: f64) -> ScreenMask {
    ScreenMask {
        rejected: (0..rho.len())
            .map(|i| {
                let lu = lam * w.get(i);
                let slack = MARGIN * (lu + r * norms[i]);
                rho[i].abs() < lu - r * norms[i] - slack
            })
            .collect(),
    }
}

fn dome_mask(
    rho: &[f64],
    sigma: &[f64],
    norms: &[f64],
    lam: f64,
    w: &WeightVector,
    r: f64,
    psi: f64,
) -> ScreenMask {
    ScreenMask {
        rejected: (0..rho.len())
            .map(|i| {
                let lu = lam * w.get(i);
                let slack = MARGIN * (lu + r * norms[i]);
                let upper = lu - m1_unchecked(sigma[i], norms[i], r, psi) - slack;
                let lower = -(lu - m1_unchecked(-sigma[i], norms[i], r, psi)) + slack;
                lower < rho[i] && rho[i] < upper
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn tht_mask(
    rho: &[f64],
    sigma: &[f64],
    tau_i: &[f64],
    norms: &[f64],
    lam: f64,
    w: &WeightVector,
    r: f64,
    psi: (f64, f64),
    tau: f64,
) -> ScreenMask {
    ScreenMask {
        rejected: (0..rho.len())
            .map(|i| {
                let lu = lam * w.get(i);
                let slack = MARGIN * (lu + r * norms[i]);
                let upper =
                    lu - m2_unchecked(sigma[i], tau_i[i], norms[i], psi.0, psi.1, tau, r) - slack;
                let lower = -(lu
                    - m2_unchecked(-sigma[i], -tau_i[i], norms[i], psi.0, psi.1, tau, r))
                    + slack;
                lower < rho[i] && rho[i] < upper
            })
            .collect(),
    }
}

/// Rejects `i` iff `|cᵀφ_i| < λu_i − r‖φ_i‖`.
pub fn sphere_test(
    sphere: &Sphere,
    problem: &Problem,
    weights: &WeightVector,
) -> Result<ScreenMask> {
    check_weights(problem, weights)?;
    check_center(problem, &sphere.center)?;
    let rho = projections(problem, &sphere.center);
    Ok(sphere_mask(
        &rho,
        &problem.column_norms(),
        problem.noise_level(),
        weights,
        sphere.radius,
    ))
}

/// Best signed feature for cutting: maximizes `(|ρ_i| − λu_i)/‖φ_i‖`,
/// smallest index first on ties, positive sign when `ρ_i = 0`.
fn best_plane(scores: impl Iterator<Item = (usize, f64, f64)>) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, score, sign) in scores {
        if best.is_none_or(|(_, b, _)| score > b) {
            best = Some((i, score, sign));
        }
    }
    best
}

fn signed(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn half_space(
    problem: &Problem,
    feature: usize,
    sign: f64,
    norm: f64,
    lam_u: f64,
    psi: f64,
) -> HalfSpace {
    let normal = DVector::from_iterator(
        problem.rows(),
        problem.column(feature).iter().map(|v| sign * v / norm),
    );
    HalfSpace {
        normal,
        offset: lam_u / norm,
        psi,
        feature,
        sign,
    }
}

/// Picks the dual constraint cutting deepest into the sphere.
pub fn select_plane_1(
    sphere: &Sphere,
    problem: &Problem,
    weights: &WeightVector,
) -> Result<HalfSpace> {
    check_weights(problem, weights)?;
    check_center(problem, &sphere.center)?;
    let r = sphere.radius;
    if !(r > 0.0) {
        return Err(Error::RadiusZero);
    }
    let rho = projections(problem, &sphere.center);
    let norms = problem.column_norms();
    let lam = problem.noise_level();
    let (i, score, sign) = best_plane((0..problem.cols()).map(|i| {
        (
            i,
            (rho[i].abs() - lam * weights.get(i)) / norms[i],
            signed(rho[i]),
        )
    }))
    .ok_or(Error::NoUsefulPlane)?;
    let psi = score / r;
    if psi < -1.0 {
        return Err(Error::NoUsefulPlane);
    }
    Ok(half_space(
        problem,
        i,
        sign,
        norms[i],
        lam * weights.get(i),
        psi,
    ))
}

/// Dome test with the region's own center, radius and plane.
pub fn dome_test(dome: &Dome, problem: &Problem, weights: &WeightVector) -> Result<ScreenMask> {
    check_weights(problem, weights)?;
    check_center(problem, &dome.sphere.center)?;
    let rho = projections(problem, &dome.sphere.center);
    let sigma = projections(problem, &dome.plane.normal);
    Ok(dome_mask(
        &rho,
        &sigma,
        &problem.column_norms(),
        problem.noise_level(),
        weights,
        dome.sphere.radius,
        dome.plane.psi,
    ))
}

/// Picks a second dual constraint against the dome's circumsphere,
/// excluding the first plane's feature and anything parallel to it.
pub fn select_plane_2(dome: &Dome, problem: &Problem, weights: &WeightVector) -> Result<HalfSpace> {
    check_weights(problem, weights)?;
    check_center(problem, &dome.center)?;
    if problem.cols() < 2 {
        return Err(Error::NoSecondPlane);
    }
    let r = dome.sphere.radius;
    if !(r > 0.0) {
        return Err(Error::RadiusZero);
    }
    let t = projections(problem, &dome.center);
    let rho = projections(problem, &dome.sphere.center);
    let sigma = projections(problem, &dome.plane.normal);
    let norms = problem.column_norms();
    let lam = problem.noise_level();
    let first = dome.plane.feature;
    let (j, _, sign) = best_plane(
        (0..problem.cols())
            .filter(|&i| i != first && (sigma[i] / norms[i]).abs() <= PARALLEL_COS)
            .map(|i| {
                (
                    i,
                    (t[i].abs() - lam * weights.get(i)) / norms[i],
                    signed(t[i]),
                )
            }),
    )
    .ok_or(Error::NoSecondPlane)?;
    let psi = (sign * rho[j] - lam * weights.get(j)) / (norms[j] * r);
    if psi < -1.0 {
        return Err(Error::NoSecondPlane);
    }
    Ok(half_space(
        problem,
        j,
        sign,
        norms[j],
        lam * weights.get(j),
        psi,
    ))
}

/// Two-half-space test on `B(c, r) ∩ H₁ ∩ H₂`.
pub fn tht_test(
    region: &TwoPlaneRegion,
    problem: &Problem,
    weights: &WeightVector,
) -> Result<ScreenMask> {
    check_weights(problem, weights)?;
    check_center(problem, &region.sphere.center)?;
    let rho = projections(problem, &region.sphere.center);
    let sigma = projections(problem, &region.planes[0].normal);
    let tau_i = projections(problem, &region.planes[1].normal);
    Ok(tht_mask(
        &rho,
        &sigma,
        &tau_i,
        &problem.column_norms(),
        problem.noise_level(),
        weights,
        region.sphere.radius,
        (region.planes[0].psi, region.planes[1].psi),
        region.tau,
    ))
}

/// Applies whichever region test fits `region`.
pub fn region_test(
    region: &Region,
    problem: &Problem,
    weights: &WeightVector,
) -> Result<ScreenMask> {
    match region {
        Region::Sphere(s) => sphere_test(s, problem, weights),
        Region::Dome(d) => dome_test(d, problem, weights),
        Region::TwoPlane(t) => tht_test(t, problem, weights),
    }
}

/// The weighted two-hyperplane test, with its fallbacks.
pub fn w_tht_screen(problem: &Problem, weights: &WeightVector) -> Result<ScreenMask> {
    screen(problem, weights, ScreeningRule::Tht).map(|o| o.mask)
}

/// Screens one subproblem with `rule`.
///
/// Never fails on degenerate geometry: a missing second plane falls back to
/// the dome, a plane that misses the sphere falls back to the sphere test,
/// and a zero radius uses the exact dual condition `|Yᵀφ_i| < λu_i`.
pub fn screen(
    problem: &Problem,
    weights: &WeightVector,
    rule: ScreeningRule,
) -> Result<ScreenOutcome> {
    screen_with_hint(problem, weights, rule, None)
}

/// [`screen`], also trying a rescaled `hint` as the feasible point.
///
/// Any vector works as a hint; a residual `Y − Φθ` from a nearby problem is
/// the useful case. It is scaled into the dual feasible set and kept only
/// if it lies closer to `Y` than the scaled response does.
pub fn screen_with_hint(
    problem: &Problem,
    weights: &WeightVector,
    rule: ScreeningRule,
    hint: Option<&DVector<f64>>,
) -> Result<ScreenOutcome> {
    Screener::new(problem).screen(weights, rule, hint)
}

/// Gram columns kept by a [`Screener`] before it starts over.
const GRAM_CACHE: usize = 64;

/// Repeated screening of one problem under changing weights.
///
/// `Φᵀy` and the column norms do not depend on the weights, and the plane
/// features tend to repeat between calls, so all of those are computed once.
pub struct Screener<'a> {
    problem: &'a Problem,
    norms: Vec<f64>,
    rho: Vec<f64>,
    gram: RefCell<HashMap<usize, Rc<[f64]>>>,
}

impl<'a> Screener<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let y = problem.response().as_slice();
        let (norms, rho) = (0..problem.cols())
            .map(|i| {
                let col = problem.column(i);
                (dot(col, col).sqrt(), dot(col, y))
            })
            .unzip();
        Screener {
            problem,
            norms,
            rho,
            gram: RefCell::new(HashMap::new()),
        }
    }

    /// `Φᵀφ_i`.
    fn gram_column(&self, i: usize) -> Rc<[f64]> {
        let mut cache = self.gram.borrow_mut();
        if let Some(c) = cache.get(&i) {
            return Rc::clone(c);
        }
        if cache.len() >= GRAM_CACHE {
            cache.clear();
        }
        let c: Rc<[f64]> = self.problem.correlations(self.problem.column(i)).into();
        cache.insert(i, Rc::clone(&c));
        c
    }

    /// Same as [`screen_with_hint`] on the screener's problem.
    pub fn screen(
        &self,
        weights: &WeightVector,
        rule: ScreeningRule,
        hint: Option<&DVector<f64>>,
    ) -> Result<ScreenOutcome> {
        let problem = self.problem;
        check_weights(problem, weights)?;
        if let Some(h) = hint {
            check_center(problem, h)?;
        }
        let n = problem.cols();
        if rule == ScreeningRule::Off {
            return Ok(ScreenOutcome {
                mask: ScreenMask::keep_all(n),
                region: RegionKind::None,
            });
        }
        let y = problem.response();
        if y.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateResponse);
        }
        let lam = problem.noise_level();
        let (norms, rho) = (&self.norms, &self.rho);
        let scale = weighted_scale(rho, lam, weights);
        let mut r = (1.0 - scale) * y.norm();
        if let Some(h) = hint {
            let corr = problem.correlations(h.as_slice());
            r = r.min(hint_radius(problem, weights, h, &corr));
        }

        if !(r > 0.0) {
            return Ok(ScreenOutcome {
                mask: sphere_mask(rho, norms, lam, weights, 0.0),
                region: RegionKind::Exact,
            });
        }
        let sphere_outcome = |rho: &[f64], norms: &[f64]| ScreenOutcome {
            mask: sphere_mask(rho, norms, lam, weights, r),
            region: RegionKind::Sphere,
        };
        if rule == ScreeningRule::Sphere || n == 0 {
            return Ok(sphere_outcome(rho, norms));
        }

        // First plane.
        let (i1, score1, sign1) = best_plane((0..n).map(|i| {
            (
                i,
                (rho[i].abs() - lam * weights.get(i)) / norms[i],
                signed(rho[i]),
            )
        }))
        .expect("n > 0");
        let psi1 = score1 / r;
        if psi1 < -1.0 {
            return Ok(sphere_outcome(rho, norms));
        }
        let scale1 = sign1 / norms[i1];
        let sigma: Vec<f64> = self.gram_column(i1).iter().map(|v| v * scale1).collect();
        let dome_outcome = |rho: &[f64], sigma: &[f64], norms: &[f64]| ScreenOutcome {
            mask: dome_mask(rho, sigma, norms, lam, weights, r, psi1),
            region: RegionKind::Dome,
        };
        if rule == ScreeningRule::Dome || n < 2 {
            return Ok(dome_outcome(rho, &sigma, norms));
        }

        // Second plane, chosen against the circumsphere center c − ψ₁r·n₁.
        let shift = psi1.min(1.0) * r;
        let second = best_plane(
            (0..n)
                .filter(|&i| i != i1 && (sigma[i] / norms[i]).abs() <= PARALLEL_COS)
                .map(|i| {
                    let t = rho[i] - shift * sigma[i];
                    (i, (t.abs() - lam * weights.get(i)) / norms[i], signed(t))
                }),
        );
        let Some((i2, _, sign2)) = second else {
            return Ok(dome_outcome(rho, &sigma, norms));
        };
        let psi2 = (sign2 * rho[i2] - lam * weights.get(i2)) / (norms[i2] * r);
        let tau = sign2 * sigma[i2] / norms[i2];
        if psi2 < -1.0 || tau.abs() > PARALLEL_COS || !planes_intersect(psi1, psi2, tau) {
            return Ok(dome_outcome(rho, &sigma, norms));
        }
        let scale2 = sign2 / norms[i2];
        let tau_i: Vec<f64> = self.gram_column(i2).iter().map(|v| v * scale2).collect();
        Ok(ScreenOutcome {
            mask: tht_mask(
                rho,
                &sigma,
                &tau_i,
                norms,
                lam,
                weights,
                r,
                (psi1, psi2),
                tau,
            ),
            region: RegionKind::TwoPlane,
        })
    }
}
