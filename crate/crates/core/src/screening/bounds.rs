//! Exact maxima of `(η − c)ᵀφ` over the dome and two-half-space regions.
//!
//! Both regions live inside the sphere `B(c, r)`. A half-space
//! `nᵀη ≤ h` is described by `ψ = (nᵀc − h)/r`, the signed distance of its
//! boundary from `c` in units of `r`. Arguments are projections of the
//! feature: `t1 = n₁ᵀφ`, `t2 = n₂ᵀφ` and the norm `‖φ‖`.

use crate::error::{Error, Result};

const SLACK: f64 = 1e-9;

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[inline]
fn sqrt0(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

fn check_psi(name: &str, psi: f64) -> Result<()> {
    if !(psi.abs() <= 1.0 + SLACK) {
        return Err(Error::DomainError(format!("|{name}| = {psi} exceeds 1")));
    }
    Ok(())
}

fn check_projection(t: f64, norm: f64) -> Result<()> {
    if !(norm >= 0.0) || t.abs() > norm + SLACK * norm.max(1.0) {
        return Err(Error::DomainError(format!(
            "projection {t} exceeds feature norm {norm}"
        )));
    }
    Ok(())
}

/// Maximum of `(η − c)ᵀφ` over the dome `B(c, r) ∩ {nᵀη ≤ h}`.
///
/// `t1 = nᵀφ`, `t2 = ‖φ‖`.
pub fn m1(t1: f64, t2: f64, r: f64, psi_d: f64) -> Result<f64> {
    check_psi("psi_d", psi_d)?;
    check_projection(t1, t2)?;
    Ok(m1_unchecked(t1, t2, r, psi_d))
}

#[inline]
pub(crate) fn m1_unchecked(t1: f64, t2: f64, r: f64, psi_d: f64) -> f64 {
    let psi = clamp_unit(psi_d);
    let t1 = t1.clamp(-t2, t2);
    let sphere = r * t2;
    if t1 < -psi * t2 {
        sphere
    } else {
        // The dome is inside the sphere, so its maximum cannot exceed r·t2.
        let cap = -psi * r * t1 + r * sqrt0(t2 * t2 - t1 * t1) * sqrt0(1.0 - psi * psi);
        cap.min(sphere)
    }
}

/// `h(x, y, z) = sqrt((1 − τ²)z² + 2τxy − x² − y²)`, floored at zero.
#[inline]
fn h(tau: f64, x: f64, y: f64, z: f64) -> f64 {
    sqrt0((1.0 - tau * tau) * z * z + 2.0 * tau * x * y - x * x - y * y)
}

/// Checks that the two half-spaces leave a non-empty cap on the sphere.
pub fn planes_intersect(psi1: f64, psi2: f64, tau: f64) -> bool {
    let a = clamp_unit(psi1).acos() + clamp_unit(psi2).acos();
    a >= clamp_unit(tau).acos() - SLACK
}

/// Maximum of `(η − c)ᵀφ` over `B(c, r) ∩ {n₁ᵀη ≤ h₁} ∩ {n₂ᵀη ≤ h₂}`.
///
/// `t1 = n₁ᵀφ`, `t2 = n₂ᵀφ`, `t3 = ‖φ‖`, `τ = n₁ᵀn₂`.
#[allow(clippy::too_many_arguments)]
pub fn m2(t1: f64, t2: f64, t3: f64, psi1: f64, psi2: f64, tau: f64, r: f64) -> Result<f64> {
    check_psi("psi1", psi1)?;
    check_psi("psi2", psi2)?;
    check_psi("tau", tau)?;
    check_projection(t1, t3)?;
    check_projection(t2, t3)?;
    if !planes_intersect(psi1, psi2, tau) {
        return Err(Error::DomainError(format!(
            "half-spaces do not intersect on the sphere (psi1={psi1}, psi2={psi2}, tau={tau})"
        )));
    }
    Ok(m2_unchecked(t1, t2, t3, psi1, psi2, tau, r))
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn m2_unchecked(
    t1: f64,
    t2: f64,
    t3: f64,
    psi1: f64,
    psi2: f64,
    tau: f64,
    r: f64,
) -> f64 {
    let psi1 = clamp_unit(psi1);
    let psi2 = clamp_unit(psi2);
    let tau = clamp_unit(tau);
    let t1 = t1.clamp(-t3, t3);
    let t2 = t2.clamp(-t3, t3);

    // The region is contained in each single-plane dome.
    let dome1 = m1_unchecked(t1, t3, r, psi1);
    let dome2 = m1_unchecked(t2, t3, r, psi2);
    let relaxed = dome1.min(dome2);

    let s1 = sqrt0(1.0 - psi1 * psi1);
    let s2 = sqrt0(1.0 - psi2 * psi2);
    let d1 = sqrt0(t3 * t3 - t1 * t1);
    let d2 = sqrt0(t3 * t3 - t2 * t2);

    // (a) the sphere maximizer satisfies both half-spaces.
    if t1 < -psi1 * t3 && t2 < -psi2 * t3 {
        return r * t3;
    }
    // (b) only the first plane is active; the ratio tests are written
    // cross-multiplied so a feature parallel to a normal needs no division.
    if t1 >= -psi1 * t3 && (t2 - tau * t1) * s1 < (-psi2 + tau * psi1) * d1 {
        return (-r * t1 * psi1 + r * d1 * s1).min(relaxed);
    }
    // (c) only the second plane is active.
    if t2 >= -psi2 * t3 && (t1 - tau * t2) * s2 < (-psi1 + tau * psi2) * d2 {
        return (-r * t2 * psi2 + r * d2 * s2).min(relaxed);
    }
    // Both planes active.
    let den = 1.0 - tau * tau;
    if den <= 1e-12 {
        return relaxed;
    }
    let lin = (psi1 - tau * psi2) * t1 + (psi2 - tau * psi1) * t2;
    let both = r / den * (-lin + h(tau, psi1, psi2, 1.0) * h(tau, t1, t2, t3));
    both.min(relaxed)
}
