//! A-priori radii and the small-volume convergence threshold.
//!
//! With `β(r) = ∫₀ʳ f h^{n-1}` and `δ(r) = ∫₀ʳ h^{n-1}`:
//!
//! * `r1 = β⁻¹(V / ((b-a) σ))` is the radius of the cylinder enclosing `V`,
//! * `r2 = δ⁻¹(area / σ + δ(r1))` bounds the radius along the whole flow,
//! * `r3 = β⁻¹(V / (2 (b-a) σ))`,
//! * the flow converges when `area ≤ (V / (b-a)) · δ(r1) / β(r1)`.

use serde::Serialize;

use crate::ambient::AmbientSpace;
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

/// Relative tolerance of the radial integrals.
pub const RADIAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub small_volume_threshold: f64,
    pub criterion_met: bool,
    pub sigma: f64,
}

fn check_arg(space: &AmbientSpace, r: f64) -> Result<()> {
    if !(r >= 0.0) || r >= space.r_max_domain() {
        return Err(Error::OutOfDomain { r, r_max: space.r_max_domain() });
    }
    Ok(())
}

/// `β(r) = ∫₀ʳ f h^{n-1} dr`.
pub fn beta(space: &AmbientSpace, r: f64) -> Result<f64> {
    check_arg(space, r)?;
    Ok(adaptive_simpson(&|s| space.volume_density(s), 0.0, r, RADIAL_TOL))
}

/// `δ(r) = ∫₀ʳ h^{n-1} dr`.
pub fn delta(space: &AmbientSpace, r: f64) -> Result<f64> {
    check_arg(space, r)?;
    Ok(adaptive_simpson(&|s| space.sphere_density(s), 0.0, r, RADIAL_TOL))
}

/// Invert a strictly increasing `g` on `[0, limit)`: find `x` with `g(x) = y`.
///
/// The bracket is grown geometrically from `[0, 1]` (or towards `limit` when
/// the domain is bounded) and then bisected to a relative width of `1e-14`.
pub fn invert_increasing<G>(g: G, y: f64, limit: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let g0 = g(0.0)?;
    if y == g0 {
        return Ok(0.0);
    }
    if !(y > g0) {
        return Err(Error::Inversion { target: y, limit });
    }
    let mut lo = 0.0;
    let mut hi = if limit.is_finite() { (0.5 * limit).min(1.0) } else { 1.0 };
    let mut found = false;
    for _ in 0..2100 {
        if g(hi)? >= y {
            found = true;
            break;
        }
        lo = hi;
        hi = if limit.is_finite() {
            let next = 2.0 * hi;
            if next < limit {
                next
            } else {
                0.5 * (hi + limit)
            }
        } else {
            2.0 * hi
        };
        if !hi.is_finite() || (limit.is_finite() && hi >= limit) || hi == lo {
            break;
        }
    }
    if !found {
        return Err(Error::Inversion { target: y, limit });
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn beta_inverse(space: &AmbientSpace, y: f64) -> Result<f64> {
    invert_increasing(|r| beta(space, r), y, space.r_max_domain())
}

pub fn delta_inverse(space: &AmbientSpace, y: f64) -> Result<f64> {
    invert_increasing(|r| delta(space, r), y, space.r_max_domain())
}

/// Radius of the cylinder over `[a, b]` enclosing volume `volume`.
pub fn cylinder_radius(space: &AmbientSpace, a: f64, b: f64, volume: f64) -> Result<f64> {
    beta_inverse(space, volume / ((b - a) * space.sigma()))
}

/// The a-priori quantities for enclosed volume `volume` and initial lateral
/// area `area`.
pub fn compute_bounds(space: &AmbientSpace, a: f64, b: f64, volume: f64, area: f64) -> Result<BoundsReport> {
    if !(volume > 0.0 && area > 0.0 && b > a) {
        return Err(Error::InvalidArgument(format!(
            "bounds need V > 0, area > 0 and b > a (got V = {volume}, area = {area}, [{a}, {b}])"
        )));
    }
    let sigma = space.sigma();
    let len = b - a;
    let r1 = beta_inverse(space, volume / (len * sigma))?;
    let delta_r1 = delta(space, r1)?;
    let beta_r1 = beta(space, r1)?;
    let r2 = delta_inverse(space, area / sigma + delta_r1)?;
    let r3 = beta_inverse(space, volume / (2.0 * len * sigma))?;
    let small_volume_threshold = volume / len * (delta_r1 / beta_r1);
    Ok(BoundsReport {
        r1,
        r2,
        r3,
        small_volume_threshold,
        criterion_met: area <= small_volume_threshold,
        sigma,
    })
}

/// Closed form of the small-volume threshold for `n = 2` and constant
/// curvature `lambda < 0`: `2π/(-λ) · (-1 + √(1 - λV/(π(b-a))))`.
pub fn threshold_closed_form_n2(lambda: f64, volume: f64, len: f64) -> f64 {
    2.0 * std::f64::consts::PI / (-lambda) * (-1.0 + (1.0 - lambda * volume / (std::f64::consts::PI * len)).sqrt())
}
