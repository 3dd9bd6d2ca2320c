//! Constant-mean-curvature equilibria: exact cylinders and a shooting
//! solver for non-constant graphs with `ṙ = 0` at both walls.

use serde::Serialize;

use crate::ambient::AmbientSpace;
use crate::bounds::cylinder_radius;
use crate::hypersurface::{self, ProfileGrid};
use crate::{Error, Result};

/// RK4 substeps per grid interval.
pub const DEFAULT_SUBSTEPS: usize = 4;
const SHOOT_TOL: f64 = 1e-10;
const SHOOT_MAX_ITERS: usize = 100;
// the one-sided end stencil turns a slope error p into a curvature error 2p/dz
const POLISH_TOL: f64 = 1e-15;
const POLISH_MAX_ITERS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CmcProfile {
    pub h_const: f64,
    pub profile: ProfileGrid,
    /// `max_i |H_i − h_const|` of the discrete curvature field.
    pub residual: f64,
    pub volume: f64,
    /// Whether the solution is a cylinder (relative spread below `1e-9`).
    pub is_cylinder: bool,
}

/// Mean curvature of the cylinder of radius `r`: `f'/f + (n−1) h'/h`.
pub fn cylinder_mean_curvature(space: &AmbientSpace, r: f64) -> f64 {
    let w = space.warp(r);
    w.df / w.f + (space.n() - 1) as f64 * w.dh / w.h
}

/// The cylinder over `[a, b]` enclosing `volume`, sampled on `m` nodes.
pub fn cylinder_for_volume(space: &AmbientSpace, a: f64, b: f64, m: usize, volume: f64) -> Result<CmcProfile> {
    if !(volume > 0.0) {
        return Err(Error::InvalidArgument(format!("volume must be positive, got {volume}")));
    }
    let r1 = cylinder_radius(space, a, b, volume)?;
    let profile = ProfileGrid::cylinder(a, b, m, r1)?;
    Ok(CmcProfile {
        h_const: cylinder_mean_curvature(space, r1),
        volume: hypersurface::enclosed_volume(&profile, space)?,
        profile,
        residual: 0.0,
        is_cylinder: true,
    })
}

/// `r̈` from `H = k₁ + (n−1) k₂` with `H` prescribed.
#[inline]
fn cmc_accel(space: &AmbientSpace, h_target: f64, r: f64, p: f64) -> f64 {
    let w = space.warp(r);
    let s2 = p * p + w.f * w.f;
    let s = s2.sqrt();
    (p * p * w.df + s2 * (w.df + (space.n() - 1) as f64 * w.f * w.dh / w.h - h_target * s)) / w.f
}

/// Integrate the CMC ODE from `z = a` with `r(a) = r0`, `ṙ(a) = 0`.
/// Returns the nodal radii and the final slope.
fn integrate(space: &AmbientSpace, a: f64, b: f64, m: usize, substeps: usize, h_target: f64, r0: f64) -> Result<(Vec<f64>, f64)> {
    let dz = (b - a) / (m - 1) as f64;
    let hstep = dz / substeps as f64;
    let rmax = space.r_max_domain();
    let accel = |r: f64, p: f64| cmc_accel(space, h_target, r, p);
    let (mut r, mut p) = (r0, 0.0);
    let mut nodes = Vec::with_capacity(m);
    nodes.push(r);
    for _ in 1..m {
        for _ in 0..substeps {
            let (k1r, k1p) = (p, accel(r, p));
            let (k2r, k2p) = (p + 0.5 * hstep * k1p, accel(r + 0.5 * hstep * k1r, p + 0.5 * hstep * k1p));
            let (k3r, k3p) = (p + 0.5 * hstep * k2p, accel(r + 0.5 * hstep * k2r, p + 0.5 * hstep * k2p));
            let (k4r, k4p) = (p + hstep * k3p, accel(r + hstep * k3r, p + hstep * k3p));
            r += hstep / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
            p += hstep / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if !(r > 0.0 && r < rmax && p.is_finite()) {
                return Err(Error::Shooting(format!("solution left the domain (r = {r}) starting from r(a) = {r0}")));
            }
        }
        nodes.push(r);
    }
    Ok((nodes, p))
}

/// Solve for a CMC graph with mean curvature `h_target` by shooting on `r(a)`.
pub fn shoot_cmc(space: &AmbientSpace, a: f64, b: f64, m: usize, h_target: f64, guess: f64) -> Result<CmcProfile> {
    shoot_cmc_with_substeps(space, a, b, m, h_target, guess, DEFAULT_SUBSTEPS)
}

/// [`shoot_cmc`] with an explicit number of RK4 substeps per grid interval.
pub fn shoot_cmc_with_substeps(
    space: &AmbientSpace,
    a: f64,
    b: f64,
    m: usize,
    h_target: f64,
    guess: f64,
    substeps: usize,
) -> Result<CmcProfile> {
    if !h_target.is_finite() {
        return Err(Error::InvalidArgument(format!("target mean curvature must be finite, got {h_target}")));
    }
    if m < 3 || substeps == 0 || !(b > a) {
        return Err(Error::InvalidArgument("shooting needs m >= 3, substeps >= 1 and b > a".into()));
    }
    space.check_radius(guess)?;

    let end_slope = |r0: f64| integrate(space, a, b, m, substeps, h_target, r0).map(|(_, p)| p);
    let mut x0 = guess;
    let mut f0 = end_slope(x0)?;
    let mut x1 = guess * (1.0 + 1e-4);
    let mut f1 = end_slope(x1)?;
    let mut converged = f0.abs() <= SHOOT_TOL;
    if converged {
        x1 = x0;
    }
    let mut iters = 0;
    while !converged && iters < SHOOT_MAX_ITERS {
        iters += 1;
        if f1.abs() <= SHOOT_TOL {
            converged = true;
            break;
        }
        if f1 == f0 {
            return Err(Error::Shooting(format!("flat secant at r(a) = {x1}")));
        }
        let mut step = -f1 * (x1 - x0) / (f1 - f0);
        // halve steps that leave the domain or fail to integrate
        let mut next = None;
        for _ in 0..40 {
            let cand = x1 + step;
            if cand > 0.0 && cand < space.r_max_domain() {
                if let Ok(fc) = end_slope(cand) {
                    next = Some((cand, fc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x2, f2)) = next else {
            return Err(Error::Shooting(format!("no admissible secant step from r(a) = {x1}")));
        };
        (x0, f0, x1, f1) = (x1, f1, x2, f2);
    }
    if !converged {
        return Err(Error::Shooting(format!("no convergence in {SHOOT_MAX_ITERS} iterations (|r'(b)| = {:e})", f1.abs())));
    }
    for _ in 0..POLISH_MAX_ITERS {
        if f1.abs() <= POLISH_TOL || f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        let Ok(f2) = end_slope(x2) else { break };
        if !(f2.abs() < f1.abs()) {
            break;
        }
        (x0, f0, x1, f1) = (x1, f1, x2, f2);
    }
    let (nodes, _) = integrate(space, a, b, m, substeps, h_target, x1)?;
    let profile = ProfileGrid::new(a, b, nodes)?;
    let field = hypersurface::curvature_field(&profile, space)?;
    let residual = field.h.iter().map(|h| (h - h_target).abs()).fold(0.0, f64::max);
    let (lo, hi) = (profile.min_r(), profile.max_r());
    Ok(CmcProfile {
        h_const: h_target,
        volume: hypersurface::enclosed_volume(&profile, space)?,
        is_cylinder: hi - lo <= 1e-9 * hi,
        profile,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmcDistance {
    /// Area-weighted mean of `H` (equal to `H̄`).
    pub h_best: f64,
    pub deviation: f64,
}

/// How far a profile is from having constant mean curvature.
pub fn distance_to_cmc(p: &ProfileGrid, space: &AmbientSpace) -> Result<CmcDistance> {
    let field = hypersurface::curvature_field(p, space)?;
    let h_best = hypersurface::averaged_mean_curvature(p, space)?.hbar;
    let deviation = field.h.iter().map(|h| (h - h_best).abs()).fold(0.0, f64::max);
    Ok(CmcDistance { h_best, deviation })
}
