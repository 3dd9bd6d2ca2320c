//! Discrete geometry of a revolution graph `r(z)` on a uniform grid.
//!
//! The orthogonality condition at the slab walls is imposed through
//! reflected ghost nodes `r_{-1} = r_1`, `r_m = r_{m-2}`, so the discrete
//! slope vanishes at both endpoints.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::ambient::AmbientSpace;
use crate::bounds::RADIAL_TOL;
use crate::expr::Expr;
use crate::quadrature::{adaptive_simpson, trapezoid_weight};
use crate::{Error, Result};

/// Nodal radii on the uniform grid `z_i = a + i Δz`, `i = 0..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    a: f64,
    b: f64,
    r: Vec<f64>,
}

impl ProfileGrid {
    pub fn new(a: f64, b: f64, r: Vec<f64>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidProfile(format!("need finite a < b, got [{a}, {b}]")));
        }
        if r.len() < 3 {
            return Err(Error::InvalidProfile(format!("need at least 3 nodes, got {}", r.len())));
        }
        if let Some((i, v)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProfile(format!("radius at node {i} must be positive and finite, got {v}")));
        }
        Ok(ProfileGrid { a, b, r })
    }

    pub fn from_fn(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidProfile(format!("need at least 3 nodes, got {m}")));
        }
        let dz = (b - a) / (m - 1) as f64;
        Self::new(a, b, (0..m).map(|i| f(a + i as f64 * dz)).collect())
    }

    /// Sample an expression in `z`.
    pub fn from_expr(a: f64, b: f64, m: usize, source: &str) -> Result<Self> {
        let e = Expr::parse(source, "z")?;
        Self::from_fn(a, b, m, |z| e.eval(z))
    }

    pub fn cylinder(a: f64, b: f64, m: usize, radius: f64) -> Result<Self> {
        Self::from_fn(a, b, m, |_| radius)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.r.len()
    }

    pub fn dz(&self) -> f64 {
        (self.b - self.a) / (self.r.len() - 1) as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dz()
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn min_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the smallest radius (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.r.iter().enumerate() {
            if v < self.r[best] {
                best = i;
            }
        }
        best
    }

    pub fn check_domain(&self, space: &AmbientSpace) -> Result<()> {
        for &v in &self.r {
            space.check_radius(v)?;
        }
        Ok(())
    }

    /// Write the profile as CSV with header `z,r`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z,r")?;
        for (i, r) in self.r.iter().enumerate() {
            writeln!(out, "{},{}", self.z(i), r)?;
        }
        Ok(())
    }

    /// Read a `z,r` CSV; `z` must be increasing and uniform, `r` positive.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "z,r" {
            return Err(Error::InvalidProfile(format!("expected header `z,r`, got `{}`", header.trim())));
        }
        let mut zs = Vec::new();
        let mut rs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(zs_txt), Some(rs_txt), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidProfile(format!("line {}: expected two columns", lineno + 2)));
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidProfile(format!("line {}: malformed number `{s}`", lineno + 2)))
            };
            zs.push(parse(zs_txt)?);
            rs.push(parse(rs_txt)?);
        }
        if zs.len() < 3 {
            return Err(Error::InvalidProfile(format!("need at least 3 rows, got {}", zs.len())));
        }
        let (a, b) = (zs[0], zs[zs.len() - 1]);
        let dz = (b - a) / (zs.len() - 1) as f64;
        for (i, z) in zs.iter().enumerate() {
            if !((z - (a + i as f64 * dz)).abs() <= 1e-9 * (b - a).abs().max(1.0)) || !(dz > 0.0) {
                return Err(Error::InvalidProfile(format!("z column is not increasing and uniform at row {}", i + 2)));
            }
        }
        Self::new(a, b, rs)
    }
}

/// Second-order central differences with reflected ghost nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub slope: Vec<f64>,
    pub curv: Vec<f64>,
}

pub fn spatial_derivatives(p: &ProfileGrid) -> Derivatives {
    let r = p.radii();
    let m = r.len();
    let dz = p.dz();
    let mut slope = vec![0.0; m];
    let mut curv = vec![0.0; m];
    fill_derivatives(r, dz, &mut slope, &mut curv);
    Derivatives { slope, curv }
}

pub(crate) fn fill_derivatives(r: &[f64], dz: f64, slope: &mut [f64], curv: &mut [f64]) {
    let m = r.len();
    let inv2 = 0.5 / dz;
    let inv_sq = 1.0 / (dz * dz);
    slope[0] = 0.0;
    curv[0] = 2.0 * (r[1] - r[0]) * inv_sq;
    for i in 1..m - 1 {
        slope[i] = (r[i + 1] - r[i - 1]) * inv2;
        curv[i] = (r[i + 1] - 2.0 * r[i] + r[i - 1]) * inv_sq;
    }
    slope[m - 1] = 0.0;
    curv[m - 1] = 2.0 * (r[m - 2] - r[m - 1]) * inv_sq;
}

/// Pointwise curvature data of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureField {
    /// Normal curvature along the meridian.
    pub k1: Vec<f64>,
    /// Normal curvature along the rotation orbits.
    pub k2: Vec<f64>,
    pub h: Vec<f64>,
    /// `v = 1 / <N, E_r>`; the generating curve is a graph while this is finite.
    pub v: Vec<f64>,
    /// Squared norm of the second fundamental form.
    pub l2: Vec<f64>,
}

/// Principal curvatures at one node from the slope, second derivative and
/// warp values there.
#[inline]
pub(crate) fn node_curvatures(slope: f64, curv: f64, w: &crate::ambient::WarpValues) -> (f64, f64) {
    let s2 = slope * slope + w.f * w.f;
    let s = s2.sqrt();
    let k1 = ((-curv * w.f + slope * slope * w.df) / s2 + w.df) / s;
    let k2 = w.f * w.dh / (w.h * s);
    (k1, k2)
}

pub fn curvature_field(p: &ProfileGrid, space: &AmbientSpace) -> Result<CurvatureField> {
    p.check_domain(space)?;
    let d = spatial_derivatives(p);
    let n = space.n();
    let m = p.m();
    let mut out = CurvatureField {
        k1: Vec::with_capacity(m),
        k2: Vec::with_capacity(m),
        h: Vec::with_capacity(m),
        v: Vec::with_capacity(m),
        l2: Vec::with_capacity(m),
    };
    for i in 0..m {
        let w = space.warp(p.radii()[i]);
        let (k1, k2) = node_curvatures(d.slope[i], d.curv[i], &w);
        let nm1 = (n - 1) as f64;
        out.k1.push(k1);
        out.k2.push(k2);
        out.h.push(k1 + nm1 * k2);
        out.v.push((d.slope[i] * d.slope[i] + w.f * w.f).sqrt() / w.f);
        out.l2.push(k1 * k1 + nm1 * k2 * k2);
    }
    Ok(out)
}

/// `β(r_i)` at every node, by adaptive Simpson from the axis.
pub fn node_betas(p: &ProfileGrid, space: &AmbientSpace) -> Result<Vec<f64>> {
    p.check_domain(space)?;
    Ok(p.radii()
        .iter()
        .map(|&r| adaptive_simpson(&|s| space.volume_density(s), 0.0, r, RADIAL_TOL))
        .collect())
}

/// Enclosed `(n+1)`-volume `σ ∫_a^b β(r(z)) dz`.
pub fn enclosed_volume(p: &ProfileGrid, space: &AmbientSpace) -> Result<f64> {
    let betas = node_betas(p, space)?;
    Ok(space.sigma() * crate::quadrature::trapezoid(&betas, p.dz()))
}

/// Lateral `n`-volume `σ ∫_a^b √(ṙ² + f²) h^{n-1} dz`.
pub fn lateral_area(p: &ProfileGrid, space: &AmbientSpace) -> Result<f64> {
    p.check_domain(space)?;
    let d = spatial_derivatives(p);
    let (m, dz, n) = (p.m(), p.dz(), space.n() as i32);
    let mut acc = 0.0;
    for i in 0..m {
        let w = space.warp(p.radii()[i]);
        acc += trapezoid_weight(i, m, dz) * (d.slope[i] * d.slope[i] + w.f * w.f).sqrt() * w.h.powi(n - 1);
    }
    Ok(space.sigma() * acc)
}

/// Length of the generating curve `∫_a^b √(ṙ² + f²) dz`.
pub fn curve_length(p: &ProfileGrid, space: &AmbientSpace) -> Result<f64> {
    p.check_domain(space)?;
    let d = spatial_derivatives(p);
    let (m, dz) = (p.m(), p.dz());
    Ok((0..m)
        .map(|i| {
            let f = space.warp(p.radii()[i]).f;
            trapezoid_weight(i, m, dz) * (d.slope[i] * d.slope[i] + f * f).sqrt()
        })
        .sum())
}

/// Averaged mean curvature and its split into the meridian term `i1` and
/// the warp term `i2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCurvatureSplit {
    pub hbar: f64,
    pub i1: f64,
    pub i2: f64,
}

/// `H̄ = ∫ H dμ / ∫ dμ`, together with
/// `I₁ = σ/vol ∫ arctan(ṙ/f) (h^{n-1})' ṙ dz` and
/// `I₂ = σ/vol ∫ ((n-1) h' f + f' h) h^{n-2} dz`.
///
/// `H̄ = I₁ + I₂` holds up to discretization error.
pub fn averaged_mean_curvature(p: &ProfileGrid, space: &AmbientSpace) -> Result<MeanCurvatureSplit> {
    p.check_domain(space)?;
    let d = spatial_derivatives(p);
    let (m, dz, n) = (p.m(), p.dz(), space.n());
    let nm1 = (n - 1) as f64;
    let (mut h_mu, mut mu, mut i1, mut i2) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        let w = space.warp(p.radii()[i]);
        let wt = trapezoid_weight(i, m, dz);
        let (k1, k2) = node_curvatures(d.slope[i], d.curv[i], &w);
        let h_pow = w.h.powi(n as i32 - 2);
        let dmu = (d.slope[i] * d.slope[i] + w.f * w.f).sqrt() * h_pow * w.h;
        h_mu += wt * (k1 + nm1 * k2) * dmu;
        mu += wt * dmu;
        i1 += wt * (d.slope[i] / w.f).atan() * nm1 * h_pow * w.dh * d.slope[i];
        i2 += wt * (nm1 * w.dh * w.f + w.df * w.h) * h_pow;
    }
    Ok(MeanCurvatureSplit { hbar: h_mu / mu, i1: i1 / mu, i2: i2 / mu })
}

pub fn max_abs_slope(p: &ProfileGrid) -> f64 {
    spatial_derivatives(p).slope.iter().fold(0.0f64, |acc, s| acc.max(s.abs()))
}

/// Default slope tolerance for [`critical_point_count`]: `1e-9 · max|ṙ|`.
pub fn default_slope_tol(p: &ProfileGrid) -> f64 {
    1e-9 * max_abs_slope(p)
}

/// Number of zeros of the slope, endpoints included.
///
/// Interior slopes below `slope_tol` in magnitude are treated as zero. Each
/// strict sign change between neighbouring nodes and each interior run of
/// zeros counts once; zero runs touching an endpoint merge into it.
pub fn critical_point_count(p: &ProfileGrid, slope_tol: f64) -> usize {
    let slope = spatial_derivatives(p).slope;
    critical_points_from_slopes(&slope, slope_tol)
}

pub(crate) fn critical_points_from_slopes(slope: &[f64], slope_tol: f64) -> usize {
    let m = slope.len();
    let sign = |s: f64| -> i8 {
        if s == 0.0 || s.abs() < slope_tol {
            0
        } else if s > 0.0 {
            1
        } else {
            -1
        }
    };
    let mut count = 2;
    let mut prev = 0i8;
    let mut in_zero_run = true; // the left endpoint
    for &s in &slope[1..m - 1] {
        let sg = sign(s);
        if sg == 0 {
            in_zero_run = true;
            continue;
        }
        if in_zero_run {
            if prev != 0 {
                count += 1; // interior plateau or zero crossing
            }
        } else if sg != prev {
            count += 1;
        }
        in_zero_run = false;
        prev = sg;
    }
    count
}
