//! Rotationally symmetric ambient spaces `dr² + f(r)² dz² + h(r)² g_S`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::{Error, Result};

/// Values of the warp functions and their first two radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValues {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub h: f64,
    pub dh: f64,
    pub ddh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Euclidean,
    Hyperbolic,
    Spherical,
    Custom,
}

/// Closed-form warp functions supplied as expressions in `r`.
///
/// All six expressions are required; derivatives are never formed numerically.
#[derive(Debug, Clone)]
pub struct CustomWarp {
    pub f: Expr,
    pub df: Expr,
    pub ddf: Expr,
    pub h: Expr,
    pub dh: Expr,
    pub ddh: Expr,
}

impl CustomWarp {
    /// Parse the six expressions `[f, f', f'', h, h', h'']`.
    pub fn parse(sources: [&str; 6]) -> Result<Self> {
        let p = |s: &str| Expr::parse(s, "r");
        Ok(CustomWarp {
            f: p(sources[0])?,
            df: p(sources[1])?,
            ddf: p(sources[2])?,
            h: p(sources[3])?,
            dh: p(sources[4])?,
            ddh: p(sources[5])?,
        })
    }
}

#[derive(Debug, Clone)]
enum WarpKind {
    Euclidean,
    Hyperbolic { k: f64 },
    Spherical { k: f64 },
    Custom(Arc<CustomWarp>),
}

/// An ambient space of hypersurface dimension `n` over the ball of radius
/// `r_max_domain`. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct AmbientSpace {
    n: usize,
    r_max_domain: f64,
    lambda: Option<f64>,
    kind: WarpKind,
}

/// The four sectional curvatures of the warped metric at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionalCurvatures {
    pub s_rz: f64,
    pub s_ri: f64,
    pub s_zi: f64,
    pub s_ij: f64,
}

impl AmbientSpace {
    /// Build one of the constant-curvature model spaces.
    ///
    /// `lambda` must be `0` for the Euclidean preset, negative for the
    /// hyperbolic one and positive for the open half sphere.
    pub fn preset(preset: Preset, lambda: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(n));
        }
        let (kind, r_max_domain) = match preset {
            Preset::Euclidean if lambda == 0.0 => (WarpKind::Euclidean, f64::INFINITY),
            Preset::Hyperbolic if lambda < 0.0 => (WarpKind::Hyperbolic { k: (-lambda).sqrt() }, f64::INFINITY),
            Preset::Spherical if lambda > 0.0 => {
                let k = lambda.sqrt();
                (WarpKind::Spherical { k }, PI / (2.0 * k))
            }
            Preset::Custom => {
                return Err(Error::InvalidArgument("use AmbientSpace::custom for custom warps".into()))
            }
            _ => {
                let expected = match preset {
                    Preset::Euclidean => "lambda = 0",
                    Preset::Hyperbolic => "lambda < 0",
                    _ => "lambda > 0",
                };
                return Err(Error::PresetSign { preset, lambda, expected });
            }
        };
        Ok(AmbientSpace { n, r_max_domain, lambda: Some(lambda), kind })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::preset(Preset::Euclidean, 0.0, n)
    }

    pub fn hyperbolic(lambda: f64, n: usize) -> Result<Self> {
        Self::preset(Preset::Hyperbolic, lambda, n)
    }

    pub fn spherical(lambda: f64, n: usize) -> Result<Self> {
        Self::preset(Preset::Spherical, lambda, n)
    }

    pub fn custom(warp: CustomWarp, n: usize, r_max_domain: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(n));
        }
        if r_max_domain.is_nan() || r_max_domain <= 0.0 {
            return Err(Error::InvalidArgument(format!("r_max_domain must be positive, got {r_max_domain}")));
        }
        Ok(AmbientSpace { n, r_max_domain, lambda: None, kind: WarpKind::Custom(Arc::new(warp)) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max_domain(&self) -> f64 {
        self.r_max_domain
    }

    /// Constant sectional curvature of a model space, `None` for custom warps.
    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn tag(&self) -> Preset {
        match self.kind {
            WarpKind::Euclidean => Preset::Euclidean,
            WarpKind::Hyperbolic { .. } => Preset::Hyperbolic,
            WarpKind::Spherical { .. } => Preset::Spherical,
            WarpKind::Custom(_) => Preset::Custom,
        }
    }

    /// Volume of the unit sphere `S^{n-1}`.
    pub fn sigma(&self) -> f64 {
        sphere_volume(self.n)
    }

    #[inline]
    pub fn warp(&self, r: f64) -> WarpValues {
        match &self.kind {
            WarpKind::Euclidean => WarpValues { f: 1.0, df: 0.0, ddf: 0.0, h: r, dh: 1.0, ddh: 0.0 },
            WarpKind::Hyperbolic { k } => {
                let (s, c) = ((k * r).sinh(), (k * r).cosh());
                WarpValues { f: c, df: k * s, ddf: k * k * c, h: s / k, dh: c, ddh: k * s }
            }
            WarpKind::Spherical { k } => {
                let (s, c) = (k * r).sin_cos();
                WarpValues { f: c, df: -k * s, ddf: -k * k * c, h: s / k, dh: c, ddh: -k * s }
            }
            WarpKind::Custom(w) => WarpValues {
                f: w.f.eval(r),
                df: w.df.eval(r),
                ddf: w.ddf.eval(r),
                h: w.h.eval(r),
                dh: w.dh.eval(r),
                ddh: w.ddh.eval(r),
            },
        }
    }

    /// `1 - h'(r)²`, in closed form for the model spaces.
    fn one_minus_dh_sq(&self, r: f64, w: &WarpValues) -> f64 {
        match self.kind {
            WarpKind::Euclidean => 0.0,
            WarpKind::Hyperbolic { k } => -(k * r).sinh().powi(2),
            WarpKind::Spherical { k } => (k * r).sin().powi(2),
            WarpKind::Custom(_) => 1.0 - w.dh * w.dh,
        }
    }

    /// `f(r) h(r)^{n-1}`, the radial density of the ambient volume form.
    #[inline]
    pub fn volume_density(&self, r: f64) -> f64 {
        let w = self.warp(r);
        w.f * w.h.powi(self.n as i32 - 1)
    }

    /// `h(r)^{n-1}`.
    #[inline]
    pub fn sphere_density(&self, r: f64) -> f64 {
        self.warp(r).h.powi(self.n as i32 - 1)
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r > 0.0 && r < self.r_max_domain {
            Ok(())
        } else {
            Err(Error::OutOfDomain { r, r_max: self.r_max_domain })
        }
    }

    pub fn sectional_curvatures(&self, r: f64) -> Result<SectionalCurvatures> {
        self.check_radius(r)?;
        let w = self.warp(r);
        Ok(SectionalCurvatures {
            s_rz: -w.ddf / w.f,
            s_ri: -w.ddh / w.h,
            s_zi: -w.dh * w.df / (w.h * w.f),
            s_ij: self.one_minus_dh_sq(r, &w) / (w.h * w.h),
        })
    }
}

/// `vol(S^{n-1}) = 2 π^{n/2} / Γ(n/2)`.
pub fn sphere_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rss2Branch {
    /// `S_zi < 0` and `S_ri <= 0` on the probed range.
    #[serde(rename = "a")]
    NegativeCurvature,
    /// The Euclidean space.
    #[serde(rename = "b")]
    Euclidean,
}

/// Result of [`validate_space`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rss_ok: bool,
    pub rss2_branch: Option<Rss2Branch>,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    /// Largest radius actually probed.
    pub probe_max: f64,
    pub samples: usize,
    /// Extrapolated `(f(0), f'(0), h(0), h'(0))`.
    pub axis_values: [f64; 4],
}

/// Tolerance on the axis conditions `f(0)=1, f'(0)=0, h(0)=0, h'(0)=1`.
pub const AXIS_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-12;

/// Check the metric regularity conditions at the axis and the curvature sign
/// conditions on `samples` radii in `(0, r_probe_max]`.
///
/// The probe range is clipped to `0.99 · r_max_domain`. Axis values are
/// estimated at `p = 1e-6 · r_probe_max` by first-order Richardson
/// extrapolation, `F(0) ≈ 2 F(p/2) - F(p)`.
pub fn validate_space(space: &AmbientSpace, r_probe_max: f64, samples: usize) -> Result<ValidationReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("samples must be >= 2, got {samples}")));
    }
    if !(r_probe_max > 0.0) {
        return Err(Error::InvalidArgument(format!("r_probe_max must be positive, got {r_probe_max}")));
    }
    let probe_max = r_probe_max.min(0.99 * space.r_max_domain());
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    if probe_max < r_probe_max {
        warnings.push(format!("probe radius clipped to {probe_max} inside the ambient domain"));
    }

    let p = 1e-6 * probe_max;
    let (w1, w2) = (space.warp(p), space.warp(0.5 * p));
    let extrap = |a: f64, b: f64| 2.0 * b - a;
    let axis = [extrap(w1.f, w2.f), extrap(w1.df, w2.df), extrap(w1.h, w2.h), extrap(w1.dh, w2.dh)];
    let expected = [1.0, 0.0, 0.0, 1.0];
    let names = ["f(0)=1", "f'(0)=0", "h(0)=0", "h'(0)=1"];
    for ((value, want), name) in axis.iter().zip(expected).zip(names) {
        if !((value - want).abs() <= AXIS_TOL) {
            violations.push(format!("axis condition {name} fails: extrapolated value {value:.6e}"));
        }
    }

    let mut negative_branch = true;
    for k in 1..=samples {
        let r = probe_max * k as f64 / samples as f64;
        let w = space.warp(r);
        if !(w.f > 0.0) {
            violations.push(format!("f > 0 fails at r = {r}: f = {}", w.f));
        }
        if !(w.h > 0.0) {
            violations.push(format!("h > 0 fails at r = {r}: h = {}", w.h));
        }
        if w.f > 0.0 && w.h > 0.0 {
            let s = space.sectional_curvatures(r)?;
            if !(s.s_zi < 0.0 && s.s_ri <= SIGN_TOL) {
                negative_branch = false;
            }
        } else {
            negative_branch = false;
        }
    }
    let rss_ok = violations.is_empty();
    let rss2_branch = if space.tag() == Preset::Euclidean {
        Some(Rss2Branch::Euclidean)
    } else if rss_ok && negative_branch {
        Some(Rss2Branch::NegativeCurvature)
    } else {
        None
    };
    if rss_ok && rss2_branch.is_none() {
        warnings.push("curvature sign conditions S_zi < 0, S_ri <= 0 do not hold on the probed range".into());
    }
    Ok(ValidationReport { rss_ok, rss2_branch, violations, warnings, probe_max, samples, axis_values: axis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let e = AmbientSpace::euclidean(2).unwrap();
        let w = e.warp(1.7);
        assert_eq!((w.f, w.h), (1.0, 1.7));

        let hy = AmbientSpace::hyperbolic(-1.0, 2).unwrap();
        let w = hy.warp(1.0);
        assert!((w.f - 1.5430806348152437).abs() < 1e-7);
        assert!((w.h - 1.1752011936438014).abs() < 1e-7);

        let sp = AmbientSpace::spherical(1.0, 2).unwrap();
        assert!((sp.r_max_domain() - PI / 2.0).abs() < 1e-15);
        assert!(e.r_max_domain().is_infinite());
    }

    #[test]
    fn preset_sign_mismatch() {
        assert!(matches!(AmbientSpace::hyperbolic(1.0, 2), Err(Error::PresetSign { .. })));
        assert!(matches!(AmbientSpace::spherical(-1.0, 2), Err(Error::PresetSign { .. })));
        assert!(matches!(AmbientSpace::preset(Preset::Euclidean, 0.5, 2), Err(Error::PresetSign { .. })));
        assert!(matches!(AmbientSpace::euclidean(1), Err(Error::Dimension(1))));
    }

    #[test]
    fn curvature_examples() {
        let s = AmbientSpace::euclidean(2).unwrap().sectional_curvatures(1.7).unwrap();
        assert_eq!((s.s_rz, s.s_ri, s.s_zi, s.s_ij), (0.0, 0.0, 0.0, 0.0));
        let s = AmbientSpace::hyperbolic(-1.0, 2).unwrap().sectional_curvatures(1.0).unwrap();
        for v in [s.s_rz, s.s_ri, s.s_zi, s.s_ij] {
            assert!((v + 1.0).abs() < 1e-12);
        }
        let s = AmbientSpace::spherical(1.0, 2).unwrap().sectional_curvatures(0.5).unwrap();
        for v in [s.s_rz, s.s_ri, s.s_zi, s.s_ij] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let sp = AmbientSpace::spherical(1.0, 2).unwrap();
        assert!(sp.sectional_curvatures(2.0).is_err());
        assert!(sp.sectional_curvatures(0.0).is_err());
    }

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn validation_presets() {
        let rep = validate_space(&AmbientSpace::euclidean(2).unwrap(), 5.0, 50).unwrap();
        assert!(rep.rss_ok);
        assert_eq!(rep.rss2_branch, Some(Rss2Branch::Euclidean));

        let rep = validate_space(&AmbientSpace::hyperbolic(-1.0, 3).unwrap(), 5.0, 50).unwrap();
        assert!(rep.rss_ok, "{:?}", rep.violations);
        assert_eq!(rep.rss2_branch, Some(Rss2Branch::NegativeCurvature));

        let rep = validate_space(&AmbientSpace::spherical(1.0, 2).unwrap(), 1.5, 50).unwrap();
        assert!(rep.rss_ok, "{:?}", rep.violations);
        assert_eq!(rep.rss2_branch, None);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn validation_custom_matches_hyperbolic() {
        let warp = CustomWarp::parse(["cosh(r)", "sinh(r)", "cosh(r)", "sinh(r)", "cosh(r)", "sinh(r)"]).unwrap();
        let custom = AmbientSpace::custom(warp, 2, f64::INFINITY).unwrap();
        let hyper = AmbientSpace::hyperbolic(-1.0, 2).unwrap();
        let a = validate_space(&custom, 4.0, 40).unwrap();
        let b = validate_space(&hyper, 4.0, 40).unwrap();
        assert!(a.rss_ok && b.rss_ok);
        assert_eq!(a.rss2_branch, b.rss2_branch);
        assert_eq!(a.rss2_branch, Some(Rss2Branch::NegativeCurvature));
        for k in 1..=40 {
            let r = 0.1 * k as f64;
            assert_eq!(custom.warp(r), hyper.warp(r));
        }
    }

    #[test]
    fn validation_flags_bad_axis() {
        let warp = CustomWarp::parse(["1", "0", "0", "r^2", "2*r", "2"]).unwrap();
        let space = AmbientSpace::custom(warp, 2, f64::INFINITY).unwrap();
        let rep = validate_space(&space, 1.0, 10).unwrap();
        assert!(!rep.rss_ok);
        assert!(rep.violations.iter().any(|v| v.contains("h'(0)=1")));
    }

    #[test]
    fn validation_needs_two_samples() {
        assert!(validate_space(&AmbientSpace::euclidean(2).unwrap(), 1.0, 1).is_err());
    }
}
