//! Explicit time stepping of the graph form of volume-preserving mean
//! curvature flow,
//!
//! ```text
//! ∂r/∂t = r̈/(ṙ²+f²) − (f'/f)(1 + ṙ²/(ṙ²+f²)) − (n−1) h'/h + H̄ √(1 + ṙ²/f²),
//! ```
//!
//! with `ṙ = 0` at both walls. `H̄` is lagged to the start of each step and
//! the enclosed volume is restored after every step by a uniform radial
//! shift.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientSpace, WarpValues};
use crate::bounds::RADIAL_TOL;
use crate::hypersurface::{self, fill_derivatives, node_curvatures, ProfileGrid};
use crate::quadrature::{adaptive_simpson, trapezoid_weight};
use crate::{Error, Result};

/// Fraction of `r_max_domain` at which a run is abandoned.
pub const DOMAIN_GUARD: f64 = 0.99;

const PROJECTION_MAX_ITERS: usize = 5;
const PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Fraction of the explicit stability limit used as time step.
    pub dt_safety: f64,
    pub max_t: f64,
    /// Singularity threshold on `min r`; defaults to `1e-3 · min r₀`.
    pub r_min_stop: Option<f64>,
    /// Graph-failure threshold on `max v`.
    pub v_max_stop: f64,
    /// Convergence threshold on `max |H − H̄|`; defaults to `1e-6 · |H̄₀|`.
    pub conv_tol: Option<f64>,
    pub record_every: usize,
    pub volume_projection: bool,
    /// Slopes below `slope_tol_rel · max|ṙ|` count as zero in `N(t)`.
    pub slope_tol_rel: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt_safety: 0.4,
            max_t: 10.0,
            r_min_stop: None,
            v_max_stop: 1e6,
            conv_tol: None,
            record_every: 100,
            volume_projection: true,
            slope_tol_rel: 1e-9,
        }
    }
}

/// Stop thresholds after defaults were filled in from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub r_min_stop: f64,
    pub v_max_stop: f64,
    pub conv_tol: f64,
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("flow config: {what}")));
        if !(self.dt_safety > 0.0 && self.dt_safety < 1.0) {
            return bad("dt_safety must lie in (0, 1)");
        }
        if !(self.max_t > 0.0) {
            return bad("max_t must be positive");
        }
        if !(self.v_max_stop > 0.0) {
            return bad("v_max_stop must be positive");
        }
        if self.record_every == 0 {
            return bad("record_every must be positive");
        }
        if matches!(self.r_min_stop, Some(v) if !(v > 0.0)) {
            return bad("r_min_stop must be positive");
        }
        if matches!(self.conv_tol, Some(v) if !(v > 0.0)) {
            return bad("conv_tol must be positive");
        }
        if !(self.slope_tol_rel >= 0.0) {
            return bad("slope_tol_rel must be non-negative");
        }
        Ok(())
    }

    pub fn thresholds(&self, initial: &ProfileGrid, initial_hbar: f64) -> Thresholds {
        Thresholds {
            r_min_stop: self.r_min_stop.unwrap_or(1e-3 * initial.min_r()),
            v_max_stop: self.v_max_stop,
            conv_tol: self.conv_tol.unwrap_or(1e-6 * initial_hbar.abs()),
        }
    }
}

/// Scalar diagnostics of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "V")]
    pub volume: f64,
    pub area: f64,
    #[serde(rename = "Hbar")]
    pub hbar: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub min_r: f64,
    pub max_r: f64,
    pub max_v: f64,
    #[serde(rename = "N")]
    pub n_critical: usize,
    pub curve_len: f64,
    #[serde(rename = "max_L2")]
    pub max_l2: f64,
}

/// Column order of `history.csv`.
pub const HISTORY_COLUMNS: [&str; 12] =
    ["t", "V", "area", "Hbar", "I1", "I2", "min_r", "max_r", "max_v", "N", "curve_len", "max_L2"];

impl DiagnosticsRecord {
    pub fn compute(p: &ProfileGrid, space: &AmbientSpace, t: f64, slope_tol_rel: f64) -> Result<Self> {
        let field = hypersurface::curvature_field(p, space)?;
        let split = hypersurface::averaged_mean_curvature(p, space)?;
        let slope_tol = slope_tol_rel * hypersurface::max_abs_slope(p);
        let fold_max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(DiagnosticsRecord {
            t,
            volume: hypersurface::enclosed_volume(p, space)?,
            area: hypersurface::lateral_area(p, space)?,
            hbar: split.hbar,
            i1: split.i1,
            i2: split.i2,
            min_r: p.min_r(),
            max_r: p.max_r(),
            max_v: fold_max(&field.v),
            n_critical: hypersurface::critical_point_count(p, slope_tol),
            curve_len: hypersurface::curve_length(p, space)?,
            max_l2: fold_max(&field.l2),
        })
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.volume,
            self.area,
            self.hbar,
            self.i1,
            self.i2,
            self.min_r,
            self.max_r,
            self.max_v,
            self.n_critical,
            self.curve_len,
            self.max_l2
        )
    }
}

/// Write records as `history.csv`. Floats use the shortest representation
/// that parses back to the same bits.
pub fn write_history_csv<W: Write>(records: &[DiagnosticsRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", HISTORY_COLUMNS.join(","))?;
    for rec in records {
        writeln!(out, "{}", rec.csv_row())?;
    }
    Ok(())
}

/// A profile at flow time `t` with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub profile: ProfileGrid,
    pub t: f64,
    pub cached: DiagnosticsRecord,
}

impl FlowState {
    pub fn new(profile: ProfileGrid, space: &AmbientSpace, t: f64) -> Result<Self> {
        let cached = DiagnosticsRecord::compute(&profile, space, t, FlowConfig::default().slope_tol_rel)?;
        Ok(FlowState { profile, t, cached })
    }

    fn with_tol(profile: ProfileGrid, space: &AmbientSpace, t: f64, slope_tol_rel: f64) -> Result<Self> {
        let cached = DiagnosticsRecord::compute(&profile, space, t, slope_tol_rel)?;
        Ok(FlowState { profile, t, cached })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Converged,
    Singularity,
    GraphFailure,
    MaxTime,
    Instability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopReason {
    pub kind: StopKind,
    /// Axial position of the smallest radius, for singularities.
    pub location: Option<f64>,
    pub detail: String,
}

impl StopReason {
    fn new(kind: StopKind, detail: impl Into<String>) -> Self {
        StopReason { kind, location: None, detail: detail.into() }
    }
}

/// `∂r/∂t` of the graph flow at every node, for a given `H̄`.
pub fn rhs(p: &ProfileGrid, space: &AmbientSpace, hbar: f64) -> Result<Vec<f64>> {
    p.check_domain(space)?;
    if !hbar.is_finite() {
        return Err(Error::InvalidArgument(format!("Hbar must be finite, got {hbar}")));
    }
    let d = hypersurface::spatial_derivatives(p);
    let nm1 = (space.n() - 1) as f64;
    Ok(p.radii()
        .iter()
        .enumerate()
        .map(|(i, &r)| node_rate(d.slope[i], d.curv[i], &space.warp(r), nm1, hbar))
        .collect())
}

#[inline]
fn node_rate(slope: f64, curv: f64, w: &WarpValues, nm1: f64, hbar: f64) -> f64 {
    let sl2 = slope * slope;
    let s2 = sl2 + w.f * w.f;
    curv / s2 - w.df / w.f * (1.0 + sl2 / s2) - nm1 * w.dh / w.h + hbar * (1.0 + sl2 / (w.f * w.f)).sqrt()
}

/// Quantities of one evaluation of the semi-discrete right-hand side.
#[derive(Debug, Clone, Copy)]
struct Evaluation {
    max_dev: f64,
    max_v: f64,
    min_s2: f64,
    finite: bool,
}

/// Working state of a run; owns scratch buffers reused across steps.
struct Integrator<'a> {
    space: &'a AmbientSpace,
    a: f64,
    b: f64,
    dz: f64,
    nm1: f64,
    r: Vec<f64>,
    slope: Vec<f64>,
    curv: Vec<f64>,
    rate: Vec<f64>,
    /// `β(r_i)`, kept current when projecting.
    betas: Vec<f64>,
    target_volume: f64,
    projection: bool,
    dt_safety: f64,
    t: f64,
}

impl<'a> Integrator<'a> {
    fn new(p: &ProfileGrid, space: &'a AmbientSpace, t: f64, target_volume: f64, cfg: &FlowConfig) -> Result<Self> {
        let m = p.m();
        let betas = if cfg.volume_projection { hypersurface::node_betas(p, space)? } else { Vec::new() };
        Ok(Integrator {
            space,
            a: p.a(),
            b: p.b(),
            dz: p.dz(),
            nm1: (space.n() - 1) as f64,
            r: p.radii().to_vec(),
            slope: vec![0.0; m],
            curv: vec![0.0; m],
            rate: vec![0.0; m],
            betas,
            target_volume,
            projection: cfg.volume_projection,
            dt_safety: cfg.dt_safety,
            t,
        })
    }

    fn profile(&self) -> Result<ProfileGrid> {
        ProfileGrid::new(self.a, self.b, self.r.clone())
    }

    fn z(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dz
    }

    /// Fill `rate` and return `H̄`, `max |H − H̄|` and friends.
    fn evaluate(&mut self) -> Evaluation {
        let m = self.r.len();
        fill_derivatives(&self.r, self.dz, &mut self.slope, &mut self.curv);
        let n = self.space.n() as i32;
        let (mut h_mu, mut mu) = (0.0, 0.0);
        let mut min_s2 = f64::INFINITY;
        let mut max_v: f64 = 0.0;
        // first pass: H into `rate`, accumulate the averages
        for i in 0..m {
            let w = self.space.warp(self.r[i]);
            let (k1, k2) = node_curvatures(self.slope[i], self.curv[i], &w);
            let s2 = self.slope[i] * self.slope[i] + w.f * w.f;
            let dmu = s2.sqrt() * w.h.powi(n - 1);
            let wt = trapezoid_weight(i, m, self.dz);
            let h = k1 + self.nm1 * k2;
            h_mu += wt * h * dmu;
            mu += wt * dmu;
            min_s2 = min_s2.min(s2);
            max_v = max_v.max(s2.sqrt() / w.f);
            self.rate[i] = h;
        }
        let hbar = h_mu / mu;
        let mut max_dev: f64 = 0.0;
        let mut finite = hbar.is_finite();
        for i in 0..m {
            max_dev = max_dev.max((self.rate[i] - hbar).abs());
            let w = self.space.warp(self.r[i]);
            self.rate[i] = node_rate(self.slope[i], self.curv[i], &w, self.nm1, hbar);
            finite &= self.rate[i].is_finite();
        }
        Evaluation { max_dev, max_v, min_s2, finite: finite && max_dev.is_finite() }
    }

    /// Time step: the diffusive limit `Δz² min(ṙ²+f²)/2`, further capped so
    /// that no node loses more than `dt_safety` of its radius in one step.
    fn time_step(&self, ev: &Evaluation) -> f64 {
        let mut dt = self.dt_safety * self.dz * self.dz * ev.min_s2 / 2.0;
        for (r, rate) in self.r.iter().zip(&self.rate) {
            if *rate < 0.0 {
                dt = dt.min(self.dt_safety * r / -rate);
            }
        }
        dt
    }

    fn advance(&mut self, ev: &Evaluation) -> std::result::Result<f64, StopReason> {
        let dt = self.time_step(ev);
        let density = |s: f64| self.space.volume_density(s);
        for i in 0..self.r.len() {
            let old = self.r[i];
            let new = old + dt * self.rate[i];
            if self.projection {
                self.betas[i] += adaptive_simpson(&density, old, new, RADIAL_TOL);
            }
            self.r[i] = new;
        }
        if self.projection {
            self.project()?;
        }
        self.t += dt;
        if self.r.iter().any(|v| !v.is_finite()) {
            return Err(StopReason::new(StopKind::Instability, "non-finite radius after step"));
        }
        Ok(dt)
    }

    /// Shift all radii by one constant so that the enclosed volume equals
    /// the target, by safeguarded Newton iteration.
    fn project(&mut self) -> std::result::Result<(), StopReason> {
        let m = self.r.len();
        let sigma = self.space.sigma();
        let density = |s: f64| self.space.volume_density(s);
        let volume_at = |c: f64, betas: &[f64], r: &[f64]| -> (f64, f64) {
            let (mut v, mut dv) = (0.0, 0.0);
            for i in 0..m {
                let wt = trapezoid_weight(i, m, self.dz);
                let shifted = if c == 0.0 { 0.0 } else { adaptive_simpson(&density, r[i], r[i] + c, RADIAL_TOL) };
                v += wt * (betas[i] + shifted);
                dv += wt * density(r[i] + c);
            }
            (sigma * v, sigma * dv)
        };
        let min_r = self.r.iter().copied().fold(f64::INFINITY, f64::min);
        let mut c = 0.0;
        let (mut vol, mut dvol) = volume_at(c, &self.betas, &self.r);
        for _ in 0..PROJECTION_MAX_ITERS {
            let resid = vol - self.target_volume;
            if resid.abs() <= PROJECTION_TOL * self.target_volume {
                break;
            }
            if !(dvol > 0.0) {
                return Err(StopReason::new(StopKind::Instability, "degenerate volume derivative in projection"));
            }
            let mut step = -resid / dvol;
            while min_r + c + step <= 0.5 * min_r {
                step *= 0.5;
            }
            c += step;
            (vol, dvol) = volume_at(c, &self.betas, &self.r);
        }
        if c != 0.0 {
            for i in 0..m {
                self.betas[i] += adaptive_simpson(&density, self.r[i], self.r[i] + c, RADIAL_TOL);
                self.r[i] += c;
            }
        }
        Ok(())
    }
}

/// One explicit step from `s`. With projection on, the volume is restored to
/// `s.cached.volume`.
pub fn step(s: &FlowState, space: &AmbientSpace, cfg: &FlowConfig) -> std::result::Result<FlowState, StopReason> {
    cfg.validate().map_err(|e| StopReason::new(StopKind::Instability, e.to_string()))?;
    let mut integ = Integrator::new(&s.profile, space, s.t, s.cached.volume, cfg)
        .map_err(|e| StopReason::new(StopKind::Instability, e.to_string()))?;
    let ev = integ.evaluate();
    if !ev.finite {
        return Err(StopReason::new(StopKind::Instability, "non-finite right-hand side"));
    }
    integ.advance(&ev)?;
    let profile = integ.profile().map_err(|e| StopReason::new(StopKind::Instability, e.to_string()))?;
    FlowState::with_tol(profile, space, integ.t, cfg.slope_tol_rel)
        .map_err(|e| StopReason::new(StopKind::Instability, e.to_string()))
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: FlowState,
    pub reason: StopReason,
    pub history: Vec<DiagnosticsRecord>,
    pub steps: u64,
    pub thresholds: Thresholds,
    /// Diagnostics of the initial profile (also the first history row).
    pub initial: DiagnosticsRecord,
}

pub fn run(initial: &ProfileGrid, space: &AmbientSpace, cfg: &FlowConfig) -> Result<RunOutput> {
    run_with_observer(initial, space, cfg, |_, _| {})
}

/// Like [`run`], calling `observer(state, record_index)` at every recorded
/// step, including the final one.
pub fn run_with_observer<F>(initial: &ProfileGrid, space: &AmbientSpace, cfg: &FlowConfig, mut observer: F) -> Result<RunOutput>
where
    F: FnMut(&FlowState, usize),
{
    cfg.validate()?;
    initial.check_domain(space)?;
    let first = FlowState::with_tol(initial.clone(), space, 0.0, cfg.slope_tol_rel)?;
    let thresholds = cfg.thresholds(initial, first.cached.hbar);
    let mut integ = Integrator::new(initial, space, 0.0, first.cached.volume, cfg)?;
    let r_guard = DOMAIN_GUARD * space.r_max_domain();

    let mut history = Vec::new();
    let mut last_state = first.clone();
    let mut last_recorded_step: Option<u64> = None;
    let mut steps: u64 = 0;

    let mut record = |integ: &Integrator, steps: u64, history: &mut Vec<DiagnosticsRecord>| -> Option<FlowState> {
        let state = if steps == 0 {
            first.clone()
        } else {
            let profile = integ.profile().ok()?;
            FlowState::with_tol(profile, space, integ.t, cfg.slope_tol_rel).ok()?
        };
        observer(&state, history.len());
        history.push(state.cached);
        Some(state)
    };

    let reason = loop {
        if integ.r.iter().any(|v| !v.is_finite()) {
            break StopReason::new(StopKind::Instability, "non-finite radius");
        }
        let min_r = integ.r.iter().copied().fold(f64::INFINITY, f64::min);
        if min_r < thresholds.r_min_stop {
            let i = integ.r.iter().position(|&v| v == min_r).unwrap_or(0);
            break StopReason {
                kind: StopKind::Singularity,
                location: Some(integ.z(i)),
                detail: format!("min r = {min_r:e} below {:e}", thresholds.r_min_stop),
            };
        }
        if integ.r.iter().any(|&v| v >= r_guard) {
            break StopReason::new(StopKind::Instability, "profile reached the edge of the ambient domain");
        }
        let ev = integ.evaluate();
        if !ev.finite {
            break StopReason::new(StopKind::Instability, "non-finite right-hand side");
        }
        if steps.is_multiple_of(cfg.record_every as u64) {
            if let Some(state) = record(&integ, steps, &mut history) {
                last_state = state;
                last_recorded_step = Some(steps);
            }
        }
        if ev.max_v > thresholds.v_max_stop {
            break StopReason::new(StopKind::GraphFailure, format!("max v = {:e}", ev.max_v));
        }
        if ev.max_dev < thresholds.conv_tol {
            break StopReason::new(StopKind::Converged, format!("max |H - Hbar| = {:e}", ev.max_dev));
        }
        if integ.t >= cfg.max_t {
            break StopReason::new(StopKind::MaxTime, format!("t = {}", integ.t));
        }
        if let Err(reason) = integ.advance(&ev) {
            break reason;
        }
        steps += 1;
    };

    if last_recorded_step != Some(steps) {
        if let Some(state) = record(&integ, steps, &mut history) {
            last_state = state;
        }
    }
    Ok(RunOutput { final_state: last_state, reason, history, steps, thresholds, initial: first.cached })
}
