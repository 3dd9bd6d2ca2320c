//! The `validate`, `bounds`, `run` and `cmc` subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use revflow::ambient::validate_space;
use revflow::bounds::compute_bounds;
use revflow::flow::{self, Thresholds};
use revflow::{cmc, hypersurface, BoundsReport, DiagnosticsRecord, ProfileGrid, StopKind, StopReason};
use serde::Serialize;

use crate::config::{CmcConfig, RunConfig, ValidateConfig};
use crate::plot;

/// A command failure together with its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Numerical(e) => e,
        }
    }
}

pub type CmdResult<T> = Result<T, Failure>;

pub trait Classify<T> {
    fn config(self) -> CmdResult<T>;
    fn numerical(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn numerical(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Numerical(e.into()))
    }
}

// argument errors from the core library are configuration mistakes
fn classify_core(e: revflow::Error) -> Failure {
    match e {
        revflow::Error::InvalidArgument(_)
        | revflow::Error::OutOfDomain { .. }
        | revflow::Error::InvalidProfile(_)
        | revflow::Error::PresetSign { .. }
        | revflow::Error::Dimension(_)
        | revflow::Error::Expr(_) => Failure::Config(e.into()),
        _ => Failure::Numerical(e.into()),
    }
}

/// Print the hypothesis report; succeeds only when the space is admissible.
pub fn validate(cfg: &RunConfig) -> CmdResult<()> {
    let space = cfg.build_space().config()?;
    let v = cfg.validate.unwrap_or_default();
    let ValidateConfig { probe_max, samples } = v;
    let report = validate_space(&space, probe_max, samples).map_err(classify_core)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if !report.rss_ok {
        return Err(Failure::Config(anyhow!("ambient space fails validation: {}", report.violations.join("; "))));
    }
    Ok(())
}

fn initial_bounds(cfg: &RunConfig) -> CmdResult<(ProfileGrid, BoundsReport)> {
    let space = cfg.build_space().config()?;
    let p = cfg.initial_profile().config()?;
    p.check_domain(&space).map_err(classify_core)?;
    let volume = hypersurface::enclosed_volume(&p, &space).map_err(classify_core)?;
    let area = hypersurface::lateral_area(&p, &space).map_err(classify_core)?;
    let rep = compute_bounds(&space, p.a(), p.b(), volume, area).map_err(classify_core)?;
    Ok((p, rep))
}

pub fn bounds(cfg: &RunConfig) -> CmdResult<()> {
    let (_, rep) = initial_bounds(cfg)?;
    println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub reason: StopReason,
    pub steps: u64,
    #[serde(rename = "final")]
    pub final_record: DiagnosticsRecord,
    pub initial: DiagnosticsRecord,
    pub thresholds: Thresholds,
    /// Absent when the a-priori radii cannot be computed (spherical caps).
    pub bounds: Option<BoundsReport>,
    pub bounds_error: Option<String>,
    pub snapshots: Vec<String>,
    pub config: RunConfig,
}

/// Run the flow and write history, snapshots, plot and summary into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> CmdResult<Summary> {
    let space = cfg.build_space().config()?;
    let initial = cfg.initial_profile().config()?;
    initial.check_domain(&space).map_err(classify_core)?;
    let (bounds, bounds_error) = {
        let v = hypersurface::enclosed_volume(&initial, &space).map_err(classify_core)?;
        let area = hypersurface::lateral_area(&initial, &space).map_err(classify_core)?;
        match compute_bounds(&space, initial.a(), initial.b(), v, area) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display())).config()?;

    let every = cfg.output.snapshot_every;
    let mut snapshots = Vec::new();
    let mut io_error = None;
    let output = flow::run_with_observer(&initial, &space, &cfg.flow, |state, k| {
        if k % every == 0 && io_error.is_none() {
            match write_snapshot(out, k, &state.profile) {
                Ok(name) => snapshots.push((k, name)),
                Err(e) => io_error = Some(e),
            }
        }
    })
    .map_err(classify_core)?;
    if let Some(e) = io_error {
        return Err(Failure::Numerical(e));
    }
    let last = output.history.len() - 1;
    if snapshots.last().map(|(k, _)| *k) != Some(last) {
        let name = write_snapshot(out, last, &output.final_state.profile).numerical()?;
        snapshots.push((last, name));
    }

    let history = out.join("history.csv");
    let mut w = BufWriter::new(File::create(&history).with_context(|| history.display().to_string()).numerical()?);
    flow::write_history_csv(&output.history, &mut w).and_then(|_| w.flush()).numerical()?;

    let t: Vec<f64> = output.history.iter().map(|r| r.t).collect();
    let col = |f: fn(&DiagnosticsRecord) -> f64| output.history.iter().map(f).collect::<Vec<_>>();
    let svg = plot::line_panels(
        &t,
        &[("V", col(|r| r.volume)), ("area", col(|r| r.area)), ("Hbar", col(|r| r.hbar)), ("min_r", col(|r| r.min_r))],
    );
    fs::write(out.join("diagnostics.svg"), svg).numerical()?;

    let summary = Summary {
        reason: output.reason,
        steps: output.steps,
        final_record: *output.history.last().expect("history has the initial row"),
        initial: output.initial,
        thresholds: output.thresholds,
        bounds,
        bounds_error,
        snapshots: snapshots.into_iter().map(|(_, n)| n).collect(),
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out.join("summary.json"), json + "\n").numerical()?;
    Ok(summary)
}

fn write_snapshot(out: &Path, k: usize, p: &ProfileGrid) -> anyhow::Result<String> {
    let name = format!("profile_{k}.csv");
    let path = out.join(&name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    p.write_csv(&mut w)?;
    w.flush()?;
    Ok(name)
}

/// Exit status of a finished run: instabilities and graph failures are
/// numerical failures, the other stop reasons are results.
pub fn run_status(reason: &StopReason) -> CmdResult<()> {
    match reason.kind {
        StopKind::Instability | StopKind::GraphFailure => {
            Err(Failure::Numerical(anyhow!("run stopped with {:?}: {}", reason.kind, reason.detail)))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct CmcSummary {
    h_const: f64,
    residual: f64,
    volume: f64,
    is_cylinder: bool,
    profile: PathBuf,
}

pub fn cmc(cfg: &RunConfig, out: &Path) -> CmdResult<()> {
    let space = cfg.build_space().config()?;
    let d = cfg.domain().config()?;
    let c = cfg.cmc.unwrap_or(CmcConfig { h_target: None, guess: None, volume: None, substeps: cmc::DEFAULT_SUBSTEPS });
    let initial_volume = || -> CmdResult<f64> {
        let p = cfg.initial_profile().config()?;
        hypersurface::enclosed_volume(&p, &space).map_err(classify_core)
    };
    let result = match c.h_target {
        None => {
            let v = match c.volume {
                Some(v) => v,
                None => initial_volume()?,
            };
            cmc::cylinder_for_volume(&space, d.a, d.b, d.m, v).map_err(classify_core)?
        }
        Some(h) => {
            let guess = match c.guess {
                Some(g) => g,
                None => {
                    let v = match c.volume {
                        Some(v) => v,
                        None => initial_volume()?,
                    };
                    revflow::bounds::cylinder_radius(&space, d.a, d.b, v).map_err(classify_core)?
                }
            };
            cmc::shoot_cmc_with_substeps(&space, d.a, d.b, d.m, h, guess, c.substeps).map_err(classify_core)?
        }
    };
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display())).config()?;
    let path = out.join("cmc.csv");
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string()).numerical()?);
    result.profile.write_csv(&mut w).and_then(|_| w.flush()).numerical()?;
    let summary = CmcSummary {
        h_const: result.h_const,
        residual: result.residual,
        volume: result.volume,
        is_cylinder: result.is_cylinder,
        profile: path,
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}
