//! Run configuration: a TOML file with `[space]`, `[domain]`, `[initial]`,
//! `[flow]`, `[output]` and optional per-command sections.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use revflow::ambient::CustomWarp;
use revflow::{AmbientSpace, FlowConfig, Preset, ProfileGrid};
use serde::{Deserialize, Serialize};

pub const MIN_NODES: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmc: Option<CmcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub preset: Preset,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Custom warp expressions in `r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ddf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ddh: Option<String>,
    /// Radius of the ambient ball for custom spaces (unbounded when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

fn default_n() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

/// Exactly one of `expr`, `csv` or `cylinder` selects the initial profile.
/// A cylinder may carry the perturbation `amplitude · cos(mode · π (z−a)/(b−a))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<f64>,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_mode")]
    pub mode: f64,
}

fn default_mode() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write `profile_<k>.csv` for every `snapshot_every`-th recorded step.
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), snapshot_every: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub probe_max: f64,
    pub samples: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig { probe_max: 5.0, samples: 200 }
    }
}

/// Shooting parameters; without `h_target` the cylinder of the initial
/// volume is returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmcConfig {
    #[serde(default)]
    pub h_target: Option<f64>,
    #[serde(default)]
    pub guess: Option<f64>,
    #[serde(default)]
    pub volume: Option<f64>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    revflow::cmc::DEFAULT_SUBSTEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub params: Vec<SweepParam>,
}

/// A dotted config path such as `initial.amplitude` and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    pub path: String,
    pub values: Vec<serde_json::Value>,
}

/// A config file plus the raw tree it was parsed from (needed by sweeps).
pub struct Loaded {
    pub config: RunConfig,
    pub raw: serde_json::Value,
}

/// Read a TOML config, or the `config` echo of a `summary.json`.
pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let raw: serde_json::Value = if is_json {
        let mut v: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
        match v.get_mut("config") {
            Some(inner) => inner.take(),
            None => v,
        }
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
        serde_json::to_value(table)?
    };
    let mut config: RunConfig = if is_json {
        serde_json::from_value(raw.clone()).map_err(|e| anyhow!("{}: {e}", path.display()))?
    } else {
        // parse again from text so that errors carry line and column
        toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?
    };
    let base = path.parent().unwrap_or(Path::new("."));
    config.resolve_paths(base);
    let mut raw = raw;
    if let Some(csv) = config.initial.as_ref().and_then(|i| i.csv.as_ref()) {
        raw["initial"]["csv"] = serde_json::Value::String(csv.display().to_string());
    }
    config.check()?;
    Ok(Loaded { config, raw })
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        if let Some(csv) = self.initial.as_mut().and_then(|i| i.csv.as_mut()) {
            if csv.is_relative() {
                *csv = base.join(&*csv);
            }
        }
    }

    /// Structural checks that do not need any numerics.
    pub fn check(&self) -> Result<()> {
        if let Some(d) = &self.domain {
            if !(d.a.is_finite() && d.b.is_finite() && d.a < d.b) {
                bail!("domain: need finite a < b, got a = {}, b = {}", d.a, d.b);
            }
            if d.m < MIN_NODES {
                bail!("domain.m: need at least {MIN_NODES} nodes, got {}", d.m);
            }
        }
        if let Some(init) = &self.initial {
            let chosen = [init.expr.is_some(), init.csv.is_some(), init.cylinder.is_some()];
            if chosen.iter().filter(|&&c| c).count() != 1 {
                bail!("initial: set exactly one of `expr`, `csv`, `cylinder`");
            }
            if init.cylinder.is_none() && init.amplitude != 0.0 {
                bail!("initial.amplitude: only valid together with `cylinder`");
            }
        }
        if self.output.snapshot_every == 0 {
            bail!("output.snapshot_every: must be positive");
        }
        let custom_fields = [&self.space.f, &self.space.df, &self.space.ddf, &self.space.h, &self.space.dh, &self.space.ddh];
        if self.space.preset != Preset::Custom && (custom_fields.iter().any(|f| f.is_some()) || self.space.r_max.is_some()) {
            bail!("space: warp expressions and r_max are only allowed with preset = \"custom\"");
        }
        Ok(())
    }

    pub fn build_space(&self) -> Result<AmbientSpace> {
        let s = &self.space;
        let space = if s.preset == Preset::Custom {
            let get = |name: &str, v: &Option<String>| {
                v.clone().ok_or_else(|| anyhow!("space.{name}: required for preset = \"custom\""))
            };
            let sources = [
                get("f", &s.f)?,
                get("df", &s.df)?,
                get("ddf", &s.ddf)?,
                get("h", &s.h)?,
                get("dh", &s.dh)?,
                get("ddh", &s.ddh)?,
            ];
            let warp = CustomWarp::parse(sources.each_ref().map(|x| x.as_str())).context("space")?;
            AmbientSpace::custom(warp, s.n, s.r_max.unwrap_or(f64::INFINITY)).context("space")?
        } else {
            AmbientSpace::preset(s.preset, s.lambda, s.n).context("space")?
        };
        Ok(space)
    }

    pub fn domain(&self) -> Result<DomainConfig> {
        if let Some(d) = self.domain {
            return Ok(d);
        }
        // a CSV profile carries its own grid
        if let Some(path) = self.initial.as_ref().and_then(|i| i.csv.as_ref()) {
            let p = read_profile(path)?;
            return Ok(DomainConfig { a: p.a(), b: p.b(), m: p.m() });
        }
        bail!("missing [domain] section (a, b, m)")
    }

    /// The initial profile on the configured grid, checked for positivity.
    pub fn initial_profile(&self) -> Result<ProfileGrid> {
        let init = self.initial.as_ref().ok_or_else(|| anyhow!("missing [initial] section"))?;
        let profile = if let Some(path) = &init.csv {
            let p = read_profile(path)?;
            if let Some(d) = self.domain {
                let same = p.m() == d.m && (p.a() - d.a).abs() <= 1e-12 && (p.b() - d.b).abs() <= 1e-12;
                if !same {
                    bail!("initial.csv: grid [{}, {}] x {} does not match [domain]", p.a(), p.b(), p.m());
                }
            }
            p
        } else {
            let d = self.domain()?;
            if let Some(src) = &init.expr {
                ProfileGrid::from_expr(d.a, d.b, d.m, src).context("initial.expr")?
            } else {
                let r0 = init.cylinder.expect("checked in RunConfig::check");
                let (amp, mode) = (init.amplitude, init.mode);
                ProfileGrid::from_fn(d.a, d.b, d.m, |z| {
                    r0 + amp * (mode * std::f64::consts::PI * (z - d.a) / (d.b - d.a)).cos()
                })
                .context("initial")?
            }
        };
        if profile.m() < MIN_NODES {
            bail!("initial: need at least {MIN_NODES} nodes, got {}", profile.m());
        }
        Ok(profile)
    }
}

fn read_profile(path: &Path) -> Result<ProfileGrid> {
    let file = fs::File::open(path).with_context(|| format!("initial.csv: cannot open {}", path.display()))?;
    ProfileGrid::read_csv(std::io::BufReader::new(file)).with_context(|| format!("initial.csv: {}", path.display()))
}

/// Set a dotted path in a JSON tree, creating tables on the way.
pub fn set_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("sweep: malformed parameter path `{path}`");
    }
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| anyhow!("sweep: `{path}` does not name a table"))?;
        node = obj.entry(part.to_string()).or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| anyhow!("sweep: `{path}` does not name a table"))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
