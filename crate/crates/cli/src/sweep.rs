//! Cartesian parameter sweeps over a base config, run in parallel.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde_json::Value;

use crate::commands::{self, Classify, CmdResult, Failure, Summary};
use crate::config::{set_path, Loaded, RunConfig, SweepParam};

pub const FIXED_COLUMNS: [&str; 13] =
    ["reason", "location", "steps", "t", "V", "area", "Hbar", "min_r", "max_r", "max_v", "N", "curve_len", "error"];

/// All value combinations, the last parameter varying fastest.
pub fn cartesian(params: &[SweepParam]) -> Vec<Vec<Value>> {
    let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
    for p in params {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                p.values.iter().map(move |v| {
                    let mut next = c.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    if params.is_empty() {
        combos.clear();
    }
    combos
}

fn run_one(raw: &Value, params: &[SweepParam], values: &[Value], out: &Path) -> CmdResult<Summary> {
    let mut tree = raw.clone();
    for (p, v) in params.iter().zip(values) {
        set_path(&mut tree, &p.path, v.clone()).config()?;
    }
    let cfg: RunConfig = serde_json::from_value(tree).map_err(|e| anyhow!("sweep row: {e}")).config()?;
    cfg.check().config()?;
    commands::run(&cfg, out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn param_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Run every combination and write `sweep.csv` into `out`. Failed rows are
/// reported in the `error` column; the sweep itself only fails on setup errors.
pub fn sweep(loaded: &Loaded, out: &Path, jobs: usize) -> CmdResult<usize> {
    let params = loaded.config.sweep.as_ref().map(|s| s.params.clone()).unwrap_or_default();
    let mut base = loaded.raw.clone();
    if let Some(obj) = base.as_object_mut() {
        obj.remove("sweep");
    }
    let combos = cartesian(&params);
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display())).config()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().config()?;
    let rows: Vec<String> = pool.install(|| {
        combos
            .par_iter()
            .enumerate()
            .map(|(k, values)| {
                let dir = out.join(format!("run_{k}"));
                let mut cells = vec![k.to_string()];
                cells.extend(values.iter().map(|v| csv_field(&param_text(v))));
                match run_one(&base, &params, values, &dir) {
                    Ok(s) => {
                        let f = &s.final_record;
                        let reason = serde_json::to_value(s.reason.kind).expect("kind serializes");
                        cells.push(param_text(&reason));
                        cells.push(s.reason.location.map(|z| z.to_string()).unwrap_or_default());
                        cells.push(s.steps.to_string());
                        for x in [f.t, f.volume, f.area, f.hbar, f.min_r, f.max_r, f.max_v] {
                            cells.push(x.to_string());
                        }
                        cells.push(f.n_critical.to_string());
                        cells.push(f.curve_len.to_string());
                        cells.push(String::new());
                    }
                    Err(e) => {
                        cells.push("error".into());
                        cells.extend(std::iter::repeat_n(String::new(), FIXED_COLUMNS.len() - 2));
                        cells.push(csv_field(&format!("{:#}", e.error())));
                    }
                }
                cells.join(",")
            })
            .collect()
    });

    let mut header = vec!["run".to_string()];
    header.extend(params.iter().map(|p| csv_field(&p.path)));
    header.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
    let mut text = header.join(",") + "\n";
    for r in &rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(out.join("sweep.csv"), text).map_err(|e| Failure::Numerical(e.into()))?;
    Ok(rows.len())
}
