//! Acceptance suite. Runs as a plain binary so that the one-line verdict per
//! criterion is always printed, and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use revflow::ambient::CustomWarp;
use revflow::bounds::{compute_bounds, threshold_closed_form_n2};
use revflow::cmc::distance_to_cmc;
use revflow::flow::{self, rhs};
use revflow::hypersurface::{averaged_mean_curvature, enclosed_volume, lateral_area, spatial_derivatives};
use revflow::quadrature::adaptive_simpson;
use revflow::{AmbientSpace, BoundsReport, DiagnosticsRecord, FlowConfig, FlowState, ProfileGrid, StopKind, StopReason};

#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn custom_space() -> AmbientSpace {
    // f = 1 + r², h = r: S_zi = -2/(1+r²) < 0 and S_ri = 0
    let warp = CustomWarp::parse(["1 + r^2", "2*r", "2", "r", "1", "0"]).unwrap();
    AmbientSpace::custom(warp, 2, f64::INFINITY).unwrap()
}

/// A finished flow run with every recorded profile.
struct Trial {
    label: &'static str,
    space: AmbientSpace,
    reason: StopReason,
    history: Vec<DiagnosticsRecord>,
    profiles: Vec<ProfileGrid>,
    bounds: BoundsReport,
    r_min_stop: f64,
    elapsed: Duration,
    final_profile: ProfileGrid,
}

fn trial(label: &'static str, space: AmbientSpace, initial: ProfileGrid, cfg: FlowConfig) -> Trial {
    let v = enclosed_volume(&initial, &space).unwrap();
    let area = lateral_area(&initial, &space).unwrap();
    let bounds = compute_bounds(&space, initial.a(), initial.b(), v, area).unwrap();
    let mut profiles = Vec::new();
    let start = Instant::now();
    let out = flow::run_with_observer(&initial, &space, &cfg, |s, _| profiles.push(s.profile.clone())).unwrap();
    Trial {
        label,
        space,
        reason: out.reason,
        history: out.history,
        profiles,
        bounds,
        r_min_stop: out.thresholds.r_min_stop,
        elapsed: start.elapsed(),
        final_profile: out.final_state.profile,
    }
}

fn perturbed_unit_cylinder(a: f64, b: f64, m: usize) -> ProfileGrid {
    // c² + ε²/2 = 1 keeps the enclosed Euclidean volume at π (b - a)
    let eps: f64 = 0.1;
    let c = (1.0 - 0.5 * eps * eps).sqrt();
    ProfileGrid::from_fn(a, b, m, |z| c + eps * (PI * (z - a) / (b - a)).cos()).unwrap()
}

struct Runs {
    euclid_unit: Trial,
    euclid_short: Trial,
    hyperbolic: Trial,
    custom: Trial,
    dumbbell: Trial,
}

impl Runs {
    fn convergent(&self) -> [&Trial; 4] {
        [&self.euclid_unit, &self.euclid_short, &self.hyperbolic, &self.custom]
    }

    fn all(&self) -> [&Trial; 5] {
        [&self.euclid_unit, &self.euclid_short, &self.hyperbolic, &self.custom, &self.dumbbell]
    }
}

fn flow_runs() -> Runs {
    let e2 = AmbientSpace::euclidean(2).unwrap();
    let h2 = AmbientSpace::hyperbolic(-1.0, 2).unwrap();
    let tight = FlowConfig { conv_tol: Some(1e-7), record_every: 200, ..Default::default() };
    Runs {
        euclid_unit: trial("euclidean [0,1]", e2.clone(), perturbed_unit_cylinder(0.0, 1.0, 201), tight.clone()),
        euclid_short: trial("euclidean [0,0.25]", e2.clone(), perturbed_unit_cylinder(0.0, 0.25, 201), tight),
        hyperbolic: trial(
            "hyperbolic [0,1]",
            h2,
            perturbed_unit_cylinder(0.0, 1.0, 201),
            FlowConfig { record_every: 200, ..Default::default() },
        ),
        custom: trial(
            "custom [0,1]",
            custom_space(),
            ProfileGrid::from_fn(0.0, 1.0, 201, |z| 0.8 + 0.08 * (PI * z).cos()).unwrap(),
            FlowConfig { record_every: 200, ..Default::default() },
        ),
        dumbbell: trial(
            "dumbbell [0,2]",
            e2,
            ProfileGrid::from_fn(0.0, 2.0, 201, |z| 0.5 + 0.45 * (PI * z).cos()).unwrap(),
            FlowConfig { record_every: 1, ..Default::default() },
        ),
    }
}

fn max_dev(p: &ProfileGrid, value: f64) -> f64 {
    p.radii().iter().map(|r| (r - value).abs()).fold(0.0, f64::max)
}

fn criterion_1(c: &mut Checks) {
    let cases = [
        (AmbientSpace::hyperbolic(-1.0, 2).unwrap(), -1.0, 5.0),
        (AmbientSpace::hyperbolic(-0.5, 3).unwrap(), -0.5, 5.0),
        (AmbientSpace::spherical(1.0, 2).unwrap(), 1.0, 0.98 * PI / 2.0),
        (AmbientSpace::spherical(2.0, 3).unwrap(), 2.0, 0.98 * PI / (2.0 * 2f64.sqrt())),
    ];
    let mut worst: f64 = 0.0;
    for (space, lambda, r_top) in cases {
        for k in 1..=50 {
            let r = r_top * k as f64 / 50.0;
            let s = space.sectional_curvatures(r).unwrap();
            for v in [s.s_rz, s.s_ri, s.s_zi, s.s_ij] {
                worst = worst.max((v - lambda).abs());
                c.check((v - lambda).abs() <= 1e-12, format!("lambda = {lambda}, r = {r}: curvature {v}"));
            }
        }
    }
    c.note(format!("max |K - lambda| = {worst:.1e}"));
}

fn criterion_2(c: &mut Checks) {
    let cases = [
        ("euclidean", AmbientSpace::euclidean(2).unwrap(), 2.0),
        ("hyperbolic", AmbientSpace::hyperbolic(-1.0, 2).unwrap(), 1.0),
        ("custom", custom_space(), 0.8),
    ];
    for (name, space, rc) in cases {
        let p = ProfileGrid::cylinder(0.0, 1.0, 101, rc).unwrap();
        let hbar = averaged_mean_curvature(&p, &space).unwrap().hbar;
        let rate = rhs(&p, &space, hbar).unwrap();
        let worst = rate.iter().map(|v| v.abs()).fold(0.0, f64::max);
        c.check(worst <= 1e-13, format!("{name}: max |rhs| = {worst:e}"));

        let cfg = FlowConfig::default();
        let mut s = FlowState::new(p.clone(), &space, 0.0).unwrap();
        for _ in 0..1000 {
            s = flow::step(&s, &space, &cfg).unwrap();
        }
        let moved = max_dev(&s.profile, rc);
        c.check(moved < 1e-10, format!("{name}: cylinder moved {moved:e} in 1000 steps"));
        c.note(format!("{name} |rhs| {worst:.1e}, drift {moved:.1e}"));
    }
}

fn criterion_3(c: &mut Checks, runs: &Runs) {
    let e2 = AmbientSpace::euclidean(2).unwrap();
    for t in [&runs.euclid_unit, &runs.euclid_short] {
        let p0 = &t.profiles[0];
        let len = p0.b() - p0.a();
        let v0 = enclosed_volume(p0, &e2).unwrap();
        let area0 = lateral_area(p0, &e2).unwrap();
        c.check(((v0 - PI * len) / (PI * len)).abs() < 1e-12, format!("{}: V = {v0}", t.label));
        c.check((t.bounds.r1 - 1.0).abs() < 1e-10, format!("{}: r1 = {}", t.label, t.bounds.r1));
        c.check((t.bounds.small_volume_threshold - PI).abs() < 1e-12, format!("{}: threshold", t.label));
        c.note(format!(
            "{}: area {area0:.4} vs threshold {:.4}, criterion_met = {}",
            t.label, t.bounds.small_volume_threshold, t.bounds.criterion_met
        ));
        c.check(t.reason.kind == StopKind::Converged, format!("{}: stopped with {:?}", t.label, t.reason));
        let err = max_dev(&t.final_profile, t.bounds.r1);
        c.check(err <= 1e-4, format!("{}: max |r - r1| = {err:e}", t.label));
        let d = distance_to_cmc(&t.final_profile, &e2).unwrap();
        c.check(d.deviation <= 1e-6 * d.h_best, format!("{}: CMC deviation {:e}", t.label, d.deviation));
        c.check(t.elapsed < Duration::from_secs(60), format!("{}: runtime {:?}", t.label, t.elapsed));
        c.note(format!("{}: |r - r1| {err:.1e}, deviation/Hbar {:.1e}, {:.1?}", t.label, d.deviation / d.h_best, t.elapsed));
    }
    c.check(runs.euclid_short.bounds.criterion_met, "short slab should satisfy the small-volume criterion");

    let t = &runs.hyperbolic;
    c.check(t.reason.kind == StopKind::Converged, format!("hyperbolic: stopped with {:?}", t.reason));
    let d = distance_to_cmc(&t.final_profile, &t.space).unwrap();
    c.check(d.deviation <= 1e-5 * d.h_best, format!("hyperbolic: CMC deviation {:e}", d.deviation));
    c.note(format!("hyperbolic: deviation/Hbar {:.1e}, criterion_met = {}", d.deviation / d.h_best, t.bounds.criterion_met));
}

fn criterion_4(c: &mut Checks) {
    let mut worst: f64 = 0.0;
    for lambda in [-0.5, -1.0, -2.0] {
        let space = AmbientSpace::hyperbolic(lambda, 2).unwrap();
        for v in [0.1, 1.0, 10.0] {
            let rep = compute_bounds(&space, 0.0, 1.0, v, 1.0).unwrap();
            let exact = threshold_closed_form_n2(lambda, v, 1.0);
            let err = (rep.small_volume_threshold - exact).abs();
            worst = worst.max(err);
            c.check(err <= 1e-10, format!("lambda = {lambda}, V = {v}: {} vs {exact}", rep.small_volume_threshold));
        }
    }
    let e2 = AmbientSpace::euclidean(2).unwrap();
    for (v, a, b) in [(PI, 0.0, 1.0), (0.3, -1.0, 2.0), (7.5, 0.5, 0.75)] {
        let rep = compute_bounds(&e2, a, b, v, 1.0).unwrap();
        let err = (rep.small_volume_threshold - v / (b - a)).abs();
        c.check(err <= 1e-12, format!("euclidean V = {v}: threshold off by {err:e}"));
    }
    c.note(format!("max closed-form error {worst:.1e}"));
}

fn criterion_5(c: &mut Checks, runs: &Runs) {
    for t in runs.all() {
        let b = t.bounds;
        c.check(0.0 < b.r3 && b.r3 < b.r1 && b.r1 < b.r2, format!("{}: radii {} {} {}", t.label, b.r3, b.r1, b.r2));
        let len = t.profiles[0].b() - t.profiles[0].a();
        let n0 = t.history[0].n_critical;
        let cap = t.space.warp(b.r2).f * len + (n0 as f64 - 1.0) * b.r2;
        let mut prev_n = n0;
        for rec in &t.history {
            c.check(rec.max_r < b.r2, format!("{}: max_r {} >= r2 {} at t = {}", t.label, rec.max_r, b.r2, rec.t));
            if rec.min_r >= 10.0 * t.r_min_stop {
                c.check(rec.hbar > 0.0, format!("{}: Hbar = {} at t = {}", t.label, rec.hbar, rec.t));
            }
            c.check(rec.curve_len <= cap, format!("{}: curve length {} > {cap} at t = {}", t.label, rec.curve_len, rec.t));
            c.check(rec.n_critical <= prev_n, format!("{}: N rose to {} at t = {}", t.label, rec.n_critical, rec.t));
            prev_n = rec.n_critical;
        }
    }
    c.note(format!("{} runs checked", runs.all().len()));
}

fn criterion_6(c: &mut Checks, runs: &Runs) {
    let mut worst_dv: f64 = 0.0;
    for t in runs.all() {
        let v0 = t.history[0].volume;
        for w in t.history.windows(2) {
            let dv = ((w[1].volume - v0) / v0).abs();
            worst_dv = worst_dv.max(dv);
            c.check(dv <= 1e-10, format!("{}: |dV|/V = {dv:e} at t = {}", t.label, w[1].t));
            c.check(
                w[1].area <= w[0].area + 1e-8 * w[0].area,
                format!("{}: area rose {} -> {} at t = {}", t.label, w[0].area, w[1].area, w[1].t),
            );
            c.check(w[1].i1 >= 0.0 && w[1].i2 > 0.0, format!("{}: I1 = {}, I2 = {}", t.label, w[1].i1, w[1].i2));
        }
    }

    // step by step over the early, fastest part of three runs
    let cases = [
        ("euclidean", AmbientSpace::euclidean(2).unwrap(), perturbed_unit_cylinder(0.0, 1.0, 201)),
        ("hyperbolic", AmbientSpace::hyperbolic(-1.0, 2).unwrap(), perturbed_unit_cylinder(0.0, 1.0, 201)),
        ("custom", custom_space(), ProfileGrid::from_fn(0.0, 1.0, 201, |z| 0.8 + 0.08 * (PI * z).cos()).unwrap()),
    ];
    let cfg = FlowConfig::default();
    for (name, space, p) in cases {
        let mut s = FlowState::new(p, &space, 0.0).unwrap();
        let v0 = s.cached.volume;
        for _ in 0..2000 {
            let next = flow::step(&s, &space, &cfg).unwrap();
            let (a0, a1) = (s.cached.area, next.cached.area);
            c.check(a1 <= a0 + 1e-8 * a0, format!("{name}: area rose {a0} -> {a1} at t = {}", next.t));
            c.check(next.cached.i1 >= 0.0 && next.cached.i2 > 0.0, format!("{name}: I1/I2 sign at t = {}", next.t));
            let dv = ((next.cached.volume - v0) / v0).abs();
            worst_dv = worst_dv.max(dv);
            c.check(dv <= 1e-10, format!("{name}: |dV|/V = {dv:e} at t = {}", next.t));
            s = next;
        }
    }

    let split_cases = [
        ("euclidean", AmbientSpace::euclidean(2).unwrap()),
        ("hyperbolic", AmbientSpace::hyperbolic(-1.0, 2).unwrap()),
        ("custom", custom_space()),
    ];
    let p = ProfileGrid::from_fn(0.0, 1.0, 401, |z| 0.8 + 0.08 * (PI * z).cos()).unwrap();
    for (name, space) in split_cases {
        let s = averaged_mean_curvature(&p, &space).unwrap();
        let gap = (s.hbar - (s.i1 + s.i2)).abs();
        c.check(gap <= 1e-6, format!("{name}: |Hbar - (I1 + I2)| = {gap:e} at m = 401"));
    }
    c.note(format!("max |dV|/V {worst_dv:.1e}"));
}

/// Positions of sign changes of the slope and the two walls.
fn critical_positions(p: &ProfileGrid) -> Vec<f64> {
    let slope = spatial_derivatives(p).slope;
    let tol = 1e-9 * slope.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let mut out = vec![p.a()];
    let mut prev: Option<(usize, f64)> = None;
    for (i, &s) in slope.iter().enumerate().take(p.m() - 1).skip(1) {
        if s.abs() <= tol {
            continue;
        }
        if let Some((j, sp)) = prev {
            if sp.signum() != s.signum() {
                out.push(0.5 * (p.z(j) + p.z(i)));
            }
        }
        prev = Some((i, s));
    }
    out.push(p.b());
    out
}

fn criterion_7(c: &mut Checks, runs: &Runs) {
    let t = &runs.dumbbell;
    let p = &t.final_profile;
    let dz = p.dz();
    c.check(t.reason.kind == StopKind::Singularity, format!("dumbbell stopped with {:?}", t.reason));
    let Some(z) = t.reason.location else {
        c.check(false, "singularity without location");
        return;
    };
    c.check(z > p.a() + 2.0 * dz && z < p.b() - 2.0 * dz, format!("singularity at the wall z = {z}"));
    let crit = critical_positions(p);
    let nearest = crit.iter().map(|x| (x - z).abs()).fold(f64::INFINITY, f64::min);
    c.check(nearest <= 2.0 * dz, format!("singularity at z = {z} is {nearest} from the nearest critical point"));

    // closed intervals that keep 0.1 (b - a) away from every critical point
    let margin = 0.1 * (p.b() - p.a());
    let mut lowest = f64::INFINITY;
    for w in crit.windows(2) {
        let (lo, hi) = (w[0] + margin, w[1] - margin);
        if lo >= hi {
            continue;
        }
        for q in &t.profiles {
            for i in 0..q.m() {
                if (lo..=hi).contains(&q.z(i)) {
                    lowest = lowest.min(q.radii()[i]);
                }
            }
        }
    }
    c.check(lowest >= 10.0 * t.r_min_stop, format!("min r away from critical points {lowest} < 10 r_min_stop"));
    c.note(format!(
        "singularity at z = {z} (critical points {crit:?}), min r elsewhere {lowest:.3} vs r_min_stop {:.1e}",
        t.r_min_stop
    ));
}

fn criterion_8(c: &mut Checks, runs: &Runs) {
    for t in runs.convergent() {
        let t_end = t.history.last().unwrap().t;
        let early = t
            .history
            .iter()
            .filter(|r| r.t <= 0.01 * t_end)
            .map(|r| r.max_v)
            .fold(0.0, f64::max);
        let overall = t.history.iter().map(|r| r.max_v).fold(0.0, f64::max);
        c.check(t.reason.kind == StopKind::Converged, format!("{}: not convergent", t.label));
        c.check(overall < 10.0 * early, format!("{}: max_v {overall} vs early {early}", t.label));
    }
}

fn observed_order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn criterion_9(c: &mut Checks) {
    let e2 = AmbientSpace::euclidean(2).unwrap();
    let ms = [101usize, 201, 401];
    let profile = |m: usize| ProfileGrid::from_fn(0.0, 1.0, m, |z| 1.0 + 0.1 * (PI * z).cos()).unwrap();

    // without projection the limit radius carries the discretization error
    let r1 = 1.005f64.sqrt();
    let cfg = FlowConfig { volume_projection: false, conv_tol: Some(1e-9), record_every: 1_000_000, max_t: 50.0, ..Default::default() };
    let mut radius_err = Vec::new();
    for m in ms {
        let out = flow::run(&profile(m), &e2, &cfg).unwrap();
        c.check(out.reason.kind == StopKind::Converged, format!("m = {m}: stopped with {:?}", out.reason));
        radius_err.push(max_dev(&out.final_state.profile, r1));
    }

    // lateral area and curve length against the analytic integrands
    let r = |z: f64| 1.0 + 0.1 * (PI * z).cos();
    let dr = |z: f64| -0.1 * PI * (PI * z).sin();
    let area_exact = adaptive_simpson(&|z| 2.0 * PI * r(z) * (1.0 + dr(z) * dr(z)).sqrt(), 0.0, 1.0, 1e-15);
    let len_exact = adaptive_simpson(&|z| (1.0 + dr(z) * dr(z)).sqrt(), 0.0, 1.0, 1e-15);
    let mut area_err = Vec::new();
    let mut len_err = Vec::new();
    for m in ms {
        let p = profile(m);
        area_err.push((lateral_area(&p, &e2).unwrap() - area_exact).abs());
        len_err.push((revflow::hypersurface::curve_length(&p, &e2).unwrap() - len_exact).abs());
    }
    for (name, errs) in [("radius", &radius_err), ("area", &area_err), ("length", &len_err)] {
        let orders = observed_order(errs);
        for q in &orders {
            c.check(*q >= 1.9, format!("{name}: order {q:.3} (errors {errs:?})"));
        }
        c.note(format!("{name} orders {:.3?}", orders));
    }
}

fn main() {
    let start = Instant::now();
    let runs = flow_runs();
    eprintln!("flow runs finished in {:.1?}", start.elapsed());
    type Criterion<'a> = (u32, &'a str, Box<dyn Fn(&mut Checks) + 'a>);
    let criteria: Vec<Criterion> = vec![
        (1, "curvature oracle", Box::new(criterion_1)),
        (2, "cylinder equilibrium", Box::new(criterion_2)),
        (3, "small-volume convergence", Box::new(|c| criterion_3(c, &runs))),
        (4, "closed-form threshold", Box::new(criterion_4)),
        (5, "a-priori bounds along runs", Box::new(|c| criterion_5(c, &runs))),
        (6, "conservation and monotonicity", Box::new(|c| criterion_6(c, &runs))),
        (7, "neckpinch localization", Box::new(|c| criterion_7(c, &runs))),
        (8, "graph preservation", Box::new(|c| criterion_8(c, &runs))),
        (9, "numerical order", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (id, name, f) in &criteria {
        let mut checks = Checks::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut checks)));
        if let Err(e) = outcome {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            checks.failures.push(format!("panicked: {}", msg.unwrap_or_default()));
        }
        let verdict = if checks.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {verdict}  [{}]", checks.notes.join("; "));
        for f in checks.failures.iter().take(5) {
            println!("    {f}");
        }
        if checks.failures.len() > 5 {
            println!("    ... {} more", checks.failures.len() - 5);
        }
        if !checks.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
