//! One-dimensional quadrature helpers shared by the geometry and bounds code.

/// Maximum recursion depth of [`adaptive_simpson`].
const MAX_DEPTH: u32 = 48;

/// Adaptive composite Simpson rule on `[a, b]` to a relative tolerance.
///
/// The tolerance is taken relative to the magnitude of the coarsest
/// estimate, so integrands that vanish identically return zero without
/// recursing. Each accepted panel gets the usual Richardson correction.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let q1 = 0.5 * (a + m);
    let q3 = 0.5 * (m + b);
    let (fq1, fq3) = (f(q1), f(q3));
    let left = (m - a) / 6.0 * (fa + 4.0 * fq1 + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * fq3 + fb);
    // the single panel can be accidentally small, scale by the refined one too
    let scale = (left + right).abs().max(whole.abs());
    if scale == 0.0 {
        return 0.0;
    }
    let tol = rel_tol * scale;
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, fq1, fm, left, 0.5 * tol, MAX_DEPTH)
        + simpson_rec(f, m, b, fm, fq3, fb, right, 0.5 * tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite trapezoid rule for nodal values on a uniform grid of spacing `dz`.
pub fn trapezoid(values: &[f64], dz: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            dz * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid weight of node `i` among `m` nodes.
#[inline]
pub fn trapezoid_weight(i: usize, m: usize, dz: f64) -> f64 {
    if i == 0 || i + 1 == m {
        0.5 * dz
    } else {
        dz
    }
}
