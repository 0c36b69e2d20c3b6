//! Quadrature rules, contour winding and real-axis root polishing.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over consecutive breakpoints, with each
/// panel no wider than `max_width`.
pub fn composite_rule(breaks: &[f64], max_width: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (x, wt) in gx.iter().zip(&gw) {
                xs.push(lo + 0.5 * h * (x + 1.0));
                ws.push(0.5 * h * wt);
            }
        }
    }
    (xs, ws)
}

/// Winding number of `f` around the closed polygon `vertices`. Edges start
/// with samples at most `spacing` apart and are refined until consecutive
/// samples differ in phase by less than `pi/4`. Zeros closer to the contour
/// than about `spacing` can alias, so keep it below their distance.
pub fn winding_number<F>(f: &F, vertices: &[Complex64], spacing: f64) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut total = 0.0;
    for (i, &a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        total += edge_phase(f, a, b, spacing)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn edge_phase<F>(f: &F, a: Complex64, b: Complex64, spacing: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let start = (((b - a).norm() / spacing).ceil() as usize).clamp(16, 1 << 22);
    let min_len = 1e-14 * (a.norm() + b.norm()).max(1.0);
    let mut stack: Vec<(Complex64, Complex64, Complex64, Complex64)> = Vec::new();
    let mut total = 0.0;
    let points: Vec<Complex64> = (0..=start).map(|j| a + (b - a) * (j as f64 / start as f64)).collect();
    let values: Vec<Complex64> = points.iter().map(|&z| f(z)).collect::<Result<_>>()?;
    for j in (0..start).rev() {
        stack.push((points[j], values[j], points[j + 1], values[j + 1]));
    }
    while let Some((za, fa, zb, fb)) = stack.pop() {
        if fa == Complex64::new(0.0, 0.0) || fb == Complex64::new(0.0, 0.0) {
            return Err(Error::ScanTooCoarse { winding: -1, found: 0 });
        }
        let d = (fb / fa).arg();
        if d.abs() < PI / 4.0 {
            total += d;
            continue;
        }
        if (zb - za).norm() < min_len {
            return Err(Error::ScanTooCoarse { winding: -1, found: 0 });
        }
        let zm = 0.5 * (za + zb);
        let fm = f(zm)?;
        stack.push((zm, fm, zb, fb));
        stack.push((za, fa, zm, fm));
    }
    Ok(total)
}

/// Counter-clockwise rectangle `[lo, hi] x [-half, half]` around a real interval.
pub fn rectangle(lo: f64, hi: f64, half: f64) -> [Complex64; 4] {
    [
        Complex64::new(lo, -half),
        Complex64::new(hi, -half),
        Complex64::new(hi, half),
        Complex64::new(lo, half),
    ]
}

/// Contour around `(lo, hi)` that touches the real axis only at `lo`, so
/// that nothing left of `lo` is enclosed however tall the strip is.
pub fn wedge(lo: f64, hi: f64, half: f64) -> [Complex64; 5] {
    let w = half.min(0.5 * (hi - lo));
    [
        Complex64::new(lo, 0.0),
        Complex64::new(lo + w, -half),
        Complex64::new(hi, -half),
        Complex64::new(hi, half),
        Complex64::new(lo + w, half),
    ]
}

/// Four-point complex stencil; exact through cubic order.
pub fn derivative<F>(f: &F, z: Complex64, h: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    let mut dir = Complex64::new(1.0, 0.0);
    for _ in 0..4 {
        acc += f(z + dir * h)? / dir;
        dir *= Complex64::new(0.0, 1.0);
    }
    Ok(acc / (4.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub t: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

/// Settings for [`real_roots`].
#[derive(Debug, Clone, Copy)]
pub struct RootScan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Half-height of the counting rectangles around the real axis.
    pub half_height: f64,
    /// Half-width of the multiplicity square around each root.
    pub probe: f64,
}

fn polish<F>(f: &F, mut t: f64, lo: f64, hi: f64, m: usize, h: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut fz = f(Complex64::new(t, 0.0))?;
    for _ in 0..200 {
        if fz.norm() == 0.0 {
            break;
        }
        let df = derivative(f, Complex64::new(t, 0.0), h)?;
        if df.norm() == 0.0 {
            break;
        }
        let mut step = (m as f64 * fz / df).re;
        let cap = 0.5 * (hi - lo);
        if step.abs() > cap {
            step = cap * step.signum();
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = (t - step).clamp(lo, hi);
            let fc = f(Complex64::new(cand, 0.0))?;
            if fc.norm() < fz.norm() || step.abs() < 1e-15 * t.abs().max(1.0) {
                let moved = (cand - t).abs();
                t = cand;
                fz = fc;
                accepted = true;
                if moved <= 1e-15 * t.abs().max(1.0) {
                    return Ok(t);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(t)
}

fn count<F>(f: &F, lo: f64, hi: f64, half: f64) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    winding_number(f, &rectangle(lo, hi, half), 0.5 * half)
}

/// Like `count`, but tapered at the scan start so nothing below it is enclosed.
fn count_in<F>(f: &F, lo: f64, hi: f64, half: f64, scan: &RootScan) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if lo <= scan.lo {
        winding_number(f, &wedge(scan.lo, hi, half), 0.5 * half)
    } else {
        count(f, lo, hi, half)
    }
}

/// Locates all zeros of an analytic `f` on the real interval `(lo, hi)`:
/// scan `|f|` minima, Newton-polish on the real axis, count multiplicity by
/// winding, and check the total against the winding around the interval.
/// Returns the roots and the total winding.
pub fn real_roots<F>(f: &F, scan: &RootScan) -> Result<(Vec<RealRoot>, i64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    // keep contours off zeros that sit exactly on the interval ends
    let inset = 1e-7 * scan.step;
    let scan = &RootScan { lo: scan.lo + inset, hi: scan.hi - inset, ..*scan };
    let n = (((scan.hi - scan.lo) / scan.step).ceil() as usize).max(2);
    let h = (scan.hi - scan.lo) / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| scan.lo + h * i as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(Complex64::new(t, 0.0)).map(|v| v.norm())).collect::<Result<_>>()?;
    let mut roots: Vec<RealRoot> = Vec::new();
    for i in 0..=n {
        let below_left = i == 0 || vals[i] <= vals[i - 1];
        let below_right = i == n || vals[i] <= vals[i + 1];
        if !(below_left && below_right) {
            continue;
        }
        let (a, b) = (ts[i.saturating_sub(1)], ts[(i + 1).min(n)]);
        let inside = count_in(f, a, b, scan.half_height, scan)?;
        if inside <= 0 {
            continue;
        }
        bracket_roots(f, a, b, inside as usize, scan, &mut roots, 0)?;
    }
    roots.sort_by(|l, r| l.t.total_cmp(&r.t));
    roots.dedup_by(|r, l| (r.t - l.t).abs() < 1e-9 * l.t.abs().max(1.0));
    roots.retain(|r| r.t > scan.lo && r.t < scan.hi);
    let total = winding_number(f, &wedge(scan.lo, scan.hi, scan.half_height), 0.5 * scan.half_height)?;
    let found: usize = roots.iter().map(|r| r.multiplicity).sum();
    if total != found as i64 {
        return Err(Error::ScanTooCoarse { winding: total, found });
    }
    Ok((roots, total))
}

fn bracket_roots<F>(
    f: &F,
    a: f64,
    b: f64,
    expected: usize,
    scan: &RootScan,
    out: &mut Vec<RealRoot>,
    depth: usize,
) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = (1e-3 * (b - a)).max(1e-9 * a.abs().max(1.0)).min(scan.probe);
    let start = 0.5 * (a + b);
    let t = polish(f, start, a, b, 1, h)?;
    let probe = scan.probe.min(0.5 * (b - a)).min(0.5 * (t - scan.lo));
    let mut m = count(f, t - probe, t + probe, probe)?.max(0) as usize;
    let mut t = t;
    if m >= 2 {
        t = polish(f, t, a, b, m, h)?;
        m = count(f, t - probe, t + probe, probe)?.max(0) as usize;
    }
    if m == expected || depth >= 6 {
        if m > 0 {
            let residual = f(Complex64::new(t, 0.0))?.norm();
            out.push(RealRoot { t, multiplicity: m, residual });
        }
        return Ok(());
    }
    // several distinct roots share the bracket: split and recount
    let parts = 8;
    let w = (b - a) / parts as f64;
    for p in 0..parts {
        let (lo, hi) = (a + w * p as f64, a + w * (p + 1) as f64);
        let c = count_in(f, lo, hi, scan.half_height.min(0.5 * w), scan)?;
        if c > 0 {
            bracket_roots(f, lo, hi, c as usize, scan, out, depth + 1)?;
        }
    }
    Ok(())
}
