//! Gaussian wave-packet evolution through the spectral decomposition of `H`.
//!
//! Open geometries use the scattering states `psi_k = (2ik/sqrt(2 pi)) e^{-+ik x_s} G(x, x_s)`
//! with the source `x_s` beyond everything else, integrated over `k > 0`.
//! Discrete levels enter through their projectors, taken as contour
//! integrals of `G` in the energy plane and compressed with a pivoted
//! Cholesky factorisation on a few probe points.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::amplitudes::single_bound_poles;
use crate::error::{Error, Result};
use crate::greens::{green_row, GreenRow};
use crate::model::{Geometry, Lattice, Wavenumber};
use crate::numeric::composite_rule;
use crate::spectrum::{find_bound_states, find_eigenvalues};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const GOLDEN: f64 = 0.618_033_988_749_895;
const WALL_CLEARANCE: f64 = 4.0;
const RING_CLEARANCE: f64 = 10.0;
const SUPPORT: f64 = 12.0;
const MAX_EXTENSIONS: usize = 6;
/// Largest phase change across one quadrature panel.
const PANEL_PHASE: f64 = 4.0 * PI;

/// `(2 pi sigma^2)^{-1/4} exp(-(x - x0)^2 / (4 sigma^2) + i k0 x)`, so that
/// `|psi|^2` has standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianPacket {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, k0: f64, sigma: f64) -> Result<Self> {
        let p = Self { x0, k0, sigma };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        for (v, field) in [(self.x0, "x0"), (self.k0, "k0"), (self.sigma, "sigma")] {
            if !v.is_finite() {
                return Err(Error::NonFinite { field });
            }
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!("sigma = {} must be positive", self.sigma)));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.free_evolution(x, 0.0)
    }

    /// Exact free-line evolution under `H = -d^2/dx^2`.
    pub fn free_evolution(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let z = Complex64::new(1.0, t / s2);
        let u = x - self.x0 - 2.0 * self.k0 * t;
        let phase = Complex64::new(-u * u / (4.0 * s2), 0.0) / z + I * (self.k0 * x - self.k0 * self.k0 * t);
        (2.0 * PI * s2).powf(-0.25) * phase.exp() / z.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSettings {
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    /// Momentum window half-width in units of `1/sigma`.
    pub momentum_cutoff: f64,
    /// Panel-width multiplier for every quadrature; below 1 refines.
    pub resolution: f64,
    /// Trapezoid points on each residue contour.
    pub contour_points: usize,
    /// Allowed deviation of the spectral weight and of each norm.
    pub norm_tolerance: f64,
    /// Upper end of the bound-state search; derived from the lattice if unset.
    pub kappa_max: Option<f64>,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self { order: 16, momentum_cutoff: 10.0, resolution: 1.0, contour_points: 32, norm_tolerance: 1e-4, kappa_max: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub grid: Vec<f64>,
    /// `values[t][x]`.
    pub values: Vec<Vec<Complex64>>,
    /// `||Psi(t)||` over the domain (or over a window holding the packet).
    pub norms: Vec<f64>,
    /// `<Psi(t)|H|Psi(t)>` from the spectral coefficients.
    pub energies: Vec<f64>,
    /// Total spectral weight of the initial packet.
    pub spectral_weight: f64,
    /// Energies of the discrete states that carry weight, with multiplicity.
    pub discrete_levels: Vec<(f64, usize)>,
}

pub fn evolve(geom: &Geometry, lat: &Lattice, packet: &GaussianPacket, times: &[f64], grid: &[f64]) -> Result<EvolutionResult> {
    evolve_with(geom, lat, packet, times, grid, &EvolutionSettings::default())
}

struct Rule {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl Rule {
    fn new(breaks: Vec<f64>, width: f64, order: usize) -> Self {
        let mut b = breaks;
        b.sort_by(f64::total_cmp);
        b.dedup();
        let (xs, ws) = composite_rule(&b, width, order);
        Self { xs, ws }
    }
}

/// Packet evaluation, periodised on the ring.
struct Source<'a> {
    packet: &'a GaussianPacket,
    period: Option<f64>,
}

impl Source<'_> {
    fn value(&self, x: f64) -> Complex64 {
        match self.period {
            None => self.packet.value(x),
            Some(l) => (-3..=3).map(|m| self.packet.value(x + m as f64 * l)).sum(),
        }
    }
}

fn wrap(x: f64, length: f64) -> f64 {
    x - length * (x / length).round()
}

/// Quadrature nodes carrying the initial packet.
fn packet_rule(geom: &Geometry, lat: &Lattice, p: &GaussianPacket, width: f64, order: usize) -> Rule {
    let reach = SUPPORT * p.sigma;
    let (lo, hi) = geom.domain();
    if let Geometry::Ring { length } = *geom {
        if 2.0 * reach >= length {
            let mut b = vec![lo, hi];
            b.extend(lat.positions());
            return Rule::new(b, width, order);
        }
        let (a, z) = (p.x0 - reach, p.x0 + reach);
        let mut b = vec![a, z];
        for m in -2..=2 {
            let shift = m as f64 * length;
            b.extend(lat.positions().map(|y| y + shift).filter(|y| *y > a && *y < z));
            let seam = 0.5 * length + shift;
            if seam > a && seam < z {
                b.push(seam);
            }
        }
        let mut r = Rule::new(b, width, order);
        for x in r.xs.iter_mut() {
            *x = wrap(*x, length);
        }
        return r;
    }
    let (a, z) = ((p.x0 - reach).max(lo), (p.x0 + reach).min(hi));
    let mut b = vec![a, z];
    b.extend(lat.positions().filter(|y| *y > a && *y < z));
    Rule::new(b, width, order)
}

fn check_inputs(geom: &Geometry, lat: &Lattice, p: &GaussianPacket, times: &[f64], grid: &[f64], s: &EvolutionSettings) -> Result<()> {
    geom.validate(lat)?;
    p.check()?;
    for &t in times {
        if !t.is_finite() {
            return Err(Error::NonFinite { field: "times" });
        }
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!("times: {t} is negative")));
        }
    }
    for &x in grid {
        geom.check_point(x)?;
    }
    if s.order < 2 || s.contour_points < 8 || !(s.resolution > 0.0) || !(s.norm_tolerance > 0.0) || !(s.momentum_cutoff > 0.0) {
        return Err(Error::InvalidArgument("evolution settings out of range".into()));
    }
    let clearance = WALL_CLEARANCE * p.sigma;
    let too_wide = |msg: String| Err(Error::PacketTooWideForDomain(msg));
    match *geom {
        Geometry::Line => Ok(()),
        Geometry::HalfLine { .. } if p.x0 - clearance <= 0.0 => {
            too_wide(format!("x0 = {} is within 4 sigma = {clearance} of the wall", p.x0))
        }
        Geometry::Box { length, .. } if p.x0 - clearance <= 0.0 || p.x0 + clearance >= length => {
            too_wide(format!("x0 = {} is within 4 sigma = {clearance} of a wall of the box [0, {length}]", p.x0))
        }
        Geometry::Ring { length } if length < RING_CLEARANCE * p.sigma => {
            too_wide(format!("ring length {length} is below 10 sigma = {}", RING_CLEARANCE * p.sigma))
        }
        Geometry::Ring { .. } => geom.check_point(p.x0),
        _ => Ok(()),
    }
}

fn default_kappa_max(lat: &Lattice) -> f64 {
    let sum: f64 = lat
        .interactions()
        .iter()
        .map(|s| single_bound_poles(&s.params).iter().map(|b| b.k.norm()).fold(0.0, f64::max))
        .sum();
    4.0 * (1.0 + sum)
}

/// Scattering state `psi(x) = scale * G(x, x_s)`.
struct ContinuumMode {
    k: f64,
    weight: f64,
    coef: Complex64,
    scale: Complex64,
    row: GreenRow,
}

impl ContinuumMode {
    fn psi(&self, x: f64) -> Complex64 {
        self.scale * self.row.value(x)
    }
}

/// `P Psi0` stored as a weighted sum of contour rows.
struct Level {
    energy: f64,
    rank: usize,
    weight: f64,
    terms: Vec<(Complex64, GreenRow)>,
}

impl Level {
    fn value(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|(c, r)| c * r.value(x)).sum()
    }
}

fn probe_points(lo: f64, hi: f64, count: usize, lat: &Lattice) -> Vec<f64> {
    let span = hi - lo;
    (0..count)
        .map(|j| {
            let mut x = lo + span * (0.5 * GOLDEN + j as f64 * GOLDEN).fract().clamp(0.01, 0.99);
            while lat.positions().any(|y| (y - x).abs() < 1e-6 * span.max(1.0)) {
                x += 1e-3 * span / count as f64;
            }
            x
        })
        .collect()
}

fn wavenumber(geom: &Geometry, e: Complex64, center: f64, radius: f64) -> Result<Wavenumber> {
    let closed = matches!(geom, Geometry::Box { .. } | Geometry::Ring { .. });
    if closed && center > radius {
        Wavenumber::new(e.sqrt())
    } else {
        Wavenumber::from_energy(e)
    }
}

/// Pivoted Cholesky of a Hermitian positive semidefinite matrix; returns
/// the pivots whose remaining diagonal exceeds `tol` times the largest one.
fn pivots(a: &[Vec<Complex64>], tol: f64) -> Vec<usize> {
    let n = a.len();
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    let top = d.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    let mut chosen = Vec::new();
    if top <= 0.0 {
        return chosen;
    }
    loop {
        let (p, dp) = d
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .fold((usize::MAX, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        if p == usize::MAX || dp <= tol * top {
            break;
        }
        let s = dp.sqrt();
        let col: Vec<Complex64> = (0..n)
            .map(|i| (a[i][p] - cols.iter().map(|c| c[i] * c[p].conj()).sum::<Complex64>()) / s)
            .collect();
        for i in 0..n {
            d[i] -= col[i].norm_sqr();
        }
        cols.push(col);
        chosen.push(p);
    }
    chosen
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap_or(c);
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for q in c..n {
                let v = a[c][q];
                a[r][q] -= f * v;
            }
            let v = b[c];
            b[r] -= f * v;
        }
    }
    for c in (0..n).rev() {
        let s: Complex64 = (c + 1..n).map(|q| a[c][q] * b[q]).sum();
        b[c] = (b[c] - s) / a[c][c];
    }
    b
}

struct LevelSpec {
    energy: f64,
    radius: f64,
    expected: Option<usize>,
    probes: Vec<f64>,
}

fn project_level(geom: &Geometry, lat: &Lattice, spec: &LevelSpec, rule: &Rule, psi0: &[Complex64], m: usize) -> Result<Option<Level>> {
    let mut rows: Vec<Vec<GreenRow>> = Vec::with_capacity(m);
    let mut factors = Vec::with_capacity(m);
    for j in 0..m {
        let dir = Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / m as f64);
        let e = spec.energy + spec.radius * dir;
        let k = wavenumber(geom, e, spec.energy, spec.radius)?;
        rows.push(spec.probes.iter().map(|&x| green_row(geom, lat, x, k)).collect::<Result<_>>()?);
        factors.push(spec.radius * dir / m as f64);
    }
    let column = |q: usize, x: f64| -> Complex64 { rows.iter().zip(&factors).map(|(r, f)| f * r[q].value(x)).sum() };
    let n = spec.probes.len();
    let mut a = vec![vec![ZERO; n]; n];
    for (i, &x) in spec.probes.iter().enumerate() {
        for (q, row) in a[i].iter_mut().enumerate() {
            *row = column(q, x);
        }
    }
    for i in 0..n {
        for q in 0..i {
            let h = 0.5 * (a[i][q] + a[q][i].conj());
            a[i][q] = h;
            a[q][i] = h.conj();
        }
        a[i][i] = Complex64::new(a[i][i].re, 0.0);
    }
    let piv = pivots(&a, 1e-8);
    if let Some(expected) = spec.expected {
        if piv.len() != expected {
            return Err(Error::ScanTooCoarse { winding: expected as i64, found: piv.len() });
        }
    }
    if piv.is_empty() {
        return Ok(None);
    }
    let v: Vec<Complex64> = piv
        .iter()
        .map(|&q| rule.xs.iter().zip(&rule.ws).zip(psi0).map(|((&x, &w), &f)| w * column(q, x).conj() * f).sum())
        .collect();
    let sub: Vec<Vec<Complex64>> = piv.iter().map(|&i| piv.iter().map(|&q| a[i][q]).collect()).collect();
    let beta = solve(sub, v.clone());
    let weight: f64 = v.iter().zip(&beta).map(|(v, b)| (v.conj() * b).re).sum();
    let mut terms = Vec::with_capacity(piv.len() * m);
    for (&q, b) in piv.iter().zip(&beta) {
        for (r, f) in rows.iter().zip(&factors) {
            terms.push((f * b, r[q].clone()));
        }
    }
    Ok(Some(Level { energy: spec.energy, rank: piv.len(), weight, terms }))
}

fn radii(levels: &mut [LevelSpec], known: &[f64], ceiling: f64, zero_is_threshold: bool) {
    for l in levels.iter_mut() {
        let mut gap = (ceiling - l.energy).abs();
        for e in known {
            if *e != l.energy {
                gap = gap.min((e - l.energy).abs());
            }
        }
        if l.energy != 0.0 {
            gap = gap.min(l.energy.abs());
        } else if zero_is_threshold {
            gap = gap.min(1.0);
        }
        l.radius = 0.3 * gap;
    }
}

/// As [`evolve`] with explicit quadrature settings.
pub fn evolve_with(
    geom: &Geometry,
    lat: &Lattice,
    packet: &GaussianPacket,
    times: &[f64],
    grid: &[f64],
    settings: &EvolutionSettings,
) -> Result<EvolutionResult> {
    check_inputs(geom, lat, packet, times, grid, settings)?;
    let p = packet;
    let order = settings.order;
    let k_hi = p.k0.abs() + settings.momentum_cutoff / p.sigma;
    let k_lo = (p.k0.abs() - settings.momentum_cutoff / p.sigma).max(0.0);
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let res = settings.resolution;
    let closed = matches!(geom, Geometry::Box { .. } | Geometry::Ring { .. });

    let budget = PANEL_PHASE * (order as f64 / 16.0).min(1.0);
    let band_rule = |k_top: f64| packet_rule(geom, lat, p, res * (2.0 * p.sigma).min(budget / (p.k0.abs() + k_top)), order);
    let rule = band_rule(k_hi);
    let source = Source { packet: p, period: if let Geometry::Ring { length } = *geom { Some(length) } else { None } };
    let initial = |r: &Rule| -> Vec<Complex64> { r.xs.iter().map(|&x| source.value(x)).collect() };
    let psi0 = initial(&rule);
    let norm0 = rule.ws.iter().zip(&psi0).map(|(w, f)| w * f.norm_sqr()).sum::<f64>().sqrt();
    let (first, last) = match (lat.interactions().first(), lat.interactions().last()) {
        (Some(f), Some(l)) => (f.position, l.position),
        _ => (0.0, 0.0),
    };
    let contour = settings.contour_points;
    let project = |specs: &mut Vec<LevelSpec>, known: &[f64], ceiling: f64, rule: &Rule, psi0: &[Complex64]| -> Result<Vec<Level>> {
        radii(specs, known, ceiling, !closed);
        for l in specs.iter_mut() {
            l.probes = match *geom {
                Geometry::Box { length, .. } | Geometry::Ring { length } => {
                    let (lo, _) = geom.domain();
                    probe_points(lo, lo + length, 12, lat)
                }
                _ => {
                    let decay = 1.0 / (-l.energy).sqrt();
                    let lo = if matches!(geom, Geometry::HalfLine { .. }) { 0.0 } else { first - 2.0 * decay };
                    probe_points(lo, last + 2.0 * decay, 8 + 2 * lat.len(), lat)
                }
            };
        }
        Ok(specs
            .par_iter()
            .map(|s| project_level(geom, lat, s, rule, psi0, contour))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect())
    };

    // discrete part
    let mut specs: Vec<LevelSpec> = Vec::new();
    let kappa_max = settings.kappa_max.unwrap_or_else(|| default_kappa_max(lat));
    if !lat.is_empty() || closed {
        let bound = find_bound_states(geom, lat, kappa_max)?;
        for b in bound.bound_k.iter() {
            if specs.last().is_some_and(|l: &LevelSpec| (l.energy - b.energy).abs() < 1e-12 * b.energy.abs().max(1.0)) {
                if let Some(l) = specs.last_mut() {
                    l.expected = l.expected.map(|m| m + 1);
                }
                continue;
            }
            specs.push(LevelSpec { energy: b.energy, radius: 0.0, expected: Some(1), probes: Vec::new() });
        }
    }
    let reach_bound = specs.iter().map(|l| 40.0 / (-l.energy).sqrt()).fold(0.0, f64::max);
    let level_step = geom.length().map_or(0.0, |length| PI / length);
    let mut top = k_hi + 2.0 * level_step;
    if closed {
        specs.push(LevelSpec { energy: 0.0, radius: 0.0, expected: None, probes: Vec::new() });
        let eig = find_eigenvalues(geom, lat, (1e-3 * level_step).min(1e-3), top)?;
        for r in &eig.eigen_k {
            specs.push(LevelSpec { energy: r.energy, radius: 0.0, expected: Some(r.multiplicity), probes: Vec::new() });
        }
    }
    let mut known: Vec<f64> = specs.iter().map(|l| l.energy).collect();
    let ceiling = if closed { top * top } else { f64::INFINITY };
    let mut levels = project(&mut specs, &known, ceiling, &rule, &psi0)?;

    // output and norm nodes
    let (dom_lo, dom_hi) = geom.domain();
    let norm_rule = if closed {
        let mut b = vec![dom_lo, dom_hi];
        b.extend(lat.positions());
        Rule::new(b, res * (2.0 * p.sigma).min(0.5 * budget / (p.k0.abs() + 0.6 * settings.momentum_cutoff / p.sigma)), order)
    } else {
        let s_t = p.sigma * (1.0 + (t_max / (p.sigma * p.sigma)).powi(2)).sqrt();
        let v = p.k0.abs() + 0.6 * settings.momentum_cutoff / p.sigma;
        let reach = SUPPORT * s_t + 2.0 * v * t_max;
        let mut a = (p.x0 - reach).min(first - reach_bound);
        let z = (p.x0 + reach).max(last + reach_bound);
        a = a.max(dom_lo);
        let mut b = vec![a, z];
        b.extend(lat.positions().filter(|y| *y > a && *y < z));
        Rule::new(b, res * (2.0 * p.sigma).min(0.5 * budget / v), order)
    };
    let points: Vec<f64> = grid.iter().chain(&norm_rule.xs).copied().collect();

    // continuum part
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in points.iter().chain(&rule.xs).copied().chain(lat.positions()) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let extent = hi - lo;
    let mut channels: Vec<(f64, f64)> = vec![(-1.0, hi + 1.0)];
    if matches!(geom, Geometry::Line) {
        channels.push((1.0, lo - 1.0));
    }
    let continuum = |k_a: f64, k_b: f64, rule: &Rule, psi0: &[Complex64]| -> Result<Vec<ContinuumMode>> {
        let k_width = res * budget / (extent + 2.0 * k_b * t_max);
        let (ks, kw) = composite_rule(&[k_a, k_b], k_width, order);
        let built: Vec<Vec<ContinuumMode>> = ks
            .par_iter()
            .zip(kw.par_iter())
            .map(|(&k, &w)| {
                let kn = Wavenumber::real(k)?;
                channels
                    .iter()
                    .map(|&(dir, x_s)| {
                        let row = green_row(geom, lat, x_s, kn)?;
                        let scale = 2.0 * I * k * (-I * dir * k * x_s).exp() / (2.0 * PI).sqrt();
                        let mut mode = ContinuumMode { k, weight: w, coef: ZERO, scale, row };
                        mode.coef = rule.xs.iter().zip(&rule.ws).zip(psi0).map(|((&x, &wx), &f)| wx * mode.psi(x).conj() * f).sum();
                        Ok(mode)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(built.into_iter().flatten().collect())
    };
    let mut modes: Vec<ContinuumMode> = Vec::new();
    if !closed {
        top = k_hi;
        modes = continuum(k_lo, k_hi, &rule, &psi0)?;
    }

    // a packet that violates the matching conditions at a site has a
    // power-law spectral tail; extend the energy range until the weight closes
    let bound = settings.norm_tolerance;
    let weight_of = |modes: &[ContinuumMode], levels: &[Level]| -> f64 {
        modes.iter().map(|m| m.weight * m.coef.norm_sqr()).sum::<f64>() + levels.iter().map(|l| l.weight).sum::<f64>()
    };
    let mut spectral_weight = weight_of(&modes, &levels);
    for _ in 0..MAX_EXTENSIONS {
        if (norm0 * norm0 - spectral_weight).abs() <= 0.1 * bound {
            break;
        }
        let next = top * 1.5;
        let rule = band_rule(next);
        let psi0 = initial(&rule);
        if closed {
            let eig = find_eigenvalues(geom, lat, top, next)?;
            let mut batch: Vec<LevelSpec> = eig
                .eigen_k
                .iter()
                .map(|r| LevelSpec { energy: r.energy, radius: 0.0, expected: Some(r.multiplicity), probes: Vec::new() })
                .collect();
            known.extend(batch.iter().map(|l| l.energy));
            levels.extend(project(&mut batch, &known, next * next, &rule, &psi0)?);
        } else {
            modes.extend(continuum(top, next, &rule, &psi0)?);
        }
        top = next;
        spectral_weight = weight_of(&modes, &levels);
    }
    if (spectral_weight - norm0 * norm0).abs() > bound {
        return Err(Error::QuadratureUnderResolved { weight: spectral_weight, norm: norm0 * norm0, bound });
    }
    let energies: Vec<f64> = times
        .iter()
        .map(|&t| {
            let cont: f64 = modes.iter().map(|m| m.weight * (m.coef * (-I * m.k * m.k * t).exp()).norm_sqr() * m.k * m.k).sum();
            cont + levels.iter().map(|l| l.weight * l.energy).sum::<f64>()
        })
        .collect();

    let mode_phase: Vec<Vec<Complex64>> =
        modes.iter().map(|m| times.iter().map(|&t| m.weight * m.coef * (-I * m.k * m.k * t).exp()).collect()).collect();
    let level_phase: Vec<Vec<Complex64>> =
        levels.iter().map(|l| times.iter().map(|&t| (-I * l.energy * t).exp()).collect()).collect();
    let nt = times.len();
    let fields: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|&x| {
            let mut acc = vec![ZERO; nt];
            for (m, ph) in modes.iter().zip(&mode_phase) {
                let v = m.psi(x);
                for (a, p) in acc.iter_mut().zip(ph) {
                    *a += v * p;
                }
            }
            for (l, ph) in levels.iter().zip(&level_phase) {
                let v = l.value(x);
                for (a, p) in acc.iter_mut().zip(ph) {
                    *a += v * p;
                }
            }
            acc
        })
        .collect();

    let ng = grid.len();
    let values: Vec<Vec<Complex64>> = (0..nt).map(|t| fields[..ng].iter().map(|f| f[t]).collect()).collect();
    let norms: Vec<f64> = (0..nt)
        .map(|t| norm_rule.ws.iter().zip(&fields[ng..]).map(|(w, f)| w * f[t].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    for &n in &norms {
        if (n - norm0).abs() > bound {
            return Err(Error::QuadratureUnderResolved { weight: n, norm: norm0, bound });
        }
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        grid: grid.to_vec(),
        values,
        norms,
        energies,
        spectral_weight,
        discrete_levels: levels.iter().filter(|l| l.rank > 0).map(|l| (l.energy, l.rank)).collect(),
    })
}
