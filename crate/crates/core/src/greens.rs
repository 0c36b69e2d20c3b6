//! Green functions `G(x_f, x_i; k)` with `(k^2 - H) G = delta(x_f - x_i)`,
//! assembled from block reflection and transmission coefficients.

use num_complex::Complex64;

use crate::amplitudes::{bare_amplitudes, Amplitudes};
use crate::composition::{compose_or_empty, lattice_cells, wall_cell, Block, Cell};
use crate::error::{Error, Result};
use crate::model::{Geometry, InteractionParams, Lattice, WallCondition, Wavenumber};

const I: Complex64 = Complex64::new(0.0, 1.0);
const POLE_FLOOR: f64 = 1e-14;

/// Which closed form produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    SameCell,
    CrossCell,
    HalfLine,
    Box,
    RingSingle,
    RingLattice,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::SameCell => "same_cell",
            Branch::CrossCell => "cross_cell",
            Branch::HalfLine => "half_line",
            Branch::Box => "box",
            Branch::RingSingle => "ring_single",
            Branch::RingLattice => "ring_lattice",
        }
    }
}

/// `G(x) = a e^{ikx} + b e^{-ikx}` on the segment containing the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WavePair {
    pub a: Complex64,
    pub b: Complex64,
}

impl WavePair {
    pub fn value(&self, x: f64, k: Complex64) -> Complex64 {
        let e = (I * k * x).exp();
        self.a * e + self.b / e
    }

    pub fn derivative(&self, x: f64, k: Complex64) -> Complex64 {
        let e = (I * k * x).exp();
        I * k * (self.a * e - self.b / e)
    }

    /// Pair in the original frame when the evaluation used `x -> -x`.
    fn unmirrored(self) -> Self {
        Self { a: self.b, b: self.a }
    }

    /// Pair in the original frame when the evaluation used `x -> x + shift`.
    fn unshifted(self, shift: f64, k: Complex64) -> Self {
        let e = (I * k * shift).exp();
        Self { a: self.a * e, b: self.b / e }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEvaluation {
    pub value: Complex64,
    /// `dG/dx_f`, exact.
    pub derivative: Complex64,
    pub x_f: f64,
    pub x_i: f64,
    pub k: Wavenumber,
    pub branch: Branch,
    pair: WavePair,
}

impl GreenEvaluation {
    fn new(pair: WavePair, x_f: f64, x_i: f64, k: Wavenumber, branch: Branch) -> Self {
        let kv = k.value();
        Self { value: pair.value(x_f, kv), derivative: pair.derivative(x_f, kv), x_f, x_i, k, branch, pair }
    }

    /// `(G, dG/dx_f)` of the free solution that coincides with `G` on the
    /// observer's segment, continued to `x`. At a segment end this gives the
    /// one-sided limit.
    pub fn continued(&self, x: f64) -> (Complex64, Complex64) {
        let kv = self.k.value();
        (self.pair.value(x, kv), self.pair.derivative(x, kv))
    }
}

fn pole(d: Complex64, k: Complex64) -> Result<Complex64> {
    if d.norm() < POLE_FLOOR || !d.is_finite() {
        Err(Error::SpectralPole { re: k.re, im: k.im, modulus: d.norm() })
    } else {
        Ok(d)
    }
}

fn cell_index(cells: &[Cell], x: f64) -> usize {
    cells.partition_point(|c| c.position < x)
}

fn mirrored(cells: &[Cell]) -> Vec<Cell> {
    cells.iter().rev().map(Cell::mirrored).collect()
}

/// Open chain of cells (walls included as cells). `same_cell` reports which
/// form was used.
fn chain_pair(cells: &[Cell], x_f: f64, x_i: f64, k: Complex64) -> Result<(WavePair, bool)> {
    if x_f < x_i {
        let (p, same) = chain_pair(&mirrored(cells), -x_f, -x_i, k)?;
        return Ok((p.unmirrored(), same));
    }
    let m = cell_index(cells, x_i);
    let j = cell_index(cells, x_f);
    let two_ik = 2.0 * I * k;
    let left = (m > 0).then(|| compose_or_empty(&cells[..m], k, 1, 0.0)).transpose()?;
    let right = (j < cells.len()).then(|| compose_or_empty(&cells[j..], k, j + 1, 0.0)).transpose()?;
    let r_l = left.map_or(Complex64::new(0.0, 0.0), |b| b.r_minus);
    let r_r = right.map_or(Complex64::new(0.0, 0.0), |b| b.r_plus);
    if j == m {
        let y_lo = left.map_or(x_i, |b| b.right);
        let y_hi = right.map_or(x_f, |b| b.left);
        let round = r_l * r_r * (two_ik * (y_hi - y_lo)).exp();
        let d = pole(1.0 - round, k)?;
        let ei = (I * k * x_i).exp();
        let a = (1.0 / ei + r_l * ei * (-two_ik * y_lo).exp()) / (two_ik * d);
        let b = (r_r * (two_ik * y_hi).exp() / ei + round * ei) / (two_ik * d);
        return Ok((WavePair { a, b }, true));
    }
    let mid = compose_or_empty(&cells[m..j], k, m + 1, 0.0)?;
    let y_m1 = mid.left;
    let y_j = mid.right;
    let y_m = left.map_or(y_m1, |b| b.right);
    let y_j1 = right.map_or(y_j, |b| b.left);
    let d = (1.0 - r_l * mid.r_plus * (two_ik * (y_m1 - y_m)).exp())
        * (1.0 - r_r * mid.r_minus * (two_ik * (y_j1 - y_j)).exp())
        - r_l * r_r * mid.t_plus * mid.t_minus * (-two_ik * (y_j - y_m1 + y_m - y_j1)).exp();
    let d = pole(d, k)?;
    let ei = (I * k * x_i).exp();
    let c = mid.t_plus * (-I * k * (y_j - y_m1)).exp() * (1.0 / ei + r_l * ei * (-two_ik * y_m).exp()) / (two_ik * d);
    Ok((WavePair { a: c, b: c * r_r * (two_ik * y_j1).exp() }, false))
}

fn checked_k(k: Wavenumber) -> Complex64 {
    k.value()
}

fn prepare(geom: &Geometry, lat: &Lattice, x_f: f64, x_i: f64) -> Result<()> {
    geom.validate(lat)?;
    geom.check_point(x_f)?;
    geom.check_point(x_i)?;
    lat.check_off_sites(x_f)?;
    lat.check_off_sites(x_i)
}

/// One interaction at `y`.
pub fn green_single(p: &InteractionParams, y: f64, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    let lat = Lattice::new(vec![crate::model::PlacedInteraction::new(*p, y)?])?;
    green_line(&lat, x_f, x_i, k)
}

pub fn green_line(lat: &Lattice, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    prepare(&Geometry::Line, lat, x_f, x_i)?;
    let kv = checked_k(k);
    let cells = lattice_cells(lat, k)?;
    let (pair, same) = chain_pair(&cells, x_f, x_i, kv)?;
    Ok(GreenEvaluation::new(pair, x_f, x_i, k, if same { Branch::SameCell } else { Branch::CrossCell }))
}

fn wall_chain(lat: &Lattice, left: WallCondition, right: Option<(WallCondition, f64)>, k: Wavenumber) -> Result<Vec<Cell>> {
    let mut cells = vec![wall_cell(left, 0.0, k)];
    cells.extend(lattice_cells(lat, k)?);
    if let Some((wall, at)) = right {
        cells.push(wall_cell(wall, at, k));
    }
    Ok(cells)
}

/// Wall at `x = 0`, domain `x > 0`.
pub fn green_halfline(lat: &Lattice, wall: WallCondition, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    prepare(&Geometry::HalfLine { wall }, lat, x_f, x_i)?;
    let cells = wall_chain(lat, wall, None, k)?;
    let (pair, _) = chain_pair(&cells, x_f, x_i, checked_k(k))?;
    Ok(GreenEvaluation::new(pair, x_f, x_i, k, Branch::HalfLine))
}

pub fn green_box(
    lat: &Lattice,
    length: f64,
    left: WallCondition,
    right: WallCondition,
    x_f: f64,
    x_i: f64,
    k: Wavenumber,
) -> Result<GreenEvaluation> {
    prepare(&Geometry::Box { length, left, right }, lat, x_f, x_i)?;
    let cells = wall_chain(lat, left, Some((right, length)), k)?;
    let (pair, _) = chain_pair(&cells, x_f, x_i, checked_k(k))?;
    Ok(GreenEvaluation::new(pair, x_f, x_i, k, Branch::Box))
}

fn free_ring_pair(length: f64, x_f: f64, x_i: f64, k: Complex64) -> Result<WavePair> {
    let e = (I * k * length).exp();
    let d = pole(1.0 - e, k)?;
    let s = 2.0 * I * k * d;
    let ei = (I * k * x_i).exp();
    Ok(if x_f >= x_i {
        WavePair { a: 1.0 / (ei * s), b: e * ei / s }
    } else {
        WavePair { a: e / (ei * s), b: ei / s }
    })
}

fn wrap(x: f64, length: f64) -> f64 {
    (x + 0.5 * length).rem_euclid(length) - 0.5 * length
}

/// Single site at the origin, source left and observer right of it.
fn ring_single_core(amp: &Amplitudes, length: f64, x_i: f64, k: Complex64) -> Result<WavePair> {
    let e = (I * k * length).exp();
    let (rp, rm, tp, tm) = (amp.r_plus, amp.r_minus, amp.t_plus, amp.t_minus);
    let d = pole((1.0 - tp * e) * (1.0 - tm * e) - rp * rm * e * e, k)?;
    let s = 2.0 * I * k * d;
    let ei = (I * k * x_i).exp();
    let a = ((tp + (rp * rm - tp * tm) * e) / ei + rm * e * ei) / s;
    let b = ((1.0 - tp * e) * e * ei + rp * e / ei) / s;
    Ok(WavePair { a, b })
}

/// The single-site closed form when the shortest path from source to
/// observer crosses the site; `None` otherwise.
fn ring_single_pair(site: &Cell, length: f64, x_f: f64, x_i: f64, k: Complex64) -> Result<Option<WavePair>> {
    let y = site.position;
    let xf = wrap(x_f - y, length);
    let xi = wrap(x_i - y, length);
    let shift = xf - x_f;
    if xi < 0.0 && xf > 0.0 {
        let pair = ring_single_core(&site.amps, length, xi, k)?;
        return Ok(Some(pair.unshifted(shift, k)));
    }
    if xf < 0.0 && xi > 0.0 {
        let pair = ring_single_core(&site.amps.swapped(), length, -xi, k)?;
        return Ok(Some(pair.unmirrored().unshifted(shift, k)));
    }
    Ok(None)
}

/// Block-composition form for any number of sites.
fn ring_lattice_pair(cells: &[Cell], length: f64, x_f: f64, x_i: f64, k: Complex64) -> Result<WavePair> {
    let n = cells.len();
    let mut lifted: Vec<Cell> = cells.iter().filter(|c| c.position > x_i).copied().collect();
    lifted.extend(cells.iter().filter(|c| c.position < x_i).map(|c| c.shifted(length)));
    let end = x_i + length;
    let mut xf = if x_f >= x_i { x_f } else { x_f + length };
    if xf == x_i {
        xf = end;
    }
    let j = cell_index(&lifted, xf);
    if j == 0 {
        let mut m: Vec<Cell> = cells.iter().map(Cell::mirrored).collect();
        m.sort_by(|l, r| l.position.total_cmp(&r.position));
        return Ok(ring_lattice_pair(&m, length, -x_f, -x_i, k)?.unmirrored());
    }
    let a = compose_or_empty(&lifted[..j], k, 1, 0.0)?;
    let z = if xf < end { 0.5 * (xf + end) } else { end };
    let b = if j < n { compose_or_empty(&lifted[j..], k, j + 1, 0.0)? } else { Block::empty(z) };
    let (y1, yj, yj1, yn) = (a.left, a.right, b.left, b.right);
    let e = (I * k * length).exp();
    let ka = a.k_factor(k);
    let kb = b.k_factor(k);
    let ph = |x: f64| (I * k * x).exp();
    let d = 1.0
        - a.r_minus * b.r_plus * ph(2.0 * (yj1 - yj))
        - a.r_plus * b.r_minus * ph(2.0 * (length - yn + y1))
        - (a.t_plus * b.t_plus + a.t_minus * b.t_minus) * e * ph(-(yn - yj1 + yj - y1))
        + ka * kb * e * e;
    let d = pole(d, k)?;
    let t1 = a.t_plus * ph(-(yj - y1)) + b.t_minus * ka * ph(-(yn - yj1)) * e;
    let t2 = (b.r_minus * a.t_plus * ph(length - 2.0 * yn - yj + y1) + a.r_minus * b.t_minus * ph(-(2.0 * yj + yn - yj1))) * e;
    let t3 = a.r_plus * b.t_minus * ph(length + 2.0 * y1 - yn + yj1) + b.r_plus * a.t_plus * ph(2.0 * yj1 - yj + y1);
    let t4 = (b.t_minus * ph(-(yn - yj1)) + a.t_plus * kb * ph(-(yj - y1)) * e) * e;
    let s = 2.0 * I * k * d;
    let ei = ph(x_i);
    let pair = WavePair { a: (t1 / ei + t2 * ei) / s, b: (t3 / ei + t4 * ei) / s };
    Ok(pair.unshifted(xf - x_f, k))
}

fn ring_pair(cells: &[Cell], length: f64, x_f: f64, x_i: f64, k: Complex64) -> Result<(WavePair, Branch)> {
    match cells {
        [] => Ok((free_ring_pair(length, x_f, x_i, k)?, Branch::RingSingle)),
        [site] => match ring_single_pair(site, length, x_f, x_i, k)? {
            Some(p) => Ok((p, Branch::RingSingle)),
            None => Ok((ring_lattice_pair(cells, length, x_f, x_i, k)?, Branch::RingLattice)),
        },
        _ => Ok((ring_lattice_pair(cells, length, x_f, x_i, k)?, Branch::RingLattice)),
    }
}

/// Ring `[-L/2, L/2]` with periodic closure.
pub fn green_ring(lat: &Lattice, length: f64, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    prepare(&Geometry::Ring { length }, lat, x_f, x_i)?;
    let cells = lattice_cells(lat, k)?;
    let (pair, branch) = ring_pair(&cells, length, x_f, x_i, checked_k(k))?;
    Ok(GreenEvaluation::new(pair, x_f, x_i, k, branch))
}

/// Ring evaluation forced through the block-composition form, even for
/// zero or one site.
pub fn green_ring_composite(lat: &Lattice, length: f64, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    prepare(&Geometry::Ring { length }, lat, x_f, x_i)?;
    let cells = lattice_cells(lat, k)?;
    let kv = checked_k(k);
    let pair = if cells.is_empty() {
        free_ring_pair(length, x_f, x_i, kv)?
    } else {
        ring_lattice_pair(&cells, length, x_f, x_i, kv)?
    };
    Ok(GreenEvaluation::new(pair, x_f, x_i, k, Branch::RingLattice))
}

pub fn green(geom: &Geometry, lat: &Lattice, x_f: f64, x_i: f64, k: Wavenumber) -> Result<GreenEvaluation> {
    match *geom {
        Geometry::Line => green_line(lat, x_f, x_i, k),
        Geometry::HalfLine { wall } => green_halfline(lat, wall, x_f, x_i, k),
        Geometry::Box { length, left, right } => green_box(lat, length, left, right, x_f, x_i, k),
        Geometry::Ring { length } => green_ring(lat, length, x_f, x_i, k),
    }
}

/// Fabry-Perot denominator of the box; zero at eigenvalues.
pub fn box_denominator(lat: &Lattice, length: f64, left: WallCondition, right: WallCondition, k: Wavenumber) -> Result<Complex64> {
    let kv = k.value();
    let (s0, sl) = (left.sign(), right.sign());
    let cells = lattice_cells(lat, k)?;
    let two_ik = 2.0 * I * kv;
    if cells.is_empty() {
        return Ok(1.0 - s0 * sl * (two_ik * length).exp());
    }
    let b = compose_or_empty(&cells, kv, 1, 0.0)?;
    Ok((1.0 + s0 * b.r_plus * (two_ik * b.left).exp()) * (1.0 + sl * b.r_minus * (two_ik * (length - b.right)).exp())
        - s0 * sl * b.t_plus * b.t_minus * (two_ik * (length - b.right + b.left)).exp())
}

/// Periodic-closure denominator of the ring; zero at eigenvalues.
pub fn ring_denominator(lat: &Lattice, length: f64, k: Wavenumber) -> Result<Complex64> {
    let kv = k.value();
    let cells = lattice_cells(lat, k)?;
    let e = (I * kv * length).exp();
    match cells.as_slice() {
        [] => Ok((1.0 - e) * (1.0 - e)),
        [site] => {
            let a = &site.amps;
            Ok((1.0 - a.t_plus * e) * (1.0 - a.t_minus * e) - a.r_plus * a.r_minus * e * e)
        }
        _ => {
            let a = compose_or_empty(&cells[..1], kv, 1, 0.0)?;
            let b = compose_or_empty(&cells[1..], kv, 2, 0.0)?;
            let ph = |x: f64| (I * kv * x).exp();
            let (y1, yj, yj1, yn) = (a.left, a.right, b.left, b.right);
            Ok(1.0
                - a.r_minus * b.r_plus * ph(2.0 * (yj1 - yj))
                - a.r_plus * b.r_minus * ph(2.0 * (length - yn + y1))
                - (a.t_plus * b.t_plus + a.t_minus * b.t_minus) * e * ph(-(yn - yj1 + yj - y1))
                + a.k_factor(kv) * b.k_factor(kv) * e * e)
        }
    }
}

/// `G(., x_i; k)` for fixed source, stored as one plane-wave pair per
/// segment between interactions and the source.
#[derive(Debug, Clone)]
pub struct GreenRow {
    k: Wavenumber,
    x_i: f64,
    breaks: Vec<f64>,
    pairs: Vec<WavePair>,
}

impl GreenRow {
    pub fn source(&self) -> f64 {
        self.x_i
    }

    fn pair_at(&self, x: f64) -> &WavePair {
        &self.pairs[self.breaks.partition_point(|b| *b < x)]
    }

    /// `G(x, x_i)`; `x` must not sit on an interaction.
    pub fn value(&self, x: f64) -> Complex64 {
        self.pair_at(x).value(x, self.k.value())
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        self.pair_at(x).derivative(x, self.k.value())
    }
}

pub fn green_row(geom: &Geometry, lat: &Lattice, x_i: f64, k: Wavenumber) -> Result<GreenRow> {
    prepare(geom, lat, x_i, x_i)?;
    let mut breaks: Vec<f64> = lat.positions().collect();
    let at = breaks.partition_point(|y| *y < x_i);
    breaks.insert(at, x_i);
    let (lo, hi) = geom.domain();
    let mut samples = Vec::with_capacity(breaks.len() + 1);
    for s in 0..=breaks.len() {
        let left = if s == 0 { lo } else { breaks[s - 1] };
        let right = if s == breaks.len() { hi } else { breaks[s] };
        let x = match (left.is_finite(), right.is_finite()) {
            (true, true) => 0.5 * (left + right),
            (true, false) => left + 1.0,
            (false, true) => right - 1.0,
            (false, false) => x_i,
        };
        samples.push(x);
    }
    let kv = k.value();
    let pairs = match *geom {
        Geometry::Ring { length } => {
            let cells = lattice_cells(lat, k)?;
            samples.iter().map(|&x| ring_pair(&cells, length, x, x_i, kv).map(|p| p.0)).collect::<Result<_>>()?
        }
        _ => {
            let cells = match *geom {
                Geometry::Line => lattice_cells(lat, k)?,
                Geometry::HalfLine { wall } => wall_chain(lat, wall, None, k)?,
                Geometry::Box { length, left, right } => wall_chain(lat, left, Some((right, length)), k)?,
                Geometry::Ring { .. } => unreachable!(),
            };
            samples.iter().map(|&x| chain_pair(&cells, x, x_i, kv).map(|p| p.0)).collect::<Result<_>>()?
        }
    };
    Ok(GreenRow { k, x_i, breaks, pairs })
}

/// `G(x, x)` on one segment: `c0 + cp e^{2ik(x - p)} + cm e^{2ik(q - x)}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DiagonalPiece {
    pub lo: f64,
    pub hi: f64,
    pub c0: Complex64,
    pub cp: Complex64,
    pub p: f64,
    pub cm: Complex64,
    pub q: f64,
}

impl DiagonalPiece {
    pub fn integrate(&self, a: f64, b: f64, k: Complex64) -> Complex64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        let two_ik = 2.0 * I * k;
        let mut s = self.c0 * (b - a);
        if self.cp != Complex64::new(0.0, 0.0) {
            s += self.cp * ((two_ik * (b - self.p)).exp() - (two_ik * (a - self.p)).exp()) / two_ik;
        }
        if self.cm != Complex64::new(0.0, 0.0) {
            s += self.cm * ((two_ik * (self.q - a)).exp() - (two_ik * (self.q - b)).exp()) / two_ik;
        }
        s
    }
}

/// Segments covering the domain, with the ring wrap segment lifted to
/// `(y_N, y_1 + L)`.
pub(crate) fn diagonal_pieces(geom: &Geometry, lat: &Lattice, k: Wavenumber) -> Result<Vec<DiagonalPiece>> {
    let kv = k.value();
    let two_ik = 2.0 * I * kv;
    let zero = Complex64::new(0.0, 0.0);
    if let Geometry::Ring { length } = *geom {
        let cells = lattice_cells(lat, k)?;
        let n = cells.len();
        if n == 0 {
            let e = (I * kv * length).exp();
            let c0 = (1.0 + e) / (two_ik * pole(1.0 - e, kv)?);
            return Ok(vec![DiagonalPiece { lo: -0.5 * length, hi: 0.5 * length, c0, cp: zero, p: 0.0, cm: zero, q: 0.0 }]);
        }
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let p = cells[j].position;
            let rest: Vec<Cell> = cells[j + 1..].iter().copied().chain(cells[..=j].iter().map(|c| c.shifted(length))).collect();
            let q = rest[0].position;
            let c = compose_or_empty(&rest, kv, 1, 0.0)?;
            let pp = (I * kv * (q - p)).exp();
            let dc = pole((1.0 - c.t_plus * pp) * (1.0 - c.t_minus * pp) - c.r_plus * c.r_minus * pp * pp, kv)?;
            let s = two_ik * dc;
            let c0 = (dc + (c.t_plus + c.t_minus) * pp + 2.0 * (c.r_plus * c.r_minus - c.t_plus * c.t_minus) * pp * pp) / s;
            out.push(DiagonalPiece { lo: p, hi: q, c0, cp: c.r_minus / s, p, cm: c.r_plus / s, q });
        }
        return Ok(out);
    }
    let cells = match *geom {
        Geometry::Line => lattice_cells(lat, k)?,
        Geometry::HalfLine { wall } => wall_chain(lat, wall, None, k)?,
        Geometry::Box { length, left, right } => wall_chain(lat, left, Some((right, length)), k)?,
        Geometry::Ring { .. } => unreachable!(),
    };
    let n = cells.len();
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if (j == 0 && !matches!(geom, Geometry::Line)) || (j == n && matches!(geom, Geometry::Box { .. })) {
            continue;
        }
        let left = (j > 0).then(|| compose_or_empty(&cells[..j], kv, 1, 0.0)).transpose()?;
        let right = (j < n).then(|| compose_or_empty(&cells[j..], kv, j + 1, 0.0)).transpose()?;
        let lo = left.map_or(f64::NEG_INFINITY, |b| b.right);
        let hi = right.map_or(f64::INFINITY, |b| b.left);
        let r_l = left.map_or(zero, |b| b.r_minus);
        let r_r = right.map_or(zero, |b| b.r_plus);
        let p = if lo.is_finite() { lo } else { hi };
        let q = if hi.is_finite() { hi } else { lo };
        let round = if lo.is_finite() && hi.is_finite() { r_l * r_r * (two_ik * (hi - lo)).exp() } else { zero };
        let d = pole(1.0 - round, kv)?;
        let s = two_ik * d;
        out.push(DiagonalPiece { lo, hi, c0: (1.0 + round) / s, cp: r_l / s, p, cm: r_r / s, q });
    }
    Ok(out)
}

/// Integral of `G(x, x; k)` over `[a, b]`.
pub(crate) fn diagonal_integral(pieces: &[DiagonalPiece], geom: &Geometry, a: f64, b: f64, k: Complex64) -> Complex64 {
    let mut s: Complex64 = pieces.iter().map(|p| p.integrate(a, b, k)).sum();
    if let Geometry::Ring { length } = *geom {
        if let Some(last) = pieces.last() {
            if last.hi > 0.5 * length {
                s += last.integrate(a + length, b + length, k);
            }
        }
    }
    s
}

/// Closed forms for one interaction, kept independent of the block machinery.
pub mod reference {
    use super::*;

    fn free(x_f: f64, x_i: f64, k: Complex64) -> Complex64 {
        (I * k * (x_f - x_i).abs()).exp() / (2.0 * I * k)
    }

    /// Delta of strength `gamma` at the origin.
    pub fn delta_line(gamma: f64, x_f: f64, x_i: f64, k: Complex64) -> Complex64 {
        if (x_f > 0.0) != (x_i > 0.0) {
            (I * k * (x_f - x_i).abs()).exp() / (2.0 * I * k - gamma)
        } else {
            free(x_f, x_i, k) + gamma / (2.0 * I * k - gamma) * (I * k * (x_f.abs() + x_i.abs())).exp() / (2.0 * I * k)
        }
    }

    /// Delta-prime of strength `gamma` at the origin, sign-function form.
    pub fn delta_prime_line(gamma: f64, x_f: f64, x_i: f64, k: Complex64) -> Complex64 {
        let r = gamma * k / (2.0 * I + gamma * k);
        let sign = x_f.signum() * x_i.signum();
        free(x_f, x_i, k) + r * sign * (I * k * (x_f.abs() + x_i.abs())).exp() / (2.0 * I * k)
    }

    fn region_error(x_f: f64, x_i: f64, y: f64) -> Error {
        Error::InvalidArgument(format!("closed form needs x_i < {y} (got x_i = {x_i}, x_f = {x_f})"))
    }

    /// One interaction at `y > 0` in front of a wall at the origin, for a
    /// source between wall and interaction.
    pub fn single_halfline(p: &InteractionParams, y: f64, wall: WallCondition, x_f: f64, x_i: f64, k: Wavenumber) -> Result<Complex64> {
        if !(x_i < y) {
            return Err(region_error(x_f, x_i, y));
        }
        let kv = k.value();
        let a = bare_amplitudes(p, k)?;
        let s = wall.sign();
        let two_ik = 2.0 * I * kv;
        let rp = a.r_plus * (two_ik * y).exp();
        let d = pole(1.0 + s * rp, kv)?;
        let e = |x: f64| (I * kv * x).exp();
        Ok(if x_f > y {
            a.t_plus / (two_ik * d) * (e(x_f - x_i) - s * e(x_f + x_i))
        } else {
            let delta = (x_f - x_i).abs();
            (e(delta) - s * rp * e(-delta) - s * e(x_f + x_i) + rp * e(-(x_f + x_i))) / (two_ik * d)
        })
    }

    /// Fabry-Perot denominator of one interaction at `y` in a box of length `length`.
    pub fn single_box_denominator(p: &InteractionParams, y: f64, length: f64, left: WallCondition, right: WallCondition, k: Wavenumber) -> Result<Complex64> {
        let kv = k.value();
        let a = bare_amplitudes(p, k)?;
        let (s0, sl) = (left.sign(), right.sign());
        let two_ik = 2.0 * I * kv;
        Ok((1.0 + s0 * a.r_plus * (two_ik * y).exp()) * (1.0 + sl * a.r_minus * (two_ik * (length - y)).exp())
            - s0 * sl * a.t_plus * a.t_minus * (two_ik * length).exp())
    }

    /// One interaction at `y` in a box, for a source left of the interaction.
    #[allow(clippy::too_many_arguments)]
    pub fn single_box(p: &InteractionParams, y: f64, length: f64, left: WallCondition, right: WallCondition, x_f: f64, x_i: f64, k: Wavenumber) -> Result<Complex64> {
        if !(x_i < y) {
            return Err(region_error(x_f, x_i, y));
        }
        let kv = k.value();
        let a = bare_amplitudes(p, k)?;
        let (s0, sl) = (left.sign(), right.sign());
        let two_ik = 2.0 * I * kv;
        let d = pole(single_box_denominator(p, y, length, left, right, k)?, kv)?;
        let e = |x: f64| (I * kv * x).exp();
        Ok(if x_f > y {
            a.t_plus / (two_ik * d) * (e(-x_i) - s0 * e(x_i)) * (e(x_f) - sl * e(2.0 * length) * e(-x_f))
        } else {
            let back = 1.0 + sl * a.r_minus * e(2.0 * (length - y));
            let eff = a.r_plus * e(2.0 * y) - sl * a.t_plus * a.t_minus * e(2.0 * length) / back;
            let delta = (x_f - x_i).abs();
            back / (two_ik * d) * (e(delta) - s0 * eff * e(-delta) - s0 * e(x_f + x_i) + eff * e(-(x_f + x_i)))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_lattice, PlacedInteraction};
    use crate::oracle::oracle_green;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn k(v: f64) -> Wavenumber {
        Wavenumber::real(v).unwrap()
    }

    fn lat(items: &[(InteractionParams, f64)]) -> Lattice {
        make_lattice(items.iter().map(|&(p, y)| PlacedInteraction::new(p, y).unwrap()).collect()).unwrap()
    }

    fn generic() -> InteractionParams {
        InteractionParams::new(1.5, 0.4, -0.7, (1.0 + 0.4 * -0.7) / 1.5, 0.6).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn single_delta_reference_value() {
        let g = green_single(&InteractionParams::delta(2.0).unwrap(), 0.0, 1.0, -1.0, k(1.0)).unwrap();
        assert!(close(g.value, c(0.0, 2.0).exp() / c(-2.0, 2.0), 1e-14));
        assert_eq!(g.branch, Branch::CrossCell);
    }

    #[test]
    fn identity_is_free() {
        let g = green_single(&InteractionParams::identity(), 0.3, -0.4, 1.9, k(0.8)).unwrap();
        assert!(close(g.value, (c(0.0, 0.8 * 2.3)).exp() / c(0.0, 1.6), 1e-14));
        let g = green_line(&Lattice::empty(), 2.0, -1.0, k(1.1)).unwrap();
        assert!(close(g.value, (c(0.0, 3.3)).exp() / c(0.0, 2.2), 1e-14));
    }

    #[test]
    fn closed_forms_agree() {
        for &(xf, xi) in &[(1.0, -0.5), (-2.0, -1.0), (-0.3, 0.7), (0.2, 1.4)] {
            let kk = c(1.3, 0.0);
            let g = green_single(&InteractionParams::delta(-0.8).unwrap(), 0.0, xf, xi, k(1.3)).unwrap();
            assert!(close(g.value, reference::delta_line(-0.8, xf, xi, kk), 1e-13));
            let g = green_single(&InteractionParams::delta_prime(2.0).unwrap(), 0.0, xf, xi, k(1.3)).unwrap();
            assert!(close(g.value, reference::delta_prime_line(2.0, xf, xi, kk), 1e-13));
        }
    }

    #[test]
    fn line_matches_oracle() {
        let l = lat(&[(generic(), -0.4), (InteractionParams::delta(1.2).unwrap(), 0.5), (InteractionParams::delta_prime(-0.3).unwrap(), 1.7)]);
        for &(xf, xi) in &[(1.0, -0.5), (-2.0, -1.0), (-0.3, 0.7), (2.2, 0.1), (0.2, 0.3), (0.3, 0.2), (3.0, -3.0), (-3.0, 3.0), (1.0, 1.0)] {
            for kk in [k(1.3), Wavenumber::new(c(0.7, 0.4)).unwrap()] {
                let g = green_line(&l, xf, xi, kk).unwrap();
                let o = oracle_green(&Geometry::Line, &l, xf, xi, kk).unwrap();
                assert!(close(g.value, o, 1e-11), "{xf} {xi}: {} vs {o}", g.value);
            }
        }
    }

    #[test]
    fn halfline_and_box_match_oracle() {
        let l = lat(&[(generic(), 0.4), (InteractionParams::delta(1.2).unwrap(), 1.5)]);
        let walls = [WallCondition::Dirichlet, WallCondition::Neumann];
        for &(xf, xi) in &[(1.0, 0.5), (0.2, 1.9), (0.3, 0.2), (1.7, 1.8), (0.1, 0.1)] {
            for kk in [k(1.3), Wavenumber::new(c(0.7, 0.4)).unwrap()] {
                for w in walls {
                    let g = green_halfline(&l, w, xf, xi, kk).unwrap();
                    let o = oracle_green(&Geometry::HalfLine { wall: w }, &l, xf, xi, kk).unwrap();
                    assert!(close(g.value, o, 1e-11));
                    for w2 in walls {
                        let geom = Geometry::Box { length: 2.1, left: w, right: w2 };
                        let g = green(&geom, &l, xf, xi, kk).unwrap();
                        let o = oracle_green(&geom, &l, xf, xi, kk).unwrap();
                        assert!(close(g.value, o, 1e-11), "{} vs {o}", g.value);
                    }
                }
            }
        }
    }

    #[test]
    fn ring_matches_oracle() {
        let length = 3.0;
        let geom = Geometry::Ring { length };
        let lattices = [
            Lattice::empty(),
            lat(&[(generic(), 0.3)]),
            lat(&[(generic(), -1.1), (InteractionParams::delta(1.2).unwrap(), 0.2), (InteractionParams::delta_prime(0.5).unwrap(), 0.9)]),
        ];
        for l in &lattices {
            for &(xf, xi) in &[(1.0, -0.5), (-1.4, 1.3), (0.25, 0.1), (0.1, 0.25), (-1.5, 0.0), (1.5, -1.5), (0.5, 0.5), (-1.2, -1.3)] {
                let kk = Wavenumber::new(c(1.1, 0.07)).unwrap();
                let g = green(&geom, l, xf, xi, kk).unwrap();
                let o = oracle_green(&geom, l, xf, xi, kk).unwrap();
                assert!(close(g.value, o, 1e-10), "N={} {xf} {xi}: {} vs {o}", l.len(), g.value);
                let gc = green_ring_composite(l, length, xf, xi, kk).unwrap();
                assert!(close(gc.value, o, 1e-10));
            }
        }
    }

    #[test]
    fn single_site_ring_branch() {
        let l = lat(&[(InteractionParams::delta(1.0).unwrap(), 0.0)]);
        let g = green_ring(&l, 4.0, 1.0, -0.5, k(0.9)).unwrap();
        assert_eq!(g.branch, Branch::RingSingle);
        let g = green_ring(&l, 4.0, 1.0, 0.5, k(0.9)).unwrap();
        assert_eq!(g.branch, Branch::RingLattice);
    }

    #[test]
    fn halfline_reference_form() {
        let p = InteractionParams::delta(2.0).unwrap();
        let l = lat(&[(p, 1.0)]);
        for &(xf, xi) in &[(2.0, 0.3), (0.6, 0.3), (0.2, 0.9)] {
            let g = green_halfline(&l, WallCondition::Dirichlet, xf, xi, k(1.7)).unwrap();
            let r = reference::single_halfline(&p, 1.0, WallCondition::Dirichlet, xf, xi, k(1.7)).unwrap();
            assert!(close(g.value, r, 1e-12), "{xf} {xi}");
        }
        let free = green_halfline(&Lattice::empty(), WallCondition::Neumann, 0.4, 1.0, k(1.0)).unwrap();
        let want = ((c(0.0, 0.6)).exp() + (c(0.0, 1.4)).exp()) / c(0.0, 2.0);
        assert!(close(free.value, want, 1e-14));
    }

    #[test]
    fn box_reference_forms() {
        let p = generic();
        let l = lat(&[(p, 0.8)]);
        let (dir, neu) = (WallCondition::Dirichlet, WallCondition::Neumann);
        let kk = Wavenumber::new(c(1.4, 0.1)).unwrap();
        let d = box_denominator(&l, 2.0, dir, neu, kk).unwrap();
        assert!(close(d, reference::single_box_denominator(&p, 0.8, 2.0, dir, neu, kk).unwrap(), 1e-14));
        for &(xf, xi) in &[(1.5, 0.3), (0.1, 0.3), (0.5, 0.2)] {
            let g = green_box(&l, 2.0, dir, neu, xf, xi, kk).unwrap();
            let r = reference::single_box(&p, 0.8, 2.0, dir, neu, xf, xi, kk).unwrap();
            assert!(close(g.value, r, 1e-12));
        }
        let e = box_denominator(&Lattice::empty(), 1.0, dir, dir, k(0.7)).unwrap();
        assert!(close(e, 1.0 - (c(0.0, 1.4)).exp(), 1e-15));
    }

    #[test]
    fn errors() {
        let l = lat(&[(InteractionParams::delta(1.0).unwrap(), 0.5)]);
        assert!(matches!(green_line(&l, 0.5, 0.0, k(1.0)), Err(Error::OnInteractionPoint { .. })));
        let pi = std::f64::consts::PI;
        let dir = WallCondition::Dirichlet;
        let r = green_box(&Lattice::empty(), pi, dir, dir, 1.0, 2.0, k(2.0));
        assert!(matches!(r, Err(Error::SpectralPole { .. })));
        assert!(matches!(green_box(&l, 1.0, dir, dir, 1.5, 0.2, k(1.0)), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn row_matches_pointwise() {
        let l = lat(&[(generic(), -0.4), (InteractionParams::delta(1.2).unwrap(), 0.5)]);
        let geoms = [
            Geometry::Line,
            Geometry::HalfLine { wall: WallCondition::Neumann },
            Geometry::Box { length: 1.3, left: WallCondition::Dirichlet, right: WallCondition::Neumann },
            Geometry::Ring { length: 2.0 },
        ];
        let kk = Wavenumber::new(c(1.2, 0.05)).unwrap();
        for geom in geoms {
            let l = if matches!(geom, Geometry::Line | Geometry::Ring { .. }) { l.clone() } else { l.translated(0.6).unwrap() };
            let xi = 0.25;
            let row = green_row(&geom, &l, xi, kk).unwrap();
            for x in [-0.9, -0.1, 0.05, 0.2, 0.3, 0.9, 1.2] {
                if geom.check_point(x).is_err() || l.check_off_sites(x).is_err() {
                    continue;
                }
                let g = green(&geom, &l, x, xi, kk).unwrap();
                assert!(close(row.value(x), g.value, 1e-12), "{geom:?} {x}");
                assert!(close(row.derivative(x), g.derivative, 1e-12));
            }
        }
    }

    #[test]
    fn diagonal_integral_matches_quadrature() {
        let l = lat(&[(generic(), -0.4), (InteractionParams::delta(1.2).unwrap(), 0.5)]);
        let geoms = [
            (Geometry::Line, -2.0, 2.0, l.clone()),
            (Geometry::HalfLine { wall: WallCondition::Dirichlet }, 0.0, 3.0, l.translated(1.0).unwrap()),
            (Geometry::Box { length: 2.0, left: WallCondition::Neumann, right: WallCondition::Dirichlet }, 0.0, 2.0, l.translated(1.0).unwrap()),
            (Geometry::Ring { length: 2.0 }, -1.0, 1.0, l.clone()),
            (Geometry::Ring { length: 2.0 }, -0.9, 0.2, l.clone()),
            (Geometry::Ring { length: 2.0 }, -1.0, 1.0, Lattice::empty()),
        ];
        let kk = Wavenumber::new(c(1.7, 0.2)).unwrap();
        for (geom, a, b, l) in geoms {
            let pieces = diagonal_pieces(&geom, &l, kk).unwrap();
            let exact = diagonal_integral(&pieces, &geom, a, b, kk.value());
            let mut breaks: Vec<f64> = vec![a];
            breaks.extend(l.positions().filter(|y| *y > a && *y < b));
            breaks.push(b);
            let (xs, ws) = crate::numeric::composite_rule(&breaks, 0.05, 16);
            let quad: Complex64 = xs.iter().zip(&ws).map(|(&x, &w)| w * green(&geom, &l, x, x, kk).unwrap().value).sum();
            assert!(close(exact, quad, 1e-10), "{geom:?}: {exact} vs {quad}");
        }
    }
}
