//! Composite scattering coefficients of contiguous runs of interactions.

use num_complex::Complex64;

use crate::amplitudes::{bare_amplitudes, denominator, Amplitudes};
use crate::error::{Error, Result};
use crate::model::{InteractionParams, Lattice, WallCondition, Wavenumber};

const I: Complex64 = Complex64::new(0.0, 1.0);
const RESONANCE_FLOOR: f64 = 1e-14;

/// Coefficients of the block `l..=n` (1-based). Reflection `r_plus` is
/// referenced at `leftmost_position`, `r_minus` at `rightmost_position`, and
/// the transmissions include the propagation phase between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockAmplitudes {
    pub r_plus: Complex64,
    pub r_minus: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub first_index: usize,
    pub last_index: usize,
    pub leftmost_position: f64,
    pub rightmost_position: f64,
}

impl BlockAmplitudes {
    pub fn is_empty(&self) -> bool {
        self.first_index > self.last_index
    }

    pub fn as_amplitudes(&self, k: Wavenumber) -> Amplitudes {
        Amplitudes {
            r_plus: self.r_plus,
            r_minus: self.r_minus,
            t_plus: self.t_plus,
            t_minus: self.t_minus,
            at_k: k,
        }
    }
}

/// One scatterer at a fixed position: an interaction or a wall.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub position: f64,
    pub amps: Amplitudes,
}

impl Cell {
    pub fn mirrored(&self) -> Self {
        Self { position: -self.position, amps: self.amps.swapped() }
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { position: self.position + by, amps: self.amps }
    }
}

/// Composite of zero or more cells between `left` and `right`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub r_plus: Complex64,
    pub r_minus: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub left: f64,
    pub right: f64,
}

impl Block {
    pub fn empty(at: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { r_plus: zero, r_minus: zero, t_plus: one, t_minus: one, left: at, right: at }
    }

    /// `R+ R- exp(2ik(y_a - y_b)) - T+ T- exp(-2ik(y_b - y_a))`.
    pub fn k_factor(&self, k: Complex64) -> Complex64 {
        let span = self.right - self.left;
        (self.r_plus * self.r_minus - self.t_plus * self.t_minus) * (-2.0 * I * k * span).exp()
    }
}

pub(crate) fn cell_of(params: &InteractionParams, position: f64, k: Wavenumber) -> Result<Cell> {
    Ok(Cell { position, amps: bare_amplitudes(params, k)? })
}

pub(crate) fn wall_cell(wall: WallCondition, position: f64, k: Wavenumber) -> Cell {
    Cell { position, amps: Amplitudes::mirror(wall.reflection(), k) }
}

pub(crate) fn lattice_cells(lat: &Lattice, k: Wavenumber) -> Result<Vec<Cell>> {
    lat.interactions().iter().map(|s| cell_of(&s.params, s.position, k)).collect()
}

/// Absorbs the cells one at a time from the left. `offset` is the 1-based
/// index of the first cell, used only for error reporting.
pub(crate) fn compose(cells: &[Cell], k: Complex64, offset: usize) -> Result<Option<Block>> {
    let Some(first) = cells.first() else { return Ok(None) };
    let mut b = Block {
        r_plus: first.amps.r_plus,
        r_minus: first.amps.r_minus,
        t_plus: first.amps.t_plus,
        t_minus: first.amps.t_minus,
        left: first.position,
        right: first.position,
    };
    for (i, cell) in cells.iter().enumerate().skip(1) {
        let hop = (I * k * (cell.position - b.right)).exp();
        let hop2 = hop * hop;
        let a = &cell.amps;
        let den = 1.0 - b.r_minus * a.r_plus * hop2;
        if den.norm() < RESONANCE_FLOOR {
            return Err(Error::ResonanceDenominator {
                left_index: offset + i - 1,
                right_index: offset + i,
                modulus: den.norm(),
            });
        }
        let r_plus = b.r_plus + b.t_plus * b.t_minus * a.r_plus * hop2 / den;
        let r_minus = a.r_minus + a.t_plus * a.t_minus * b.r_minus * hop2 / den;
        b.t_plus = b.t_plus * a.t_plus * hop / den;
        b.t_minus = b.t_minus * a.t_minus * hop / den;
        b.r_plus = r_plus;
        b.r_minus = r_minus;
        b.right = cell.position;
    }
    Ok(Some(b))
}

pub(crate) fn compose_or_empty(cells: &[Cell], k: Complex64, offset: usize, at: f64) -> Result<Block> {
    Ok(compose(cells, k, offset)?.unwrap_or_else(|| Block::empty(at)))
}

/// Block coefficients of sites `l..=n` (1-based). `l = n + 1` gives the
/// empty block `R = 0, T = 1`.
pub fn compose_block(lat: &Lattice, l: usize, n: usize, k: Wavenumber) -> Result<BlockAmplitudes> {
    let len = lat.len();
    if l == 0 || n > len || l > n + 1 {
        return Err(Error::InvalidArgument(format!(
            "block {l}..{n} outside lattice of {len} interactions"
        )));
    }
    let sites = &lat.interactions()[l - 1..n];
    let cells: Vec<Cell> = sites
        .iter()
        .map(|s| cell_of(&s.params, s.position, k))
        .collect::<Result<_>>()?;
    let at = lat.interactions().get(n.max(1) - 1).map_or(0.0, |s| s.position);
    let b = compose_or_empty(&cells, k.value(), l, at)?;
    Ok(BlockAmplitudes {
        r_plus: b.r_plus,
        r_minus: b.r_minus,
        t_plus: b.t_plus,
        t_minus: b.t_minus,
        first_index: l,
        last_index: n,
        leftmost_position: b.left,
        rightmost_position: b.right,
    })
}

pub fn k_factor(block: &BlockAmplitudes, k: Wavenumber) -> Complex64 {
    Block {
        r_plus: block.r_plus,
        r_minus: block.r_minus,
        t_plus: block.t_plus,
        t_minus: block.t_minus,
        left: block.leftmost_position,
        right: block.rightmost_position,
    }
    .k_factor(k.value())
}

pub(crate) type Mat2 = [[Complex64; 2]; 2];

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Product of site matrices acting on global plane-wave amplitudes
/// `(A, B)` of `A e^{ikx} + B e^{-ikx}`, scaled by `(2ik)^N` so that every
/// entry is entire in `k`.
pub(crate) fn scaled_transfer(lat: &Lattice, k: Complex64) -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m: Mat2 = [[one, zero], [zero, one]];
    for site in lat.interactions() {
        let p = &site.params;
        let omega = p.omega();
        let bk2 = p.b() * k * k;
        let skew = I * k * (p.d() - p.a());
        let n_plus = p.c() + skew + bk2;
        let n_minus = p.c() - skew + bk2;
        let phase = (2.0 * I * k * site.position).exp();
        let s: Mat2 = [
            [-omega * denominator(p, -k), omega * n_minus / phase],
            [-omega * n_plus * phase, omega * denominator(p, k)],
        ];
        m = mat_mul(&s, &m);
    }
    m
}

fn two_ik_power(k: Complex64, n: usize) -> Complex64 {
    (2.0 * I * k).powu(n as u32)
}

/// Zero exactly at bound states of the open line.
pub(crate) fn line_characteristic(lat: &Lattice, k: Complex64) -> Complex64 {
    scaled_transfer(lat, k)[1][1]
}

/// Zero exactly at bound states of the half-line with the wall at 0.
pub(crate) fn halfline_characteristic(lat: &Lattice, wall: WallCondition, k: Complex64) -> Complex64 {
    let m = scaled_transfer(lat, k);
    m[1][1] - wall.sign() * m[1][0]
}

/// Zero exactly at eigenvalues of the box `[0, length]`.
pub(crate) fn box_characteristic(
    lat: &Lattice,
    length: f64,
    left: WallCondition,
    right: WallCondition,
    k: Complex64,
) -> Complex64 {
    let m = scaled_transfer(lat, k);
    let s0 = left.sign();
    let e = (I * k * length).exp();
    e * (m[0][1] - s0 * m[0][0]) + right.sign() / e * (m[1][1] - s0 * m[1][0])
}

/// Zero exactly at eigenvalues of the ring `[-length/2, length/2]`.
pub(crate) fn ring_characteristic(lat: &Lattice, length: f64, k: Complex64) -> Complex64 {
    let m = scaled_transfer(lat, k);
    let scale = two_ik_power(k, lat.len());
    let e = (I * k * length).exp();
    let a = m[0][0] - scale / e;
    let d = m[1][1] - scale * e;
    a * d - m[0][1] * m[1][0]
}
