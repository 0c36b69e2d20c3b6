//! Transfer-matrix ground truth built only from the matching rule of each
//! interaction and free propagation between them.

use num_complex::Complex64;

use crate::composition::BlockAmplitudes;
use crate::error::{Error, Result};
use crate::model::{Geometry, InteractionParams, Lattice, WallCondition, Wavenumber};

const I: Complex64 = Complex64::new(0.0, 1.0);
const RANK_THRESHOLD: f64 = 1e-10;

/// Value and derivative of a wave function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferState {
    pub psi: Complex64,
    pub dpsi: Complex64,
}

impl TransferState {
    pub fn new(psi: Complex64, dpsi: Complex64) -> Self {
        Self { psi, dpsi }
    }

    fn real(psi: f64, dpsi: f64) -> Self {
        Self { psi: psi.into(), dpsi: dpsi.into() }
    }
}

/// `u psi_v' - u' psi_v`.
pub fn wronskian(u: TransferState, v: TransferState) -> Complex64 {
    u.psi * v.dpsi - u.dpsi * v.psi
}

/// Crosses an interaction from its left side to its right side.
pub fn transfer_step(p: &InteractionParams, s: TransferState) -> TransferState {
    let w = p.omega();
    TransferState {
        psi: w * (p.a() * s.psi + p.b() * s.dpsi),
        dpsi: w * (p.c() * s.psi + p.d() * s.dpsi),
    }
}

/// Crosses an interaction from its right side to its left side.
pub fn inverse_transfer_step(p: &InteractionParams, s: TransferState) -> TransferState {
    let w = p.omega().conj() / p.determinant();
    TransferState {
        psi: w * (p.d() * s.psi - p.b() * s.dpsi),
        dpsi: w * (-p.c() * s.psi + p.a() * s.dpsi),
    }
}

pub fn free_propagate(s: TransferState, dx: f64, k: Complex64) -> TransferState {
    if dx == 0.0 {
        return s;
    }
    let (sin, cos) = ((k * dx).sin(), (k * dx).cos());
    TransferState { psi: cos * s.psi + sin / k * s.dpsi, dpsi: -k * sin * s.psi + cos * s.dpsi }
}

/// Carries `s` from `from` to `to` through every interaction strictly between.
fn propagate(sites: &[(InteractionParams, f64)], from: f64, s: TransferState, to: f64, k: Complex64) -> TransferState {
    let mut x = from;
    let mut s = s;
    if to >= from {
        for (p, y) in sites.iter().filter(|(_, y)| *y > from && *y < to) {
            s = transfer_step(p, free_propagate(s, y - x, k));
            x = *y;
        }
    } else {
        for (p, y) in sites.iter().rev().filter(|(_, y)| *y < from && *y > to) {
            s = inverse_transfer_step(p, free_propagate(s, y - x, k));
            x = *y;
        }
    }
    free_propagate(s, to - x, k)
}

fn site_list(lat: &Lattice) -> Vec<(InteractionParams, f64)> {
    lat.interactions().iter().map(|s| (s.params, s.position)).collect()
}

fn wall_state(wall: WallCondition) -> TransferState {
    match wall {
        WallCondition::Dirichlet => TransferState::real(0.0, 1.0),
        WallCondition::Neumann => TransferState::real(1.0, 0.0),
    }
}

fn outgoing(x: f64, k: Complex64, direction: f64) -> TransferState {
    let e = (direction * I * k * x).exp();
    TransferState { psi: e, dpsi: direction * I * k * e }
}

fn vanishing(k: Complex64) -> Error {
    Error::WronskianVanishes { re: k.re, im: k.im }
}

/// Green function `u_left(x_<) u_right(x_>) / W(x_i)` for the line, half-line
/// and box; periodic closure with a rank test for the ring.
pub fn oracle_green(geom: &Geometry, lat: &Lattice, x_f: f64, x_i: f64, k: Wavenumber) -> Result<Complex64> {
    geom.validate(lat)?;
    geom.check_point(x_f)?;
    geom.check_point(x_i)?;
    lat.check_off_sites(x_f)?;
    lat.check_off_sites(x_i)?;
    let kv = k.value();
    let sites = site_list(lat);
    if let Geometry::Ring { length } = *geom {
        return ring_green(&sites, length, x_f, x_i, kv);
    }
    let lo = sites.first().map_or(x_i, |s| s.1).min(x_f).min(x_i) - 1.0;
    let hi = sites.last().map_or(x_i, |s| s.1).max(x_f).max(x_i) + 1.0;
    let (left_x, left) = match *geom {
        Geometry::Line => (lo, outgoing(lo, kv, -1.0)),
        Geometry::HalfLine { wall } | Geometry::Box { left: wall, .. } => (0.0, wall_state(wall)),
        Geometry::Ring { .. } => unreachable!(),
    };
    let (right_x, right) = match *geom {
        Geometry::Box { length, right, .. } => (length, wall_state(right)),
        _ => (hi, outgoing(hi, kv, 1.0)),
    };
    let ul_i = propagate(&sites, left_x, left, x_i, kv);
    let ur_i = propagate(&sites, right_x, right, x_i, kv);
    let w = wronskian(ul_i, ur_i);
    let scale = (ul_i.psi.norm() + ul_i.dpsi.norm() / kv.norm().max(1e-300))
        * (ur_i.psi.norm() * kv.norm() + ur_i.dpsi.norm());
    if w.norm() <= 1e-13 * scale {
        return Err(vanishing(kv));
    }
    let (small, large) = if x_f < x_i { (x_f, x_i) } else { (x_i, x_f) };
    let ul = if small == x_i { ul_i } else { propagate(&sites, left_x, left, small, kv) };
    let ur = if large == x_i { ur_i } else { propagate(&sites, right_x, right, large, kv) };
    Ok(ul.psi * ur.psi / w)
}

/// Singular values of a 2x2 complex matrix, largest first.
fn singular_values(m: [[Complex64; 2]; 2]) -> (f64, f64) {
    let fro2 = m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let big = (0.5 * (fro2 + disc)).sqrt();
    let small = if big > 0.0 { det / big } else { 0.0 };
    (big, small)
}

fn lift(x: f64, cut: f64, length: f64) -> f64 {
    cut + (x - cut).rem_euclid(length)
}

/// Unrolls the ring starting at the source: with `M` the monodromy from
/// `x_i+` once around, `(G, G')(x_i+) = (I - M)^{-1} (0, 1)`.
fn ring_green(sites: &[(InteractionParams, f64)], length: f64, x_f: f64, x_i: f64, k: Complex64) -> Result<Complex64> {
    let mut unrolled: Vec<(InteractionParams, f64)> = sites.iter().map(|&(p, y)| (p, lift(y, x_i, length))).collect();
    unrolled.sort_by(|l, r| l.1.total_cmp(&r.1));
    let end = x_i + length;
    let m0 = propagate(&unrolled, x_i, TransferState::real(1.0, 0.0), end, k);
    let m1 = propagate(&unrolled, x_i, TransferState::real(0.0, 1.0), end, k);
    let one = Complex64::new(1.0, 0.0);
    let sys = [[one - m0.psi, -m1.psi], [-m0.dpsi, one - m1.dpsi]];
    let (big, small) = singular_values(sys);
    if small <= RANK_THRESHOLD * big.max(1.0) {
        return Err(vanishing(k));
    }
    let det = sys[0][0] * sys[1][1] - sys[0][1] * sys[1][0];
    let start = TransferState { psi: -sys[0][1] / det, dpsi: sys[0][0] / det };
    let xf = if x_f >= x_i { x_f } else { x_f + length };
    Ok(propagate(&unrolled, x_i, start, xf, k).psi)
}

/// Block coefficients read off the product of matching and propagation
/// matrices, expressed in plane waves local to the block end points.
pub fn oracle_block_amplitudes(lat: &Lattice, l: usize, n: usize, k: Wavenumber) -> Result<BlockAmplitudes> {
    let len = lat.len();
    if l == 0 || n > len || l > n + 1 {
        return Err(Error::InvalidArgument(format!("block {l}..{n} outside lattice of {len} interactions")));
    }
    let kv = k.value();
    let sites = &lat.interactions()[l - 1..n];
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if sites.is_empty() {
        let at = lat.interactions().get(n.max(1) - 1).map_or(0.0, |s| s.position);
        return Ok(BlockAmplitudes {
            r_plus: zero,
            r_minus: zero,
            t_plus: one,
            t_minus: one,
            first_index: l,
            last_index: n,
            leftmost_position: at,
            rightmost_position: at,
        });
    }
    // columns: images of (1, 0) and (0, 1) at the left end
    let mut cols = [TransferState::real(1.0, 0.0), TransferState::real(0.0, 1.0)];
    let mut x = sites[0].position;
    for s in sites {
        for c in cols.iter_mut() {
            *c = transfer_step(&s.params, free_propagate(*c, s.position - x, kv));
        }
        x = s.position;
    }
    let m = [[cols[0].psi, cols[1].psi], [cols[0].dpsi, cols[1].dpsi]];
    // plane-wave basis: (psi, psi') = Q (A, B), Q = [[1, 1], [ik, -ik]]
    let ik = I * kv;
    let q = [[one, one], [ik, -ik]];
    let qinv = [[0.5 * one, 0.5 / ik], [0.5 * one, -0.5 / ik]];
    let mq = mul(&m, &q);
    let t = mul(&qinv, &mq);
    // det t = det m, known exactly; t00 + t01 r+ cancels when T is small
    let det: Complex64 = sites.iter().map(|s| s.params.omega() * s.params.omega() * s.params.determinant()).product();
    Ok(BlockAmplitudes {
        r_plus: -t[1][0] / t[1][1],
        r_minus: t[0][1] / t[1][1],
        t_plus: det / t[1][1],
        t_minus: one / t[1][1],
        first_index: l,
        last_index: n,
        leftmost_position: sites[0].position,
        rightmost_position: x,
    })
}

fn mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sign_change_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let h = (hi - lo) / samples as f64;
    let mut roots = Vec::new();
    let mut prev = f(lo);
    let mut prev_x = lo;
    for i in 1..=samples {
        let x = lo + h * i as f64;
        let cur = f(x);
        if cur == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && (cur > 0.0) != (prev > 0.0) {
            roots.push(bisect(f, prev_x, x));
        }
        prev = cur;
        prev_x = x;
    }
    roots
}

fn total_phase(sites: &[(InteractionParams, f64)]) -> Complex64 {
    sites.iter().map(|(p, _)| p.omega()).product()
}

/// Box eigen-wavenumbers in `(k_min, k_max)` by shooting from the left wall.
/// Requires every interaction to have real `omega` up to a common phase,
/// which always holds since the shot is a real solution times `prod omega`.
pub fn oracle_box_eigenvalues(
    lat: &Lattice,
    length: f64,
    left: WallCondition,
    right: WallCondition,
    k_min: f64,
    k_max: f64,
) -> Vec<f64> {
    let sites = site_list(lat);
    let phase = total_phase(&sites).conj();
    let start = wall_state(left);
    let f = |k: f64| {
        let s = propagate(&sites, 0.0, start, length, Complex64::new(k, 0.0));
        let v = match right {
            WallCondition::Dirichlet => s.psi,
            WallCondition::Neumann => s.dpsi / k,
        };
        (v * phase).re
    };
    let samples = (((k_max - k_min) * length * 8.0) as usize).max(4000);
    sign_change_roots(&f, k_min, k_max, samples)
}

/// Bound-state energies of the open line for `kappa` in `(0, kappa_max]`,
/// from the vanishing of the growing tail of the left-decaying solution.
pub fn oracle_line_bound_states(lat: &Lattice, kappa_max: f64) -> Vec<f64> {
    let sites = site_list(lat);
    if sites.is_empty() {
        return Vec::new();
    }
    let phase = total_phase(&sites).conj();
    let x0 = sites[0].1 - 1.0;
    let x1 = sites[sites.len() - 1].1 + 1.0;
    let f = |kappa: f64| {
        let k = Complex64::new(0.0, kappa);
        let e = (kappa * (x0 - x1)).exp();
        let s = propagate(&sites, x0, TransferState::real(1.0, kappa), x1, k);
        ((s.psi + s.dpsi / kappa) * phase * e).re
    };
    let mut energies: Vec<f64> = sign_change_roots(&f, 1e-6, kappa_max, 8000)
        .into_iter()
        .map(|kappa| -kappa * kappa)
        .collect();
    energies.sort_by(f64::total_cmp);
    energies
}

/// Relative smallest singular value of `I - monodromy`; zero at ring eigenvalues.
pub fn ring_closure_defect(lat: &Lattice, length: f64, k: Complex64) -> f64 {
    let sites = site_list(lat);
    let from = -0.5 * length;
    let to = 0.5 * length;
    let a = propagate(&sites, from, TransferState::real(1.0, 0.0), to, k);
    let b = propagate(&sites, from, TransferState::real(0.0, 1.0), to, k);
    let one = Complex64::new(1.0, 0.0);
    let sys = [[one - a.psi, -b.psi], [-a.dpsi, one - b.dpsi]];
    let scale = [[a.psi, b.psi], [a.dpsi, b.dpsi]];
    let (big, _) = singular_values(scale);
    singular_values(sys).1 / big.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_lattice, PlacedInteraction};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn step_examples() {
        let s = TransferState::real(1.0, 0.0);
        assert_eq!(transfer_step(&InteractionParams::identity(), s), s);
        assert_eq!(transfer_step(&InteractionParams::delta(2.0).unwrap(), s), TransferState::real(1.0, 2.0));
        let s = TransferState::real(1.0, 1.0);
        assert_eq!(transfer_step(&InteractionParams::delta_prime(2.0).unwrap(), s), TransferState::real(3.0, 1.0));
        let p = InteractionParams::new(2.0, 0.5, 1.0, 0.75, 0.4).unwrap();
        let s = TransferState::new(c(0.3, 0.1), c(-1.0, 2.0));
        let back = inverse_transfer_step(&p, transfer_step(&p, s));
        assert!((back.psi - s.psi).norm() < 1e-15 && (back.dpsi - s.dpsi).norm() < 1e-15);
    }

    #[test]
    fn propagation_examples() {
        let k = c(1.3, 0.0);
        let s = TransferState::new(c(1.0, 0.0), c(0.0, 1.3));
        assert_eq!(free_propagate(s, 0.0, k), s);
        let t = free_propagate(s, 0.7, k);
        let e = (c(0.0, 1.3 * 0.7)).exp();
        assert!((t.psi - e).norm() < 1e-15 && (t.dpsi - c(0.0, 1.3) * e).norm() < 1e-15);
        let u = TransferState::real(1.0, 0.0);
        let v = TransferState::real(0.0, 1.0);
        let w = wronskian(free_propagate(u, 2.3, c(0.7, 0.2)), free_propagate(v, 2.3, c(0.7, 0.2)));
        assert!((w - 1.0).norm() < 1e-14);
    }

    #[test]
    fn wronskian_jump_is_omega_squared() {
        let p = InteractionParams::new(1.5, 0.2, 0.5, (1.0 + 0.1) / 1.5, 0.9).unwrap();
        let u = TransferState::new(c(1.0, 0.5), c(0.2, -0.3));
        let v = TransferState::new(c(-0.4, 0.1), c(1.1, 0.0));
        let ratio = wronskian(transfer_step(&p, u), transfer_step(&p, v)) / wronskian(u, v);
        assert!((ratio - p.omega() * p.omega()).norm() < 1e-14);
    }

    #[test]
    fn free_line_green() {
        let k = Wavenumber::real(1.7).unwrap();
        let g = oracle_green(&Geometry::Line, &Lattice::empty(), 0.4, -1.1, k).unwrap();
        let want = (c(0.0, 1.7 * 1.5)).exp() / c(0.0, 3.4);
        assert!((g - want).norm() < 1e-13);
    }

    #[test]
    fn single_delta_line_green() {
        let gamma = 1.3;
        let lat = make_lattice(vec![PlacedInteraction::new(InteractionParams::delta(gamma).unwrap(), 0.0).unwrap()]).unwrap();
        let k = Wavenumber::real(0.9).unwrap();
        let kv = c(0.9, 0.0);
        for (xf, xi) in [(1.0, -0.5), (-2.0, -0.3), (0.4, 1.2)] {
            let g = oracle_green(&Geometry::Line, &lat, xf, xi, k).unwrap();
            let want = if (xf > 0.0) != (xi > 0.0) {
                (I * kv * f64::abs(xf - xi)).exp() / (2.0 * I * kv - gamma)
            } else {
                let free = (I * kv * f64::abs(xf - xi)).exp() / (2.0 * I * kv);
                free + gamma * (I * kv * (xf.abs() + xi.abs())).exp() / (2.0 * I * kv * (2.0 * I * kv - gamma))
            };
            assert!((g - want).norm() < 1e-13, "{g} vs {want}");
        }
    }

    #[test]
    fn empty_dirichlet_box() {
        let l = 2.0;
        let geom = Geometry::Box { length: l, left: WallCondition::Dirichlet, right: WallCondition::Dirichlet };
        let k = 1.1;
        let g = oracle_green(&geom, &Lattice::empty(), 1.5, 0.6, Wavenumber::real(k).unwrap()).unwrap();
        let want = -(k * 0.6).sin() * (k * (l - 1.5)).sin() / (k * (k * l).sin());
        assert!((g - want).norm() < 1e-13);
    }

    #[test]
    fn empty_ring_green_and_defect() {
        let l = 3.0;
        let k = c(1.2, 0.0);
        let g = oracle_green(&Geometry::Ring { length: l }, &Lattice::empty(), 0.9, -0.4, Wavenumber::new(k).unwrap()).unwrap();
        let d = 1.3;
        let want = ((I * k * d).exp() + (I * k * (l - d)).exp()) / (2.0 * I * k * (1.0 - (I * k * l).exp()));
        assert!((g - want).norm() < 1e-13);
        let pi = std::f64::consts::PI;
        assert!(ring_closure_defect(&Lattice::empty(), 2.0 * pi, c(3.0, 0.0)) < 1e-13);
        assert!(ring_closure_defect(&Lattice::empty(), 2.0 * pi, c(3.5, 0.0)) > 1e-3);
        let r = oracle_green(&Geometry::Ring { length: 2.0 * pi }, &Lattice::empty(), 0.1, 0.2, Wavenumber::real(2.0).unwrap());
        assert!(matches!(r, Err(Error::WronskianVanishes { .. })));
    }

    #[test]
    fn block_single_site() {
        let p = InteractionParams::new(2.0, 0.5, 1.0, 0.75, 0.3).unwrap();
        let lat = make_lattice(vec![PlacedInteraction::new(p, 0.7).unwrap()]).unwrap();
        let k = Wavenumber::real(1.4).unwrap();
        let b = oracle_block_amplitudes(&lat, 1, 1, k).unwrap();
        let a = crate::amplitudes::bare_amplitudes(&p, k).unwrap();
        assert!((b.r_plus - a.r_plus).norm() < 1e-13);
        assert!((b.r_minus - a.r_minus).norm() < 1e-13);
        assert!((b.t_plus - a.t_plus).norm() < 1e-13);
        assert!((b.t_minus - a.t_minus).norm() < 1e-13);
    }

    #[test]
    fn block_identity_pair() {
        let id = InteractionParams::identity();
        let lat = make_lattice(vec![PlacedInteraction::new(id, 0.0).unwrap(), PlacedInteraction::new(id, 1.0).unwrap()]).unwrap();
        let b = oracle_block_amplitudes(&lat, 1, 2, Wavenumber::real(1.0).unwrap()).unwrap();
        assert!(b.r_plus.norm() < 1e-15 && b.r_minus.norm() < 1e-15);
        assert!((b.t_plus - c(0.0, 1.0).exp()).norm() < 1e-15);
    }

    #[test]
    fn shooting_empty_box() {
        let pi = std::f64::consts::PI;
        let d = WallCondition::Dirichlet;
        let n = WallCondition::Neumann;
        let ks = oracle_box_eigenvalues(&Lattice::empty(), pi, d, d, 0.5, 5.5);
        assert_eq!(ks.len(), 5);
        for (i, k) in ks.iter().enumerate() {
            assert!((k - (i + 1) as f64).abs() < 1e-12);
        }
        let ks = oracle_box_eigenvalues(&Lattice::empty(), pi, d, n, 0.1, 3.0);
        assert_eq!(ks.len(), 3);
        assert!((ks[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shooting_delta_bound_state() {
        let lat = make_lattice(vec![PlacedInteraction::new(InteractionParams::delta(-2.0).unwrap(), 0.5).unwrap()]).unwrap();
        let e = oracle_line_bound_states(&lat, 5.0);
        assert_eq!(e.len(), 1);
        assert!((e[0] + 1.0).abs() < 1e-12);
    }
}
