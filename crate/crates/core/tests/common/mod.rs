#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use pointscatter::{Geometry, InteractionParams, Lattice, PlacedInteraction, WallCondition, Wavenumber};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `ad - bc = 1` with `c` solved from the others.
pub fn generic_params(rng: &mut ChaCha8Rng) -> InteractionParams {
    loop {
        let a = rng.random_range(-2.0..2.0);
        let d = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        if b.abs() < 0.2 {
            continue;
        }
        let phase = rng.random_range(-PI..PI);
        if let Ok(p) = InteractionParams::new(a, b, (a * d - 1.0) / b, d, phase) {
            return p;
        }
    }
}

/// Delta, delta-prime, generic real, or generic with a complex phase.
pub fn mixed_params(rng: &mut ChaCha8Rng) -> InteractionParams {
    match rng.random_range(0..4) {
        0 => InteractionParams::delta(rng.random_range(-3.0..3.0)).unwrap(),
        1 => InteractionParams::delta_prime(rng.random_range(-1.5..1.5)).unwrap(),
        2 => {
            let p = generic_params(rng);
            let phase = if rng.random_bool(0.5) { 0.0 } else { PI };
            InteractionParams::new(p.a(), p.b(), p.c(), p.d(), phase).unwrap()
        }
        _ => generic_params(rng),
    }
}

/// Sites as offsets from the first one, with gaps in `[0.3, 1)`.
pub fn template(rng: &mut ChaCha8Rng, n: usize) -> Vec<(InteractionParams, f64)> {
    let mut y = 0.0;
    (0..n)
        .map(|i| {
            if i > 0 {
                y += rng.random_range(0.3..1.0);
            }
            (mixed_params(rng), y)
        })
        .collect()
}

pub fn wall(rng: &mut ChaCha8Rng) -> WallCondition {
    if rng.random_bool(0.5) {
        WallCondition::Dirichlet
    } else {
        WallCondition::Neumann
    }
}

/// Places a template in geometry 0..4: line, half-line, box, ring.
pub fn place(rng: &mut ChaCha8Rng, which: usize, sites: &[(InteractionParams, f64)]) -> (Geometry, Lattice) {
    let span = sites.last().map_or(0.0, |s| s.1);
    let (geom, shift) = match which {
        0 => (Geometry::Line, -0.5 * span),
        1 => (Geometry::HalfLine { wall: wall(rng) }, rng.random_range(0.3..1.0)),
        2 => {
            let shift = rng.random_range(0.3..1.0);
            let length = shift + span + rng.random_range(0.3..1.0);
            (Geometry::Box { length, left: wall(rng), right: wall(rng) }, shift)
        }
        _ => (Geometry::Ring { length: span + rng.random_range(0.6..2.0) }, -0.5 * span),
    };
    let items = sites.iter().map(|&(p, y)| PlacedInteraction::new(p, y + shift).unwrap()).collect();
    (geom, Lattice::new(items).unwrap())
}

pub fn instance(rng: &mut ChaCha8Rng, which: usize, n: usize) -> (Geometry, Lattice) {
    let t = template(rng, n);
    place(rng, which, &t)
}

/// Point in the domain at least `clearance` from every site and wall.
pub fn point(rng: &mut ChaCha8Rng, geom: &Geometry, lat: &Lattice, clearance: f64) -> f64 {
    let (lo, hi) = match *geom {
        Geometry::Line => {
            let (a, b) = extent(lat);
            (a - 2.0, b + 2.0)
        }
        Geometry::HalfLine { .. } => (0.0, extent(lat).1 + 2.0),
        _ => geom.domain(),
    };
    loop {
        let x = rng.random_range(lo + clearance..hi - clearance);
        if lat.positions().all(|y| (x - y).abs() >= clearance) {
            return x;
        }
    }
}

pub fn extent(lat: &Lattice) -> (f64, f64) {
    let first = lat.positions().next().unwrap_or(0.0);
    let last = lat.positions().last().unwrap_or(0.0);
    (first, last)
}

/// Mostly complex `k` in the upper half plane, a quarter exactly real.
pub fn wavenumber(rng: &mut ChaCha8Rng) -> Wavenumber {
    let re = rng.random_range(0.3..4.0);
    let im = if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.01..0.5) };
    Wavenumber::new(Complex64::new(re, im)).unwrap()
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn uniform(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = (hi - lo) / (n - 1) as f64;
    ((0..n).map(|i| lo + h * i as f64).collect(), h)
}
