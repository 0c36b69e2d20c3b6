//! Eigenvalues of closed geometries, bound states of open ones, and the
//! broadened density of states.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::amplitudes::single_bound_poles;
use crate::composition::{box_characteristic, halfline_characteristic, line_characteristic, ring_characteristic};
use crate::error::{Error, Result};
use crate::greens::{box_denominator, diagonal_integral, diagonal_pieces, ring_denominator};
use crate::model::{Geometry, Lattice, Wavenumber};
use crate::numeric::{real_roots, RootScan};
use crate::oracle::ring_closure_defect;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MULTIPLICITY_PROBE: f64 = 1e-4;
const CLOSURE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRoot {
    pub k: f64,
    pub energy: f64,
    pub multiplicity: usize,
    /// `|D(k)|` of the Green-function denominator.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    /// `i kappa`.
    pub k: Complex64,
    pub energy: f64,
    /// `|1/T|` of the full lattice (open geometries) or `|D|` (closed ones).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumResult {
    pub eigen_k: Vec<EigenRoot>,
    pub bound_k: Vec<BoundState>,
    /// Argument-principle count over the scanned interval.
    pub winding: i64,
    /// Candidates discarded by the independent closure check.
    pub rejected: Vec<f64>,
}

fn characteristic(geom: &Geometry, lat: &Lattice, k: Complex64) -> Complex64 {
    match *geom {
        Geometry::Line => line_characteristic(lat, k),
        Geometry::HalfLine { wall } => halfline_characteristic(lat, wall, k),
        Geometry::Box { length, left, right } => box_characteristic(lat, length, left, right, k),
        Geometry::Ring { length } => ring_characteristic(lat, length, k),
    }
}

/// Green-function denominator of a closed geometry.
pub fn denominator(geom: &Geometry, lat: &Lattice, k: Wavenumber) -> Result<Complex64> {
    match *geom {
        Geometry::Box { length, left, right } => box_denominator(lat, length, left, right, k),
        Geometry::Ring { length } => ring_denominator(lat, length, k),
        _ => Err(Error::InvalidArgument(format!("no eigenvalue denominator for the {}", geom.name()))),
    }
}

fn extent(geom: &Geometry, lat: &Lattice) -> f64 {
    let (first, last) = match (lat.interactions().first(), lat.interactions().last()) {
        (Some(f), Some(l)) => (f.position, l.position),
        _ => (0.0, 0.0),
    };
    match *geom {
        Geometry::Line => last - first,
        Geometry::HalfLine { .. } => last,
        Geometry::Box { length, .. } | Geometry::Ring { length } => length,
    }
    .max(1e-3)
}

/// Zeros of the box or ring denominator on `(k_min, k_max)`.
pub fn find_eigenvalues(geom: &Geometry, lat: &Lattice, k_min: f64, k_max: f64) -> Result<SpectrumResult> {
    geom.validate(lat)?;
    let length = match *geom {
        Geometry::Box { length, .. } | Geometry::Ring { length } => length,
        _ => return Err(Error::InvalidArgument("eigenvalues need a box or ring geometry".into())),
    };
    if !(k_min > 0.0 && k_max > k_min && k_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < k_min < k_max (got {k_min}, {k_max})")));
    }
    let step = (PI / (4.0 * length)).min((k_max - k_min) / 2000.0);
    let scan = RootScan { lo: k_min, hi: k_max, step, half_height: 0.5 * step, probe: MULTIPLICITY_PROBE };
    let f = |z: Complex64| Ok(characteristic(geom, lat, z));
    let (roots, winding) = real_roots(&f, &scan)?;
    let mut result = SpectrumResult { winding, ..Default::default() };
    for r in roots {
        if matches!(geom, Geometry::Ring { .. }) && ring_closure_defect(lat, length, Complex64::new(r.t, 0.0)) > CLOSURE_TOLERANCE {
            result.rejected.push(r.t);
            continue;
        }
        let residual = denominator(geom, lat, Wavenumber::real(r.t)?)?.norm();
        result.eigen_k.push(EigenRoot { k: r.t, energy: r.t * r.t, multiplicity: r.multiplicity, residual });
    }
    Ok(result)
}

/// Negative-energy states `E = -kappa^2` with `kappa` in `(1e-9, kappa_max]`.
/// Open geometries are the primary use; closed ones are accepted too, with
/// the search starting at `1e-3 pi / L`.
pub fn find_bound_states(geom: &Geometry, lat: &Lattice, kappa_max: f64) -> Result<SpectrumResult> {
    geom.validate(lat)?;
    if !(kappa_max > 0.0 && kappa_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa_max = {kappa_max} must be positive")));
    }
    // closed geometries have a double zero at k = 0 that rounding makes
    // noisy; states below this floor fall inside the zero-energy window
    let (lo, damping) = match geom.length() {
        Some(length) => (1e-3 * PI / length, length),
        None => (1e-9, 0.0),
    };
    if kappa_max <= lo {
        return Ok(SpectrumResult::default());
    }
    let step = (kappa_max / 2000.0).min(PI / (4.0 * extent(geom, lat)));
    let scan = RootScan { lo, hi: kappa_max, step, half_height: 0.5 * step, probe: MULTIPLICITY_PROBE };
    let f = |z: Complex64| Ok(characteristic(geom, lat, I * z) * (-z * damping).exp());
    let (roots, winding) = real_roots(&f, &scan)?;
    let mut result = SpectrumResult { winding, ..Default::default() };
    for r in roots {
        let k = Complex64::new(0.0, r.t);
        let residual = match geom {
            Geometry::Line | Geometry::HalfLine { .. } => {
                f(Complex64::new(r.t, 0.0))?.norm() / (2.0 * r.t).powi(lat.len() as i32)
            }
            _ => denominator(geom, lat, Wavenumber::new(k)?)?.norm(),
        };
        for _ in 0..r.multiplicity {
            result.bound_k.push(BoundState { k, energy: -r.t * r.t, residual });
        }
    }
    result.bound_k.sort_by(|l, r| l.energy.total_cmp(&r.energy));
    if let (Geometry::Line, [site]) = (geom, lat.interactions()) {
        let closed: Vec<_> = single_bound_poles(&site.params)
            .into_iter()
            .filter(|p| p.k.re.abs() < 1e-12 && p.k.im <= kappa_max)
            .collect();
        let agrees = closed.len() == result.bound_k.len()
            && closed.iter().all(|p| result.bound_k.iter().any(|b| (b.k - p.k).norm() <= 1e-8 * p.k.norm().max(1.0)));
        if !agrees {
            return Err(Error::ScanTooCoarse { winding: closed.len() as i64, found: result.bound_k.len() });
        }
    }
    Ok(result)
}

/// `1e-3 max(1, |E|)`.
pub fn default_eta(energy: f64) -> f64 {
    1e-3 * energy.abs().max(1.0)
}

/// `rho(E) = -(1/pi) Im int_window G(x, x; E + i eta) dx` for each energy.
pub fn density_of_states(geom: &Geometry, lat: &Lattice, energies: &[f64], eta: f64, x_window: (f64, f64)) -> Result<Vec<f64>> {
    density_of_states_with(geom, lat, energies, |_| eta, x_window)
}

/// As [`density_of_states`] with an energy-dependent broadening.
pub fn density_of_states_with<F>(geom: &Geometry, lat: &Lattice, energies: &[f64], eta: F, x_window: (f64, f64)) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    geom.validate(lat)?;
    let (a, b) = x_window;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidArgument(format!("x_window ({a}, {b}) must be a finite increasing pair")));
    }
    let (lo, hi) = geom.domain();
    if a < lo || b > hi {
        return Err(Error::OutsideDomain { position: if a < lo { a } else { b }, domain: format!("({lo}, {hi}) of the {}", geom.name()) });
    }
    energies
        .par_iter()
        .map(|&e| {
            let eta = eta(e);
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
            }
            let k = Wavenumber::from_energy(Complex64::new(e, eta))?;
            let too_small = |_| Error::EtaTooSmall { eta, energy: e };
            let pieces = diagonal_pieces(geom, lat, k).map_err(|err| match err {
                Error::SpectralPole { .. } | Error::ResonanceDenominator { .. } | Error::PoleHit { .. } => too_small(()),
                other => other,
            })?;
            let integral = diagonal_integral(&pieces, geom, a, b, k.value());
            if !integral.is_finite() {
                return Err(too_small(()));
            }
            Ok(-integral.im / PI)
        })
        .collect()
}
