//! C ABI over `pointscatter`.
//!
//! Every fallible call returns a `PsStatus`; on failure a message is kept in
//! thread-local storage and read with `ps_last_error_message`. Lattices and
//! root lists are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use pointscatter::composition::compose_block;
use pointscatter::dynamics::{evolve, GaussianPacket};
use pointscatter::greens::green;
use pointscatter::spectrum::{density_of_states, find_bound_states, find_eigenvalues};
use pointscatter::{Error, Geometry, InteractionParams, Lattice, PlacedInteraction, WallCondition, Wavenumber};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsGeometryKind {
    Line = 0,
    HalfLine = 1,
    Box = 2,
    Ring = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsWall {
    Dirichlet = 0,
    Neumann = 1,
}

/// `length` is read for boxes and rings, `left_wall` for half-lines and
/// boxes, `right_wall` for boxes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsGeometry {
    pub kind: PsGeometryKind,
    pub length: f64,
    pub left_wall: PsWall,
    pub right_wall: PsWall,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsInteraction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub omega_phase: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsAmplitudes {
    pub r_plus_re: f64,
    pub r_plus_im: f64,
    pub r_minus_re: f64,
    pub r_minus_im: f64,
    pub t_plus_re: f64,
    pub t_plus_im: f64,
    pub t_minus_re: f64,
    pub t_minus_im: f64,
}

/// Opaque lattice.
pub struct PsLattice(Lattice);

/// Opaque list of roots: eigen-wavenumbers or bound-state `kappa`.
pub struct PsRoots(Vec<(f64, usize, f64)>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(e: Error) -> PsStatus {
    set_error(&e.to_string());
    if e.is_numerical() {
        PsStatus::Numerical
    } else {
        PsStatus::InvalidArgument
    }
}

fn null(name: &str) -> PsStatus {
    set_error(&format!("`{name}` is null"));
    PsStatus::NullPointer
}

fn guard(f: impl FnOnce() -> PsStatus) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == PsStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

fn wall(w: PsWall) -> WallCondition {
    match w {
        PsWall::Dirichlet => WallCondition::Dirichlet,
        PsWall::Neumann => WallCondition::Neumann,
    }
}

fn geometry(g: &PsGeometry) -> Geometry {
    match g.kind {
        PsGeometryKind::Line => Geometry::Line,
        PsGeometryKind::HalfLine => Geometry::HalfLine { wall: wall(g.left_wall) },
        PsGeometryKind::Box => Geometry::Box { length: g.length, left: wall(g.left_wall), right: wall(g.right_wall) },
        PsGeometryKind::Ring => Geometry::Ring { length: g.length },
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a lattice from `count` interactions. Positions need not be sorted.
///
/// # Safety
/// `items` must point to `count` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_lattice_new(items: *const PsInteraction, count: usize, out: *mut *mut PsLattice) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(items) = slice(items, count) else { return null("items") };
        let placed: Result<Vec<_>, Error> = items
            .iter()
            .map(|i| PlacedInteraction::new(InteractionParams::new(i.a, i.b, i.c, i.d, i.omega_phase)?, i.y))
            .collect();
        match placed.and_then(Lattice::new) {
            Ok(lat) => {
                *out = Box::into_raw(Box::new(PsLattice(lat)));
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `lattice` must be null or a handle from `ps_lattice_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_lattice_free(lattice: *mut PsLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// # Safety
/// `lattice` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_lattice_len(lattice: *const PsLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.len())
}

/// Reflection and transmission of the whole lattice at real `k`, with
/// reflections referenced at the outermost sites.
///
/// # Safety
/// `lattice` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_amplitudes(lattice: *const PsLattice, k: f64, out: *mut PsAmplitudes) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        if out.is_null() {
            return null("out");
        }
        let result = Wavenumber::real(k).and_then(|k| compose_block(&lat.0, 1, lat.0.len(), k));
        match result {
            Ok(b) => {
                *out = PsAmplitudes {
                    r_plus_re: b.r_plus.re,
                    r_plus_im: b.r_plus.im,
                    r_minus_re: b.r_minus.re,
                    r_minus_im: b.r_minus.im,
                    t_plus_re: b.t_plus.re,
                    t_plus_im: b.t_plus.im,
                    t_minus_re: b.t_minus.re,
                    t_minus_im: b.t_minus.im,
                };
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `G(x_f, x_i; k)` with complex `k = k_re + i k_im`.
///
/// # Safety
/// `lattice` must be a live handle; `out_re` and `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_green(
    geometry_: PsGeometry,
    lattice: *const PsLattice,
    x_f: f64,
    x_i: f64,
    k_re: f64,
    k_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        if out_re.is_null() || out_im.is_null() {
            return null("out");
        }
        let geom = geometry(&geometry_);
        match Wavenumber::new(Complex64::new(k_re, k_im)).and_then(|k| green(&geom, &lat.0, x_f, x_i, k)) {
            Ok(g) => {
                *out_re = g.value.re;
                *out_im = g.value.im;
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Box or ring eigen-wavenumbers in `(k_min, k_max)`.
///
/// # Safety
/// `lattice` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_find_eigenvalues(
    geometry_: PsGeometry,
    lattice: *const PsLattice,
    k_min: f64,
    k_max: f64,
    out: *mut *mut PsRoots,
) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        if out.is_null() {
            return null("out");
        }
        match find_eigenvalues(&geometry(&geometry_), &lat.0, k_min, k_max) {
            Ok(r) => {
                let roots = r.eigen_k.iter().map(|e| (e.k, e.multiplicity, e.residual)).collect();
                *out = Box::into_raw(Box::new(PsRoots(roots)));
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Bound states `E = -kappa^2`, one entry per state, with `kappa` in
/// `(0, kappa_max]`.
///
/// # Safety
/// `lattice` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_find_bound_states(
    geometry_: PsGeometry,
    lattice: *const PsLattice,
    kappa_max: f64,
    out: *mut *mut PsRoots,
) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        if out.is_null() {
            return null("out");
        }
        match find_bound_states(&geometry(&geometry_), &lat.0, kappa_max) {
            Ok(r) => {
                let roots = r.bound_k.iter().map(|b| (b.k.im, 1, b.residual)).collect();
                *out = Box::into_raw(Box::new(PsRoots(roots)));
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `roots` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_roots_len(roots: *const PsRoots) -> usize {
    roots.as_ref().map_or(0, |r| r.0.len())
}

/// Reads entry `index`; any output pointer may be null.
///
/// # Safety
/// `roots` must be a live handle; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ps_roots_get(
    roots: *const PsRoots,
    index: usize,
    value: *mut f64,
    multiplicity: *mut usize,
    residual: *mut f64,
) -> PsStatus {
    guard(|| {
        let Some(r) = roots.as_ref() else { return null("roots") };
        let Some(&(v, m, res)) = r.0.get(index) else {
            set_error(&format!("index {index} out of range for {} roots", r.0.len()));
            return PsStatus::InvalidArgument;
        };
        if !value.is_null() {
            *value = v;
        }
        if !multiplicity.is_null() {
            *multiplicity = m;
        }
        if !residual.is_null() {
            *residual = res;
        }
        PsStatus::Ok
    })
}

/// # Safety
/// `roots` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_roots_free(roots: *mut PsRoots) {
    if !roots.is_null() {
        drop(Box::from_raw(roots));
    }
}

/// `rho(E)` over `[x_lo, x_hi]` at `count` energies with broadening `eta`.
///
/// # Safety
/// `energies` and `out` must each hold `count` values.
#[no_mangle]
pub unsafe extern "C" fn ps_density_of_states(
    geometry_: PsGeometry,
    lattice: *const PsLattice,
    energies: *const f64,
    count: usize,
    eta: f64,
    x_lo: f64,
    x_hi: f64,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        let Some(es) = slice(energies, count) else { return null("energies") };
        if out.is_null() && count > 0 {
            return null("out");
        }
        match density_of_states(&geometry(&geometry_), &lat.0, es, eta, (x_lo, x_hi)) {
            Ok(rho) => {
                if count > 0 {
                    ptr::copy_nonoverlapping(rho.as_ptr(), out, count);
                }
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Evolves a Gaussian packet; `out_re`/`out_im` receive `n_times * n_grid`
/// values in time-major order.
///
/// # Safety
/// Input arrays must hold the stated counts; outputs `n_times * n_grid`.
#[no_mangle]
pub unsafe extern "C" fn ps_evolve(
    geometry_: PsGeometry,
    lattice: *const PsLattice,
    x0: f64,
    k0: f64,
    sigma: f64,
    times: *const f64,
    n_times: usize,
    grid: *const f64,
    n_grid: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PsStatus {
    guard(|| {
        let Some(lat) = lattice.as_ref() else { return null("lattice") };
        let Some(ts) = slice(times, n_times) else { return null("times") };
        let Some(xs) = slice(grid, n_grid) else { return null("grid") };
        if n_times * n_grid > 0 && (out_re.is_null() || out_im.is_null()) {
            return null("out");
        }
        let result = GaussianPacket::new(x0, k0, sigma).and_then(|p| evolve(&geometry(&geometry_), &lat.0, &p, ts, xs));
        match result {
            Ok(r) => {
                for (i, v) in r.values.iter().flatten().enumerate() {
                    *out_re.add(i) = v.re;
                    *out_im.add(i) = v.im;
                }
                PsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
