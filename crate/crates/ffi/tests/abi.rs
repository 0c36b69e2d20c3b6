use std::ffi::CStr;
use std::ptr;

use pointscatter_ffi::*;

const LINE: PsGeometry = PsGeometry { kind: PsGeometryKind::Line, length: 0.0, left_wall: PsWall::Dirichlet, right_wall: PsWall::Dirichlet };

fn delta(gamma: f64, y: f64) -> PsInteraction {
    PsInteraction { a: 1.0, b: 0.0, c: gamma, d: 1.0, omega_phase: 0.0, y }
}

fn message() -> String {
    unsafe { CStr::from_ptr(ps_last_error_message()) }.to_string_lossy().into_owned()
}

fn lattice(items: &[PsInteraction]) -> *mut PsLattice {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ps_lattice_new(items.as_ptr(), items.len(), &mut out) }, PsStatus::Ok);
    out
}

#[test]
fn delta_amplitudes() {
    let lat = lattice(&[delta(2.0, 0.0)]);
    let mut a = PsAmplitudes::default();
    assert_eq!(unsafe { ps_amplitudes(lat, 1.0, &mut a) }, PsStatus::Ok);
    // R = -i g/(2k + i g), T = 2k/(2k + i g) with g = 2, k = 1
    assert!((a.r_plus_re + 0.5).abs() < 1e-14 && (a.r_plus_im + 0.5).abs() < 1e-14);
    assert!((a.t_plus_re - 0.5).abs() < 1e-14 && (a.t_plus_im + 0.5).abs() < 1e-14);
    assert!(message().is_empty());
    unsafe { ps_lattice_free(lat) };
}

#[test]
fn free_green_on_the_line() {
    let lat = lattice(&[]);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { ps_green(LINE, lat, 1.0, 0.0, 2.0, 0.0, &mut re, &mut im) }, PsStatus::Ok);
    // e^{ik|x|}/(2ik)
    let expect = num_complex::Complex64::new(0.0, 2.0).exp() / num_complex::Complex64::new(0.0, 4.0);
    assert!((re - expect.re).abs() < 1e-14 && (im - expect.im).abs() < 1e-14);
    unsafe { ps_lattice_free(lat) };
}

#[test]
fn empty_box_levels() {
    let lat = lattice(&[]);
    let geom = PsGeometry { kind: PsGeometryKind::Box, length: 1.0, ..LINE };
    let mut roots = ptr::null_mut();
    assert_eq!(unsafe { ps_find_eigenvalues(geom, lat, 0.1, 10.0, &mut roots) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_roots_len(roots) }, 3);
    for n in 0..3 {
        let (mut k, mut m) = (0.0, 0usize);
        assert_eq!(unsafe { ps_roots_get(roots, n, &mut k, &mut m, ptr::null_mut()) }, PsStatus::Ok);
        assert!((k - (n + 1) as f64 * std::f64::consts::PI).abs() < 1e-10);
        assert_eq!(m, 1);
    }
    assert_eq!(unsafe { ps_roots_get(roots, 3, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, PsStatus::InvalidArgument);
    assert!(message().contains("out of range"));
    unsafe { ps_roots_free(roots) };
    unsafe { ps_lattice_free(lat) };
}

#[test]
fn attractive_delta_binds_once() {
    let lat = lattice(&[delta(-2.0, 0.0)]);
    let mut roots = ptr::null_mut();
    assert_eq!(unsafe { ps_find_bound_states(LINE, lat, 5.0, &mut roots) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_roots_len(roots) }, 1);
    let mut kappa = 0.0;
    unsafe { ps_roots_get(roots, 0, &mut kappa, ptr::null_mut(), ptr::null_mut()) };
    assert!((kappa - 1.0).abs() < 1e-10, "{kappa}");
    unsafe { ps_roots_free(roots) };
    unsafe { ps_lattice_free(lat) };
}

#[test]
fn dos_and_evolution_fill_buffers() {
    let lat = lattice(&[delta(1.0, 0.0)]);
    let es = [1.0, 2.0, 3.0];
    let mut rho = [f64::NAN; 3];
    assert_eq!(unsafe { ps_density_of_states(LINE, lat, es.as_ptr(), 3, 1e-3, -2.0, 2.0, rho.as_mut_ptr()) }, PsStatus::Ok);
    assert!(rho.iter().all(|r| r.is_finite() && *r > 0.0));

    let times = [0.0, 0.5];
    let grid = [-1.0, 0.5, 1.0, 2.0];
    let (mut re, mut im) = ([f64::NAN; 8], [f64::NAN; 8]);
    let status = unsafe { ps_evolve(LINE, lat, -5.0, 2.0, 1.0, times.as_ptr(), 2, grid.as_ptr(), 4, re.as_mut_ptr(), im.as_mut_ptr()) };
    assert_eq!(status, PsStatus::Ok, "{}", message());
    assert!(re.iter().chain(&im).all(|v| v.is_finite()));
    unsafe { ps_lattice_free(lat) };
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let bad = [PsInteraction { a: 1.0, b: 1.0, c: 1.0, d: 1.0, omega_phase: 0.0, y: 0.0 }];
    assert_eq!(unsafe { ps_lattice_new(bad.as_ptr(), 1, &mut out) }, PsStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!message().is_empty());

    assert_eq!(unsafe { ps_lattice_new(ptr::null(), 2, &mut out) }, PsStatus::NullPointer);
    assert_eq!(unsafe { ps_amplitudes(ptr::null(), 1.0, ptr::null_mut()) }, PsStatus::NullPointer);
    assert!(message().contains("lattice"));

    let lat = lattice(&[delta(1.0, 0.0)]);
    let mut a = PsAmplitudes::default();
    assert_eq!(unsafe { ps_amplitudes(lat, 0.0, &mut a) }, PsStatus::InvalidArgument);
    let ring = PsGeometry { kind: PsGeometryKind::Ring, length: -1.0, ..LINE };
    let (mut re, mut im) = (0.0, 0.0);
    assert_ne!(unsafe { ps_green(ring, lat, 0.1, 0.2, 1.0, 0.1, &mut re, &mut im) }, PsStatus::Ok);
    unsafe { ps_lattice_free(lat) };
    unsafe { ps_lattice_free(ptr::null_mut()) };
    unsafe { ps_roots_free(ptr::null_mut()) };
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(ps_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pointscatter.h")).unwrap();
    for name in [
        "ps_lattice_new", "ps_lattice_free", "ps_amplitudes", "ps_green", "ps_find_eigenvalues", "ps_find_bound_states",
        "ps_roots_get", "ps_roots_free", "ps_density_of_states", "ps_evolve", "ps_last_error_message", "ps_version",
        "typedef struct PsLattice PsLattice", "PS_STATUS_PANIC = 4",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
