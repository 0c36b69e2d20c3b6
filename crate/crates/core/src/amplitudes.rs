//! Scattering coefficients of a single point interaction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{InteractionParams, Wavenumber};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `r_plus`/`t_plus` for incidence from the left, `r_minus`/`t_minus` from the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub r_plus: Complex64,
    pub r_minus: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub at_k: Wavenumber,
}

impl Amplitudes {
    pub fn transparent(k: Wavenumber) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self { r_plus: 0.0.into(), r_minus: 0.0.into(), t_plus: one, t_minus: one, at_k: k }
    }

    /// Perfect mirror with reflection `r` from both sides.
    pub fn mirror(r: f64, k: Wavenumber) -> Self {
        let r = Complex64::new(r, 0.0);
        Self { r_plus: r, r_minus: r, t_plus: 0.0.into(), t_minus: 0.0.into(), at_k: k }
    }

    /// Coefficients of the parity image (`+` and `-` exchanged).
    pub fn swapped(&self) -> Self {
        Self {
            r_plus: self.r_minus,
            r_minus: self.r_plus,
            t_plus: self.t_minus,
            t_minus: self.t_plus,
            at_k: self.at_k,
        }
    }
}

/// `-c + ik(d + a) + b k^2`.
pub fn denominator(p: &InteractionParams, k: Complex64) -> Complex64 {
    -p.c() + I * k * (p.d() + p.a()) + p.b() * k * k
}

fn pole_scale(p: &InteractionParams, k: Complex64) -> f64 {
    let kk = k.norm();
    p.c().abs().max(kk * (p.d().abs() + p.a().abs())).max(p.b().abs() * kk * kk).max(1.0)
}

pub fn bare_amplitudes(p: &InteractionParams, k: Wavenumber) -> Result<Amplitudes> {
    let kv = k.value();
    let den = denominator(p, kv);
    if den.norm() < 1e-14 * pole_scale(p, kv) {
        return Err(Error::PoleHit { re: kv.re, im: kv.im });
    }
    let bk2 = p.b() * kv * kv;
    let skew = I * kv * (p.d() - p.a());
    let omega = p.omega();
    let theta_plus = p.determinant();
    Ok(Amplitudes {
        r_plus: (p.c() + skew + bk2) / den,
        r_minus: (p.c() - skew + bk2) / den,
        t_plus: 2.0 * I * kv * omega * theta_plus / den,
        t_minus: 2.0 * I * kv * omega.conj() / den,
        at_k: k,
    })
}

/// Reflections carry the phase `exp(+-2iky)` of an interaction moved to `y`.
pub fn dressed_reflections(p: &InteractionParams, y: f64, k: Wavenumber) -> Result<Amplitudes> {
    let mut amp = bare_amplitudes(p, k)?;
    let phase = (2.0 * I * k.value() * y).exp();
    amp.r_plus *= phase;
    amp.r_minus /= phase;
    Ok(amp)
}

/// Flux-conservation defects `(| |R+|^2+|T+|^2-1 |, | |R-|^2+|T-|^2-1 |, |conj(R+)T+ + conj(T-)R-|)`.
pub fn unitarity_residuals(amp: &Amplitudes) -> (f64, f64, f64) {
    (
        (amp.r_plus.norm_sqr() + amp.t_plus.norm_sqr() - 1.0).abs(),
        (amp.r_minus.norm_sqr() + amp.t_minus.norm_sqr() - 1.0).abs(),
        (amp.r_plus.conj() * amp.t_plus + amp.t_minus.conj() * amp.r_minus).norm(),
    )
}

/// `(max |conj R(k) - R(-k)|, max |conj T+-(k) - T-+(-k)|)` over both superscripts.
pub fn conjugation_residuals(p: &InteractionParams, k: f64) -> Result<(f64, f64)> {
    let fwd = bare_amplitudes(p, Wavenumber::real(k)?)?;
    let bwd = bare_amplitudes(p, Wavenumber::real(-k)?)?;
    let r = (fwd.r_plus.conj() - bwd.r_plus).norm().max((fwd.r_minus.conj() - bwd.r_minus).norm());
    let t = (fwd.t_plus.conj() - bwd.t_minus).norm().max((fwd.t_minus.conj() - bwd.t_plus).norm());
    Ok((r, t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPole {
    pub k: Complex64,
    pub energy: Complex64,
}

/// Upper-half-plane zeros of `b k^2 + ik(d + a) - c`.
pub fn single_bound_poles(p: &InteractionParams) -> Vec<BoundPole> {
    let (qa, qb, qc) = (Complex64::new(p.b(), 0.0), I * (p.a() + p.d()), Complex64::new(-p.c(), 0.0));
    let mut roots = Vec::new();
    if p.b() == 0.0 {
        if qb.norm() > 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        // pick the sign that avoids cancellation, then use Vieta for the partner
        let sign = if (qb.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (qb + sign * disc);
        if q.norm() > 0.0 {
            roots.push(q / qa);
            roots.push(qc / q);
        } else {
            roots.push(Complex64::new(0.0, 0.0));
        }
    }
    let mut poles: Vec<BoundPole> = roots
        .into_iter()
        .filter(|k| k.im > 1e-12)
        .map(|k| BoundPole { k, energy: k * k })
        .collect();
    poles.sort_by(|l, r| l.k.im.total_cmp(&r.k.im).reverse());
    poles
}
