//! Interaction parameters, lattices and geometries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DETERMINANT_TOLERANCE: f64 = 1e-12;
pub const MIN_SEPARATION: f64 = 1e-12;
pub const MIN_WAVENUMBER: f64 = 1e-9;

/// Matching data of one point interaction:
/// `(psi, psi')+ = omega * [[a, b], [c, d]] (psi, psi')-` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct InteractionParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    omega_phase: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    #[serde(default)]
    omega_phase: f64,
}

impl TryFrom<RawParams> for InteractionParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        InteractionParams::new(r.a, r.b, r.c, r.d, r.omega_phase)
    }
}

impl From<InteractionParams> for RawParams {
    fn from(p: InteractionParams) -> Self {
        RawParams { a: p.a, b: p.b, c: p.c, d: p.d, omega_phase: p.omega_phase }
    }
}

fn finite(v: f64, field: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { field })
    }
}

impl InteractionParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, omega_phase: f64) -> Result<Self> {
        finite(a, "a")?;
        finite(b, "b")?;
        finite(c, "c")?;
        finite(d, "d")?;
        finite(omega_phase, "omega_phase")?;
        let determinant = a * d - b * c;
        if (determinant - 1.0).abs() > DETERMINANT_TOLERANCE {
            return Err(Error::ConstraintViolation { determinant });
        }
        Ok(Self { a, b, c, d, omega_phase })
    }

    /// `psi` continuous, `psi'` jumps by `gamma * psi`.
    pub fn delta(gamma: f64) -> Result<Self> {
        Self::new(1.0, 0.0, gamma, 1.0, 0.0)
    }

    /// `psi'` continuous, `psi` jumps by `gamma * psi'`.
    pub fn delta_prime(gamma: f64) -> Result<Self> {
        Self::new(1.0, gamma, 0.0, 1.0, 0.0)
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0, omega_phase: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn omega_phase(&self) -> f64 {
        self.omega_phase
    }

    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.omega_phase)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Parameters of the same interaction seen under `x -> -x`.
    pub fn mirrored(&self) -> Self {
        Self { a: self.d, b: self.b, c: self.c, d: self.a, omega_phase: -self.omega_phase }
    }

    /// True when `omega` is real, i.e. the interaction is time-reversal invariant.
    pub fn is_time_reversal_invariant(&self) -> bool {
        self.omega().im.abs() < 1e-15
    }
}

pub fn make_interaction(a: f64, b: f64, c: f64, d: f64, omega_phase: f64) -> Result<InteractionParams> {
    InteractionParams::new(a, b, c, d, omega_phase)
}

/// Serialized flat as `{a, b, c, d, omega_phase, y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlaced", into = "RawPlaced")]
pub struct PlacedInteraction {
    pub params: InteractionParams,
    pub position: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlaced {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    #[serde(default)]
    omega_phase: f64,
    y: f64,
}

impl TryFrom<RawPlaced> for PlacedInteraction {
    type Error = Error;
    fn try_from(r: RawPlaced) -> Result<Self> {
        PlacedInteraction::new(InteractionParams::new(r.a, r.b, r.c, r.d, r.omega_phase)?, r.y)
    }
}

impl From<PlacedInteraction> for RawPlaced {
    fn from(p: PlacedInteraction) -> Self {
        let q = p.params;
        RawPlaced { a: q.a, b: q.b, c: q.c, d: q.d, omega_phase: q.omega_phase, y: p.position }
    }
}

impl PlacedInteraction {
    pub fn new(params: InteractionParams, position: f64) -> Result<Self> {
        finite(position, "y")?;
        Ok(Self { params, position })
    }
}

/// Interactions sorted by strictly increasing position.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Lattice {
    interactions: Vec<PlacedInteraction>,
}

impl Lattice {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut items: Vec<PlacedInteraction>) -> Result<Self> {
        for item in &items {
            finite(item.position, "y")?;
        }
        items.sort_by(|l, r| l.position.total_cmp(&r.position));
        for w in items.windows(2) {
            if w[1].position - w[0].position < MIN_SEPARATION {
                return Err(Error::DuplicatePosition { left: w[0].position, right: w[1].position });
            }
        }
        Ok(Self { interactions: items })
    }

    pub fn interactions(&self) -> &[PlacedInteraction] {
        &self.interactions
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.interactions.iter().map(|s| s.position)
    }

    /// Rigid shift of every position.
    pub fn translated(&self, shift: f64) -> Result<Self> {
        Self::new(
            self.interactions
                .iter()
                .map(|s| PlacedInteraction { params: s.params, position: s.position + shift })
                .collect(),
        )
    }

    /// Error if `x` sits on an interaction.
    pub fn check_off_sites(&self, x: f64) -> Result<()> {
        for s in &self.interactions {
            if (x - s.position).abs() < MIN_SEPARATION {
                return Err(Error::OnInteractionPoint { x });
            }
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<PlacedInteraction>::deserialize(de)?;
        Lattice::new(items).map_err(serde::de::Error::custom)
    }
}

pub fn make_lattice(items: Vec<PlacedInteraction>) -> Result<Lattice> {
    Lattice::new(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallCondition {
    Dirichlet,
    Neumann,
}

impl WallCondition {
    /// `s = +1` for Dirichlet, `-1` for Neumann.
    pub fn sign(self) -> f64 {
        match self {
            WallCondition::Dirichlet => 1.0,
            WallCondition::Neumann => -1.0,
        }
    }

    /// Reflection coefficient of the wall seen as a perfect mirror.
    pub fn reflection(self) -> f64 {
        -self.sign()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Line,
    /// Wall at `x = 0`, domain `x > 0`.
    HalfLine { wall: WallCondition },
    /// Walls at `0` and `length`.
    Box { length: f64, left: WallCondition, right: WallCondition },
    /// Domain `[-length/2, length/2]` with periodic closure.
    Ring { length: f64 },
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Line => "line",
            Geometry::HalfLine { .. } => "half_line",
            Geometry::Box { .. } => "box",
            Geometry::Ring { .. } => "ring",
        }
    }

    pub fn length(&self) -> Option<f64> {
        match *self {
            Geometry::Box { length, .. } | Geometry::Ring { length } => Some(length),
            _ => None,
        }
    }

    /// `(lo, hi)` bounds of the domain, infinite where open.
    pub fn domain(&self) -> (f64, f64) {
        match *self {
            Geometry::Line => (f64::NEG_INFINITY, f64::INFINITY),
            Geometry::HalfLine { .. } => (0.0, f64::INFINITY),
            Geometry::Box { length, .. } => (0.0, length),
            Geometry::Ring { length } => (-0.5 * length, 0.5 * length),
        }
    }

    fn domain_label(&self) -> String {
        let (lo, hi) = self.domain();
        format!("({lo}, {hi}) of the {}", self.name())
    }

    /// Checks the geometry itself and that every interaction lies strictly inside.
    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if let Some(length) = self.length() {
            if !length.is_finite() {
                return Err(Error::NonFinite { field: "L" });
            }
            if length <= 0.0 {
                return Err(Error::InvalidGeometry(format!("L = {length} must be positive")));
            }
        }
        let (lo, hi) = self.domain();
        for y in lattice.positions() {
            if !(y > lo && y < hi) {
                return Err(Error::OutsideDomain { position: y, domain: self.domain_label() });
            }
        }
        Ok(())
    }

    /// Checks that an evaluation point lies in the domain. Wall and ring
    /// end points are accepted.
    pub fn check_point(&self, x: f64) -> Result<()> {
        finite(x, "x")?;
        let (lo, hi) = self.domain();
        let inside = match self {
            Geometry::Line => true,
            Geometry::HalfLine { .. } => x > lo,
            Geometry::Box { .. } => x > lo && x < hi,
            Geometry::Ring { .. } => x >= lo && x <= hi,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::OutsideDomain { position: x, domain: self.domain_label() })
        }
    }
}

/// Complex wavenumber with `|k| >= 1e-9`; energy is `k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber(Complex64);

impl Wavenumber {
    pub fn new(k: Complex64) -> Result<Self> {
        if !k.re.is_finite() || !k.im.is_finite() {
            return Err(Error::NonFinite { field: "k" });
        }
        let modulus = k.norm();
        if modulus < MIN_WAVENUMBER {
            return Err(Error::KTooSmall { modulus });
        }
        Ok(Self(k))
    }

    pub fn real(k: f64) -> Result<Self> {
        Self::new(Complex64::new(k, 0.0))
    }

    /// Physical branch `k = i sqrt(-E)`, so that `Im k >= 0`.
    pub fn from_energy(energy: Complex64) -> Result<Self> {
        if energy.im == 0.0 && energy.re > 0.0 {
            return Self::real(energy.re.sqrt());
        }
        Self::new(Complex64::i() * (-energy).sqrt())
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn energy(self) -> Complex64 {
        self.0 * self.0
    }

    pub fn is_real(self) -> bool {
        self.0.im == 0.0
    }
}

impl From<Wavenumber> for Complex64 {
    fn from(k: Wavenumber) -> Self {
        k.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let d = make_interaction(1.0, 0.0, 2.0, 1.0, 0.0).unwrap();
        assert_eq!(d, InteractionParams::delta(2.0).unwrap());
        assert_eq!(make_interaction(1.0, 0.0, 0.0, 1.0, 0.0).unwrap(), InteractionParams::identity());
        let dp = make_interaction(1.0, 0.5, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(dp, InteractionParams::delta_prime(0.5).unwrap());
        assert!(matches!(
            make_interaction(2.0, 0.0, 0.0, 1.0, 0.0),
            Err(Error::ConstraintViolation { .. })
        ));
        assert!(matches!(
            make_interaction(f64::NAN, 0.0, 0.0, 1.0, 0.0),
            Err(Error::NonFinite { field: "a" })
        ));
    }

    #[test]
    fn lattice_ordering() {
        assert!(make_lattice(vec![]).unwrap().is_empty());
        let d = InteractionParams::delta(2.0).unwrap();
        let lat = make_lattice(vec![
            PlacedInteraction::new(d, 1.0).unwrap(),
            PlacedInteraction::new(d, 0.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(lat.positions().collect::<Vec<_>>(), vec![0.0, 1.0]);
        let dp = InteractionParams::delta_prime(1.0).unwrap();
        let err = make_lattice(vec![
            PlacedInteraction::new(d, 0.0).unwrap(),
            PlacedInteraction::new(dp, 0.0).unwrap(),
        ]);
        assert!(matches!(err, Err(Error::DuplicatePosition { .. })));
    }

    #[test]
    fn wall_signs() {
        assert_eq!(WallCondition::Dirichlet.reflection(), -1.0);
        assert_eq!(WallCondition::Neumann.reflection(), 1.0);
    }

    #[test]
    fn geometry_validation() {
        let d = InteractionParams::delta(1.0).unwrap();
        let lat = make_lattice(vec![PlacedInteraction::new(d, 0.5).unwrap()]).unwrap();
        let ring = Geometry::Ring { length: 1.0 };
        assert!(ring.validate(&lat).is_err());
        let bx = Geometry::Box { length: 1.0, left: WallCondition::Dirichlet, right: WallCondition::Neumann };
        assert!(bx.validate(&lat).is_ok());
        assert!(Geometry::Ring { length: -1.0 }.validate(&Lattice::empty()).is_err());
    }

    #[test]
    fn wavenumber_bounds() {
        assert!(matches!(Wavenumber::real(1e-10), Err(Error::KTooSmall { .. })));
        let k = Wavenumber::from_energy(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((k.value() - Complex64::i()).norm() < 1e-15);
        let k = Wavenumber::from_energy(Complex64::new(4.0, 1e-3)).unwrap();
        assert!(k.value().im > 0.0 && k.value().re > 0.0);
    }
}
