use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constraint violation: ad - bc = {determinant} (must equal 1 within 1e-12)")]
    ConstraintViolation { determinant: f64 },

    #[error("non-finite value for `{field}`")]
    NonFinite { field: &'static str },

    #[error("duplicate position: interactions at {left} and {right} are closer than 1e-12")]
    DuplicatePosition { left: f64, right: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("position {position} lies outside the domain {domain}")]
    OutsideDomain { position: f64, domain: String },

    #[error("wavenumber |k| = {modulus:e} is below 1e-9")]
    KTooSmall { modulus: f64 },

    #[error("evaluation at a single-interaction pole (k = {re} + {im}i)")]
    PoleHit { re: f64, im: f64 },

    #[error("block resonance denominator vanishes between sites {left_index} and {right_index} (|den| = {modulus:e})")]
    ResonanceDenominator {
        left_index: usize,
        right_index: usize,
        modulus: f64,
    },

    #[error("point {x} coincides with an interaction; pick a side explicitly")]
    OnInteractionPoint { x: f64 },

    #[error("spectral pole: |D| = {modulus:e} at k = {re} + {im}i")]
    SpectralPole { re: f64, im: f64, modulus: f64 },

    #[error("Wronskian vanishes (k = {re} + {im}i is an eigenvalue)")]
    WronskianVanishes { re: f64, im: f64 },

    #[error("root scan too coarse: winding count {winding} but {found} roots found (with multiplicity)")]
    ScanTooCoarse { winding: i64, found: usize },

    #[error("broadening eta = {eta:e} too small: spectral pole on the contour at E = {energy}")]
    EtaTooSmall { eta: f64, energy: f64 },

    #[error("wave packet does not fit the domain: {0}")]
    PacketTooWideForDomain(String),

    #[error("quadrature under-resolved: spectral weight {weight} differs from packet norm {norm} by more than {bound:e}")]
    QuadratureUnderResolved { weight: f64, norm: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures caused by the numerical state (poles, resonances,
    /// under-resolved quadrature) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleHit { .. }
                | Error::ResonanceDenominator { .. }
                | Error::SpectralPole { .. }
                | Error::WronskianVanishes { .. }
                | Error::ScanTooCoarse { .. }
                | Error::EtaTooSmall { .. }
                | Error::QuadratureUnderResolved { .. }
        )
    }
}
