//! Exact scattering amplitudes, Green functions, spectra and wave-packet
//! dynamics for finite lattices of generalized point interactions in one
//! dimension.

pub mod amplitudes;
pub mod cli;
pub mod composition;
pub mod dynamics;
pub mod error;
pub mod greens;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{
    make_interaction, make_lattice, Geometry, InteractionParams, Lattice, PlacedInteraction, WallCondition,
    Wavenumber,
};
