pub mod boundary;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod lattice;
pub mod scattering;
pub mod spectra;
pub mod specfun;
pub mod volume;

pub use error::{Error, Result};
