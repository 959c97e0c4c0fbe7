//! Distance estimation from a single noisy parallax under a catalog of
//! heavy-tailed priors.
//!
//! The crate is organised around the measurement model ([`model`]), the prior
//! catalog ([`priors`]), the p-credence tail algebra ([`credence`]), posterior
//! computation ([`inference`]), scripted sweeps ([`experiments`]) and the
//! catalog / CSV / config surface used by the `parallax` binary ([`io`]).
//!
//! Distances are in parsecs and parallaxes in arcseconds everywhere except in
//! [`io`], which converts Gaia-style milliarcsecond columns on ingestion.

pub mod credence;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod model;
pub mod priors;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use model::Measurement;
pub use priors::PriorSpec;
