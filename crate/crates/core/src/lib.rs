//! Flow-firing on the two-dimensional grid complex with a marked face.
//!
//! Configurations are kept in face representation ([`grid::MarkedConfig`]).
//! [`firing`] implements single moves, [`pathfire`] the path-restricted
//! subsystem, [`strategies`] the constructive firing schedules and regime
//! classification, [`explore`] an exhaustive reachability oracle and [`render`]
//! text and SVG pictures.

pub mod error;
pub mod explore;
pub mod firing;
pub mod grid;
pub mod pathfire;
pub mod render;
pub mod strategies;

pub use error::{FlowError, Result};
pub use firing::{FireMove, Trace};
pub use grid::{FaceCoord, MarkedConfig};
