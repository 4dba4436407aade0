//! Circle-based principal directions and discrete conjugate / circular nets
//! on smooth parametric surfaces, with a convergence-order harness.

pub mod catalog;
pub mod conics;
pub mod constructions;
pub mod error;
pub mod export;
pub mod geom3;
pub mod harness;
pub mod intersect;
pub mod jet;
pub mod nets;
pub mod surface;

pub use error::{GeomError, Result};
