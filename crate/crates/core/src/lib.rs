//! Pedal surfaces of isotropic minimal surfaces: construction from
//! holomorphic data, local invariants in jet arithmetic, inversions and
//! numerical verification of their conformal geometry.

pub mod cpoly;
pub mod error;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod moebius;
pub mod pedal;
pub mod verify;
pub mod weierstrass;

pub use error::{GeomError, Result};
