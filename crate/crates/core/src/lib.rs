//! Desingularized traveling point-vortex solutions of the Euler equation on
//! the unit sphere.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod desingularize;
pub mod elliptic;
pub mod error;
pub mod gmres;
pub mod ground_state;
pub mod kernel;
pub mod ode;
pub mod quadrature;
pub mod spectral;
pub mod sphere;
pub mod verify;
pub mod vortex;

pub use error::{Error, Result};
pub use ground_state::GroundState;
pub use kernel::KernelValue;
pub use sphere::{LatLonGrid, SphericalField, SpherePoint, TangentMap};
pub use vortex::{Sign, SignedVortex, VortexSystem};
