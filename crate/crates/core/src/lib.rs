//! Symmetry-preserving normal forms and Lyapunov-Schmidt reduction for
//! families of χ-equivariant local diffeomorphisms near a fixed point.
pub mod builtin;
pub mod error;
pub mod group;
pub mod linalg;
pub mod normalform;
pub mod polymap;
pub mod reduction;
pub use error::{Error, Result};
