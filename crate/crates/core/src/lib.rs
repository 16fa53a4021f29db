//! Tetrahedron-equation building blocks and the Yang-Baxter solutions obtained
//! from them, together with the generalized quantum groups whose R matrices
//! they reproduce.

pub mod boundary;
pub mod error;
pub mod gqg;
pub mod laurent;
pub mod layer;
pub mod linalg;
pub mod scalars;
pub mod spaces;
pub mod spectral;
pub mod suites;
pub mod threed;

pub use error::{Error, Result};
