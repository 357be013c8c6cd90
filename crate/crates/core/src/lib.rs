//! Numerical laboratory for index identities of discrete Schrödinger
//! operators -Δ + V on grid domains: Morse-index decomposition across a
//! separating interface via Dirichlet-to-Neumann maps, Maslov indices of
//! boundary-condition homotopies, periodic realizations, and nodal-domain
//! counts with the deficiency formula.

pub mod assemble;
pub mod dtn;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod maslov;
pub mod nodal;

pub use error::{Error, Result};
