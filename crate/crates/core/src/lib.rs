//! Desk-scale numerical laboratory for the hardcore model on graphs.
//!
//! The crate builds exact Gibbs distributions over independent sets, their
//! pairwise influence matrices and spectral-independence profiles, the pair
//! walks and down-up walks of the associated partite complex, Weitz
//! self-avoiding-walk trees, the tree-recursion decay machinery (fixed
//! points, uniqueness thresholds, potential-function contraction), and the
//! Glauber dynamics with certified spectral gaps and mixing bounds.
//!
//! Everything is exact at small scale: explicit weight tables are the ground
//! truth, dense symmetric eigensolves provide full spectra, and every
//! inequality the library certifies is checked against those oracles in the
//! test suites.

pub mod decay;
pub mod error;
pub mod exact;
pub mod gen;
pub mod glauber;
pub mod graph;
pub mod influence;
pub mod linalg;
pub mod ratio;
pub mod report;
pub mod saw;
pub mod tol;
pub mod walks;

pub use error::{Error, Result};
