//! Positive maps between matrix algebras.
//!
//! The crate covers the modular theory of the transposition map on `M_n(ℂ)`
//! with a faithful state, membership tests for the associated cones, the
//! positivity / decomposability test hierarchy for maps `M_m → M_n`, and the
//! explicit local decomposition of positive unital maps on `M_2`.

pub mod cones;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod linalg;
pub mod maps;
pub mod modular;
pub mod stormer;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, TensorLayout};
pub use num_complex::Complex64;
pub use tolerances::Tolerances;
