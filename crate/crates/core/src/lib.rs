//! Hypercomplex phase retrieval.
//!
//! Cayley-Dickson scalars ([`algebra`]), dense hypercomplex linear algebra and
//! real embeddings ([`linalg`]), hypercomplex Fourier-family sensing operators
//! ([`transforms`]), measurement models and ambiguity-aware distances
//! ([`models`]) and the Wirtinger-flow family of solvers ([`solvers`]).

pub mod algebra;
pub mod error;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod solvers;
pub mod structure;
pub mod transforms;

pub use algebra::{AlgebraLevel, HyperNum};
pub use error::{Error, Result};
pub use linalg::{HMatrix, HVector, RealMatrix};
