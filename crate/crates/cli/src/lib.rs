//! Experiment runner for hypercomplex phase retrieval: TOML experiment specs,
//! seeded parallel sweeps, image reconstruction and CSV reporting.

pub mod algebra_check;
pub mod harness;
pub mod imageio;
pub mod imaging;
pub mod output;
pub mod spec;
pub mod runner;
