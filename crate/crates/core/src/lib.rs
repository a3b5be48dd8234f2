//! Bayesian optimization with a corrected expected-improvement acquisition
//! for Gaussian-process models with known heteroscedastic observation noise.

pub mod acquisition;
pub mod analysis;
pub mod benchmarks;
pub mod bo;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod kernels;
pub mod normal;
pub mod objective;
pub mod sobol;

pub use acquisition::{AcquisitionKind, AcquisitionSpec, Incumbent};
pub use bounds::Bounds;
pub use error::{Error, Result};
pub use gp::{Dataset, GpPosterior, PreprocessState};
pub use kernels::{KernelFamily, KernelSpec};
