//! Bivariate causality indices on time series, the coupled systems used to
//! benchmark them, and a closed-form Gaussian reference.

pub mod crossmap;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod info;
pub mod neighbors;
pub mod oracle;
pub mod perturb;
pub mod registry;
pub mod regress;
pub mod rng;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use series::{Direction, EmbeddingSpec, IndexEstimate, SeriesPair, Status};
