//! Feature extraction, serial-dependence inference, visualization data,
//! dissimilarities and synthetic generators for nominal categorical time
//! series.

pub mod error;
pub mod format;
pub mod inference;
pub mod marginal;
pub mod mining;
pub mod mixed;
pub mod serial;
pub mod series;
pub mod simulate;
pub mod spectral;
pub mod tables;
pub mod viz;

pub use error::{Error, Result};
pub use series::{Alphabet, BinarizedSeries, CategoricalSeries};
pub use tables::{lag_tables, LagTables};
