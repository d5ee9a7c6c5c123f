//! Type-B permutation tableaux: growth histories, exhaustive enumeration,
//! exact expectations, samplers and the PASEP correspondence.

pub mod enumerate;
pub mod error;
pub mod expect;
pub mod grid;
pub mod pasep;
pub mod sample;
pub mod stats;
pub mod tableau;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, GridRow, ValidationReport, Violation};
pub use stats::{StatRecord, Statistic};
pub use tableau::{grid_to_history, BorderPath, ColumnFill, Entry, GrowthHistory, Step, Tableau};
