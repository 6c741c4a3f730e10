//! Compressed CFI graphs, cylindrical grid compressions and the combinatorial
//! games used to bound their refutation complexity.

pub mod cfi;
pub mod cops;
pub mod error;
pub mod games;
pub mod graph;
pub mod grid;
pub mod iso_cnf;
pub mod pipeline;

pub use error::{Error, Result};
