pub mod apps;
pub mod error;
pub mod experiment;
pub mod io;
pub mod problem;
pub mod sbl;
pub mod screening;
pub mod wlasso;

pub use error::{Error, Result};
pub use problem::{Problem, SparseSolution, WeightVector};
