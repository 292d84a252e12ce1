pub mod algebraic;
pub mod combinatorics;
pub mod conditions;
pub mod error;
pub mod gevd;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod multilinear;
pub mod random;
pub mod structured;

pub use error::{CpdError, LAttempt, Result};
