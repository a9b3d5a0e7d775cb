pub mod error;
pub mod fh;
pub mod identities;
pub mod model;
pub mod observables;
pub mod oracles;
pub mod series;
pub mod solver;
pub mod specfun;

pub use error::{HvlError, Result};
