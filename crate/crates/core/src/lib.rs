//! Summary characteristics, simulators and Monte-Carlo envelope tests for
//! spatial point patterns whose points carry multivariate function-valued marks.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod marks;
pub mod pipeline;
pub mod simulate;
pub mod testfn;

pub use error::{Error, Result};
