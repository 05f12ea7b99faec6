//! Learning state-delta dynamics of a human–exoskeleton system with six
//! regressor families, and measuring how well each transfers across
//! movement tasks.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod regressors;
pub mod seed;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use matrix::Matrix;
