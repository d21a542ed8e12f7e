pub mod deformation_kernel;
pub mod discrete_ops;
pub mod error;
pub mod model_spaces;
pub mod soliton_core;
pub mod rep_weights;
pub mod rigidity;
pub mod cli;

pub use error::{Error, Result};
