pub mod analysis;
pub mod cli;
pub mod error;
pub mod expr;
pub mod germ;
pub mod jet;
pub mod normal_form;
pub mod pointwise;
pub mod report;

pub use error::{Error, Result};
pub use germ::MapGerm;
pub use jet::Jet;
