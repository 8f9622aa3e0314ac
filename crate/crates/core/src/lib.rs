mod binio;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod inference;
pub mod model;
pub mod modelfile;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
