pub mod binary;
pub mod dist;
pub mod efficiency;
pub mod error;
pub mod inference;
pub mod mte;
pub mod multinomial;
pub mod numeric;
pub mod report;
pub mod sim;

pub use error::{PersuasionError, Result};
