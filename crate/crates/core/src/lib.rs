//! LZ'78 parsing and adversarial constructions for the one-bit prepend
//! problem: words that LZ'78 compresses almost optimally but whose
//! compression collapses once a single letter is written in front.

pub mod alignment;
pub mod construct;
pub mod error;
pub mod fuzz;
pub mod gen;
pub mod general;
pub mod infinite;
pub mod lz;
pub mod toy;
pub mod word;

pub use error::{Error, Result};
pub use word::Word;
