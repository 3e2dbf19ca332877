//! Statistical machine transliteration: four transliteration models
//! (grapheme-based, phoneme-based, hybrid, correspondence-based) over
//! three interchangeable learners, web-frequency candidate ranking, and
//! an experiment harness.

pub mod align;
pub mod artifact;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod learners;
pub mod pipeline;
pub mod ranking;
pub mod types;

pub use error::{Error, Result};
