//! Linguistic style features, engagement contrasts and predictive models for
//! corpora of spoken episodes with descriptions and time-aligned transcripts.

pub mod corpus;
pub mod engagement;
pub mod error;
pub mod features;
pub mod lexicons;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod textkit;
pub mod topics;

pub use error::{Error, Result};
