//! Compression-ensemble feature vectors for image corpora.

pub mod analysis;
pub mod cli;
pub mod codecs;
pub mod color;
pub mod config;
pub mod features;
pub mod imageio;
pub mod pipeline;
pub mod plot;
pub mod store;
pub mod synth;
pub mod transforms;
