//! Stack-pointer dependency parsing with a self-attentive BiLSTM encoder,
//! biaffine scoring and parameter transfer between treebanks.

pub mod config;
pub mod decoder;
pub mod diffcore;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod params;
pub mod parser;
pub mod synthetic;
pub mod trainer;
pub mod transfer;
pub mod treebank;

pub use config::TrainConfig;
pub use error::{Error, Result};
pub use parser::ParserModel;
pub use trainer::Checkpoint;
