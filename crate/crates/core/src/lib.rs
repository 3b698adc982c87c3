//! Chinese encoder pre-training stack.

pub mod benchkit;
pub mod config;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod optimsched;
pub mod seed;
pub mod tokenizer;
pub mod toy;
pub mod trainloop;
pub mod wordmask;

pub use error::{Error, Result};
