pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod parallel;
pub mod rates;
pub mod rng;
pub mod selftest;
pub mod streams;

pub use error::{Error, Result};
