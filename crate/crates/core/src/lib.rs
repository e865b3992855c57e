pub mod cellspace;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod tensornet;
pub mod zeroproxy;

pub use error::{Error, Result};
