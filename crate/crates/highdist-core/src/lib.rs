#![no_std]
extern crate alloc;

pub mod apps;
pub mod classical;
pub mod error;
pub mod hadamard;
pub mod highdist;
pub mod oracle;
pub mod pmax;
pub mod qae;
pub mod reversible;
pub mod simulae;
pub mod state;

pub use error::{Error, Result};
