//! Phase-isostable reduction of networks of coupled limit-cycle oscillators.

pub mod cgle;
pub mod cli;
pub mod compare;
pub mod error;
pub mod fourier;
pub mod higher_order;
pub mod interaction;
pub mod linalg;
pub mod locked;
pub mod model;
pub mod ode;
pub mod orbit;
pub mod response;
pub mod simulate;

pub use error::{Error, Result};
