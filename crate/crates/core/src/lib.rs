//! Jánossy densities of the circular unitary ensemble.

pub mod cli;
pub mod distributions;
pub mod error;
mod flow;
pub mod fredholm;
pub mod kernel;
pub mod mc;
pub mod ode;
pub mod output;
pub mod quadrature;
pub mod selftest;
pub mod sine;
pub mod tw;
pub mod zeta;

pub use error::{Error, Result};
