//! Numerical laboratory for one-dimensional discrete Schrödinger operators
//!
//! ```text
//! (H u)_n = u_{n+1} + u_{n-1} + v_n u_n
//! ```
//!
//! with periodic and limit-periodic potentials over an odometer (a tower of
//! finite cyclic groups `Z/n_1 <- Z/n_2 <- ...`).
//!
//! The crate is organized bottom-up:
//!
//! - [`odometer`]: schedules of periods, periodic potentials, families and
//!   sup-norm balls.
//! - [`cocycle`]: 2×2 transfer matrices, monodromies, Lyapunov exponents and
//!   singular directions.
//! - [`bands`]: band structure of periodic operators, spectral measure, the
//!   density of states and the measure bounds that go with it.
//! - [`construct`]: gap-opening and block/staircase families and the nested
//!   ball iteration that drives the spectral measure toward zero while keeping
//!   the Lyapunov exponent positive.
//!
//! Everything is a pure function of immutable values.

pub mod bands;
pub mod cocycle;
pub mod construct;
mod error;
pub mod intervals;
pub mod odometer;
pub mod quad;

pub use bands::{Band, SpectrumDescription};
pub use cocycle::{Direction, Mat2};
pub use error::{Error, Result};
pub use intervals::IntervalSet;
pub use odometer::{Ball, Family, Potential, Schedule};
