//! Deviation rate functions, exact moments and Monte Carlo checks for
//! Mandelbrot multiplicative cascades.
//!
//! The total mass of an `r`-ary cascade at depth `n` is
//! `Z_r^n = r^{-n} Σ W_{i1} W_{i1,i2} ... W_{i1..in}` with i.i.d. mean-one
//! weights `W`; `Z_r^∞` is its martingale limit. As `r → ∞` these masses obey
//! large deviation principles whose rate functions this crate computes
//! ([`ratefn`]) and checks by simulation ([`cascade`], [`devlab`]).

pub mod cascade;
pub mod conjugate;
pub mod devlab;
pub mod error;
pub mod io;
pub mod moments;
pub mod ratefn;
pub mod rng;
pub mod wmodel;

pub use error::{CascadeError, Result};
pub use rng::RngStream;
pub use wmodel::{WeightKind, WeightModel};
