//! Workbench for the three-term progression functional on Z/pZ.
//!
//! `Lambda(f) = E_{n,d} f(n) f(n+d) f(n+2d)` for `f : F_p -> [0, 1]`:
//! evaluation, constrained minimization, structure extraction around
//! minimizers, and exact audits of the counting arguments that surround it.

pub mod bohr;
pub mod cli;
pub mod error;
pub mod improver;
pub mod lambda;
pub mod minimizer;
pub mod r3;
pub mod report;
pub mod rng;
pub mod varnavides;
pub mod zp;

pub use error::{Error, Result};
