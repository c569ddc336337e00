//! Pulse-level simulator of a molecular spin-qudit processor.
//!
//! A spin-S1 qudit encodes a truncated boson mode and a second spin encodes a
//! two-level atom. Logical programs (a variational ansatz, Trotter steps of
//! the quantum Rabi model) are compiled to microwave pulse schedules and run
//! under a dephasing master equation.

pub mod cli;
pub mod config;
pub mod encoding;
pub mod error;
pub mod gates;
pub mod hardware;
pub mod experiments;
pub mod operators;
pub mod optimize;
pub mod dynamics;
pub mod presets;
pub mod schedule;
pub mod target;

pub use error::{Error, Result};
