//! Simulation and numerical stability certification for finite and truncated
//! infinite networks of nonlinear subsystems.
//!
//! The crate is organised bottom-up:
//!
//! * [`comparison`]: K, K∞, L and KL comparison functions.
//! * [`gains`]: sparse gain graphs and the semimaximum gain operator.
//! * [`smallgain`]: small-gain and monotone-bounded-invertibility checkers.
//! * [`systems`]: input signals, subsystem dynamics, RK4, axiom harness.
//! * [`network`]: interconnections over finite working windows.
//! * [`certify`]: UGS envelopes, attainment times, non-uniform ISS certificates
//!   and the band-limsup proof trace.
//! * [`catalog`]: built-in networks with analytic ground truth.

pub mod catalog;
pub mod certify;
pub mod comparison;
pub mod error;
pub mod gains;
pub mod network;
pub mod seed;
pub mod smallgain;
pub mod systems;

pub use comparison::{CurveClass, KLSurface, ScalarCurve};
pub use error::{Error, Result};
pub use gains::{GainGraph, IndexSet, NonnegSequence, Window};
pub use network::NetworkSpec;
pub use systems::{InputSignal, TimeDomain, Trajectory};
