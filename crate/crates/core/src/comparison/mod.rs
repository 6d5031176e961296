//! Comparison functions of classes K, K∞, L and KL.
//!
//! Curves are parametric families or piecewise-linear interpolants; class
//! membership is verified on a sampling grid ([`ClassGrid`]), with K∞
//! unboundedness read off the final slope.

mod curve;
mod kl;
pub(crate) mod pwl;

pub use curve::{fit_monotone_envelope, ClassGrid, CurveClass, CurveJson, Repr, ScalarCurve};
pub use kl::{kl_from_decay_table, DecayTable, KLSurface};
