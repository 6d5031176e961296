//! Trajectory-based stability certificates.
//!
//! * [`fit_ugs`]: additive envelope `‖φ‖ ≤ σ(‖x‖) + γ(‖u‖)` from an ensemble.
//! * [`estimate_attainment_times`]: times after which each component stays
//!   below a level plus a reference gain of the input.
//! * [`build_nonuniform_iss`]: per-component KL bounds from dyadic
//!   attainment data, validated on fresh trajectories.
//! * [`compute_band_limsups`] and [`verify_sg_inequality`]: finite-horizon
//!   band limsups and the small-gain inequality they must satisfy.
//! * [`TailCurve`]: tail sups and their reparametrization.
//!
//! All randomness comes from `(job seed, stream, member)` so results do not
//! depend on the thread count.

mod attainment;
mod ensemble;
mod lemma1;
mod nuiss;
mod trace;
mod ugs;

pub use attainment::{dyadic_levels, estimate_attainment_times, AttainmentTable};
pub use ensemble::{run_members, sample_cells, sample_member, Cell, EnsembleConfig, Member};
pub use lemma1::TailCurve;
pub use nuiss::{
    build_nonuniform_iss, check_holdout, HoldoutBound, HoldoutConfig, HoldoutReport, HoldoutWorst,
    NonUniformISSCertificate, Tolerance,
};
pub use trace::{compute_band_limsups, verify_sg_inequality, Band, BandEntry, ProofTrace, SgCheck, BAND_RESOLUTION};
pub use ugs::{fit_ugs, sample_ugs, ugs_cells, UGSCertificate, UgsSample, LIFT_SLOPE};
