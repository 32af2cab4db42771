//! Numerical counterparts of the existence theorem, the monotonicity and
//! squeeze statements in the opening angle, and the pushforward lemma.

pub mod lemma;
pub mod spline;
pub mod sweep;
pub mod trial;

pub use lemma::{lemma_audit, pushforward, remainder_term, transplant_to_tube, LemmaAudit, LemmaOptions};
pub use sweep::{angle_sweep, sweep_verdict, SweepRow, SweepVerdict};
pub use trial::{
    build_trial, case_estimate, cutoff_chi, decompose_trial, fit_decay, CaseEstimate, Cutoff, RitzBox,
    TrialDecomposition, TrialField, TrialMode, TrialOptions, TrialParams,
};
