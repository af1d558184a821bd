//! Simulator and statistical toolkit for two-wing correlation experiments
//! with three detector settings per wing.
//!
//! A [`strategies::Strategy`] is a source of correlated outcome pairs. The
//! [`harness`] runs one under a reproducible seeded configuration and
//! produces a [`core::TrialLog`]; [`analysis`] estimates the joint
//! distribution from a log and tests it against the locality bounds;
//! [`oracle`] computes the same quantities exactly, in rational arithmetic,
//! for strategies that admit closed forms.

pub mod analysis;
pub mod core;
pub mod harness;
pub mod oracle;
pub mod strategies;
