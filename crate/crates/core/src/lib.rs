//! Lipschitz bandits over adaptively refined box partitions.
//!
//! The crate provides the partition machinery ([`partition`]), the
//! regression-tree refinement ([`tree`]), the bandit engine with its
//! variants ([`bandit`]), a checker for the point-scattering inequalities
//! ([`audit`]), partition-induced Gaussian-process kernels ([`gp`]) and
//! synthetic benchmark objectives ([`bench`]).

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bandit;
pub mod bench;
pub mod gp;
pub mod observations;
pub mod partition;
pub mod tree;
