//! Network-management simulator and dynamic-preference multi-objective RL
//! toolkit.
//!
//! A single preference-conditioned agent scales VNF instances across a
//! network; the reward weighs SLA delay against instance count (α) and, for
//! power management, power draw (β). The agent sees the normalized
//! preference as part of its input, so one checkpoint serves any preference
//! at run time.
//!
//! Modules, bottom-up:
//! - [`sim`]: topology, requests, chain routing, deployments, power.
//! - [`encoding`]: adjacency, annotation matrices, surrogate state.
//! - [`neural`]: tensors, reverse-mode tape, GGNN policy/value network.
//! - [`rl`]: rewards, action sampling, PPO, training driver.
//! - [`pref`]: preference distributions and the exponential effect fit.
//! - [`datagen`]: synthetic datasets with calibrated SLA.
//! - [`eval`]: static/dynamic evaluation and scenarios.
//! - [`steer`]: interactive sessions behind the steering service.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod encoding;
pub mod eval;
pub mod neural;
pub mod pref;
pub mod rl;
pub mod sim;
pub mod steer;
