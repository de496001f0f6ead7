//! Core library for linear best-response games played on networks.
//!
//! Agents sit on an undirected graph and choose a scalar effort. Each agent's
//! best response is a weighted average of its own type and the mean effort in
//! its neighborhood, so the simultaneous equilibrium is the solution of a
//! small linear system. On top of that static game, this crate decides
//! pairwise Nash stability of a network by exhaustive deviation enumeration,
//! checks local completeness, simulates a sequential link-formation process,
//! and mines parameter grids for stable networks that are not locally
//! complete.
//!
//! Every floating-point stability verdict can be escalated to exact rational
//! arithmetic ([`exact`]), so strict-inequality decisions never hinge on
//! rounding.
//!
//! The crate is `no_std` (with `alloc`) and all types are immutable value
//! data: every operation is a pure function of its inputs and safe to call
//! concurrently.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
mod error;
pub mod exact;
pub mod model;
pub mod search;
pub mod stability;

pub use error::Error;
pub use exact::Rational;
pub use model::{EffortProfile, Instance, Network};

/// Hard cap on the agent count; deviation and network enumeration downstream
/// are exponential, so instances are kept at desk scale.
pub const MAX_AGENTS: usize = 64;

/// Maximum degree for which severance subsets are enumerated exhaustively.
pub const MAX_DEGREE: usize = 16;

/// Maximum agent count for whole-network enumeration and reachability search.
pub const MAX_ENUM_AGENTS: usize = 6;

/// Default float margin below which comparisons are re-decided exactly.
pub const DEFAULT_EPS: f64 = 1e-6;

pub(crate) type Result<T> = core::result::Result<T, Error>;
