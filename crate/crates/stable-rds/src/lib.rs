//! Simulation and statistical verification of stable limit laws for random
//! compositions of interval maps.
//!
//! The library builds random cocycles out of two map families (piecewise
//! linear `beta x mod 1` maps and LSV intermittent maps), evaluates the
//! heavy-tailed observable `|x - x0|^(-1/alpha)` along orbits, and checks the
//! resulting rescaled Birkhoff sums, hitting times and point patterns against
//! their predicted limits: alpha-stable laws, exponential hitting laws and
//! Poisson point processes.
//!
//! Everything is deterministic: symbol sequences and all Monte Carlo draws
//! are counter-based functions of `(seed, index)`, so results are identical
//! for any worker count.
//!
//! Entry points:
//! - [`maps`]: map families, branch geometry, cocycle orbits.
//! - [`driving`]: iid symbol sequences with two-sided indexing.
//! - [`tailmodel`]: scaling/centering constants, Levy measure, Karamata checks.
//! - [`transfer`]: Ulam operators, stationary and pullback densities.
//! - [`pointprocess`]: hitting times, point patterns, Poisson experiments.
//! - [`stable`]: stable characteristic function, iid oracle, CMS sampler, KS.
//! - [`harness`]: experiment configs, runners and the CLI.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod driving;
pub mod error;
pub mod harness;
pub mod maps;
pub mod pointprocess;
pub(crate) mod quad;
pub mod stable;
pub mod tailmodel;
pub mod transfer;

pub use error::{Error, Result};
