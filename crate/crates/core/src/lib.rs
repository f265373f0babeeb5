//! Random walks conditioned to stay positive or to avoid zero, path measures
//! built from regeneration epochs (pinning and wetting models), and the
//! Monte Carlo / exact-DP machinery used to check their diffusive scaling.
//!
//! The crate is organised bottom-up:
//!
//! * [`steplaw`] validates increment distributions (finite lattice or Gaussian).
//! * [`lattice_dp`] builds exact occupation, survival and first-return tables
//!   and exposes the Doob h-transform kernels of every conditioned law, plus a
//!   brute-force enumeration oracle.
//! * [`samplers`] draws exact paths from the six conditioned laws.
//! * [`regeneration`] concatenates excursions between regeneration epochs.
//! * [`pinning`] computes partition functions and samples pinning/wetting paths.
//! * [`diagnostics`] estimates uniform-integrability tails, tail scaling,
//!   continuity moduli and endpoint goodness of fit.

pub mod diagnostics;
mod error;
pub mod lattice_dp;
pub mod pinning;
pub mod regeneration;
pub mod rng;
pub mod samplers;
pub mod steplaw;
pub mod weight;

pub use error::{Error, Result};
pub use lattice_dp::{DpTables, LawKind, TableSelection};
pub use samplers::{Path, RescaledPath};
pub use steplaw::{StepLaw, StepSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
