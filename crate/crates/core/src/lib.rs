//! Fractional-step wave-front tracking for one-dimensional strictly
//! hyperbolic systems of balance laws with piecewise genuinely nonlinear or
//! linearly degenerate characteristic fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] and [`diagnostics`]: systems, eigen-structure, model checks.
//! * [`envelope`]: discrete convex / concave envelopes.
//! * [`riemann`]: elementary curves, wave fans, Hugoniot classification.
//! * [`engine`]: event-driven front tracking between source steps.
//! * [`fractional`]: source discretization, the full balance-law solver,
//!   convergence studies.
//! * [`functionals`]: Glimm-type functionals, interaction measures, balances.
//! * [`structure`]: sub-discontinuity splitting and curve tracking.
//! * [`config`] and [`output`]: the batch CLI surface.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod envelope;
pub mod error;
pub mod fractional;
pub mod functionals;
pub mod model;
pub mod output;
pub mod profile;
pub mod riemann;
pub mod structure;
pub mod vecops;

pub use error::{Error, Result};
pub use model::{EigenStructure, SourceTerm, State, StateBox, SystemModel};
