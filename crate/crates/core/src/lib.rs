//! Numerical laboratory for gradient descent on multiscale toy loss
//! landscapes: analytic subquadratic objectives, GD dynamics with step-decay
//! schedules, 2-periodic orbit solving, quasistatic drift along minima
//! manifolds, and data-built piecewise losses.

pub mod dataloss;
pub mod dynamics;
pub mod error;
pub mod landscapes;
pub mod periodic;
pub mod quasistatic;
pub mod registry;

pub use error::{DataLossError, DynamicsError, LandscapeError, PeriodicError, QuasistaticError};
