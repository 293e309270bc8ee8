//! Half-space albedo of a linearly fibered, isotropically scattering medium.
//!
//! Two independent solvers of the same transport problem live here side by
//! side: the closed-form Wiener-Hopf factorization ([`wiener_hopf`]) and a
//! discrete-ordinates eigenbasis solver ([`discrete_ordinates`]). An analog
//! Monte Carlo game ([`monte_carlo`]) provides a third, method-free estimate.
//! [`report`] runs all three and writes CSV, JSON and SVG output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix;
pub mod discrete_ordinates;
pub mod error;
pub mod monte_carlo;
pub mod quadrature;
pub mod report;
pub mod transport;
pub mod verify;
pub mod wiener_hopf;

pub use discrete_ordinates::{albedo_do, cumulative_albedo, CumulativeMode, EigenSystem};
pub use error::{AlbedoError, Result};
pub use monte_carlo::{simulate, McConfig, McResult};
pub use quadrature::{legendre_rule, AngularGrid, GaussLegendre};
pub use report::{emit_outputs, run_comparison, ComparisonReport, Format, McSettings, RunConfig};
pub use transport::{
    dispersion_residual, free_mode_roots, resolvent_integral, AlbedoPattern, IncidenceSpec,
    MediumParams, Method,
};
pub use wiener_hopf::{KappaFactorization, KappaQuadrature};
