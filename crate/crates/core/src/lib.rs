//! Blow-up analysis of boundary-point regularity for higher-order parabolic,
//! dispersive and hyperbolic equations in backward paraboloid-like domains.
//!
//! The crate is organised bottom-up: [`numcore`] supplies quadrature, ODE and
//! linear-algebra primitives; [`kernels`] evaluates rescaled fundamental
//! solutions and their Hermite systems; [`spectral`] solves the clamped
//! interval eigenproblem; [`blayer`] builds wall boundary layers; [`criteria`]
//! classifies lateral boundaries; [`pdesim`] integrates the rescaled PDE.

pub mod blayer;
pub mod criteria;
pub mod kernels;
pub mod numcore;
pub mod pdesim;
pub mod spectral;

pub use numcore::{NumError, NumResult};
