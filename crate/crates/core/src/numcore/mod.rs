//! Numerical primitives shared by the rest of the crate.

pub mod band;
pub mod cheb;
pub mod eigen;
pub mod lsq;
pub mod ode;
pub mod poly;
pub mod quad;
pub mod roots;

pub use band::BandMatrix;
pub use eigen::{dense_eigenpairs, dense_eigenvalues, EigenPair};
pub use ode::{integrate_ode, integrate_ode_until, OdeEvent, OdeTrajectory};
pub use poly::Polynomial;
pub use quad::{adaptive_quadrature, alternating_tail, quad_semi_infinite, wynn_epsilon};
pub use roots::find_root;

pub type DenseMatrix = nalgebra::DMatrix<f64>;
pub type Complex64 = num::complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    QuadratureFailed { estimate: f64, error: f64 },
    #[error("step size underflow at x = {at}")]
    StepUnderflow { at: f64 },
    #[error("step budget exhausted at x = {at}")]
    StepBudget { at: f64 },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root search did not converge; best bracket [{lo}, {hi}]")]
    RootNotConverged { lo: f64, hi: f64 },
    #[error("eigenvalue iteration did not converge (index {index})")]
    EigenNotConverged { index: usize },
    #[error("singular matrix at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type NumResult<T> = Result<T, NumError>;
