//! Time integrators.
//!
//! [`dopri5`] is an explicit adaptive Dormand–Prince 5(4) pair with the
//! standard fourth-order continuous extension, used for the scalar kinetic
//! equations. [`sdirk`] is an L-stable singly diagonally implicit Runge–Kutta
//! method for linear systems with tridiagonal generators, used for the
//! birth-death master equation whose stiffness grows with the truncation.

pub mod dopri5;
pub mod sdirk;

pub use dopri5::{integrate, DenseRun, Dopri5Options};
pub use sdirk::{Sdirk4, Tridiagonal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("output times must be finite, non-decreasing and start at or after t0")]
    BadOutputGrid,
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("exceeded {0} integration steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

pub(crate) fn check_grid(t0: f64, grid: &[f64]) -> Result<(), OdeError> {
    let mut prev = t0;
    for &t in grid {
        if !t.is_finite() || t < prev {
            return Err(OdeError::BadOutputGrid);
        }
        prev = t;
    }
    Ok(())
}
