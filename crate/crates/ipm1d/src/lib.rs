//! Pseudo-spectral simulator and verification toolkit for the one-dimensional
//! interface model of incompressible porous-media flow
//!
//! ```text
//!     d/dt rho + u d/dx rho = 0,      u = g * H_a(rho)
//! ```
//!
//! posed on the circle `[-pi, pi)`. The nonlocal velocity operator `H_a` is the
//! convolution with the kernel `K_a(y) = a^2 / (pi y (y^2 + a^2))`, a depth-`a`
//! regularization of the Hilbert transform: its Fourier multiplier on mode `k`
//! is `-i sgn(k) (1 - e^(-a|k|))`, so `H_a = H (I - P_a)` with `H` the periodic
//! Hilbert transform and `P_a` the Poisson smoothing at depth `a`.
//!
//! The crate provides
//!
//! * [`grid`]: uniform periodic grids, FFT-backed transforms, spectral
//!   differentiation, and 2/3-rule dealiasing,
//! * [`operators`]: the velocity operator in spectral form together with an
//!   independent quadrature oracle and an operator property suite,
//! * [`kernels`]: the kernels `K_a`, `Q_a`, `G_a` and numerical checks of the
//!   comparison-kernel inequalities behind the finite-time blow-up argument,
//! * [`solver`]: an RK4 method-of-lines integrator with CFL time stepping and
//!   blow-up proxy stopping conditions,
//! * [`diagnostics`]: conserved-quantity tracking, the singular-weight
//!   functional `J(t)`, and Riccati fits of its growth.
//!
//! Blow-up is never asserted by the code; the solver stops on resolution or
//! slope proxies and the diagnostics record the evidence.

pub mod diagnostics;
pub mod grid;
pub mod kernels;
pub mod operators;
pub mod quad;
pub mod solver;

/// Errors reported by grid construction, operator application, kernel
/// evaluation, and the solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid grid or solver configuration (wrong sizes, bad ranges).
    #[error("configuration error: {0}")]
    Config(String),
    /// Invalid operator or kernel parameter (for example `a <= 0`).
    #[error("parameter error: {0}")]
    Param(String),
    /// Evaluation outside a kernel's domain (for example at a pole).
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite values or a quadrature that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Input violates a documented precondition (for example class membership).
    #[error("precondition error: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Outcome of one named numerical check, with an explicit signed margin.
///
/// `observed` is the worst value the check saw (its meaning depends on the
/// check), `margin` is oriented so that nonnegative means the check passed,
/// and `location` says where the worst case occurred.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub observed: f64,
    pub margin: f64,
    pub location: String,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}
