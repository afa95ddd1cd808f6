//! Self-similar solutions of the time-fractional porous medium equation
//!
//! ```text
//! D^α_t u = (u^m u_x)_x,   u(x, 0) = 0,   u(0, t) = 1,   0 < α < 1,  m > 1
//! ```
//!
//! Substituting `u = U(η)` with `η = x t^{-α/2}` turns the problem into a
//! nonlocal ODE for `U` involving the Erdélyi-Kober operator
//!
//! ```text
//! I U(η) = 1/Γ(1-α) ∫₀¹ (1-s)^{-α} U(s^{-α/2} η) ds.
//! ```
//!
//! Integrating twice and writing `Y = U^{m+1}` gives the Volterra form
//!
//! ```text
//! Y(η) = 1 + (m+1) [ -βη + ∫₀^η ((1-α/2)η - z) I U(z) dz ],
//! ```
//!
//! where `β` is the unknown slope at the origin. The physical solution has
//! compact support `[0, η*]` and zero flux `U^m U'` at the front.
//!
//! Modules:
//! - [`special`]: gamma function and Gauss-Jacobi rules.
//! - [`bounds`]: closed-form envelopes and brackets.
//! - [`ekoperator`]: the operator `I` on gridded profiles and closed-form fixtures.
//! - [`volterra`]: the truncated fixed-point map and Picard iteration for a given `β`.
//! - [`shooting`]: the no-flux condition, the search over `β` and the front-anchored solver.
//! - [`pde_oracle`]: a direct L1 time-stepper for the original PDE.
//! - [`cli`]: the `fracpme` command-line front end.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod cli;
pub mod ekoperator;
pub mod pde_oracle;
pub mod shooting;
pub mod special;
pub mod volterra;

mod error;

pub use bounds::{BoundsReport, ProblemParams};
pub use ekoperator::{EkOperator, EkQuadrature, FrontShape, Profile, Represents};
pub use error::{Error, Result};
pub use shooting::{shoot, ShootConfig, ShootingResult};
pub use volterra::{picard_solve, FixedPointDiagnostics, SolverConfig};
