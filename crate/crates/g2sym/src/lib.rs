//! Computational core for G2 geometry with T²×SU(2) symmetry.
//!
//! * [`g2_linear`] — pointwise G2 linear algebra on ℝ⁷.
//! * [`fhn`] — the cohomogeneity-one ODE of the enhanced FHN family, its
//!   singular-orbit seeds, Bryant–Salamon closed forms, and φ/∗φ assembly.
//! * [`multimoment`] — Hopf projections, Killing frames and multi-moment maps.
//! * [`tracer`] — calibrated level sets on the quotient B = (0,π)×I.
//! * [`trisymplectic`] — the τ matrix ODE for invariant tri-symplectic 4-manifolds.
//!
//! [`ext`] and [`ode`] are the shared exterior-algebra and integrator layers.

pub mod error;
pub mod ext;
pub mod multimoment;
pub mod g2_linear;
pub mod fhn;
pub mod ode;
pub mod quat;
pub mod tracer;
pub mod trisymplectic;

pub use error::{Error, Result};
