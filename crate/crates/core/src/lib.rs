//! Numerical machinery for Laplace-transform volume products of nonnegative
//! functions on grids.
//!
//! The crate works throughout in the log domain with the conjugate exponent
//! range `p ∈ (0,1)`, `q = p/(p−1) < 0`, where the transform
//! `f ↦ (L f^{1/p})^q` is log-concave and a Blaschke–Santaló-type inequality
//! holds with Gaussian extremizers. The pieces:
//!
//! - [`gridfn`]: log-domain grid functions, quadrature, moments, norms.
//! - [`transforms`]: the Laplace transform, its `p`-power form, the discrete
//!   Legendre (polar) transform, and dual-grid selection.
//! - [`santalo`]: the convex objective `z ↦ log ∫ (L f^{1/p})^q e^{qz·x} dx`,
//!   a damped Newton solver for its minimizer, and the support dichotomy that
//!   separates attained minima from vanishing infima.
//! - [`semigroups`]: heat, Fokker–Planck and Ornstein–Uhlenbeck flows with
//!   exact kernel quadrature.
//! - [`products`]: the volume products `M_p(f)` and `M(f)`, Gaussian
//!   reference constants, monotonicity sweeps along flows, the differential
//!   inequality residual, the reverse-hypercontractivity check, and the
//!   experimental Santaló-curve integrator.
//!
//! All values are immutable after construction and every operation is a pure
//! function; results are independent of thread scheduling because every
//! reduction uses a fixed order.

mod axisops;
pub mod error;
pub mod gridfn;
pub mod num;
pub mod products;
pub mod santalo;
pub mod semigroups;
pub mod transforms;

pub use error::{Error, Result};
pub use gridfn::{Axis, ExponentPair, GridFunction, GridSpec, Weight};
pub use santalo::{SantaloOutcome, SolverOptions, SupportVerdict};
pub use semigroups::SemigroupKind;
