//! Calculus on time scales with monotone l'Hôpital rules, plus q-calculus
//! bounds for the q-exponential function.
//!
//! - [`scale`]: time scales, jump operators, graininess, duality.
//! - [`gridfn`]: grid functions, delta/nabla derivatives, monotonicity, mean value witnesses.
//! - [`lhopital`]: the monotone l'Hôpital rules, a premise-satisfying pair generator, and the
//!   randomized verification suite.
//! - [`qcalc`]: q-numbers, q-factorials, q-shifted polynomials, q-derivatives, the q-exponential.
//! - [`qbounds`]: lower and upper bounds for the q-exponential and their certification.

pub mod error;
pub mod scalar;
pub mod gridfn;
pub mod lhopital;
pub mod qbounds;
pub mod qcalc;
pub mod scale;

pub use error::{Error, Result};
pub use scalar::{BigFloat, Real, Scalar, F128, F256, F512};
pub use scale::{Family, PointClass, ScalePoint, TimeScale, TsInterval};
