//! Exact normal forms for real formal surfaces `w = z² + z̄² + O(3)` in `ℂ²`.
//!
//! The crate is organized bottom-up:
//!
//! * [`scalar`]: Gaussian rationals and polynomials in real parameters.
//! * [`poly`]: sparse polynomials in `(z, z̄)`, the Fischer pairing and the
//!   adjoint differential operator.
//! * [`linalg`]: exact Gaussian elimination over the rationals.
//! * [`fischer`]: division by `Q = z² + z̄²`, harmonic parts, chain
//!   decompositions and the invariant cubic `W`.
//! * [`surface`]: surfaces, formal maps, jet inversion and push-forward.
//! * [`normalform`]: the degree-by-degree normalization and its checks.
//! * [`io`]: JSON literal formats.
//! * [`random`]: seeded generators for property trials.

pub mod error;
pub mod fischer;
pub mod io;
pub mod linalg;
pub mod normalform;
pub mod poly;
pub mod random;
pub mod scalar;
pub mod surface;

pub use error::{Error, Result};
pub use poly::{adjoint_apply, fischer_pair, BiPoly, Bideg};
pub use scalar::{GaussRat, ParamScalar, Rat, Scalar};
