//! Numerical laboratory for the parabolic Anderson model with a heavy-tailed Poissonian potential.
//!
//! The potential is V(x) = Σᵢ v̂(x − ωᵢ) with v̂(x) = |x|^{−α} ∧ 1 and ω a Poisson process of intensity ν
//! in ℝ^d, d < α < d+2. The crate computes the survival asymptotics constants, Feynman–Kac survival
//! probabilities, principal Dirichlet eigenvalues, the integrated density of states and the tilted
//! point-process quantities that govern them.

pub mod error;
pub mod fk;
pub mod gk;
pub mod model;
pub mod ppp;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod special;
pub mod stats;
pub mod sum;
pub mod tilt;
pub mod tridiag;

pub use error::{PamError, Result};
pub use model::{constants, ModelParams};
