//! Bifurcation analysis of the polygonal ring of `n` identical point vortices
//! (or nearly-parallel filaments) with one central element of circulation `mu`.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: potential, gradient, Hessian, ring equilibrium, vector fields
//!   and the group actions that the problem is equivariant under.
//! * [`symmetry`]: the symmetry-adapted change of variables and the
//!   block decomposition of the Hessian at the ring.
//! * [`spectral`]: frequency-domain blocks `m_k(nu)`, Morse indices, index
//!   jumps and the bifurcation frequencies, closed form and scanned.
//! * [`dynamics`]: time integration with conservation and collision monitors.
//! * [`continuation`]: Fourier-Galerkin computation and continuation of the
//!   bifurcating periodic orbits.

pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
pub use model::{Configuration, ProblemKind, ProblemParams};

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;
