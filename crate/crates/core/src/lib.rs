//! Optimal and low-entanglement strategies for XOR nonlocal games.
//!
//! The crate is organized bottom-up:
//!
//! * [`matcore`]: dense complex matrix kernels and bipartite pure states.
//! * [`game`]: XOR games, the CHSH(n) family, bias evaluation and sampling.
//! * [`sdpsolve`]: the vector relaxation of the bias, solved by coordinate ascent.
//! * [`clifford`]: lifting unit vectors to observables on a maximally
//!   entangled state, and the explicit optimal CHSH(n) strategy.
//! * [`rounding`]: random quaternary projection with a hyperbolic-secant
//!   phase twist, producing strategies in dimension `2^d`.
//! * [`rigidity`]: anti-commutation diagnostics, exact repair, qubit-pair
//!   extraction and entanglement-entropy certificates for CHSH(n).

pub mod clifford;
pub mod error;
pub mod game;
pub mod matcore;
pub mod rigidity;
pub mod rounding;
pub mod sdpsolve;
pub mod seeds;

pub use error::{Error, Result};
pub use game::{BiasValue, QuantumStrategy, XorGame};
pub use matcore::{BipartiteState, ComplexMatrix, C64};
pub use sdpsolve::VectorStrategy;

/// `√2/2`, the optimal bias of every CHSH(n) game.
pub const CHSH_BIAS: f64 = std::f64::consts::FRAC_1_SQRT_2;
