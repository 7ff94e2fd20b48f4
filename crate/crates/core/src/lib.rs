//! Compositional stability certification for interconnected polynomial
//! dynamical systems.
//!
//! The crate certifies asymptotic stability of a network of polynomial
//! subsystems from per-subsystem Lyapunov functions: sum-of-squares
//! feasibility problems are compiled to semidefinite programs and solved with
//! a built-in first-order splitting solver. When certification fails, a
//! decentralized polynomial state-feedback law is synthesized per failing
//! subsystem. A fixed-step integrator cross-validates every certificate on
//! simulated trajectories.
//!
//! Module map:
//! - [`poly`] — sparse multivariate polynomials, Lie derivatives
//! - [`sdp`] — standard-form semidefinite solver (operator splitting)
//! - [`sos`] — SOS programs over unknown polynomials, Gram certificates
//! - [`model`] — interconnected systems, the Van der Pol network generator
//! - [`lyap`] — per-subsystem Lyapunov search and ROA scaling/expansion
//! - [`certifier`] — round-synchronized ε-schedule stability certification
//! - [`control`] — decentralized state-feedback synthesis
//! - [`sim`] — RK4 integration, Lyapunov traces, empirical ROA probing

pub mod poly;
pub mod sdp;
pub mod sos;

pub use poly::{lie_derivative, Monomial, PolyError, PolyVec, Polynomial, VarSet};
pub use sdp::{SdpProblem, SdpSolution, SdpStatus, SolverOptions};
