//! Numerical core for compressible lubrication with singular pressure laws.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains every solver:
//!
//! * [`eos`]: hard-sphere type pressure laws, the cut-off `T`, the truncated
//!   pressure `p_R` and the renormalization pair `G'_{R,δ}`, `H`.
//! * [`domain`]: periodic gap profiles, the 1-D torus grid and the
//!   terrain-following grid of the film domain `Q = {0 < Z < h(y)}`.
//! * [`reynolds`]: the stationary compressible Reynolds problem, solved by
//!   shooting on its first integral, with a finite-volume Newton oracle.
//! * [`thinfilm`]: the rescaled compressible Navier–Stokes system on `Q` with
//!   artificial viscosity, truncation and δ-continuation, plus the ε-sweep.
//! * [`divfree`]: a discrete Bogovskii solver, divergence-free boundary
//!   extensions and checkers for the functional inequalities used in the
//!   energy and pressure estimates.
//!
//! Everything that touches files, threads or the command line lives in the
//! companion `lubrix` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod divfree;
pub mod domain;
pub mod dual;
pub mod eos;
mod error;
pub mod jacobian;
pub mod linalg;
pub mod math;
pub mod ode;
pub mod quad;
pub mod reynolds;
pub mod roots;
pub mod stagger;
pub mod thinfilm;

pub use error::{Error, Result};
