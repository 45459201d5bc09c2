//! Chalker–Coddington network model on the square lattice.
//!
//! The random unitary `U_ω(φ) = D_ω S(φ)` acts on `l²(Z²)`; this crate builds its
//! finite restrictions (boxes with elastic walls, periodic tori, strips, and the
//! operator decoupled along the walls of a box) as sparse complex matrices and
//! measures the localization observables on them:
//!
//! - [`lattice`]: sites, ⟲/⟳ blocks, boxes, strips, boundaries, index maps;
//! - [`operator`]: disorder sampling, `S(φ)`, wall terms, `U`, decoupling;
//! - [`spectral`]: eigen-decomposition, exact block spectrum at φ = 0, gap statistics;
//! - [`resolvent`]: resolvent elements, fractional moments, eigenfunction
//!   correlators, decay fits and the contraction witness;
//! - [`dynamics`]: time evolution and position moments.
//!
//! The crate is `no_std` (it needs `alloc`). Monte Carlo loops go through a
//! [`mc::TrialRunner`] so callers with threads can run trials in parallel while
//! keeping results independent of scheduling.

#![no_std]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod mc;
pub mod operator;
pub mod resolvent;
pub mod seed;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{BlockCoord, BoxSpec, Chirality, IndexMap, Mode, Site};
pub use operator::{Boundary, CouplingOperator, DisorderField, NetworkOperator, PhaseAngle};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
