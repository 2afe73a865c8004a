//! Core library for simulating linear elastodynamics in media carrying a
//! static pre-stress and a steady background velocity.
//!
//! The crate is organised around a small set of ideas:
//!
//! * a structured periodic grid ([`grid`]) with flat `f64` storage for
//!   tensor fields of rank 0 through 4 ([`field`]) and second-order
//!   finite-difference calculus on them ([`ops`]);
//! * material data ([`material`]), the quiescent state the waves ride on
//!   ([`prestate`]) and body forces ([`force`]);
//! * pointwise Lagrangian densities for the classical theory and three
//!   gauge-coupled variants, together with their exact canonical momenta
//!   and stresses ([`lagrangian`]);
//! * discrete action integrals, local transformations and Noether
//!   current bookkeeping ([`gauge`]);
//! * an explicit second-order time stepper for all variants ([`solver`]);
//! * a Bloch-wave homogenizer producing frequency- and wavenumber-
//!   dependent effective constitutive tensors with cross coupling
//!   ([`homogenize`]);
//! * self-check machinery shared by the test suite and the `verify`
//!   subcommand of the CLI ([`verify`]).
//!
//! Everything downstream of the random helpers in [`testfields`] is
//! deterministic: reductions use a fixed pairwise summation order, and
//! worker threads never change results.

pub mod config;
pub mod csvio;
pub mod error;
pub mod expr;
pub mod field;
pub mod force;
pub mod gauge;
pub mod grid;
pub mod homogenize;
pub mod lagrangian;
pub mod material;
pub mod ops;
pub mod prestate;
pub mod solver;
pub mod state;
pub mod testfields;
pub mod verify;

pub use error::CoreError;
