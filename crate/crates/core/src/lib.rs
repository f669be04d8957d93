//! Numerical laboratory for Stark localization near Aubry-André criticality.
//!
//! The crate builds the single-particle Aubry-André-Stark chain, solves it,
//! measures localization observables and the ground-state quantum Fisher
//! information under phase averaging, and extracts critical exponents by
//! power-law fits and cost-function data collapse.

pub mod eigen;
pub mod lattice;
pub mod observables;
pub mod ensemble;
pub mod scaling;
pub mod cli;
