//! Exclusion processes on crystal lattices and their hydrodynamic limit.
//!
//! A crystal lattice is given as a finite quotient graph whose edges carry
//! integer period shifts. From it the crate computes the periodic harmonic
//! realization and diffusion matrix, simulates the weakly asymmetric simple
//! exclusion process on the `N`-scaling finite graphs, solves the limiting
//! parabolic equation on the torus, and compares the two.

pub mod catalog;
pub mod error;
pub mod exact;
pub mod fourier;
pub mod harmonic;
pub mod lattice;
pub mod sep;
pub mod snapshot;
pub mod pde;
pub mod observables;
pub mod config;
pub mod experiment;
