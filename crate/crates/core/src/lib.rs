//! Numerical laboratory for the random displacement model
//! `H = -Δ + Σ_n q(x - n - ω_n)` on finite boxes of unit cells.
//!
//! The crate is organised bottom-up: [`discretize`] builds finite-difference
//! operators, [`potential`] supplies single-site potentials and displacement
//! laws, [`eigen`] solves for the bottom of the spectrum, and the remaining
//! modules run the experiments built on top of them.

pub mod configs;
pub mod discretize;
pub mod eigen;
pub mod error;
pub mod ids1d;
pub mod landscape;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod sparse;
pub mod stats;

pub use discretize::{assemble, build_laplacian, BoundaryCondition, BoxSpec, BuildOptions, DiscreteOperator};
pub use eigen::{count_below, dense_oracle, smallest_eigs, EigenOptions, EigenResult};
pub use error::{Error, Result};
pub use potential::{DisplacementConfig, DisplacementLaw, RadialProfile, Shape, SingleSite};
