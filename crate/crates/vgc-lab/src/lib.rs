//! Out-of-sample performance evaluation and debiasing for affine plug-in
//! policies in data-driven linear optimization.
//!
//! The crate provides:
//! - a stochastic data model with seeded, splittable random streams,
//! - affine plug-in policy classes (SAA, linear-model, mixed-effects),
//! - exact structured solvers with coordinate parametric solution paths,
//! - estimators of out-of-sample performance: in-sample, oracle, the
//!   variance-gradient correction (Monte Carlo and closed form), k-fold
//!   cross-validation, and a Stein-style finite-difference baseline,
//! - a seeded replication harness with bias/variance/RMSE aggregation,
//! - a CLI (`vgc-lab`) that runs experiments from JSON configs into CSV.

pub mod check;
pub mod cli;
pub mod estimators;
pub mod experiments;
pub mod model;
pub mod normal;
pub mod policies;
pub mod rng;
pub mod solvers;
