//! Replica saddle-point machinery for monitored Brownian SYK chains.
//!
//! The crate is organised bottom-up: parameters and permutations, special
//! functions, closed-form cycle amplitudes with a brute-force Fock-space
//! oracle, entropy observables, the mean-field phase diagram, saddle
//! dynamics and a stochastic trajectory simulator.

// `!(x > 0.0)` is used on purpose so that NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitudes;
pub mod entropy_observables;
pub mod fock_oracle;
pub mod model_core;
pub mod permutation_saddles;
pub mod phase_solver;
pub mod special_functions;
pub mod saddle_dynamics;
pub mod trajectory_sim;
pub mod cli;
