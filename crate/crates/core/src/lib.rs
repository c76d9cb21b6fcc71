//! Splitting integrators for the one-dimensional stochastic Allen-Cahn
//! equation `dX = (A X + X - X^3) dt + dW` on (0,1) with Dirichlet
//! conditions and space-time white noise, plus Monte Carlo estimators of
//! their strong and weak convergence orders.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod flows;
pub mod grid;
pub mod lemmas;
pub mod noise;
pub mod schemes;
pub mod stats;

pub use error::{Error, Result};
pub use experiments::{ConvergenceTable, ErrorRow, ExperimentConfig};
pub use flows::FlowParams;
pub use grid::{DiscreteOperator, GridFunction, Mesh};
pub use noise::{IncrementBlock, NoiseKind, NoisePlan};
pub use schemes::{LinearIntegrator, Method, SchemeSpec, StepState, Stepper, TrajectoryStats};
