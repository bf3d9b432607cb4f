//! Numerical laboratory for comparing classical and quantum classifiers
//! under training-data poisoning: dense statevector simulation with adjoint
//! gradients, XXZ ground-state and MNIST binary tasks, two corruption
//! protocols, four machine-unlearning procedures, and Hessian-based
//! loss-landscape analysis.

pub mod checkpoint;
pub mod corruption;
pub mod curvature;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod mlp;
pub mod mnist;
pub mod model;
pub mod optim;
pub mod qnn;
pub mod rng;
pub mod sim;
pub mod unlearning;
pub mod xxz;

pub use error::{Error, Result};
