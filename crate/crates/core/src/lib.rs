//! Physics-informed symbolic regression for systems of PDEs.
//!
//! A symbolic network relaxes the choice between grammar productions
//! (`sin`, `exp`, `+`, `*`, inputs, constants) into a trainable weighted
//! sum. Training it against a PDE residual loss yields a closed-form
//! expression for the solution. The crate also provides:
//!
//! * neurosymbolic networks, which add an MLP to model what the symbolic
//!   part misses;
//! * hypernetworks that map a task parameter (Reynolds number, viscosity)
//!   to the weights of any of these networks;
//! * domain-decomposed training with interface coupling;
//! * a catalog of benchmark PDEs with exact solutions.
//!
//! Start with [`harness::train`] or the programs under `examples/`.

pub mod autodiff;
pub mod decomp;
pub mod harness;
pub mod hyper;
pub mod mlp;
pub mod network;
pub mod pdelib;
pub mod physics;
pub mod symnet;
