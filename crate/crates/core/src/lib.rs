//! Simulation of the quantum algorithms for the abelian hidden subgroup
//! problem: the textbook Fourier-sampling algorithm and its
//! initialization-free variant, which accepts an arbitrary (even mixed)
//! auxiliary register and hands it back unchanged.
//!
//! The crate is layered bottom-up:
//!
//! - [`group`]: exact arithmetic in `Z_{N_1} ⊕ … ⊕ Z_{N_k}`, product
//!   subgroups, the generalized inner product and orthogonal subgroups.
//! - [`state`]: dense mixed-radix state vectors and density matrices with
//!   strided local-operator kernels.
//! - [`ops`]: the Fourier transform over `G`, coset states, the oracle
//!   `U_f` and the phase-inversion operator `S_z`.
//! - [`algorithms`]: both pipelines end to end, exact distributions,
//!   sampling, and the z-averaged channel.
//! - [`recovery`]: classical reconstruction of `H` from samples of `H⊥`.
//! - [`experiment`]: configuration, reports and comparison used by the CLI.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (default); see [`exec`].

pub mod algorithms;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod group;
pub mod ops;
pub mod recovery;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
