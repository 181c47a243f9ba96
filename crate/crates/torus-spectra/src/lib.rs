//! Resonance partitions, quantum normal forms and eigenvalue labeling for
//! Schrödinger operators −Δ_{g,κ} + V on flat tori.
//!
//! The crate works on the dual lattice side: Fourier indices ξ ∈ ℤ^d carry
//! the free eigenvalues ‖ξ+κ‖²_{g*}, and everything else is built on top:
//!
//! * [`lattice`] — flat metrics, dual norms and the two metric constants
//!   (shortest dual vector, minimal integer parallelepiped volume);
//! * [`submodule`] — exact integer algebra: saturation, adapted bases,
//!   Floquet splitting along a resonance module;
//! * [`partition`] — resonant zones/blocks/extended blocks and the
//!   invariant classes W_{M,β}, with an exhaustive geometry verifier;
//! * [`symbol`], [`op`] — finite-Fourier symbols, Weyl quantization on
//!   truncated boxes, the average/nonresonant/resonant/smoothing split;
//! * [`normalform`] — the iterative conjugation to block-invariant normal
//!   form via exact matrix exponentials;
//! * [`dimred`] — reduction of a resonant block to a lower-dimensional
//!   Schrödinger operator and the recursive reduction tree;
//! * [`spectra`] — eigensolving, Weyl counting, cluster extraction, the
//!   quasimode counting argument, eigenvalue labeling and decay fits;
//! * [`pipeline`], [`config`] — JSON configuration and artifact emission
//!   behind the `torus-spectra` binary.
//!
//! Runnable walkthroughs live under `examples/`.

pub mod config;
pub mod dimred;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod normalform;
pub mod op;
pub mod params;
pub mod partition;
pub mod pipeline;
pub mod spectra;
pub mod submodule;
pub mod symbol;

pub use error::{Error, Result};
pub use lattice::{CoVector, Lattice};
pub use op::{BoxSet, TruncatedOperator};
pub use params::ResonanceParams;
pub use partition::{extended_partition, PartitionResult};
pub use submodule::{floquet_split, saturate, Submodule};
pub use symbol::FourierSymbol;
