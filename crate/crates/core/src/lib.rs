//! Vortex structure of rotating two-dimensional Bose–Einstein condensates in
//! anisotropic homogeneous traps `V = (x² + λ²y²)^{s/2}` in the Thomas–Fermi
//! regime.
//!
//! The crate is split along the physics:
//!
//! * [`trap`]: trap parameters, Thomas–Fermi density and chemical potential.
//! * [`flow`]: the stream function χ and the vortex-free phase S.
//! * [`ladder`]: critical angular velocities and vortex-count prediction.
//! * [`energetics`]: vortex interaction, renormalized energy and energy deltas.
//! * [`pattern`]: minimization of the renormalized energy over vortex positions.
//! * [`gp`]: a direct grid minimizer of the scaled Gross–Pitaevskii functional,
//!   used as an independent oracle.
//! * [`output`]: deterministic JSON/CSV emission and atomic file writes.

pub mod energetics;
pub mod error;
pub mod flow;
pub mod gp;
pub mod ladder;
pub mod output;
pub mod pattern;
pub mod trap;

pub use error::{Error, Result};
pub use ladder::ScalingContext;
pub use trap::{Point, Slope, TrapParams};
