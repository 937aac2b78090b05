//! Grid oracle: direct minimization of the scaled Gross–Pitaevskii
//! functional at finite `ε`, vortex detection, and comparisons with the
//! asymptotic predictions.

pub mod analysis;
pub mod detect;
pub mod dst;
pub mod grid;
pub mod snapshot;
pub mod solver;

pub use analysis::{density_comparison, nucleation_sweep, scan, tail_check, DensityComparison, NucleationResult, SweepPoint, TailBound};
pub use detect::{detect_vortices, DetectedVortex, Detection};
pub use grid::{GpGrid, GridSpec, Seed};
pub use snapshot::Snapshot;
pub use solver::{minimize, solve, Solution, SolveOptions, SolveReport};
