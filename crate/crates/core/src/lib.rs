//! Spectral diagnostics for energy equality of periodic 3D incompressible flows.
//!
//! Fields live on the torus `[0, 2π)³` as dealiased, divergence-free Fourier
//! coefficient sets. On top of that sit Littlewood-Paley shells and Besov
//! norms ([`dyadic`]), time-direction norms ([`timeseries`]), the dyadic
//! energy flux and truncated balances ([`flux`]), the exact-rational
//! parameter landscape ([`criteria`]), the intermittency heuristics
//! ([`heuristics`]) and a pseudo-spectral solver ([`solver`]).

pub mod criteria;
pub mod defaults;
pub mod dyadic;
pub mod error;
pub mod field;
pub mod flux;
pub mod heuristics;
pub mod solver;
pub mod timeseries;

pub use dyadic::{besov_norm, decompose, low_pass, shell_project, BesovSpec, DyadicShells, ShellIndex};
pub use error::{Error, Result};
pub use field::{
    Grid, PhysicalField, Snapshot, SnapshotSource, Trajectory, VelocityField, BOX_VOLUME,
};
pub use num_rational::Rational64;
pub use timeseries::{NormSeries, TimeSpaceSpec};

/// Float formatting used by every CSV writer: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}
