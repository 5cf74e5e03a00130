//! Energy functionals, balances, constraint monitors and identity checks on trajectories.

pub mod alinhac;
pub mod balance;
pub mod constraints;
pub mod difference;
pub mod energy;
pub mod lemmas;
pub mod timefd;
pub mod wave;

pub use balance::{physical_energy_balance, BalanceSeries};
pub use constraints::{constraint_residuals, ConstraintRow, ConstraintThresholds};
pub use difference::{difference_energy, difference_sup, MAX_TIME_ORDER};
pub use alinhac::{alinhac_residual, AlinhacReport};
pub use energy::{energy_functionals, EnergyReport, EnergyRow};
pub use lemmas::{lemma_suite, LemmaReport, LemmaRow};
pub use wave::{nonlinear_residuals, wave_equation_residual, NonlinearResiduals, WaveResidual};

use crate::error::Result;
use crate::geometry::{build_geometry, GeometryCache};
use crate::grid::Grid;
use crate::linear_step::Trajectory;

/// Geometry of every snapshot at the trajectory's smoothing length.
pub fn geometries(grid: &Grid, traj: &Trajectory) -> Result<Vec<GeometryCache>> {
    traj.snapshots.iter().map(|s| build_geometry(grid, &s.eta, traj.kappa)).collect()
}
