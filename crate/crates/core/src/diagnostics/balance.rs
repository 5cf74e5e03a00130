//! Physical energy balance `d/dt E = -D` evaluated in Lagrangian variables.

use crate::geometry::{grad_a, GeometryCache};
use crate::grid::Grid;
use crate::linear_step::Trajectory;
use crate::error::Result;
use crate::state::{EquationOfState, FlowState};

use super::geometries;

/// `int (rho0 |v|^2 / 2 + J~ |b|^2 / 2 + rho0 Qpot(R(q)))`.
pub fn physical_energy(grid: &Grid, s: &FlowState, cache: &GeometryCache) -> f64 {
    let eos = EquationOfState::default();
    let kin = &s.v.norm_sq() * &s.rho0;
    let mag = &s.b.norm_sq() * &cache.j_tilde;
    let pot = &s.q.map(|q| eos.potential_of_pressure(q)) * &s.rho0;
    0.5 * grid.integrate(&kin) + 0.5 * grid.integrate(&mag) + grid.integrate(&pot)
}

/// `D = lambda int J~ |grad_{a~} b|^2`.
pub fn dissipation_rate(grid: &Grid, s: &FlowState, cache: &GeometryCache, eos: &EquationOfState) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let g = grad_a(grid, &cache.a_tilde, &s.b[c]);
        total += grid.integrate(&(&g.norm_sq() * &cache.j_tilde));
    }
    eos.lambda * total
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceSeries {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// `E(t_{j+1}) - E(t_j) + int_{t_j}^{t_{j+1}} D` (trapezoid), one per step.
    pub residuals: Vec<f64>,
}

impl BalanceSeries {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Accumulated residual `E(T) - E(0) + int_0^T D`.
    pub fn total_residual(&self) -> f64 {
        self.residuals.iter().sum()
    }
}

pub fn physical_energy_balance(grid: &Grid, traj: &Trajectory, eos: &EquationOfState) -> Result<BalanceSeries> {
    let caches = geometries(grid, traj)?;
    let energy: Vec<f64> = traj.snapshots.iter().zip(&caches).map(|(s, c)| physical_energy(grid, s, c)).collect();
    let dissipation: Vec<f64> =
        traj.snapshots.iter().zip(&caches).map(|(s, c)| dissipation_rate(grid, s, c, eos)).collect();
    let residuals = (0..traj.len().saturating_sub(1))
        .map(|j| energy[j + 1] - energy[j] + 0.5 * traj.dt * (dissipation[j] + dissipation[j + 1]))
        .collect();
    Ok(BalanceSeries { t: traj.snapshots.iter().map(|s| s.t).collect(), energy, dissipation, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarField};
    use crate::picard::trivial_trajectory;

    #[test]
    fn all_zero_run_balances_exactly() {
        let g = Grid::new(GridSpec::new(8, 8, 8).unwrap()).unwrap();
        let init = FlowState::trivial(ScalarField::constant(g.dims(), 1.0));
        let traj = trivial_trajectory(&g, &init, 0.1, 0.01, 3);
        let bal = physical_energy_balance(&g, &traj, &EquationOfState::default()).unwrap();
        assert_eq!(bal.residuals, vec![0.0; 3]);
        assert_eq!(bal.energy, vec![0.0; 4]);
    }

    #[test]
    fn pressure_potential_is_nonnegative() {
        let eos = EquationOfState::default();
        for q in [-2.0, -0.5, 0.0, 0.3, 3.0] {
            assert!(eos.potential_of_pressure(q) >= -1e-16);
        }
    }
}
