//! Difference energy between two trajectories on the same time nodes.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::linear_step::Trajectory;

use super::timefd::{derivative_scalar, derivative_vector};

/// Highest time-derivative order the functionals support.
pub const MAX_TIME_ORDER: usize = 2;

pub(crate) fn check_order(m: usize) -> Result<()> {
    if m > MAX_TIME_ORDER {
        return Err(Error::InvalidArgument(format!("time order {m} exceeds the supported {MAX_TIME_ORDER}")));
    }
    Ok(())
}

fn check_matching(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.grid != b.grid || a.dt != b.dt || a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "trajectories differ in grid, dt or length ({} vs {} snapshots, dt {} vs {})",
            a.len(),
            b.len(),
            a.dt,
            b.dt
        )));
    }
    if a.snapshots.iter().zip(&b.snapshots).any(|(x, y)| (x.t - y.t).abs() > 1e-12 * (1.0 + x.t.abs())) {
        return Err(Error::ShapeMismatch("trajectories sampled at different times".into()));
    }
    Ok(())
}

fn vec_norm_sq(grid: &Grid, f: &VectorField, s: u32) -> Result<f64> {
    let mut t = 0.0;
    for c in 0..3 {
        t += grid.interior_norm_sq(&f[c], s)?;
    }
    Ok(t)
}

/// `sum_k ||d_t^{m-k} X||_k^2` over `k = 0..=m` at node `j`.
pub(crate) fn mixed_sum_vector(grid: &Grid, series: &[VectorField], j: usize, m: usize, dt: f64) -> Result<f64> {
    let mut t = 0.0;
    for k in 0..=m {
        let d = derivative_vector(series, j, m - k, dt)?;
        t += vec_norm_sq(grid, &d, k as u32)?;
    }
    Ok(t)
}

pub(crate) fn mixed_sum_scalar(grid: &Grid, series: &[ScalarField], j: usize, m: usize, dt: f64) -> Result<f64> {
    let mut t = 0.0;
    for k in 0..=m {
        let d = derivative_scalar(series, j, m - k, dt)?;
        t += grid.interior_norm_sq(&d, k as u32)?;
    }
    Ok(t)
}

/// Per-node `sum_k (||d_t^{m-k}[v]||_k^2 + ||d_t^{m-k}[b]||_k^2 + ||d_t^{m-k}[q]||_k^2) + ||[eta]||_m^2`,
/// with `[X]` the difference of the two trajectories.
pub fn difference_energy(grid: &Grid, a: &Trajectory, b: &Trajectory, m: usize) -> Result<Vec<f64>> {
    check_order(m)?;
    check_matching(a, b)?;
    let pairs = a.snapshots.iter().zip(&b.snapshots);
    let dv: Vec<VectorField> = pairs.clone().map(|(x, y)| &x.v - &y.v).collect();
    let db: Vec<VectorField> = pairs.clone().map(|(x, y)| &x.b - &y.b).collect();
    let dq: Vec<ScalarField> = pairs.clone().map(|(x, y)| &x.q - &y.q).collect();
    let de: Vec<VectorField> = pairs.map(|(x, y)| x.eta.displacement() - y.eta.displacement()).collect();
    let dt = a.dt;
    (0..a.len())
        .map(|j| {
            Ok(mixed_sum_vector(grid, &dv, j, m, dt)?
                + mixed_sum_vector(grid, &db, j, m, dt)?
                + mixed_sum_scalar(grid, &dq, j, m, dt)?
                + vec_norm_sq(grid, &de[j], m as u32)?)
        })
        .collect()
}

/// `sup` over nodes of [`difference_energy`].
pub fn difference_sup(grid: &Grid, a: &Trajectory, b: &Trajectory, m: usize) -> Result<f64> {
    Ok(difference_energy(grid, a, b, m)?.into_iter().fold(0.0, f64::max))
}
