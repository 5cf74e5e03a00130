//! Energy functionals of a trajectory, truncated at time-derivative order `m <= 2`.

use crate::error::{Error, Result};
use crate::geometry::GeometryCache;
use crate::grid::{Grid, Plane, ScalarField, VectorField};
use crate::linear_step::Trajectory;
use crate::smoothing::MollifierSpec;
use crate::state::EquationOfState;

use super::balance::{dissipation_rate, physical_energy};
use super::constraints::{constraint_row, ConstraintThresholds};
use super::difference::{check_order, mixed_sum_scalar, mixed_sum_vector};
use super::timefd::{derivative_scalar, derivative_vector};
use super::geometries;

/// One time node of the energy report. All entries are squared norms unless noted.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    /// `||eta||_4^2`, identity part included.
    pub eta_h4: f64,
    /// `sum over |alpha| = 4 tangential` of `|a~^{3 beta} d^alpha Lambda eta_beta|_0^2` on both planes.
    pub boundary: f64,
    /// `sum_k ||d_t^{m-k} v||_k^2 + same for b and q`.
    pub fluid: f64,
    /// `int_0^t ||d_t^m b||_0^2 + ||d_t^{m-1} b||_1^2`.
    pub heat: f64,
    /// `||d_t^m q||_0^2 + ||d_t^{m-1} q||_1^2`.
    pub wave: f64,
    /// `eta_h4 + boundary + fluid + heat + wave`.
    pub total: f64,
    pub physical_energy: f64,
    /// `int_0^t D`, trapezoid in time.
    pub dissipated: f64,
    pub taylor_margin: f64,
    pub small_geometry: f64,
    /// `||div_{a~} b||_0` (not squared).
    pub div_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub time_order: usize,
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn sup_total(&self) -> f64 {
        self.rows.iter().map(|r| r.total).fold(0.0, f64::max)
    }
}

/// Tangential orders `(p1, p2)` with `p1 + p2 = 4`.
const TANGENTIAL_FOURTH: [(u32, u32); 5] = [(4, 0), (3, 1), (2, 2), (1, 3), (0, 4)];

/// `|a~^{3 beta} dbar^4 Lambda eta_beta|_0^2` summed over the five fourth-order tangential derivatives.
pub fn boundary_energy(grid: &Grid, cache: &GeometryCache) -> Result<f64> {
    let d = cache.eta.displacement();
    let smoothed: VectorField = if cache.kappa > 0.0 {
        let spec = MollifierSpec::new(cache.kappa)?;
        d.map_comps(|c| spec.apply(grid, c))
    } else {
        d.clone()
    };
    let mut total = 0.0;
    for (p1, p2) in TANGENTIAL_FOURTH {
        let mut acc = ScalarField::zeros(grid.dims());
        for beta in 0..3 {
            let deriv = grid.tangential_derivative(&smoothed[beta], p1, p2);
            acc += &(cache.a_tilde.get(2, beta) * &deriv);
        }
        let tr = grid.trace(&acc);
        total += Plane::BOTH.iter().map(|&p| {
            let pl = tr.plane(p);
            pl.iter().map(|x| x * x).sum::<f64>() / pl.len() as f64
        }).sum::<f64>();
    }
    Ok(total)
}

fn eta_h4(grid: &Grid, cache: &GeometryCache) -> Result<f64> {
    let d = cache.eta.displacement();
    (0..3).map(|a| grid.interior_norm_sq_affine(&d[a], Some(a + 1), 4)).sum()
}

/// Per-node energy functionals with time derivatives by finite differences.
/// Needs at least `m + 2` snapshots when `m >= 1`.
pub fn energy_functionals(
    grid: &Grid,
    traj: &Trajectory,
    m: usize,
    eos: &EquationOfState,
    thresholds: &ConstraintThresholds,
) -> Result<EnergyReport> {
    check_order(m)?;
    if traj.is_empty() || (m >= 1 && traj.len() < m + 2) {
        return Err(Error::InsufficientHistory(format!(
            "energy functionals of order {m} need {} snapshots, have {}",
            if m == 0 { 1 } else { m + 2 },
            traj.len()
        )));
    }
    let caches = geometries(grid, traj)?;
    let dt = traj.dt;
    let v: Vec<VectorField> = traj.snapshots.iter().map(|s| s.v.clone()).collect();
    let b: Vec<VectorField> = traj.snapshots.iter().map(|s| s.b.clone()).collect();
    let q: Vec<ScalarField> = traj.snapshots.iter().map(|s| s.q.clone()).collect();

    let mut rows = Vec::with_capacity(traj.len());
    let mut heat_integral = 0.0;
    let mut dissipated = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (j, (s, cache)) in traj.snapshots.iter().zip(&caches).enumerate() {
        let fluid = mixed_sum_vector(grid, &v, j, m, dt)? + mixed_sum_vector(grid, &b, j, m, dt)?
            + mixed_sum_scalar(grid, &q, j, m, dt)?;
        let bm = derivative_vector(&b, j, m, dt)?;
        let bm_sq: f64 = (0..3).map(|c| grid.l2_sq(&bm[c])).sum();
        let qm = derivative_scalar(&q, j, m, dt)?;
        let mut wave = grid.l2_sq(&qm);
        let mut heat_point = 0.0;
        if m >= 1 {
            let b1 = derivative_vector(&b, j, m - 1, dt)?;
            for c in 0..3 {
                heat_point += grid.interior_norm_sq(&b1[c], 1)?;
            }
            wave += grid.interior_norm_sq(&derivative_scalar(&q, j, m - 1, dt)?, 1)?;
        }
        let rate = dissipation_rate(grid, s, cache, eos);
        if let Some((bm_prev, rate_prev)) = prev {
            heat_integral += 0.5 * dt * (bm_prev + bm_sq);
            dissipated += 0.5 * dt * (rate_prev + rate);
        }
        prev = Some((bm_sq, rate));
        let heat = heat_integral + heat_point;
        let eta = eta_h4(grid, cache)?;
        let boundary = boundary_energy(grid, cache)?;
        let c = constraint_row(grid, s, cache, thresholds)?;
        rows.push(EnergyRow {
            t: s.t,
            eta_h4: eta,
            boundary,
            fluid,
            heat,
            wave,
            total: eta + boundary + fluid + heat + wave,
            physical_energy: physical_energy(grid, s, cache),
            dissipated,
            taylor_margin: c.taylor_margin,
            small_geometry: c.small_geometry,
            div_b: c.div_b,
        });
    }
    Ok(EnergyReport { time_order: m, rows })
}
