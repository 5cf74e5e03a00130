//! Residuals of the smoothed nonlinear equations and of the pressure wave equation,
//! evaluated on a trajectory with finite differences in time.

use crate::correction::correction_field;
use crate::error::{Error, Result};
use crate::geometry::{directional_a, div_a, grad_a, laplacian_a_vec, GeometryCache};
use crate::grid::{Grid, MatrixField, ScalarField, VectorField};
use crate::linear_step::Trajectory;
use crate::state::EquationOfState;

use super::geometries;
use super::timefd::{derivative_scalar, stencil};

/// `||f||_0` over the interior planes only (Dirichlet rows excluded).
fn interior_l2(grid: &Grid, f: &ScalarField) -> f64 {
    let mut g = f.clone();
    g.zero_boundary();
    grid.l2_sq(&g).sqrt()
}

fn vec_l2(grid: &Grid, f: &VectorField) -> f64 {
    (0..3).map(|c| grid.l2_sq(&f[c])).sum::<f64>().sqrt()
}

fn interior_vec_l2(grid: &Grid, f: &VectorField) -> f64 {
    (0..3).map(|c| interior_l2(grid, &f[c]).powi(2)).sum::<f64>().sqrt()
}

/// `J~ R'(q) / rho0` at every node.
fn acoustic_weights(traj: &Trajectory, caches: &[GeometryCache], eos: &EquationOfState) -> Vec<ScalarField> {
    traj.snapshots
        .iter()
        .zip(caches)
        .map(|(s, c)| &(&c.j_tilde * &eos.slope(&s.q)) * &s.rho0.map(|x| 1.0 / x))
        .collect()
}

fn time_derivative_matrix(series: &[&MatrixField], j: usize, dt: f64) -> Result<MatrixField> {
    let (start, w) = stencil(series.len(), j, 1, dt)?;
    let mut out = MatrixField::zeros(series[j].dims());
    for mu in 0..3 {
        for alpha in 0..3 {
            for (i, wi) in w.iter().enumerate() {
                out.m[mu][alpha].axpy(*wi, &series[start + i].m[mu][alpha]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveResidual {
    pub t: Vec<f64>,
    /// `||LHS - RHS||_0` over interior planes.
    pub residual: Vec<f64>,
    /// `||r d_t^2 q||_0 + ||div (J~/rho0 grad q)||_0`, for relative comparisons.
    pub scale: Vec<f64>,
}

impl WaveResidual {
    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Second-order pressure equation obtained by differentiating `r d_t q + div v = 0` in time
/// and eliminating `d_t v` with the momentum equation:
///
/// `r d_t^2 q - div(J~/rho0 grad q) = div(J~/rho0 grad |b|^2/2) - div(J~/rho0 (b.grad) b)
///   - d_t r d_t q - (d_t a~^{mu alpha}) d_mu v_alpha`,
/// all operators taken with `a~`.
pub fn wave_equation_residual(grid: &Grid, traj: &Trajectory, eos: &EquationOfState) -> Result<WaveResidual> {
    if traj.len() < 4 {
        return Err(Error::InsufficientHistory(format!(
            "the wave residual needs 4 snapshots, have {}",
            traj.len()
        )));
    }
    let caches = geometries(grid, traj)?;
    let r = acoustic_weights(traj, &caches, eos);
    let q: Vec<ScalarField> = traj.snapshots.iter().map(|s| s.q.clone()).collect();
    let a_series: Vec<&MatrixField> = caches.iter().map(|c| &c.a_tilde).collect();
    let dt = traj.dt;
    let mut out = WaveResidual { t: Vec::new(), residual: Vec::new(), scale: Vec::new() };
    for (j, (s, c)) in traj.snapshots.iter().zip(&caches).enumerate() {
        let a = &c.a_tilde;
        let w = &c.j_tilde * &s.rho0.map(|x| 1.0 / x);
        let qt = derivative_scalar(&q, j, 1, dt)?;
        let qtt = derivative_scalar(&q, j, 2, dt)?;
        let rt = derivative_scalar(&r, j, 1, dt)?;
        let at = time_derivative_matrix(&a_series, j, dt)?;

        let inertia = &r[j] * &qtt;
        let stiffness = div_a(grid, a, &grad_a(grid, a, &s.q).map_comps(|x| x * &w));
        let mut half_b2 = s.b.norm_sq();
        half_b2.scale(0.5);
        let magnetic_pressure = div_a(grid, a, &grad_a(grid, a, &half_b2).map_comps(|x| x * &w));
        let tension = div_a(grid, a, &directional_a(grid, a, &s.b, &s.b).map_comps(|x| x * &w));
        let mut geometric = ScalarField::zeros(grid.dims());
        for alpha in 0..3 {
            let p = grid.gradient(&s.v[alpha]);
            for (mu, d) in p.iter().enumerate() {
                geometric += &(at.get(mu, alpha) * d);
            }
        }
        let lhs = &inertia - &stiffness;
        let rhs = &(&(&magnetic_pressure - &tension) - &(&rt * &qt)) - &geometric;
        out.t.push(s.t);
        out.residual.push(interior_l2(grid, &(&lhs - &rhs)));
        out.scale.push(interior_l2(grid, &inertia) + interior_l2(grid, &stiffness));
    }
    Ok(out)
}

/// Per-node `||.||_0` of each equation of the smoothed nonlinear system.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearResiduals {
    pub t: Vec<f64>,
    /// `d_t eta - v - psi`.
    pub flow_map: Vec<f64>,
    /// `rho0 / J~ d_t v - (b.grad) b + grad Q`.
    pub momentum: Vec<f64>,
    /// `r d_t q + div v`, interior planes.
    pub pressure: Vec<f64>,
    /// `d_t b - lambda Lap b - (b.grad) v + b div v`, interior planes.
    pub induction: Vec<f64>,
}

impl NonlinearResiduals {
    pub fn max(&self) -> f64 {
        [&self.flow_map, &self.momentum, &self.pressure, &self.induction]
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(0.0, f64::max)
    }
}

pub fn nonlinear_residuals(grid: &Grid, traj: &Trajectory, eos: &EquationOfState) -> Result<NonlinearResiduals> {
    if traj.len() < 3 {
        return Err(Error::InsufficientHistory(format!("residuals need 3 snapshots, have {}", traj.len())));
    }
    let caches = geometries(grid, traj)?;
    let r = acoustic_weights(traj, &caches, eos);
    let dt = traj.dt;
    let comp = |f: &dyn Fn(&crate::state::FlowState) -> &ScalarField, j: usize| -> Result<ScalarField> {
        let series: Vec<ScalarField> = traj.snapshots.iter().map(|s| f(s).clone()).collect();
        derivative_scalar(&series, j, 1, dt)
    };
    let mut out = NonlinearResiduals {
        t: Vec::new(),
        flow_map: Vec::new(),
        momentum: Vec::new(),
        pressure: Vec::new(),
        induction: Vec::new(),
    };
    for (j, (s, c)) in traj.snapshots.iter().zip(&caches).enumerate() {
        let a = &c.a_tilde;
        let eta_t = VectorField {
            comps: [comp(&|s| &s.eta.displacement()[0], j)?, comp(&|s| &s.eta.displacement()[1], j)?, comp(&|s| &s.eta.displacement()[2], j)?],
        };
        let v_t = VectorField { comps: [comp(&|s| &s.v[0], j)?, comp(&|s| &s.v[1], j)?, comp(&|s| &s.v[2], j)?] };
        let b_t = VectorField { comps: [comp(&|s| &s.b[0], j)?, comp(&|s| &s.b[1], j)?, comp(&|s| &s.b[2], j)?] };
        let q_t = comp(&|s| &s.q, j)?;

        let psi = correction_field(grid, &s.eta, &s.v, c)?;
        let flow = &(&eta_t - &s.v) - &psi;

        let inertia_w = &s.rho0 * &c.j_tilde.map(|x| 1.0 / x);
        let force = &directional_a(grid, a, &s.b, &s.b) - &grad_a(grid, a, &s.total_pressure());
        let mom = &v_t.map_comps(|x| x * &inertia_w) - &force;

        let div_v = div_a(grid, a, &s.v);
        let pres = &(&r[j] * &q_t) + &div_v;

        let mut ind = &b_t - &laplacian_a_vec(grid, a, &s.b).scaled(eos.lambda);
        ind = &ind - &directional_a(grid, a, &s.b, &s.v);
        ind = &ind + &s.b.map_comps(|x| x * &div_v);

        out.t.push(s.t);
        out.flow_map.push(vec_l2(grid, &flow));
        out.momentum.push(vec_l2(grid, &mom));
        out.pressure.push(interior_l2(grid, &pres));
        out.induction.push(interior_vec_l2(grid, &ind));
    }
    Ok(out)
}
