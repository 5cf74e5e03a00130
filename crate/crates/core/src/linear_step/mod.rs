//! One linearized iterate: the flow driven by frozen coefficients from the previous iterate.
//!
//! `(eta, v, q)` use explicit midpoint; `b` uses backward Euler in the diffusion and
//! takes its transport source at the new velocity.

pub mod diffusion;

use std::sync::Arc;

use crate::correction::correction_field;
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, directional_a, div_a, grad_a, FlowMap};
use crate::grid::{Grid, GridSpec, MatrixField, ScalarField, VectorField};
use crate::state::{EquationOfState, FlowState};

pub use diffusion::{implicit_diffusion_solve, DiffusionOptions, ModalSolver, SolveStats};

pub const DEFAULT_CFL_SAFETY: f64 = 0.4;

/// Coefficients frozen at one time node.
#[derive(Clone, Debug)]
pub struct FrozenNode {
    pub a_tilde: MatrixField,
    pub j_tilde: ScalarField,
    pub b: VectorField,
    pub q: ScalarField,
    /// `J~ R'(q) / rho0`.
    pub r: ScalarField,
    pub psi: VectorField,
}

impl FrozenNode {
    fn average(x: &Self, y: &Self) -> Self {
        let avg = |u: &ScalarField, w: &ScalarField| &(u + w) * 0.5;
        let avg_v = |u: &VectorField, w: &VectorField| u.zip_comps(w, |p, q| avg(p, q));
        Self {
            a_tilde: x.a_tilde.zip_entries(&y.a_tilde, |p, q| avg(p, q)),
            j_tilde: avg(&x.j_tilde, &y.j_tilde),
            b: avg_v(&x.b, &y.b),
            q: avg(&x.q, &y.q),
            r: avg(&x.r, &y.r),
            psi: avg_v(&x.psi, &y.psi),
        }
    }
}

/// Frozen coefficients on the uniform time nodes `t_j = j dt`, `j = 0..=M`.
#[derive(Clone, Debug)]
pub struct FrozenCoefficients {
    pub kappa: f64,
    pub rho0: ScalarField,
    nodes: Vec<Arc<FrozenNode>>,
}

impl FrozenCoefficients {
    /// Coefficients of the trivial iterate `(Id, 0, 0, 0)`: `a~ = I`, `J~ = 1`, `r = 1/rho0`.
    pub fn trivial(rho0: &ScalarField, kappa: f64, nodes: usize) -> Self {
        let dims = rho0.dims();
        let node = Arc::new(FrozenNode {
            a_tilde: MatrixField::identity(dims),
            j_tilde: ScalarField::constant(dims, 1.0),
            b: VectorField::zeros(dims),
            q: ScalarField::zeros(dims),
            r: rho0.map(|x| 1.0 / x),
            psi: VectorField::zeros(dims),
        });
        Self { kappa, rho0: rho0.clone(), nodes: vec![node; nodes] }
    }

    /// Freezes every snapshot of `traj`, computing the smoothed geometry and `psi`.
    pub fn from_trajectory(grid: &Grid, traj: &Trajectory, kappa: f64, eos: &EquationOfState) -> Result<Self> {
        let rho0 = traj.snapshots[0].rho0.clone();
        let mut nodes = Vec::with_capacity(traj.snapshots.len());
        for s in &traj.snapshots {
            let cache = build_geometry(grid, &s.eta, kappa)?;
            let psi = correction_field(grid, &s.eta, &s.v, &cache)?;
            let r = &(&cache.j_tilde * &eos.slope(&s.q)) * &rho0.map(|x| 1.0 / x);
            if let Some(bad) = r.as_slice().iter().position(|&x| !(x > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "frozen coefficient J~ R'(q)/rho0 not positive at {:?}",
                    r.dims().location(bad)
                )));
            }
            nodes.push(Arc::new(FrozenNode {
                a_tilde: cache.a_tilde,
                j_tilde: cache.j_tilde,
                b: s.b.clone(),
                q: s.q.clone(),
                r,
                psi,
            }));
        }
        Ok(Self { kappa, rho0, nodes })
    }

    /// Coefficients given node by node, e.g. drawn at random for linearity checks.
    pub fn from_nodes(rho0: ScalarField, kappa: f64, nodes: Vec<FrozenNode>) -> Self {
        Self { kappa, rho0, nodes: nodes.into_iter().map(Arc::new).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, j: usize) -> &FrozenNode {
        &self.nodes[j]
    }

    /// Linear interpolation half way between nodes `j` and `j + 1`.
    pub fn midpoint(&self, j: usize) -> FrozenNode {
        if Arc::ptr_eq(&self.nodes[j], &self.nodes[j + 1]) {
            return (*self.nodes[j]).clone();
        }
        FrozenNode::average(&self.nodes[j], &self.nodes[j + 1])
    }

    /// `min sqrt(rho0 r / J~)` over all nodes: the inverse of the largest acoustic speed.
    pub fn speed_factor(&self) -> f64 {
        let mut worst = f64::INFINITY;
        let mut seen: Vec<*const FrozenNode> = Vec::new();
        for n in &self.nodes {
            let p = Arc::as_ptr(n);
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            for ((r, j), rho) in n.r.as_slice().iter().zip(n.j_tilde.as_slice()).zip(self.rho0.as_slice()) {
                worst = worst.min((rho * r / j).sqrt());
            }
        }
        worst
    }
}

/// Snapshots at `t_j = t_0 + j dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub dt: f64,
    pub kappa: f64,
    pub snapshots: Vec<FlowState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &FlowState {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub cfl_safety: f64,
    pub diffusion: DiffusionOptions,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { cfl_safety: DEFAULT_CFL_SAFETY, diffusion: DiffusionOptions::default() }
    }
}

/// Number of steps `M` with `M dt = t_end`.
pub fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and T > 0, got dt = {dt}, T = {t_end}")));
    }
    let m = (t_end / dt).round();
    if m < 1.0 || (m * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!("T = {t_end} is not a whole number of steps dt = {dt}")));
    }
    Ok(m as usize)
}

/// Rejects `dt` above `cfl_safety * h3 * min sqrt(rho0 r / J~)`.
pub fn check_cfl(grid: &Grid, frozen: &FrozenCoefficients, dt: f64, cfl_safety: f64) -> Result<()> {
    let speed_factor = frozen.speed_factor();
    let bound = cfl_safety * grid.h3() * speed_factor;
    if dt > bound {
        return Err(Error::Cfl { dt, bound, safety: cfl_safety, h3: grid.h3(), speed_factor });
    }
    Ok(())
}

/// `(J~/rho0) ((b0 . grad) b - grad (q + b0 . b / 2))`, dealiased.
fn momentum_rhs(grid: &Grid, node: &FrozenNode, inv_rho0: &ScalarField, q: &ScalarField, b: &VectorField) -> VectorField {
    let mut total = node.b.dot(b);
    total.scale(0.5);
    total += q;
    let force = &directional_a(grid, &node.a_tilde, &node.b, b) - &grad_a(grid, &node.a_tilde, &total);
    let w = &node.j_tilde * inv_rho0;
    grid.dealias_vector(&force.map_comps(|c| c * &w))
}

/// `-div v / r`, dealiased.
fn pressure_rhs(grid: &Grid, node: &FrozenNode, v: &VectorField) -> ScalarField {
    let d = div_a(grid, &node.a_tilde, v);
    grid.dealias(&d.zip_map(&node.r, |x, r| -x / r))
}

/// `(b0 . grad) v - b0 div v`, dealiased.
fn induction_source(grid: &Grid, node: &FrozenNode, v: &VectorField) -> VectorField {
    let d = div_a(grid, &node.a_tilde, v);
    let s = &directional_a(grid, &node.a_tilde, &node.b, v) - &node.b.map_comps(|c| c * &d);
    grid.dealias_vector(&s)
}

/// Integrates the linearized system from `init` over `[t0, t0 + t_end]`.
pub fn advance_linearized(
    grid: &Grid,
    frozen: &FrozenCoefficients,
    init: &FlowState,
    dt: f64,
    t_end: f64,
    eos: &EquationOfState,
    opts: &StepOptions,
) -> Result<Trajectory> {
    let steps = step_count(dt, t_end)?;
    if frozen.len() < steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "frozen coefficients cover {} nodes, {} needed",
            frozen.len(),
            steps + 1
        )));
    }
    if init.v.dims() != grid.dims() {
        return Err(Error::ShapeMismatch("initial state does not match the grid".into()));
    }
    check_cfl(grid, frozen, dt, opts.cfl_safety)?;
    init.check_finite()?;

    let inv_rho0 = init.rho0.map(|x| 1.0 / x);
    let dtl = dt * eos.lambda;
    let prec = ModalSolver::new(grid, dtl);
    let mut cur = init.clone();
    cur.impose_boundary_conditions();
    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(cur.clone());

    for j in 0..steps {
        let n0 = frozen.node(j);
        let nm = frozen.midpoint(j);
        let n1 = frozen.node(j + 1);

        let mut v_half = cur.v.clone();
        v_half.axpy(0.5 * dt, &momentum_rhs(grid, n0, &inv_rho0, &cur.q, &cur.b));
        let mut q_half = cur.q.clone();
        q_half.axpy(0.5 * dt, &pressure_rhs(grid, n0, &cur.v));
        q_half.zero_boundary();

        let mut v = cur.v.clone();
        v.axpy(dt, &momentum_rhs(grid, &nm, &inv_rho0, &q_half, &cur.b));
        let mut q = cur.q.clone();
        q.axpy(dt, &pressure_rhs(grid, &nm, &v_half));
        q.zero_boundary();

        let mut disp = cur.eta.displacement().clone();
        disp.axpy(dt, &(&v_half + &nm.psi));

        let mut rhs = cur.b.clone();
        rhs.axpy(dt, &induction_source(grid, n1, &v));
        rhs.zero_boundary();
        let b = if dtl == 0.0 {
            rhs
        } else {
            diffusion::solve_with(grid, &n1.a_tilde, &rhs, dtl, &prec, &opts.diffusion)?.0
        };

        cur = FlowState {
            t: init.t + (j + 1) as f64 * dt,
            eta: FlowMap::from_displacement(disp),
            v,
            b,
            q,
            rho0: cur.rho0,
        };
        cur.check_finite()?;
        snapshots.push(cur.clone());
    }
    Ok(Trajectory { grid: *grid.spec(), dt, kappa: frozen.kappa, snapshots })
}
