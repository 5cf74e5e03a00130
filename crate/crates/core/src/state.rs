//! Equation of state, the flow state, initial-data presets and compatibility checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, build_geometry, FlowMap, GeometryCache};
use crate::grid::{Grid, Plane, ScalarField, VectorField};

/// Exponential equation of state `rho(p) = exp(p)` (boundary density 1) together
/// with the magnetic diffusivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquationOfState {
    pub lambda: f64,
}

impl Default for EquationOfState {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

/// `R(q)` and its first two derivatives.
#[derive(Clone, Debug)]
pub struct EosValues {
    pub r: ScalarField,
    pub dr: ScalarField,
    pub d2r: ScalarField,
}

impl EquationOfState {
    pub fn density(&self, p: f64) -> f64 {
        p.exp()
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.ln()
    }

    pub fn eval(&self, q: &ScalarField) -> EosValues {
        let r = q.map(f64::exp);
        EosValues { dr: r.clone(), d2r: r.clone(), r }
    }

    /// `R'(q)` alone.
    pub fn slope(&self, q: &ScalarField) -> ScalarField {
        q.map(f64::exp)
    }

    /// Pressure potential `int_1^rho p(s)/s^2 ds = 1 - (ln rho + 1)/rho`, written in `q = ln rho`.
    pub fn potential_of_pressure(&self, q: f64) -> f64 {
        1.0 - (q + 1.0) * (-q).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub eta: FlowMap,
    pub v: VectorField,
    pub b: VectorField,
    /// Fluid pressure.
    pub q: ScalarField,
    /// Initial density, frozen in time.
    pub rho0: ScalarField,
}

impl FlowState {
    /// `eta = Id`, `v = b = q = 0`, with the given density.
    pub fn trivial(rho0: ScalarField) -> Self {
        let dims = rho0.dims();
        Self {
            t: 0.0,
            eta: FlowMap::identity(dims),
            v: VectorField::zeros(dims),
            b: VectorField::zeros(dims),
            q: ScalarField::zeros(dims),
            rho0,
        }
    }

    /// Total pressure `Q = q + |b|^2 / 2`.
    pub fn total_pressure(&self) -> ScalarField {
        let mut out = self.b.norm_sq();
        out.scale(0.5);
        out += &self.q;
        out
    }

    pub fn check_finite(&self) -> Result<()> {
        self.eta.displacement().check_finite("eta")?;
        self.v.check_finite("v")?;
        self.b.check_finite("b")?;
        self.q.check_finite("q")?;
        self.rho0.check_finite("rho0")
    }

    /// Strong Dirichlet conditions `q = 0`, `b = 0` on both planes.
    pub fn impose_boundary_conditions(&mut self) {
        self.q.zero_boundary();
        self.b.zero_boundary();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Quiescent,
    Acoustic,
    MagneticTube,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Quiescent => "quiescent",
            Preset::Acoustic => "acoustic",
            Preset::MagneticTube => "magnetic-tube",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quiescent" => Ok(Preset::Quiescent),
            "acoustic" => Ok(Preset::Acoustic),
            "magnetic-tube" => Ok(Preset::MagneticTube),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset '{other}' (expected quiescent, acoustic or magnetic-tube)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub preset: Preset,
    pub amplitude: f64,
    pub seed: u64,
    /// Wall slope of the background pressure `eps_q y3 (1 - y3)`.
    pub pressure_slope: f64,
    /// Required Taylor margin at t = 0.
    pub c0: f64,
    /// Admissible size of `||J~ - 1||_3 + ||Id - a~||_3`.
    pub epsilon: f64,
}

impl InitialDataSpec {
    pub fn new(preset: Preset, amplitude: f64, seed: u64) -> Self {
        Self { preset, amplitude, seed, pressure_slope: 1.0, c0: 0.5, epsilon: 0.1 }
    }
}

/// Low-mode trigonometric polynomial `chi(y1, y2)` with `max |chi| = 1` on the lattice
/// and no zero mode.
pub fn tangential_profile(grid: &Grid, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for m1 in -1i64..=1 {
        for m2 in 0i64..=1 {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            terms.push((m1, m2, rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI)));
        }
    }
    let chi = grid.scalar_from_fn(|y| {
        terms
            .iter()
            .map(|&(m1, m2, c, ph)| c * (2.0 * PI * (m1 as f64 * y[0] + m2 as f64 * y[1]) + ph).cos())
            .sum()
    });
    let max = chi.max_abs();
    chi.map(|x| x / max)
}

pub fn make_initial_data(grid: &Grid, spec: &InitialDataSpec) -> Result<FlowState> {
    if !(spec.amplitude >= 0.0 && spec.amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be >= 0, got {}", spec.amplitude)));
    }
    let dims = grid.dims();
    let amp = spec.amplitude;
    let eps_q = spec.pressure_slope;
    let chi = tangential_profile(grid, spec.seed);
    let [d1chi, d2chi, _] = grid.gradient(&chi);
    let bump = |y3: f64| y3 * (1.0 - y3);

    let mut q = grid.scalar_from_fn(|y| eps_q * bump(y[2]));
    let mut v = VectorField::zeros(dims);
    let mut b = VectorField::zeros(dims);
    let perturbation = grid.scalar_from_fn(|y| amp * bump(y[2])).zip_map(&chi, |p, c| p * c);
    match spec.preset {
        Preset::Quiescent => q += &perturbation,
        Preset::Acoustic => {
            q += &perturbation;
            // v = amp grad(chi cos(pi y3)) / (2 pi)
            let s = amp / (2.0 * PI);
            let cz = grid.scalar_from_fn(|y| (PI * y[2]).cos());
            let sz = grid.scalar_from_fn(|y| -PI * (PI * y[2]).sin());
            v = VectorField::new(&(&d1chi * &cz) * s, &(&d2chi * &cz) * s, &(&chi * &sz) * s);
        }
        Preset::MagneticTube => {
            // b = curl(0, 0, phi chi) scaled, phi = 64 y3^3 (1 - y3)^3
            let s = amp / (2.0 * PI);
            let phi = grid.scalar_from_fn(|y| 64.0 * bump(y[2]).powi(3));
            b = VectorField::new(&(&phi * &d2chi) * s, &(&phi * &d1chi) * (-s), ScalarField::zeros(dims));
        }
    }
    let rho0 = q.map(f64::exp);
    let mut state = FlowState { t: 0.0, eta: FlowMap::identity(dims), v, b, q, rho0 };
    state.impose_boundary_conditions();
    state.check_finite()?;

    let cache = build_geometry(grid, &state.eta, 0.0)?;
    let margin = taylor_sign_margin(grid, &state, &cache);
    if margin < spec.c0 {
        return Err(Error::InitialData {
            condition: "sign",
            detail: format!("Taylor margin {margin:.4e} < c0 = {}", spec.c0),
        });
    }
    let small = small_geometry_norm(grid, &cache)?;
    if small > spec.epsilon {
        return Err(Error::InitialData {
            condition: "small1",
            detail: format!("||J~-1||_3 + ||Id-a~||_3 = {small:.4e} > {}", spec.epsilon),
        });
    }
    Ok(state)
}

/// `||J~ - 1||_3 + ||Id - a~||_3`.
pub fn small_geometry_norm(grid: &Grid, cache: &GeometryCache) -> Result<f64> {
    let j = grid.interior_norm(&cache.j_tilde.map(|x| x - 1.0), 3)?;
    let mut sq = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let id = if r == c { 1.0 } else { 0.0 };
            sq += grid.interior_norm_sq(&cache.a_tilde.m[r][c].map(|x| id - x), 3)?;
        }
    }
    Ok(j + sq.sqrt())
}

/// `min_Gamma -N . nabla_{a~} Q` with `N` the outward normal of each plane.
pub fn taylor_sign_margin(grid: &Grid, state: &FlowState, cache: &GeometryCache) -> f64 {
    taylor_margin_of(grid, &state.total_pressure(), &cache.a_tilde)
}

pub fn taylor_margin_of(grid: &Grid, total_pressure: &ScalarField, a: &crate::grid::MatrixField) -> f64 {
    let g = geometry::grad_a(grid, a, total_pressure);
    let trace = grid.trace(&g[2]);
    Plane::BOTH
        .iter()
        .flat_map(|&p| trace.plane(p).iter().map(move |&x| -p.outward_normal() * x))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityReport {
    pub q_boundary: f64,
    pub b_boundary: f64,
    pub div_b: f64,
    /// `sup_Gamma |div v|` (order 1 only).
    pub div_v_boundary: Option<f64>,
    /// `sup_Gamma |lambda Delta b + (b.grad) v - b div v|` (order 1 only).
    pub b_heat_boundary: Option<f64>,
    pub taylor_margin: f64,
}

/// Compatibility residuals of data at `t = 0` (`eta = Id`) up to `order <= 1`.
pub fn check_compatibility(
    grid: &Grid,
    s: &FlowState,
    eos: &EquationOfState,
    order: u32,
) -> Result<CompatibilityReport> {
    if order > 1 {
        return Err(Error::InvalidArgument(format!("compatibility order must be 0 or 1, got {order}")));
    }
    let cache = build_geometry(grid, &s.eta, 0.0)?;
    let a = &cache.a;
    let b_sup = (0..3).map(|c| grid.boundary_sup(&s.b[c])).fold(0.0, f64::max);
    let div_b = grid.l2_sq(&geometry::div_a(grid, a, &s.b)).sqrt();
    let mut report = CompatibilityReport {
        q_boundary: grid.boundary_sup(&s.q),
        b_boundary: b_sup,
        div_b,
        div_v_boundary: None,
        b_heat_boundary: None,
        taylor_margin: taylor_sign_margin(grid, s, &cache),
    };
    if order == 1 {
        let div_v = geometry::div_a(grid, a, &s.v);
        report.div_v_boundary = Some(grid.boundary_sup(&div_v));
        // At t = 0 the geometry is flat, so the wall trace of Delta b uses the
        // direct second-derivative stencil (second order up to the walls).
        let lap = s.b.map_comps(|c| &grid.tangential_laplacian(c) + &grid.second_normal_derivative(c));
        let adv = geometry::directional_a(grid, a, &s.b, &s.v);
        let heat = (0..3)
            .map(|c| {
                let mut t = &lap[c] * eos.lambda;
                t += &adv[c];
                t -= &(&s.b[c] * &div_v);
                grid.boundary_sup(&t)
            })
            .fold(0.0, f64::max);
        report.b_heat_boundary = Some(heat);
    }
    Ok(report)
}
