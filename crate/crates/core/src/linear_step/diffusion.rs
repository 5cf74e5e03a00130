//! Implicit magnetic diffusion solve `(I - dt lambda Delta_a) b = rhs`, `b = 0` on the walls.

use std::collections::HashMap;

use nalgebra::{DMatrix, LU};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::laplacian_a;
use crate::grid::{wavenumber, Grid, MatrixField, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 500 }
    }
}

/// Interior block of the composed normal operator `D3 D3` with both wall values removed.
pub(crate) fn interior_normal_second_difference(n3: usize) -> DMatrix<f64> {
    let h = 1.0 / n3 as f64;
    let np = n3 + 1;
    let mut d = DMatrix::<f64>::zeros(np, np);
    for k in 0..np {
        let row: [(usize, f64); 3] = if k == 0 {
            [(0, -3.0), (1, 4.0), (2, -1.0)]
        } else if k == n3 {
            [(n3, 3.0), (n3 - 1, -4.0), (n3 - 2, 1.0)]
        } else {
            [(k + 1, 1.0), (k - 1, -1.0), (k, 0.0)]
        };
        for (c, w) in row {
            d[(k, c)] += w / (2.0 * h);
        }
    }
    let dd = &d * &d;
    dd.view((1, 1), (n3 - 1, n3 - 1)).into_owned()
}

/// Exact inverse of the flat-geometry operator, mode by mode: the preconditioner.
pub struct ModalSolver {
    n1: usize,
    n2: usize,
    n3: usize,
    /// Tangential symbol key -> LU of `(1 + c s) I - c M`.
    factors: HashMap<u64, LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    keys: Vec<u64>,
}

/// `(m1^2 [m1 != Nyquist] + m2^2 [m2 != Nyquist])` of the composed tangential Laplacian.
fn composed_key(m1: i64, m2: i64, n1: usize, n2: usize) -> u64 {
    let eff = |m: i64, n: usize| if 2 * m == n as i64 { 0 } else { (m * m) as u64 };
    eff(m1, n1) + eff(m2, n2)
}

impl ModalSolver {
    pub fn new(grid: &Grid, dt_lambda: f64) -> Self {
        let (n1, n2, n3) = (grid.n1(), grid.n2(), grid.n3());
        let m = interior_normal_second_difference(n3);
        let mut factors = HashMap::new();
        let mut keys = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            for i in 0..n1 {
                let key = composed_key(wavenumber(i, n1), wavenumber(j, n2), n1, n2);
                keys.push(key);
                factors.entry(key).or_insert_with(|| {
                    let s = 4.0 * std::f64::consts::PI.powi(2) * key as f64;
                    let mut a = -dt_lambda * &m;
                    for d in 0..n3 - 1 {
                        a[(d, d)] += 1.0 + dt_lambda * s;
                    }
                    a.lu()
                });
            }
        }
        Self { n1, n2, n3, factors, keys }
    }

    /// Applies the inverse flat operator to the interior planes of `r` (walls returned as 0).
    pub fn apply(&self, grid: &Grid, r: &ScalarField) -> ScalarField {
        let np = self.n1 * self.n2;
        let ni = self.n3 - 1;
        let mut hat = grid.fourier_coefficients(r);
        let mut col = DMatrix::<f64>::zeros(ni, 2);
        for (p, key) in self.keys.iter().enumerate() {
            for k in 0..ni {
                let c = hat[(k + 1) * np + p];
                col[(k, 0)] = c.re;
                col[(k, 1)] = c.im;
            }
            self.factors[key].solve_mut(&mut col);
            for k in 0..ni {
                hat[(k + 1) * np + p] = Complex64::new(col[(k, 0)], col[(k, 1)]);
            }
        }
        hat[..np].iter_mut().for_each(|c| *c = Complex64::default());
        hat[self.n3 * np..].iter_mut().for_each(|c| *c = Complex64::default());
        let mut out = ScalarField::zeros(r.dims());
        out.as_mut_slice().copy_from_slice(&grid.inverse_coefficients(hat));
        out.zero_boundary();
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn apply_operator(grid: &Grid, a: &MatrixField, dt_lambda: f64, x: &ScalarField) -> ScalarField {
    let mut out = x.clone();
    out.axpy(-dt_lambda, &laplacian_a(grid, a, x));
    out.zero_boundary();
    out
}

fn norm(x: &ScalarField) -> f64 {
    x.dot(x).sqrt()
}

/// Right-preconditioned BiCGSTAB for one component. `rhs` must vanish on the walls.
fn bicgstab(
    grid: &Grid,
    a: &MatrixField,
    dt_lambda: f64,
    rhs: &ScalarField,
    prec: &ModalSolver,
    opts: &DiffusionOptions,
) -> Result<(ScalarField, SolveStats)> {
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok((ScalarField::zeros(rhs.dims()), SolveStats::default()));
    }
    let mut x = prec.apply(grid, rhs);
    let mut r = rhs - &apply_operator(grid, a, dt_lambda, &x);
    let mut res = norm(&r) / bnorm;
    if res <= opts.tol {
        return Ok((x, SolveStats { iterations: 0, residual: res }));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = ScalarField::zeros(rhs.dims());
    let mut p = ScalarField::zeros(rhs.dims());
    for it in 1..=opts.max_iter {
        let rho_new = r_hat.dot(&r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + beta (p - omega v)
        p.axpy(-omega, &v);
        p.scale(beta);
        p += &r;
        let p_hat = prec.apply(grid, &p);
        v = apply_operator(grid, a, dt_lambda, &p_hat);
        alpha = rho / r_hat.dot(&v);
        let mut s = r.clone();
        s.axpy(-alpha, &v);
        x.axpy(alpha, &p_hat);
        res = norm(&s) / bnorm;
        if res <= opts.tol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        let s_hat = prec.apply(grid, &s);
        let t = apply_operator(grid, a, dt_lambda, &s_hat);
        let tt = t.dot(&t);
        omega = if tt > 0.0 { t.dot(&s) / tt } else { 0.0 };
        x.axpy(omega, &s_hat);
        r = s;
        r.axpy(-omega, &t);
        res = norm(&r) / bnorm;
        if !res.is_finite() {
            break;
        }
        if res <= opts.tol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
    }
    Err(Error::DiffusionSolve { iterations: opts.max_iter, residual: res })
}

/// Solves `(I - dt_lambda Delta_a) b = rhs` componentwise with `b = 0` on both walls.
/// The wall values of `rhs` are ignored.
pub fn implicit_diffusion_solve(
    grid: &Grid,
    a: &MatrixField,
    rhs: &VectorField,
    dt_lambda: f64,
    opts: &DiffusionOptions,
) -> Result<(VectorField, SolveStats)> {
    let mut rhs = rhs.clone();
    rhs.zero_boundary();
    if dt_lambda == 0.0 {
        return Ok((rhs, SolveStats::default()));
    }
    let prec = ModalSolver::new(grid, dt_lambda);
    solve_with(grid, a, &rhs, dt_lambda, &prec, opts)
}

pub(crate) fn solve_with(
    grid: &Grid,
    a: &MatrixField,
    rhs: &VectorField,
    dt_lambda: f64,
    prec: &ModalSolver,
    opts: &DiffusionOptions,
) -> Result<(VectorField, SolveStats)> {
    let mut out = VectorField::zeros(rhs.dims());
    let mut stats = SolveStats::default();
    for c in 0..3 {
        let (x, s) = bicgstab(grid, a, dt_lambda, &rhs[c], prec, opts)?;
        out[c] = x;
        stats.iterations = stats.iterations.max(s.iterations);
        stats.residual = stats.residual.max(s.residual);
    }
    Ok((out, stats))
}
