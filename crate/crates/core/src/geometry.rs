//! Flow-map calculus: deformation gradient, Jacobian, inverse (cofactor) matrix,
//! their tangentially smoothed counterparts, and covariant differential operators.

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid, MatrixField, ScalarField, VectorField};
use crate::smoothing::MollifierSpec;

pub const DET_FLOOR: f64 = 1e-6;

/// Flow map `eta(y) = y + d(y)` stored through its periodic displacement `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMap {
    disp: VectorField,
}

impl FlowMap {
    pub fn identity(dims: Dims) -> Self {
        Self { disp: VectorField::zeros(dims) }
    }

    pub fn from_displacement(disp: VectorField) -> Self {
        Self { disp }
    }

    pub fn displacement(&self) -> &VectorField {
        &self.disp
    }

    pub fn into_displacement(self) -> VectorField {
        self.disp
    }

    pub fn dims(&self) -> Dims {
        self.disp.dims()
    }

    /// Lattice values of component `alpha` (`y_alpha + d_alpha`).
    pub fn component(&self, grid: &Grid, alpha: usize) -> ScalarField {
        &self.disp[alpha] + &grid.scalar_from_fn(|y| y[alpha])
    }

    /// Squared `H^s` norm of `eta` including its linear part.
    pub fn norm_sq(&self, grid: &Grid, s: u32) -> Result<f64> {
        let mut total = 0.0;
        for a in 0..3 {
            total += grid.interior_norm_sq_affine(&self.disp[a], Some(a + 1), s)?;
        }
        Ok(total)
    }

    /// `eta` after smoothing only the displacement (`Lambda^2 y = y` exactly).
    pub fn smoothed(&self, grid: &Grid, spec: &MollifierSpec) -> Self {
        Self { disp: self.disp.map_comps(|c| spec.apply_squared(grid, c)) }
    }
}

/// Deformation gradient `F[alpha][mu] = d_mu eta_alpha`.
pub fn deformation_gradient(grid: &Grid, eta: &FlowMap) -> MatrixField {
    let d = eta.displacement();
    let dims = d.dims();
    let mut f = MatrixField::zeros(dims);
    for alpha in 0..3 {
        let grads = grid.gradient(&d[alpha]);
        for (mu, g) in grads.into_iter().enumerate() {
            f.m[alpha][mu] = if alpha == mu { g.map(|x| x + 1.0) } else { g };
        }
    }
    f
}

#[inline]
pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse by the adjugate; caller guarantees `det != 0`.
#[inline]
pub fn inv3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let inv_det = 1.0 / det;
    [
        [c(1, 2, 1, 2) * inv_det, -c(0, 2, 1, 2) * inv_det, c(0, 1, 1, 2) * inv_det],
        [-c(1, 2, 0, 2) * inv_det, c(0, 2, 0, 2) * inv_det, -c(0, 1, 0, 2) * inv_det],
        [c(1, 2, 0, 1) * inv_det, -c(0, 2, 0, 1) * inv_det, c(0, 1, 0, 1) * inv_det],
    ]
}

/// Pointwise determinant and inverse of `F`; fails on the smallest determinant
/// if it does not exceed [`DET_FLOOR`].
fn invert_field(f: &MatrixField) -> Result<(ScalarField, MatrixField)> {
    let dims = f.dims();
    let mut det = ScalarField::zeros(dims);
    let mut inv = MatrixField::zeros(dims);
    let mut worst = (f64::INFINITY, 0usize);
    for idx in 0..dims.len() {
        let m = f.point(idx);
        let d = det3(&m);
        if !d.is_finite() {
            return Err(Error::NonFinite { what: "deformation gradient", at: dims.location(idx) });
        }
        if d < worst.0 {
            worst = (d, idx);
        }
        det.as_mut_slice()[idx] = d;
        if d > DET_FLOOR {
            let i = inv3(&m, d);
            for r in 0..3 {
                for c in 0..3 {
                    inv.m[r][c].as_mut_slice()[idx] = i[r][c];
                }
            }
        }
    }
    if worst.0 <= DET_FLOOR {
        return Err(Error::DegenerateMap { det: worst.0, floor: DET_FLOOR, at: dims.location(worst.1) });
    }
    Ok((det, inv))
}

/// Derived geometry of a flow map and of its tangential smoothing.
///
/// Matrix entries are indexed `a.m[mu][alpha]`, i.e. `a^{mu alpha}` with
/// `a^{mu alpha} d_mu eta_beta = delta^alpha_beta`.
#[derive(Clone, Debug)]
pub struct GeometryCache {
    pub kappa: f64,
    pub eta: FlowMap,
    pub grad_eta: MatrixField,
    pub j: ScalarField,
    pub a: MatrixField,
    pub eta_tilde: FlowMap,
    pub grad_eta_tilde: MatrixField,
    pub j_tilde: ScalarField,
    pub a_tilde: MatrixField,
}

/// Builds the geometry of `eta`. `kappa = 0` means no smoothing (`eta_tilde = eta`).
pub fn build_geometry(grid: &Grid, eta: &FlowMap, kappa: f64) -> Result<GeometryCache> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa(kappa));
    }
    eta.displacement().check_finite("flow map")?;
    let grad_eta = deformation_gradient(grid, eta);
    let (j, a) = invert_field(&grad_eta)?;
    let (eta_tilde, grad_eta_tilde, j_tilde, a_tilde) = if kappa == 0.0 {
        (eta.clone(), grad_eta.clone(), j.clone(), a.clone())
    } else {
        let et = eta.smoothed(grid, &MollifierSpec::new(kappa)?);
        let gt = deformation_gradient(grid, &et);
        let (jt, at) = invert_field(&gt)?;
        (et, gt, jt, at)
    };
    Ok(GeometryCache { kappa, eta: eta.clone(), grad_eta, j, a, eta_tilde, grad_eta_tilde, j_tilde, a_tilde })
}

impl GeometryCache {
    /// `A = J a`.
    pub fn big_a(&self) -> MatrixField {
        self.a.map_entries(|e| e * &self.j)
    }

    pub fn big_a_tilde(&self) -> MatrixField {
        self.a_tilde.map_entries(|e| e * &self.j_tilde)
    }

    /// Largest entry of `a F - I` and `F a - I`, for both the raw and smoothed maps.
    pub fn inverse_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, f) in [(&self.a, &self.grad_eta), (&self.a_tilde, &self.grad_eta_tilde)] {
            for idx in 0..a.dims().len() {
                let ap = a.point(idx);
                let fp = f.point(idx);
                for r in 0..3 {
                    for c in 0..3 {
                        let id = if r == c { 1.0 } else { 0.0 };
                        let af: f64 = (0..3).map(|k| ap[r][k] * fp[k][c]).sum();
                        let fa: f64 = (0..3).map(|k| fp[r][k] * ap[k][c]).sum();
                        worst = worst.max((af - id).abs()).max((fa - id).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Pointwise determinant of `d eta`, independent of the cache path.
pub fn jacobian(grid: &Grid, eta: &FlowMap) -> ScalarField {
    let f = deformation_gradient(grid, eta);
    let dims = f.dims();
    let data = (0..dims.len()).map(|idx| det3(&f.point(idx))).collect();
    ScalarField::from_vec(dims, data).expect("lattice length")
}

/// `max_alpha || d_mu A^{mu alpha} ||_0` for `A = J a`.
pub fn piola_residual_of(grid: &Grid, big_a: &MatrixField) -> f64 {
    (0..3)
        .map(|alpha| {
            let mut s = grid.diff(&big_a.m[0][alpha], 1);
            s += &grid.diff(&big_a.m[1][alpha], 2);
            s += &grid.diff(&big_a.m[2][alpha], 3);
            grid.l2_sq(&s).sqrt()
        })
        .fold(0.0, f64::max)
}

pub fn piola_residual(grid: &Grid, cache: &GeometryCache) -> f64 {
    piola_residual_of(grid, &cache.big_a())
}

pub fn piola_residual_smoothed(grid: &Grid, cache: &GeometryCache) -> f64 {
    piola_residual_of(grid, &cache.big_a_tilde())
}

/// `(nabla_a f)^alpha = a^{mu alpha} d_mu f` from precomputed partials.
pub fn grad_from_partials(a: &MatrixField, partials: &[ScalarField; 3]) -> VectorField {
    VectorField {
        comps: std::array::from_fn(|alpha| {
            let mut out = a.get(0, alpha) * &partials[0];
            out += &(a.get(1, alpha) * &partials[1]);
            out += &(a.get(2, alpha) * &partials[2]);
            out
        }),
    }
}

pub fn grad_a(grid: &Grid, a: &MatrixField, f: &ScalarField) -> VectorField {
    grad_from_partials(a, &grid.gradient(f))
}

/// `div_a X = a^{mu alpha} d_mu X_alpha`.
pub fn div_a(grid: &Grid, a: &MatrixField, x: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(x.dims());
    for alpha in 0..3 {
        let p = grid.gradient(&x[alpha]);
        for (mu, d) in p.iter().enumerate() {
            out += &(a.get(mu, alpha) * d);
        }
    }
    out
}

/// `(curl_a X)_lambda = eps_{lambda mu alpha} a^{nu mu} d_nu X^alpha`.
pub fn curl_a(grid: &Grid, a: &MatrixField, x: &VectorField) -> VectorField {
    // g[alpha][mu] = (nabla_a X_alpha)^mu
    let g: Vec<VectorField> = (0..3).map(|alpha| grad_a(grid, a, &x[alpha])).collect();
    VectorField::new(&g[2][1] - &g[1][2], &g[0][2] - &g[2][0], &g[1][0] - &g[0][1])
}

/// Nested covariant Laplacian `a^{mu alpha} d_mu (a^{nu alpha} d_nu f)`.
pub fn laplacian_a(grid: &Grid, a: &MatrixField, f: &ScalarField) -> ScalarField {
    div_a(grid, a, &grad_a(grid, a, f))
}

pub fn laplacian_a_vec(grid: &Grid, a: &MatrixField, f: &VectorField) -> VectorField {
    f.map_comps(|c| laplacian_a(grid, a, c))
}

/// `(X . nabla_a) Y`, componentwise in `Y`.
pub fn directional_a(grid: &Grid, a: &MatrixField, x: &VectorField, y: &VectorField) -> VectorField {
    y.map_comps(|c| x.dot(&grad_a(grid, a, c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn grid(n: usize, n3: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, n3).unwrap()).unwrap()
    }

    /// Smooth perturbation vanishing nowhere in particular, `O(eps)` in C^1.
    fn perturbed(g: &Grid, eps: f64) -> FlowMap {
        FlowMap::from_displacement(g.vector_from_fn(|y| {
            let (s1, c2) = ((2.0 * PI * y[0]).sin(), (2.0 * PI * y[1]).cos());
            [
                eps * s1 * (1.0 + y[2] * y[2]),
                eps * c2 * (PI * y[2]).sin() + 0.5 * eps * (2.0 * PI * (y[0] + y[1])).cos(),
                eps * (s1 * c2 + 0.3) * y[2] * (1.0 - y[2]) * (2.0 + y[2]),
            ]
        }))
    }

    #[test]
    fn identity_map_geometry() {
        let g = grid(8, 8);
        let c = build_geometry(&g, &FlowMap::identity(g.dims()), 0.1).unwrap();
        let id = MatrixField::identity(g.dims());
        assert!((&c.j - &ScalarField::constant(g.dims(), 1.0)).max_abs() == 0.0);
        for r in 0..3 {
            for col in 0..3 {
                assert_eq!(c.a.m[r][col], id.m[r][col]);
                assert_eq!(c.a_tilde.m[r][col], id.m[r][col]);
            }
        }
        assert!(piola_residual(&g, &c) <= 1e-12);
    }

    #[test]
    fn shear_map_closed_form() {
        let g = grid(16, 8);
        let eps = 0.01;
        let eta = FlowMap::from_displacement(g.vector_from_fn(|y| [eps * (2.0 * PI * y[0]).sin(), 0.0, 0.0]));
        let c = build_geometry(&g, &eta, 0.0).unwrap();
        let j_exact = g.scalar_from_fn(|y| 1.0 + 2.0 * PI * eps * (2.0 * PI * y[0]).cos());
        assert!((&c.j - &j_exact).max_abs() < 1e-10);
        // F = diag(J, 1, 1) so a = diag(1/J, 1, 1).
        let inv = j_exact.map(|x| 1.0 / x);
        assert!((&c.a.m[0][0] - &inv).max_abs() < 1e-10);
        for (r, col) in [(0, 1), (0, 2), (1, 0), (2, 0), (1, 2), (2, 1)] {
            assert!(c.a.m[r][col].max_abs() < 1e-12);
        }
        assert!((&c.a.m[1][1] - &ScalarField::constant(g.dims(), 1.0)).max_abs() < 1e-12);
    }

    #[test]
    fn degenerate_map_reports_location() {
        let g = grid(8, 8);
        // eta_3 = y3 + d with d3 = -y3 on the plane k = 4 neighbourhood gives d3/dy3 = -1 there.
        let mut d = VectorField::zeros(g.dims());
        let h = g.h3();
        for k in 0..=g.n3() {
            let val = if k >= 4 { -(k as f64 - 4.0) * h } else { 0.0 };
            d[2].plane_mut(k).fill(val);
        }
        match build_geometry(&g, &FlowMap::from_displacement(d), 0.0) {
            Err(Error::DegenerateMap { det, at, .. }) => {
                assert!(det <= DET_FLOOR);
                assert!(at.2 >= 4);
            }
            other => panic!("expected degenerate map, got {other:?}"),
        }
    }

    #[test]
    fn inverse_identities_and_two_jacobian_paths() {
        let g = grid(16, 16);
        let c = build_geometry(&g, &perturbed(&g, 0.02), 0.1).unwrap();
        assert!(c.inverse_defect() < 1e-10);
        let jt = jacobian(&g, &c.eta_tilde);
        assert!((&jt - &c.j_tilde).max_abs() < 1e-12);
    }

    #[test]
    fn piola_residual_second_order() {
        let mut res = Vec::new();
        for n3 in [16, 32, 64] {
            let g = grid(16, n3);
            let c = build_geometry(&g, &perturbed(&g, 0.05), 0.1).unwrap();
            res.push((piola_residual(&g, &c), piola_residual_smoothed(&g, &c)));
        }
        for w in res.windows(2) {
            assert!((w[0].0 / w[1].0).log2() >= 1.8, "{res:?}");
            assert!((w[0].1 / w[1].1).log2() >= 1.8, "{res:?}");
        }
        for r in &res {
            assert!(r.1 <= r.0 + 1e-10, "{res:?}");
        }
    }

    #[test]
    fn flat_covariant_ops_match_flat_calculus() {
        let g = grid(16, 16);
        let id = MatrixField::identity(g.dims());
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos() * y[2].exp());
        let x = g.vector_from_fn(|y| [(2.0 * PI * y[1]).sin() * y[2], (2.0 * PI * y[0]).cos(), y[2] * y[2]]);
        let grads = g.gradient(&f);
        let ga = grad_a(&g, &id, &f);
        for a in 0..3 {
            assert!((&ga[a] - &grads[a]).max_abs() < 1e-12);
        }
        let div = &(&g.diff(&x[0], 1) + &g.diff(&x[1], 2)) + &g.diff(&x[2], 3);
        assert!((&div_a(&g, &id, &x) - &div).max_abs() < 1e-12);
        let curl = curl_a(&g, &id, &x);
        let c3 = &g.diff(&x[1], 1) - &g.diff(&x[0], 2);
        assert!((&curl[2] - &c3).max_abs() < 1e-12);
        let lap = &(&g.diff(&grads[0], 1) + &g.diff(&grads[1], 2)) + &g.diff(&grads[2], 3);
        assert!((&laplacian_a(&g, &id, &f) - &lap).max_abs() < 1e-10);
    }

    #[test]
    fn curl_of_gradient_vanishes_under_refinement() {
        let mut res = Vec::new();
        for n3 in [16, 32, 64] {
            let g = grid(16, n3);
            let c = build_geometry(&g, &perturbed(&g, 0.05), 0.0).unwrap();
            let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).cos() * (1.0 + y[2]).ln() + y[2].powi(3));
            let curl = curl_a(&g, &c.a, &grad_a(&g, &c.a, &f));
            res.push(g.interior_norm_vec(&curl, 0).unwrap());
        }
        for w in res.windows(2) {
            assert!(w[1] < w[0] / 3.0, "{res:?}");
        }
    }

    #[test]
    fn integration_by_parts_audit() {
        // q vanishes on both planes; flat geometry.
        let mut defects = Vec::new();
        for n3 in [16, 32, 64] {
            let g = grid(8, n3);
            let id = MatrixField::identity(g.dims());
            let q = g.scalar_from_fn(|y| (PI * y[2]).sin() * (1.0 + 0.5 * (2.0 * PI * y[0]).cos()));
            let lhs = g.integrate(&(&laplacian_a(&g, &id, &q) * &q));
            let rhs = -g.integrate(&grad_a(&g, &id, &q).norm_sq());
            defects.push((lhs - rhs).abs());
        }
        for w in defects.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{defects:?}");
        }
    }

    #[test]
    fn flow_map_norm_includes_identity() {
        let g = grid(8, 16);
        let id = FlowMap::identity(g.dims());
        // ||y||_0^2 = int y1^2 + y2^2 + y3^2 on the lattice; ||Id||_1^2 adds 3.
        let n0 = id.norm_sq(&g, 0).unwrap();
        let n1 = id.norm_sq(&g, 1).unwrap();
        assert!((n1 - n0 - 3.0).abs() < 1e-12);
        assert_eq!(id.norm_sq(&g, 4).unwrap(), n1);
    }
}
