//! Commutator identity for the good unknown `F = D f - D eta~ . grad_{a~} f`, with
//! `D = d1^2 Lap` the fourth-order tangential operator.

use crate::error::Result;
use crate::geometry::{grad_a, grad_from_partials, GeometryCache};
use crate::grid::{Grid, ScalarField, VectorField};

fn d_op(grid: &Grid, f: &ScalarField) -> ScalarField {
    &grid.tangential_derivative(f, 4, 0) + &grid.tangential_derivative(f, 2, 2)
}

/// `d1 Lap`, so that `D = d1 (d1 Lap)`.
fn p_op(grid: &Grid, f: &ScalarField) -> ScalarField {
    &grid.tangential_derivative(f, 3, 0) + &grid.tangential_derivative(f, 1, 2)
}

fn vec_l2(grid: &Grid, f: &VectorField) -> f64 {
    (0..3).map(|c| grid.l2_sq(&f[c])).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlinhacReport {
    /// `||D grad f - grad F - C(f)||_0 / ||D grad f||_0`.
    pub residual: f64,
    pub lhs_norm: f64,
    /// `||C(f)||_0`.
    pub remainder_norm: f64,
    /// `||C(f)||_0 / ((1 + ||eta~||_4)^3 ||f||_4)`.
    pub remainder_ratio: f64,
}

/// Checks `D (grad_{a~} f) = grad_{a~} F + C(f)` with the three-term remainder
/// `C^a = D eta~_g grad^a grad^g f - ([d1 Lap, a~^{mg} a~^{ba}] d1 d_b eta~_g) d_m f + [D, a~^{ma}, d_m f]`.
pub fn alinhac_residual(grid: &Grid, cache: &GeometryCache, f: &ScalarField) -> Result<AlinhacReport> {
    let a = &cache.a_tilde;
    let partials = grid.gradient(f);
    let grad = grad_from_partials(a, &partials);
    let lhs = grad.map_comps(|g| d_op(grid, g));

    let d_eta: Vec<ScalarField> = (0..3).map(|g| d_op(grid, &cache.eta_tilde.displacement()[g])).collect();
    let mut good = d_op(grid, f);
    for g in 0..3 {
        good -= &(&d_eta[g] * &grad[g]);
    }
    let grad_good = grad_a(grid, a, &good);

    // D eta~_g grad^a grad^g f
    let mut c1 = VectorField::zeros(grid.dims());
    for g in 0..3 {
        let second = grad_a(grid, a, &grad[g]);
        for alpha in 0..3 {
            c1[alpha] += &(&d_eta[g] * &second[alpha]);
        }
    }

    // h[b][g] = d1 d_b eta~_g, taken from the smoothed deformation gradient F[g][b].
    let h: Vec<Vec<ScalarField>> = (0..3)
        .map(|b| (0..3).map(|g| grid.tangential_derivative(&cache.grad_eta_tilde.m[g][b], 1, 0)).collect())
        .collect();
    let ph: Vec<Vec<ScalarField>> = h.iter().map(|row| row.iter().map(|x| p_op(grid, x)).collect()).collect();
    let mut c2 = VectorField::zeros(grid.dims());
    for alpha in 0..3 {
        for mu in 0..3 {
            let mut prod = ScalarField::zeros(grid.dims());
            let mut prod_p = ScalarField::zeros(grid.dims());
            for b in 0..3 {
                for g in 0..3 {
                    let w = a.get(mu, g) * a.get(b, alpha);
                    prod += &(&w * &h[b][g]);
                    prod_p += &(&w * &ph[b][g]);
                }
            }
            let comm = &p_op(grid, &prod) - &prod_p;
            c2[alpha] += &(&comm * &partials[mu]);
        }
    }

    // [D, a~^{ma}, d_m f] = D(a d f) - D(a) d f - a D(d f)
    let d_partials: Vec<ScalarField> = partials.iter().map(|p| d_op(grid, p)).collect();
    let mut c3 = lhs.clone();
    for alpha in 0..3 {
        for mu in 0..3 {
            c3[alpha] -= &(&d_op(grid, a.get(mu, alpha)) * &partials[mu]);
            c3[alpha] -= &(a.get(mu, alpha) * &d_partials[mu]);
        }
    }

    let remainder = &(&c1 - &c2) + &c3;
    let defect = &(&lhs - &grad_good) - &remainder;
    let lhs_norm = vec_l2(grid, &lhs);
    let remainder_norm = vec_l2(grid, &remainder);
    let eta_tilde_h4 = cache.eta_tilde.norm_sq(grid, 4)?.sqrt();
    let f_h4 = grid.interior_norm(f, 4)?;
    Ok(AlinhacReport {
        residual: if lhs_norm > 0.0 { vec_l2(grid, &defect) / lhs_norm } else { vec_l2(grid, &defect) },
        lhs_norm,
        remainder_norm,
        remainder_ratio: remainder_norm / ((1.0 + eta_tilde_h4).powi(3) * f_h4),
    })
}
