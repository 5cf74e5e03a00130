//! Finite differences in time on uniformly spaced snapshots.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

/// Weights at nodes `xs` for the `order`-th derivative at `x0` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil for `d^order/dt^order` at node `j` of `n` nodes spaced `dt`: the window of
/// `order + 2` nodes closest to centred (second-order accurate), or the node itself for order 0.
pub fn stencil(n: usize, j: usize, order: usize, dt: f64) -> Result<(usize, Vec<f64>)> {
    if order == 0 {
        return Ok((j, vec![1.0]));
    }
    let width = order + 2;
    if n < width {
        return Err(Error::InsufficientHistory(format!(
            "time derivative of order {order} needs {width} snapshots, have {n}"
        )));
    }
    let start = j.saturating_sub((width - 1) / 2).min(n - width);
    let xs: Vec<f64> = (start..start + width).map(|i| i as f64).collect();
    let scale = dt.powi(-(order as i32));
    Ok((start, fornberg_weights(j as f64, &xs, order).into_iter().map(|w| w * scale).collect()))
}

pub fn derivative_scalar(series: &[ScalarField], j: usize, order: usize, dt: f64) -> Result<ScalarField> {
    let (start, w) = stencil(series.len(), j, order, dt)?;
    let mut out = ScalarField::zeros(series[j].dims());
    for (i, wi) in w.iter().enumerate() {
        out.axpy(*wi, &series[start + i]);
    }
    Ok(out)
}

pub fn derivative_vector(series: &[VectorField], j: usize, order: usize, dt: f64) -> Result<VectorField> {
    let (start, w) = stencil(series.len(), j, order, dt)?;
    let mut out = VectorField::zeros(series[j].dims());
    for (i, wi) in w.iter().enumerate() {
        out.axpy(*wi, &series[start + i]);
    }
    Ok(out)
}
