//! Seeded random test fields used by the estimate batteries.

use std::f64::consts::PI;

use rand::Rng;

use crate::grid::{BoundaryField, Grid, Plane, ScalarField};

/// One real Fourier term `c cos(2 pi (m1 y1 + m2 y2) + phase)`.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub m1: i64,
    pub m2: i64,
    pub amp: f64,
    pub phase: f64,
}

impl Mode {
    #[inline]
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        self.amp * (2.0 * PI * (self.m1 as f64 * y1 + self.m2 as f64 * y2) + self.phase).cos()
    }
}

/// Random modes with `|m|_inf <= max_mode` and amplitude `u * (1 + |m|)^(-decay)`,
/// `u` uniform in [-1, 1]. The zero mode is included.
pub fn random_modes<R: Rng>(rng: &mut R, max_mode: i64, decay: f64) -> Vec<Mode> {
    let mut modes = Vec::new();
    for m1 in -max_mode..=max_mode {
        for m2 in 0..=max_mode {
            // Half plane: (m1, m2) and (-m1, -m2) give the same real term.
            if m2 == 0 && m1 < 0 {
                continue;
            }
            let mag = ((m1 * m1 + m2 * m2) as f64).sqrt();
            let amp = rng.random_range(-1.0..1.0) * (1.0 + mag).powf(-decay);
            let phase = if m1 == 0 && m2 == 0 { 0.0 } else { rng.random_range(0.0..2.0 * PI) };
            modes.push(Mode { m1, m2, amp, phase });
        }
    }
    modes
}

pub fn eval_modes(modes: &[Mode], y1: f64, y2: f64) -> f64 {
    modes.iter().map(|m| m.eval(y1, y2)).sum()
}

/// Boundary field with independent random content on each plane.
pub fn random_boundary<R: Rng>(grid: &Grid, rng: &mut R, max_mode: i64, decay: f64) -> BoundaryField {
    let bottom = random_modes(rng, max_mode, decay);
    let top = random_modes(rng, max_mode, decay);
    grid.boundary_from_fn(|y1, y2, p| match p {
        Plane::Bottom => eval_modes(&bottom, y1, y2),
        Plane::Top => eval_modes(&top, y1, y2),
    })
}

/// Interior field `sum_l chi_l(y1, y2) * y3-profile_l` with smooth random normal profiles.
pub fn random_interior<R: Rng>(grid: &Grid, rng: &mut R, max_mode: i64, decay: f64) -> ScalarField {
    let layers: Vec<(Vec<Mode>, f64, f64)> = (0..3)
        .map(|_| (random_modes(rng, max_mode, decay), rng.random_range(0.5..3.0), rng.random_range(0.0..2.0 * PI)))
        .collect();
    grid.scalar_from_fn(|y| {
        layers
            .iter()
            .map(|(modes, w, ph)| eval_modes(modes, y[0], y[1]) * (w * y[2] + ph).cos())
            .sum()
    })
}
