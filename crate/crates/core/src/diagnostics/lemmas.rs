//! Empirical constants of the trace, Hodge and elliptic inequalities on seeded corpora.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correction::{harmonic_extension, ExtensionProfile};
use crate::corpus::{eval_modes, random_interior, random_modes};
use crate::error::Result;
use crate::geometry::{build_geometry, curl_a, div_a, grad_a, laplacian_a, FlowMap, GeometryCache};
use crate::grid::{Grid, GridSpec, MatrixField, Plane, ScalarField, VectorField};

/// Samples per corpus.
pub const LEMMA_SAMPLES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaRow {
    pub lemma: &'static str,
    pub n: usize,
    /// Sobolev order the ratio is taken at.
    pub order: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub seed: u64,
    pub rows: Vec<LemmaRow>,
    /// `||curl grad phi||_0 / ||grad phi||_0` for a potential field with zero normal flux.
    pub gradient_curl: f64,
}

impl LemmaReport {
    pub fn find(&self, lemma: &str, n: usize, order: f64) -> Option<&LemmaRow> {
        self.rows.iter().find(|r| r.lemma == lemma && r.n == n && r.order == order)
    }
}

fn vec_norm(grid: &Grid, x: &VectorField, s: u32) -> Result<f64> {
    grid.interior_norm_vec(x, s)
}

fn random_vector(grid: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField { comps: std::array::from_fn(|_| random_interior(grid, rng, 3, 1.0)) }
}

/// `||X||_s / (||X||_0 + ||curl X||_{s-1} + ||div X||_{s-1} + |X.N|_{s-1/2})`, flat geometry.
pub fn hodge_ratio(grid: &Grid, x: &VectorField, s: u32) -> Result<f64> {
    let id = MatrixField::identity(grid.dims());
    let curl = curl_a(grid, &id, x);
    let div = div_a(grid, &id, x);
    let normal = grid.trace(&x[2]);
    let den = vec_norm(grid, x, 0)?
        + vec_norm(grid, &curl, s - 1)?
        + grid.interior_norm(&div, s - 1)?
        + grid.boundary_norm(&normal, s as f64 - 0.5)?;
    Ok(vec_norm(grid, x, s)? / den)
}

/// `||grad_a f||_r / ((1 + ||eta~||_r)^3 (||Lap_a f||_{r-1} + ||dbar eta~||_r ||f||_r))`.
pub fn elliptic_ratio(grid: &Grid, cache: &GeometryCache, f: &ScalarField, r: u32) -> Result<f64> {
    let a = &cache.a_tilde;
    let num = vec_norm(grid, &grad_a(grid, a, f), r)?;
    let eta_r = cache.eta_tilde.norm_sq(grid, r)?.sqrt();
    let d = cache.eta_tilde.displacement();
    let mut dbar_sq = 0.0;
    for i in 0..2 {
        for alpha in 0..3 {
            let mut t = grid.tangential_derivative(&d[alpha], (i == 0) as u32, (i == 1) as u32);
            if i == alpha {
                t = t.map(|x| x + 1.0);
            }
            dbar_sq += grid.interior_norm_sq(&t, r)?;
        }
    }
    let den = (1.0 + eta_r).powi(3)
        * (grid.interior_norm(&laplacian_a(grid, a, f), r - 1)? + dbar_sq.sqrt() * grid.interior_norm(f, r)?);
    Ok(num / den)
}

/// `||u||_{s+1/2} / |g|_s` for `u` the harmonic extension of a single mode on the bottom plane.
pub fn trace_ratio(grid: &Grid, m1: i64, m2: i64, s: f64) -> Result<f64> {
    let g = grid.boundary_from_fn(|y1, y2, p| match p {
        Plane::Bottom => (2.0 * std::f64::consts::PI * (m1 as f64 * y1 + m2 as f64 * y2)).cos(),
        Plane::Top => 0.0,
    });
    let u = harmonic_extension(grid, &g, ExtensionProfile::Continuum);
    Ok(grid.interior_norm(&u, (s + 0.5) as u32)? / grid.boundary_norm(&g, s)?)
}

fn push(rows: &mut Vec<LemmaRow>, lemma: &'static str, n: usize, order: f64, ratios: &[f64]) {
    rows.push(LemmaRow {
        lemma,
        n,
        order,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
    });
}

/// Runs the three corpora at each `n` (grid `n x n x n`).
pub fn lemma_suite(seed: u64, sizes: &[usize]) -> Result<LemmaReport> {
    let mut rows = Vec::new();
    let mut gradient_curl: f64 = 0.0;
    for &n in sizes {
        let grid = Grid::new(GridSpec::new(n, n, n)?)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus: Vec<VectorField> = (0..LEMMA_SAMPLES).map(|_| random_vector(&grid, &mut rng)).collect();
        for s in [1u32, 2] {
            let ratios = corpus.iter().map(|x| hodge_ratio(&grid, x, s)).collect::<Result<Vec<_>>>()?;
            push(&mut rows, "hodge", n, s as f64, &ratios);
        }

        // Potential with zero normal flux: phi = chi(y1, y2) cos(pi y3).
        let modes = random_modes(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), 3, 1.0);
        let phi = grid.scalar_from_fn(|y| eval_modes(&modes, y[0], y[1]) * (std::f64::consts::PI * y[2]).cos());
        let id = MatrixField::identity(grid.dims());
        let x = grad_a(&grid, &id, &phi);
        gradient_curl = gradient_curl.max(vec_norm(&grid, &curl_a(&grid, &id, &x), 0)? / vec_norm(&grid, &x, 0)?);

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
        let bump = grid.scalar_from_fn(|y| y[2] * (1.0 - y[2]));
        let flat = build_geometry(&grid, &FlowMap::identity(grid.dims()), 0.0)?;
        let mut flat_ratios = Vec::new();
        let mut bent_ratios = Vec::new();
        for _ in 0..LEMMA_SAMPLES {
            let f = &random_interior(&grid, &mut rng, 3, 1.0) * &bump;
            let disp = random_vector(&grid, &mut rng).scaled(0.01);
            let bent = build_geometry(&grid, &FlowMap::from_displacement(disp), 0.1)?;
            flat_ratios.push(elliptic_ratio(&grid, &flat, &f, 2)?);
            bent_ratios.push(elliptic_ratio(&grid, &bent, &f, 2)?);
        }
        push(&mut rows, "elliptic_flat", n, 2.0, &flat_ratios);
        push(&mut rows, "elliptic", n, 2.0, &bent_ratios);

        for s in [0.5, 1.5, 2.5] {
            let mut ratios = Vec::new();
            for m in 1..=(n as i64 / 4) {
                ratios.push(trace_ratio(&grid, m, 0, s)?);
                ratios.push(trace_ratio(&grid, m, m, s)?);
            }
            push(&mut rows, "trace", n, s, &ratios);
        }
    }
    Ok(LemmaReport { seed, rows, gradient_curl })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ratios_are_finite_and_stable() {
        let rep = lemma_suite(11, &[16, 32]).unwrap();
        assert!(rep.gradient_curl < 1e-12, "{}", rep.gradient_curl);
        for r in &rep.rows {
            assert!(r.min_ratio > 0.0 && r.max_ratio.is_finite(), "{r:?}");
        }
        for s in [1.0, 2.0] {
            let a = rep.find("hodge", 16, s).unwrap().max_ratio;
            let b = rep.find("hodge", 32, s).unwrap().max_ratio;
            assert!(a / b < 2.0 && b / a < 2.0, "{a} {b}");
        }
    }
}
