//! Tangential mollifier `Lambda_kappa` (Gaussian Fourier multiplier) and its
//! commutators, plus a battery measuring the constants in the standard
//! regularity and commutator estimates over a random corpus.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus;
use crate::error::{Error, Result};
use crate::grid::{BoundaryField, Grid, Planar, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    kappa: f64,
}

impl MollifierSpec {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidKappa(kappa));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `exp(-kappa^2 |xi|^2 / 2)` with `xi = 2 pi m`.
    pub fn multiplier(&self, m1: i64, m2: i64) -> f64 {
        let xi2 = 4.0 * PI * PI * (m1 * m1 + m2 * m2) as f64;
        (-0.5 * self.kappa * self.kappa * xi2).exp()
    }

    pub fn apply<P: Planar>(&self, grid: &Grid, f: &P) -> P {
        grid.apply_real_symbol(f, |m1, m2| self.multiplier(m1, m2))
    }

    /// `Lambda_kappa^2` in a single pass.
    pub fn apply_squared<P: Planar>(&self, grid: &Grid, f: &P) -> P {
        grid.apply_real_symbol(f, |m1, m2| self.multiplier(m1, m2).powi(2))
    }
}

pub fn mollify<P: Planar>(grid: &Grid, f: &P, kappa: f64) -> Result<P> {
    Ok(MollifierSpec::new(kappa)?.apply(grid, f))
}

pub fn mollify_squared<P: Planar>(grid: &Grid, f: &P, kappa: f64) -> Result<P> {
    Ok(MollifierSpec::new(kappa)?.apply_squared(grid, f))
}

pub fn mollify_vector(grid: &Grid, f: &VectorField, kappa: f64) -> Result<VectorField> {
    let spec = MollifierSpec::new(kappa)?;
    Ok(f.map_comps(|c| spec.apply(grid, c)))
}

fn product<P: Planar>(f: &P, g: &P) -> P {
    f.with_planes_data(f.planes_data().iter().zip(g.planes_data()).map(|(a, b)| a * b).collect())
}

/// `[Lambda_kappa, f] g = Lambda_kappa(f g) - f Lambda_kappa(g)`.
pub fn commutator<P: Planar>(grid: &Grid, f: &P, g: &P, kappa: f64) -> Result<P> {
    let spec = MollifierSpec::new(kappa)?;
    let lhs = spec.apply(grid, &product(f, g));
    let rhs = product(f, &spec.apply(grid, g));
    Ok(lhs.with_planes_data(lhs.planes_data().iter().zip(rhs.planes_data()).map(|(a, b)| a - b).collect()))
}

pub(crate) fn sup_abs<P: Planar>(f: &P) -> f64 {
    f.planes_data().iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

/// `|f|_{W^{1,inf}} = sup|f| + max_i sup|d_i f|` over tangential directions.
pub fn w1_inf<P: Planar>(grid: &Grid, f: &P) -> f64 {
    let d1 = sup_abs(&grid.tangential_derivative(f, 1, 0));
    let d2 = sup_abs(&grid.tangential_derivative(f, 0, 1));
    sup_abs(f) + d1.max(d2)
}

/// `|dbar g|_0 = (|d1 g|_0^2 + |d2 g|_0^2)^{1/2}` on the boundary.
fn tangential_gradient_norm(grid: &Grid, g: &BoundaryField) -> Result<f64> {
    let a = grid.boundary_norm_sq(&grid.tangential_derivative(g, 1, 0), 0.0)?;
    let b = grid.boundary_norm_sq(&grid.tangential_derivative(g, 0, 1), 0.0)?;
    Ok((a + b).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Ratio of the largest to the smallest entry.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

#[derive(Clone, Debug)]
pub struct BatteryConfig {
    pub samples: usize,
    pub seed: u64,
    /// Smoothing lengths for the constant-stability checks (halving sequence).
    pub kappas: Vec<f64>,
    /// Dyadic smoothing lengths for the approximation-rate fit.
    pub fit_kappas: Vec<f64>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 2024,
            kappas: vec![0.2, 0.1, 0.05],
            fit_kappas: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

/// Measured constants, one entry per smoothing length in `kappas`.
#[derive(Clone, Debug)]
pub struct MollifierBattery {
    pub kappas: Vec<f64>,
    /// Largest `||Lambda f||_s / ||f||_s` over samples, interior s in 0..=4 and boundary s in 0..=7/2.
    pub max_contraction_ratio: f64,
    /// Smallest per-sample slope of `ln |f - Lambda f|_inf` against `ln kappa`.
    pub min_approximation_slope: f64,
    /// `max |dbar Lambda f|_0 kappa^s / |f|_{1-s}` for s = 0, 1/2, 1.
    pub regularity: [Vec<f64>; 3],
    /// `max |[Lambda, f] g|_0 / (|f|_inf |g|_0)`.
    pub commutator: Vec<f64>,
    /// `max |[Lambda, f] dbar g|_0 / (|f|_{W^{1,inf}} |g|_0)`.
    pub derivative_commutator: Vec<f64>,
}

impl MollifierBattery {
    pub fn commutator_spread(&self) -> f64 {
        spread(&self.commutator)
    }

    pub fn derivative_commutator_spread(&self) -> f64 {
        spread(&self.derivative_commutator)
    }

    /// Largest growth factor of a regularity constant from one kappa to the next smaller one.
    pub fn regularity_growth(&self) -> f64 {
        self.regularity
            .iter()
            .flat_map(|c| c.windows(2).map(|w| w[1] / w[0]))
            .fold(0.0, f64::max)
    }
}

/// Runs the estimate battery on `grid`. The rough corpus (spectrum `(1+|m|)^{-3/2}`
/// up to the Nyquist band) feeds the constant measurements; a smooth low-mode
/// corpus feeds the approximation-rate fit.
pub fn mollifier_battery(grid: &Grid, cfg: &BatteryConfig) -> Result<MollifierBattery> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nyq = (grid.n1().min(grid.n2()) / 2 - 1) as i64;
    let nk = cfg.kappas.len();
    let mut regularity: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nk]);
    let mut comm = vec![0.0; nk];
    let mut dcomm = vec![0.0; nk];
    let mut contraction: f64 = 0.0;
    let mut min_slope = f64::INFINITY;

    for _ in 0..cfg.samples {
        let f = corpus::random_boundary(grid, &mut rng, nyq, 1.5);
        let g = corpus::random_boundary(grid, &mut rng, nyq, 1.5);
        let smooth = corpus::random_boundary(grid, &mut rng, 2, 0.0);
        let interior = corpus::random_interior(grid, &mut rng, 4, 1.0);

        let f_inf = sup_abs(&f);
        let f_w1 = w1_inf(grid, &f);
        let g0 = grid.boundary_norm(&g, 0.0)?;
        let dg = [grid.tangential_derivative(&g, 1, 0), grid.tangential_derivative(&g, 0, 1)];
        let f_norms = [grid.boundary_norm(&f, 1.0)?, grid.boundary_norm(&f, 0.5)?, grid.boundary_norm(&f, 0.0)?];

        for (ik, &kappa) in cfg.kappas.iter().enumerate() {
            let spec = MollifierSpec::new(kappa)?;
            let lf = spec.apply(grid, &f);
            let dlf = tangential_gradient_norm(grid, &lf)?;
            for (is, s) in [0.0, 0.5, 1.0].into_iter().enumerate() {
                let c = dlf * kappa.powf(s) / f_norms[is];
                regularity[is][ik] = regularity[is][ik].max(c);
            }

            let c = commutator(grid, &f, &g, kappa)?;
            comm[ik] = f64::max(comm[ik], grid.boundary_norm(&c, 0.0)? / (f_inf * g0));

            let mut sq = 0.0;
            for d in &dg {
                sq += grid.boundary_norm_sq(&commutator(grid, &f, d, kappa)?, 0.0)?;
            }
            dcomm[ik] = f64::max(dcomm[ik], sq.sqrt() / (f_w1 * g0));

            for s2 in 0..=7 {
                let s = s2 as f64 / 2.0;
                let r = grid.boundary_norm(&lf, s)? / grid.boundary_norm(&f, s)?;
                contraction = contraction.max(r);
            }
            let li = spec.apply(grid, &interior);
            for s in 0..=4 {
                let r = grid.interior_norm(&li, s)? / grid.interior_norm(&interior, s)?;
                contraction = contraction.max(r);
            }
        }

        let errs: Vec<f64> = cfg
            .fit_kappas
            .iter()
            .map(|&k| Ok(sup_abs(&(&smooth - &mollify(grid, &smooth, k)?))))
            .collect::<Result<_>>()?;
        min_slope = min_slope.min(log_log_slope(&cfg.fit_kappas, &errs));
    }

    Ok(MollifierBattery {
        kappas: cfg.kappas.clone(),
        max_contraction_ratio: contraction,
        min_approximation_slope: min_slope,
        regularity,
        commutator: comm,
        derivative_commutator: dcomm,
    })
}

/// `||Lambda f - f||_0` over an interior field.
pub fn mollification_defect(grid: &Grid, f: &ScalarField, kappa: f64) -> Result<f64> {
    Ok(grid.l2_sq(&(&mollify(grid, f, kappa)? - f)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, 8).unwrap()).unwrap()
    }

    #[test]
    fn rejects_nonpositive_kappa() {
        let g = grid(8);
        let f = ScalarField::zeros(g.dims());
        assert!(matches!(mollify(&g, &f, 0.0), Err(Error::InvalidKappa(_))));
        assert!(mollify(&g, &f, -1.0).is_err());
        assert!(mollify(&g, &f, f64::NAN).is_err());
    }

    #[test]
    fn constant_preserved() {
        let g = grid(8);
        let f = ScalarField::constant(g.dims(), 1.75);
        assert!((&mollify(&g, &f, 0.3).unwrap() - &f).max_abs() < 1e-14);
    }

    #[test]
    fn eigenfunction_scaled_by_multiplier() {
        let g = grid(16);
        let kappa: f64 = 0.1;
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin());
        let factor = (-kappa * kappa * 4.0 * PI * PI / 2.0).exp();
        assert!((&mollify(&g, &f, kappa).unwrap() - &(&f * factor)).max_abs() < 1e-14);
        let sq = mollify_squared(&g, &f, kappa).unwrap();
        assert!((&sq - &(&f * (factor * factor))).max_abs() < 1e-14);
    }

    #[test]
    fn multiplier_shape() {
        let spec = MollifierSpec::new(0.2).unwrap();
        assert_eq!(spec.multiplier(0, 0), 1.0);
        let mut last = 1.0;
        for m in 1..10 {
            let v = spec.multiplier(m, 0);
            assert!(v > 0.0 && v < last);
            last = v;
        }
    }

    #[test]
    fn defect_decreases_monotonically_as_kappa_shrinks() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = corpus::random_interior(&g, &mut rng, 7, 0.5);
        let defects: Vec<f64> =
            [0.2, 0.1, 0.05, 0.025].iter().map(|&k| mollification_defect(&g, &f, k).unwrap()).collect();
        for w in defects.windows(2) {
            assert!(w[1] < w[0], "{defects:?}");
        }
    }

    #[test]
    fn commutator_trivial_cases() {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = corpus::random_boundary(&g, &mut rng, 3, 0.0);
        let c = BoundaryField::zeros(8, 8).map(|_| 2.0);
        assert!(commutator(&g, &c, &f, 0.1).unwrap().max_abs() < 1e-14);
        let z = BoundaryField::zeros(8, 8);
        assert_eq!(commutator(&g, &f, &z, 0.1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn w1_inf_of_single_mode() {
        let g = grid(16);
        let f = g.boundary_from_fn(|y1, _, _| (2.0 * PI * y1).sin());
        assert!((w1_inf(&g, &f) - (1.0 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn battery_on_small_grid_is_finite() {
        let g = grid(16);
        let cfg = BatteryConfig { samples: 3, ..Default::default() };
        let b = mollifier_battery(&g, &cfg).unwrap();
        assert!(b.max_contraction_ratio <= 1.0 + 1e-12);
        assert!(b.min_approximation_slope.is_finite());
        assert!(b.commutator.iter().all(|c| c.is_finite() && *c > 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn self_adjoint_per_plane(seed in any::<u64>(), kappa in 0.01f64..0.5) {
            let g = grid(8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = corpus::random_boundary(&g, &mut rng, 4, 0.0);
            let h = corpus::random_boundary(&g, &mut rng, 4, 0.0);
            let lf = mollify(&g, &f, kappa).unwrap();
            let lh = mollify(&g, &h, kappa).unwrap();
            let a: f64 = lf.as_slice().iter().zip(h.as_slice()).map(|(x, y)| x * y).sum();
            let b: f64 = f.as_slice().iter().zip(lh.as_slice()).map(|(x, y)| x * y).sum();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn mollified_norm_never_grows(seed in any::<u64>(), kappa in 0.01f64..0.5) {
            let g = grid(8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = corpus::random_interior(&g, &mut rng, 4, 0.0);
            let lf = mollify(&g, &f, kappa).unwrap();
            for s in 0..=4 {
                let before = g.interior_norm(&f, s).unwrap();
                prop_assert!(g.interior_norm(&lf, s).unwrap() <= before * (1.0 + 1e-13));
            }
        }
    }
}
