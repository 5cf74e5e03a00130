//! Discretization of the slab `T^2 x (0,1)`: Fourier collocation in y1, y2 and a
//! uniform second-order finite-difference grid in y3.

mod field;
mod spectral;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

pub use field::{BoundaryField, Dims, MatrixField, Planar, Plane, ScalarField, VectorField};
use spectral::PlaneFft;

use crate::error::{Error, Result};

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    /// Number of normal intervals; the lattice has `n3 + 1` planes.
    pub n3: usize,
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        Self::with_dealias(n1, n2, n3, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n1: usize, n2: usize, n3: usize, dealias_fraction: f64) -> Result<Self> {
        let spec = Self { n1, n2, n3, dealias_fraction };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n1", self.n1), ("n2", self.n2)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even and >= 8")));
            }
        }
        if self.n3 < 8 {
            return Err(Error::InvalidGrid(format!("n3 = {} must be >= 8", self.n3)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction = {} must lie in (0, 1]",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    pub fn h3(&self) -> f64 {
        1.0 / self.n3 as f64
    }

    pub fn dims(&self) -> Dims {
        Dims { n1: self.n1, n2: self.n2, nz: self.n3 + 1 }
    }
}

/// Grid plus cached FFT plans. Cheap to clone (plans are shared).
#[derive(Clone, Debug)]
pub struct Grid {
    spec: GridSpec,
    fft: PlaneFft,
}

/// Signed Fourier index for position `i` of an `n`-point transform; the Nyquist
/// index is reported as `+n/2`.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, fft: PlaneFft::new(spec.n1, spec.n2) })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> Dims {
        self.spec.dims()
    }

    pub fn n1(&self) -> usize {
        self.spec.n1
    }

    pub fn n2(&self) -> usize {
        self.spec.n2
    }

    pub fn n3(&self) -> usize {
        self.spec.n3
    }

    pub fn h3(&self) -> f64 {
        self.spec.h3()
    }

    pub fn y1(&self, i: usize) -> f64 {
        i as f64 / self.spec.n1 as f64
    }

    pub fn y2(&self, j: usize) -> f64 {
        j as f64 / self.spec.n2 as f64
    }

    pub fn y3(&self, k: usize) -> f64 {
        k as f64 / self.spec.n3 as f64
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.dims().location(idx);
        [self.y1(i), self.y2(j), self.y3(k)]
    }

    pub fn scalar_from_fn(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        let dims = self.dims();
        let data = (0..dims.len()).map(|idx| f(self.coords(idx))).collect();
        ScalarField::from_vec(dims, data).expect("lattice length")
    }

    pub fn vector_from_fn(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> VectorField {
        let dims = self.dims();
        let mut out = VectorField::zeros(dims);
        for idx in 0..dims.len() {
            let v = f(self.coords(idx));
            for a in 0..3 {
                out[a].as_mut_slice()[idx] = v[a];
            }
        }
        out
    }

    pub fn boundary_from_fn(&self, f: impl Fn(f64, f64, Plane) -> f64) -> BoundaryField {
        let (n1, n2) = (self.spec.n1, self.spec.n2);
        let make = |p: Plane| -> Vec<f64> {
            (0..n1 * n2).map(|r| f(self.y1(r % n1), self.y2(r / n1), p)).collect()
        };
        BoundaryField::from_planes(n1, n2, make(Plane::Bottom), make(Plane::Top))
            .expect("plane length")
    }

    /// Restriction of an interior field to y3 = 0 and y3 = 1.
    pub fn trace(&self, f: &ScalarField) -> BoundaryField {
        let (n1, n2) = (self.spec.n1, self.spec.n2);
        BoundaryField::from_planes(n1, n2, f.plane(0).to_vec(), f.plane(self.spec.n3).to_vec())
            .expect("plane length")
    }

    fn check_shape<P: Planar>(&self, f: &P) {
        assert_eq!(
            f.plane_shape(),
            (self.spec.n1, self.spec.n2),
            "field does not live on this grid"
        );
    }

    /// Symbol table over tangential modes, laid out like a plane.
    fn symbol_table(&self, sym: impl Fn(i64, i64) -> Complex64) -> Vec<Complex64> {
        let (n1, n2) = (self.spec.n1, self.spec.n2);
        let mut table = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            let m2 = wavenumber(j, n2);
            for i in 0..n1 {
                table.push(sym(wavenumber(i, n1), m2));
            }
        }
        table
    }

    /// Applies the Fourier multiplier `sym(m1, m2)` plane by plane.
    pub fn apply_symbol<P: Planar>(&self, f: &P, sym: impl Fn(i64, i64) -> Complex64) -> P {
        self.check_shape(f);
        let table = self.symbol_table(sym);
        let mut hat = self.fft.forward(f.planes_data());
        for plane in hat.chunks_exact_mut(table.len()) {
            for (h, s) in plane.iter_mut().zip(&table) {
                *h *= s;
            }
        }
        f.with_planes_data(self.fft.inverse_real(hat))
    }

    pub fn apply_real_symbol<P: Planar>(&self, f: &P, sym: impl Fn(i64, i64) -> f64) -> P {
        self.apply_symbol(f, |m1, m2| Complex64::new(sym(m1, m2), 0.0))
    }

    /// Forward transform coefficients, plane-major (unnormalized).
    pub fn fourier_coefficients<P: Planar>(&self, f: &P) -> Vec<Complex64> {
        self.check_shape(f);
        self.fft.forward(f.planes_data())
    }

    /// Inverse of [`Grid::fourier_coefficients`] (real part, normalized).
    pub fn inverse_coefficients(&self, hat: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse_real(hat)
    }

    /// Mixed tangential derivative `d1^p1 d2^p2`, equal to composing single
    /// spectral derivatives (the Nyquist mode of a differentiated direction is dropped).
    pub fn tangential_derivative<P: Planar>(&self, f: &P, p1: u32, p2: u32) -> P {
        if p1 == 0 && p2 == 0 {
            return f.with_planes_data(f.planes_data().to_vec());
        }
        let (n1, n2) = (self.spec.n1 as i64, self.spec.n2 as i64);
        let factor = |m: i64, n: i64, p: u32| -> Complex64 {
            if p == 0 {
                Complex64::new(1.0, 0.0)
            } else if 2 * m == n {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * PI * m as f64).powu(p)
            }
        };
        self.apply_symbol(f, |m1, m2| factor(m1, n1, p1) * factor(m2, n2, p2))
    }

    /// Normal derivative: central differences inside, one-sided second order at the walls.
    pub fn normal_derivative(&self, f: &ScalarField) -> ScalarField {
        let nz = self.spec.n3 + 1;
        let inv2h = 0.5 / self.h3();
        let mut out = ScalarField::zeros(f.dims());
        for k in 0..nz {
            let (c0, k0, c1, k1, c2, k2) = if k == 0 {
                (-3.0, 0, 4.0, 1, -1.0, 2)
            } else if k == nz - 1 {
                (3.0, k, -4.0, k - 1, 1.0, k - 2)
            } else {
                (1.0, k + 1, -1.0, k - 1, 0.0, k)
            };
            let (p0, p1, p2) = (f.plane(k0).to_vec(), f.plane(k1), f.plane(k2));
            let dst = out.plane_mut(k);
            for (x, d) in dst.iter_mut().enumerate() {
                *d = inv2h * (c0 * p0[x] + c1 * p1[x] + c2 * p2[x]);
            }
        }
        out
    }

    /// Direct second normal derivative: three-point central stencil inside,
    /// four-point one-sided stencil at the walls (both second order).
    pub fn second_normal_derivative(&self, f: &ScalarField) -> ScalarField {
        let n3 = self.spec.n3;
        let inv_h2 = 1.0 / (self.h3() * self.h3());
        let mut out = ScalarField::zeros(f.dims());
        for k in 0..=n3 {
            let stencil: [(usize, f64); 4] = if k == 0 {
                [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
            } else if k == n3 {
                [(n3, 2.0), (n3 - 1, -5.0), (n3 - 2, 4.0), (n3 - 3, -1.0)]
            } else {
                [(k - 1, 1.0), (k, -2.0), (k + 1, 1.0), (k, 0.0)]
            };
            let planes: Vec<&[f64]> = stencil.iter().map(|&(kk, _)| f.plane(kk)).collect();
            let dst = out.plane_mut(k);
            for (x, d) in dst.iter_mut().enumerate() {
                *d = inv_h2 * stencil.iter().zip(&planes).map(|((_, c), p)| c * p[x]).sum::<f64>();
            }
        }
        out
    }

    /// Derivative along `axis` (1, 2 or 3) without a finiteness check.
    pub fn diff(&self, f: &ScalarField, axis: usize) -> ScalarField {
        match axis {
            1 => self.tangential_derivative(f, 1, 0),
            2 => self.tangential_derivative(f, 0, 1),
            3 => self.normal_derivative(f),
            _ => panic!("axis must be 1, 2 or 3, got {axis}"),
        }
    }

    pub fn derivative(&self, f: &ScalarField, axis: usize) -> Result<ScalarField> {
        if !(1..=3).contains(&axis) {
            return Err(Error::InvalidArgument(format!("axis must be 1, 2 or 3, got {axis}")));
        }
        f.check_finite("derivative input")?;
        Ok(self.diff(f, axis))
    }

    /// All three derivatives `[d1 f, d2 f, d3 f]`.
    pub fn gradient(&self, f: &ScalarField) -> [ScalarField; 3] {
        [self.diff(f, 1), self.diff(f, 2), self.diff(f, 3)]
    }

    fn xi_sq(m1: i64, m2: i64) -> f64 {
        4.0 * PI * PI * (m1 * m1 + m2 * m2) as f64
    }

    /// Multiplier `-|xi|^2`, `xi = 2 pi m`, including the Nyquist modes.
    pub fn tangential_laplacian<P: Planar>(&self, f: &P) -> P {
        self.apply_real_symbol(f, |m1, m2| -Self::xi_sq(m1, m2))
    }

    /// Zero tangential mode removed, every other mode divided by `-|xi|^2`.
    pub fn invert_tangential_laplacian_nonzero<P: Planar>(&self, g: &P) -> P {
        self.apply_real_symbol(g, |m1, m2| {
            if m1 == 0 && m2 == 0 {
                0.0
            } else {
                -1.0 / Self::xi_sq(m1, m2)
            }
        })
    }

    /// Removes the mean of every tangential plane.
    pub fn project_nonzero<P: Planar>(&self, g: &P) -> P {
        let (n1, n2) = g.plane_shape();
        let mut data = g.planes_data().to_vec();
        for plane in data.chunks_exact_mut(n1 * n2) {
            let mean = plane.iter().sum::<f64>() / plane.len() as f64;
            plane.iter_mut().for_each(|x| *x -= mean);
        }
        g.with_planes_data(data)
    }

    pub fn plane_means<P: Planar>(&self, g: &P) -> Vec<f64> {
        let (n1, n2) = g.plane_shape();
        g.planes_data()
            .chunks_exact(n1 * n2)
            .map(|p| p.iter().sum::<f64>() / p.len() as f64)
            .collect()
    }

    /// Highest retained index per direction under the dealiasing rule.
    pub fn dealias_cutoff(&self) -> (i64, i64) {
        let frac = self.spec.dealias_fraction;
        let cut = |n: usize| (frac * n as f64 / 2.0 + 1e-12).floor() as i64;
        (cut(self.spec.n1), cut(self.spec.n2))
    }

    /// Truncates tangential modes beyond the dealiasing cutoff.
    pub fn dealias<P: Planar>(&self, f: &P) -> P {
        let (c1, c2) = self.dealias_cutoff();
        if c1 as usize >= self.spec.n1 / 2 && c2 as usize >= self.spec.n2 / 2 {
            return f.with_planes_data(f.planes_data().to_vec());
        }
        self.apply_real_symbol(f, |m1, m2| if m1.abs() <= c1 && m2.abs() <= c2 { 1.0 } else { 0.0 })
    }

    pub fn dealias_vector(&self, f: &VectorField) -> VectorField {
        f.map_comps(|c| self.dealias(c))
    }

    /// Trapezoid weight of plane `k` in y3.
    #[inline]
    pub fn normal_weight(&self, k: usize) -> f64 {
        let h = self.h3();
        if k == 0 || k == self.spec.n3 {
            0.5 * h
        } else {
            h
        }
    }

    /// `int_Omega f dy`: plane mean in y1, y2 and trapezoid rule in y3.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        let np = self.dims().plane_len() as f64;
        (0..=self.spec.n3)
            .map(|k| self.normal_weight(k) * f.plane(k).iter().sum::<f64>() / np)
            .sum()
    }

    pub fn l2_sq(&self, f: &ScalarField) -> f64 {
        let np = self.dims().plane_len() as f64;
        (0..=self.spec.n3)
            .map(|k| self.normal_weight(k) * f.plane(k).iter().map(|x| x * x).sum::<f64>() / np)
            .sum()
    }

    /// Squared interior `H^s` norm: sum over `|alpha| <= s` of `||d^alpha f||_0^2`.
    pub fn interior_norm_sq(&self, f: &ScalarField, s: u32) -> Result<f64> {
        self.interior_norm_sq_affine(f, None, s)
    }

    /// Squared `H^s` norm of `y_axis + d` for a periodic displacement `d`
    /// (the linear part is added analytically so that it never meets the FFT).
    pub fn interior_norm_sq_affine(&self, d: &ScalarField, axis: Option<usize>, s: u32) -> Result<f64> {
        if s > 4 {
            return Err(Error::UnsupportedOrder { order: s as f64, domain: "interior" });
        }
        let mut total = 0.0;
        for a1 in 0..=s {
            for a2 in 0..=(s - a1) {
                let mut t = self.tangential_derivative(d, a1, a2);
                for a3 in 0..=(s - a1 - a2) {
                    let order = [a1, a2, a3];
                    total += match axis {
                        Some(ax) if a1 + a2 + a3 == 0 => {
                            let y = self.scalar_from_fn(|y| y[ax - 1]);
                            self.l2_sq(&(&t + &y))
                        }
                        Some(ax) if a1 + a2 + a3 == 1 && order[ax - 1] == 1 => {
                            self.l2_sq(&t.map(|x| x + 1.0))
                        }
                        _ => self.l2_sq(&t),
                    };
                    if a3 < s - a1 - a2 {
                        t = self.normal_derivative(&t);
                    }
                }
            }
        }
        Ok(total)
    }

    pub fn interior_norm(&self, f: &ScalarField, s: u32) -> Result<f64> {
        Ok(self.interior_norm_sq(f, s)?.sqrt())
    }

    pub fn interior_norm_vec(&self, f: &VectorField, s: u32) -> Result<f64> {
        let mut total = 0.0;
        for a in 0..3 {
            total += self.interior_norm_sq(&f[a], s)?;
        }
        Ok(total.sqrt())
    }

    fn check_boundary_order(s: f64) -> Result<()> {
        let twice = 2.0 * s;
        if !(0.0..=7.0).contains(&twice) || twice.fract() != 0.0 {
            return Err(Error::UnsupportedOrder { order: s, domain: "boundary" });
        }
        Ok(())
    }

    /// Squared boundary `H^s(Gamma)` norm: multiplier `(1+|xi|^2)^s` on each plane, planes summed.
    pub fn boundary_norm_sq<P: Planar>(&self, g: &P, s: f64) -> Result<f64> {
        Self::check_boundary_order(s)?;
        let table = self.symbol_table(|m1, m2| Complex64::new((1.0 + Self::xi_sq(m1, m2)).powf(s), 0.0));
        let hat = self.fourier_coefficients(g);
        let np = table.len() as f64;
        let sum: f64 = hat
            .chunks_exact(table.len())
            .map(|plane| plane.iter().zip(&table).map(|(h, w)| w.re * h.norm_sqr()).sum::<f64>())
            .sum();
        Ok(sum / (np * np))
    }

    pub fn boundary_norm<P: Planar>(&self, g: &P, s: f64) -> Result<f64> {
        Ok(self.boundary_norm_sq(g, s)?.sqrt())
    }

    /// `sup` over both boundary planes.
    pub fn boundary_sup(&self, f: &ScalarField) -> f64 {
        self.trace(f).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, n3: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, n3).unwrap()).unwrap()
    }

    /// Random trigonometric polynomial with tangential modes `|m| <= 3` and a smooth y3 profile.
    fn band_limited(g: &Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for m1 in -3i32..=3 {
            for m2 in -3i32..=3 {
                terms.push((m1, m2, rng.random_range(-1.0..1.0), rng.random_range(0.0..6.3), rng.random_range(0.5..2.0)));
            }
        }
        g.scalar_from_fn(|y| {
            terms
                .iter()
                .map(|&(m1, m2, c, ph, w)| {
                    c * (2.0 * PI * (m1 as f64 * y[0] + m2 as f64 * y[1]) + ph).cos() * (w * y[2]).sin()
                })
                .sum()
        })
    }

    fn rel_err(a: &ScalarField, b: &ScalarField) -> f64 {
        (a - b).max_abs() / b.max_abs().max(1e-300)
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(7, 8, 8).is_err());
        assert!(GridSpec::new(8, 6, 8).is_err());
        assert!(GridSpec::new(8, 8, 7).is_err());
        assert!(GridSpec::with_dealias(8, 8, 8, 0.0).is_err());
        assert!(GridSpec::with_dealias(8, 8, 8, 1.0).is_ok());
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = grid(8, 8);
        let f = ScalarField::constant(g.dims(), 3.0);
        for axis in 1..=3 {
            assert!(g.derivative(&f, axis).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_derivative_is_exact() {
        let g = grid(16, 8);
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin());
        let exact = g.scalar_from_fn(|y| 2.0 * PI * (2.0 * PI * y[0]).cos());
        assert!((&g.derivative(&f, 1).unwrap() - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_rejected_with_location() {
        let g = grid(8, 8);
        let mut f = ScalarField::zeros(g.dims());
        let idx = g.dims().index(3, 2, 5);
        f.as_mut_slice()[idx] = f64::NAN;
        match g.derivative(&f, 1) {
            Err(Error::NonFinite { at, .. }) => assert_eq!(at, (3, 2, 5)),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn normal_derivative_second_order_at_walls() {
        // The stencils are exact on y^2, so probe with y^3.
        let mut errs = Vec::new();
        for n3 in [16, 32, 64] {
            let g = grid(8, n3);
            let f = g.scalar_from_fn(|y| y[2].powi(3));
            let d = g.normal_derivative(&f);
            let exact = g.scalar_from_fn(|y| 3.0 * y[2] * y[2]);
            errs.push((&d - &exact).max_abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.95, "order {order}");
        }
        // Wall stencil error for y^3 is 2 h^2 (one-sided), interior is h^2.
        let h = 1.0 / 16.0;
        assert!((errs[0] - 2.0 * h * h).abs() < 1e-12);
    }

    #[test]
    fn quadratic_normal_derivative_exact() {
        let g = grid(8, 16);
        let f = g.scalar_from_fn(|y| y[2] * y[2]);
        let exact = g.scalar_from_fn(|y| 2.0 * y[2]);
        assert!((&g.normal_derivative(&f) - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn second_normal_derivative_exact_on_cubics() {
        let g = grid(8, 16);
        let f = g.scalar_from_fn(|y| y[2].powi(3) - 2.0 * y[2] * y[2]);
        let exact = g.scalar_from_fn(|y| 6.0 * y[2] - 4.0);
        assert!((&g.second_normal_derivative(&f) - &exact).max_abs() < 1e-9);
    }

    #[test]
    fn laplacian_eigenfunction_and_constant() {
        let g = grid(8, 8);
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[1]).cos());
        let exact = &f * (-4.0 * PI * PI);
        assert!((&g.tangential_laplacian(&f) - &exact).max_abs() < 1e-11);
        let c = ScalarField::constant(g.dims(), 2.5);
        assert!(g.tangential_laplacian(&c).max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_matches_composed_derivatives() {
        let g = grid(16, 8);
        let f = band_limited(&g, 7);
        let composed = &g.diff(&g.diff(&f, 1), 1) + &g.diff(&g.diff(&f, 2), 2);
        assert!(rel_err(&g.tangential_laplacian(&f), &composed) < 1e-12);
    }

    #[test]
    fn inverse_laplacian_examples() {
        let g = grid(8, 8);
        let c = ScalarField::constant(g.dims(), 5.0);
        assert!(g.invert_tangential_laplacian_nonzero(&c).max_abs() < 1e-14);
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin());
        let exact = &f * (-1.0 / (4.0 * PI * PI));
        assert!((&g.invert_tangential_laplacian_nonzero(&f) - &exact).max_abs() < 1e-15);
    }

    #[test]
    fn inverse_laplacian_round_trip() {
        let g = grid(16, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = (0..g.dims().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = ScalarField::from_vec(g.dims(), data).unwrap();
        let mut back = g.tangential_laplacian(&g.invert_tangential_laplacian_nonzero(&f));
        let means = g.plane_means(&f);
        for k in 0..=g.n3() {
            back.plane_mut(k).iter_mut().for_each(|x| *x += means[k]);
        }
        assert!(rel_err(&back, &f) < 1e-12);
    }

    #[test]
    fn boundary_round_trip_and_norm_closed_form() {
        let g = grid(16, 8);
        let b = g.boundary_from_fn(|y1, _, _| (2.0 * PI * y1).sin());
        // Each plane contributes (1 + 4 pi^2)^{1/2} / 2; two planes.
        let expected = (1.0 + 4.0 * PI * PI).powf(0.25);
        assert!((g.boundary_norm(&b, 0.5).unwrap() - expected).abs() < 1e-13);
        assert!((g.boundary_norm(&b, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(g.boundary_norm(&b, 0.25).is_err());
        assert!(g.boundary_norm(&b, 4.0).is_err());
    }

    #[test]
    fn interior_norm_examples() {
        let g = grid(16, 16);
        let z = ScalarField::zeros(g.dims());
        for s in 0..=4 {
            assert_eq!(g.interior_norm(&z, s).unwrap(), 0.0);
        }
        let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin());
        assert!((g.interior_norm(&f, 0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        // s = 1 adds ||2 pi cos||^2 = 2 pi^2.
        let n1 = g.interior_norm_sq(&f, 1).unwrap();
        assert!((n1 - (0.5 + 2.0 * PI * PI)).abs() < 1e-10);
        assert!(g.interior_norm(&f, 5).is_err());
    }

    #[test]
    fn affine_norm_matches_direct_evaluation() {
        let g = grid(8, 16);
        let d = g.scalar_from_fn(|y| 0.01 * (2.0 * PI * y[1]).sin() * y[2]);
        // Linear part in y3 is non-periodic in the normal direction only, so the
        // direct lattice evaluation is valid there.
        let full = &d + &g.scalar_from_fn(|y| y[2]);
        for s in 0..=3 {
            let a = g.interior_norm_sq_affine(&d, Some(3), s).unwrap();
            let b = g.interior_norm_sq(&full, s).unwrap();
            assert!((a - b).abs() < 1e-11 * b, "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn interior_norm_refinement_order() {
        let exact_sq = |s: u32| -> f64 {
            // f = sin(2 pi y1) e^{y3}: each derivative multiplies by 2 pi (tangential) or 1 (normal).
            let mut tot = 0.0;
            let mean_y3 = ((2.0f64).exp() - 1.0) / 2.0;
            for a1 in 0..=s {
                // a3 ranges over 0..=s-a1, each contributing the same amount.
                tot += (s - a1 + 1) as f64 * (2.0 * PI).powi(2 * a1 as i32) * 0.5 * mean_y3;
            }
            tot
        };
        let mut errs = Vec::new();
        for n3 in [16, 32, 64] {
            let g = grid(8, n3);
            let f = g.scalar_from_fn(|y| (2.0 * PI * y[0]).sin() * y[2].exp());
            errs.push((g.interior_norm_sq(&f, 2).unwrap() - exact_sq(2)).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn dealias_keeps_low_modes_and_removes_high() {
        let g = grid(16, 8);
        let low = g.scalar_from_fn(|y| (2.0 * PI * 5.0 * y[0]).cos());
        assert!((&g.dealias(&low) - &low).max_abs() < 1e-12);
        let high = g.scalar_from_fn(|y| (2.0 * PI * 6.0 * y[1]).sin());
        assert!(g.dealias(&high).max_abs() < 1e-12);
    }

    #[test]
    fn integrate_trapezoid() {
        let g = grid(8, 16);
        let f = g.scalar_from_fn(|y| 1.0 + (2.0 * PI * y[0]).cos() + y[2]);
        assert!((g.integrate(&f) - 1.5).abs() < 1e-14);
    }

    fn arb_field(n: usize, n3: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n * (n3 + 1))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tangential_derivatives_commute(data in arb_field(8, 8)) {
            let g = grid(8, 8);
            let f = ScalarField::from_vec(g.dims(), data).unwrap();
            let a = g.diff(&g.diff(&f, 1), 2);
            let b = g.diff(&g.diff(&f, 2), 1);
            let scale = a.max_abs().max(1.0);
            prop_assert!((&a - &b).max_abs() <= 1e-12 * scale);
        }

        #[test]
        fn project_nonzero_idempotent(data in arb_field(8, 8)) {
            let g = grid(8, 8);
            let f = ScalarField::from_vec(g.dims(), data).unwrap();
            let once = g.project_nonzero(&f);
            let twice = g.project_nonzero(&once);
            prop_assert!((&once - &twice).max_abs() <= 1e-15);
        }

        #[test]
        fn interior_norm_monotone_in_s(data in arb_field(8, 8)) {
            let g = grid(8, 8);
            let f = ScalarField::from_vec(g.dims(), data).unwrap();
            for s in 0..4 {
                prop_assert!(g.interior_norm(&f, s).unwrap() <= g.interior_norm(&f, s + 1).unwrap());
            }
        }

        #[test]
        fn boundary_norm_monotone_in_s(data in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let g = grid(8, 8);
            let b = BoundaryField::from_planes(8, 8, data[..64].to_vec(), data[64..].to_vec()).unwrap();
            for k in 0..7 {
                let s = k as f64 / 2.0;
                prop_assert!(g.boundary_norm(&b, s).unwrap() <= g.boundary_norm(&b, s + 0.5).unwrap());
            }
        }
    }
}
