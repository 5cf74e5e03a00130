//! Lattice-valued fields on the slab and on its two boundary planes.
//!
//! Storage is row-major with y1 fastest, then y2, then y3:
//! `index = (k * n2 + j) * n1 + i`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Lattice shape: `n1 x n2` tangential points and `nz = n3 + 1` normal points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
}

impl Dims {
    pub fn plane_len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n2 + j) * self.n1 + i
    }

    pub fn location(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.n1;
        let j = (idx / self.n1) % self.n2;
        let k = idx / self.plane_len();
        (i, j, k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dims: Dims,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(dims: Dims) -> Self {
        Self { dims, data: vec![0.0; dims.len()] }
    }

    pub fn constant(dims: Dims, value: f64) -> Self {
        Self { dims, data: vec![value; dims.len()] }
    }

    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {:?}, got {}",
                dims.len(),
                dims,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        let n = self.dims.plane_len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn plane_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dims.plane_len();
        &mut self.data[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.index(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dims: self.dims, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.dims, other.dims);
        Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        debug_assert_eq!(self.dims, x.dims);
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Zeroes both boundary planes y3 = 0 and y3 = 1.
    pub fn zero_boundary(&mut self) {
        let last = self.dims.nz - 1;
        self.plane_mut(0).fill(0.0);
        self.plane_mut(last).fill(0.0);
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(idx) => Err(Error::NonFinite { what, at: self.dims.location(idx) }),
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

/// Three-component field; component `alpha` is `self[alpha]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comps: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(dims: Dims) -> Self {
        Self { comps: std::array::from_fn(|_| ScalarField::zeros(dims)) }
    }

    pub fn new(c0: ScalarField, c1: ScalarField, c2: ScalarField) -> Self {
        Self { comps: [c0, c1, c2] }
    }

    pub fn dims(&self) -> Dims {
        self.comps[0].dims()
    }

    pub fn map_comps(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { comps: std::array::from_fn(|a| f(&self.comps[a])) }
    }

    pub fn zip_comps(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self { comps: std::array::from_fn(|a| f(&self.comps[a], &other.comps[a])) }
    }

    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        for a in 0..3 {
            self.comps[a].axpy(alpha, &x.comps[a]);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.comps.iter_mut().for_each(|c| c.scale(alpha));
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map_comps(|c| c * alpha)
    }

    /// Pointwise `sum_alpha self_alpha * other_alpha`.
    pub fn dot(&self, other: &Self) -> ScalarField {
        let mut out = &self.comps[0] * &other.comps[0];
        for a in 1..3 {
            out += &(&self.comps[a] * &other.comps[a]);
        }
        out
    }

    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn zero_boundary(&mut self) {
        self.comps.iter_mut().for_each(ScalarField::zero_boundary);
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        self.comps.iter().try_for_each(|c| c.check_finite(what))
    }
}

impl Index<usize> for VectorField {
    type Output = ScalarField;
    fn index(&self, a: usize) -> &ScalarField {
        &self.comps[a]
    }
}

impl IndexMut<usize> for VectorField {
    fn index_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.comps[a]
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_comps(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_comps(rhs, |a, b| a - b)
    }
}

/// 3x3 matrix-valued field, `m[mu][alpha]` holding the entry `M^{mu alpha}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub m: [[ScalarField; 3]; 3],
}

impl MatrixField {
    pub fn identity(dims: Dims) -> Self {
        Self {
            m: std::array::from_fn(|r| {
                std::array::from_fn(|c| ScalarField::constant(dims, if r == c { 1.0 } else { 0.0 }))
            }),
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self { m: std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zeros(dims))) }
    }

    pub fn dims(&self) -> Dims {
        self.m[0][0].dims()
    }

    #[inline]
    pub fn get(&self, mu: usize, alpha: usize) -> &ScalarField {
        &self.m[mu][alpha]
    }

    /// Entry values at flat lattice index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.m[r][c].as_slice()[idx]))
    }

    pub fn from_pointwise(dims: Dims, f: impl Fn(usize) -> [[f64; 3]; 3]) -> Self {
        let mut out = Self::zeros(dims);
        for idx in 0..dims.len() {
            let p = f(idx);
            for r in 0..3 {
                for c in 0..3 {
                    out.m[r][c].as_mut_slice()[idx] = p[r][c];
                }
            }
        }
        out
    }

    pub fn zip_entries(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        Self { m: std::array::from_fn(|r| std::array::from_fn(|c| f(&self.m[r][c], &other.m[r][c]))) }
    }

    pub fn map_entries(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { m: std::array::from_fn(|r| std::array::from_fn(|c| f(&self.m[r][c]))) }
    }
}

/// Values on the two boundary planes, bottom (y3 = 0) then top (y3 = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    Bottom,
    Top,
}

impl Plane {
    pub const BOTH: [Plane; 2] = [Plane::Bottom, Plane::Top];

    fn offset(self) -> usize {
        match self {
            Plane::Bottom => 0,
            Plane::Top => 1,
        }
    }

    /// Third component of the outward unit normal.
    pub fn outward_normal(self) -> f64 {
        match self {
            Plane::Bottom => -1.0,
            Plane::Top => 1.0,
        }
    }
}

impl BoundaryField {
    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self { n1, n2, data: vec![0.0; 2 * n1 * n2] }
    }

    pub fn from_planes(n1: usize, n2: usize, bottom: Vec<f64>, top: Vec<f64>) -> Result<Self> {
        if bottom.len() != n1 * n2 || top.len() != n1 * n2 {
            return Err(Error::ShapeMismatch(format!(
                "boundary planes must have {} values, got {} and {}",
                n1 * n2,
                bottom.len(),
                top.len()
            )));
        }
        let mut data = bottom;
        data.extend(top);
        Ok(Self { n1, n2, data })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn plane(&self, p: Plane) -> &[f64] {
        let n = self.n1 * self.n2;
        &self.data[p.offset() * n..(p.offset() + 1) * n]
    }

    pub fn plane_mut(&mut self, p: Plane) -> &mut [f64] {
        let n = self.n1 * self.n2;
        &mut self.data[p.offset() * n..(p.offset() + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n1: self.n1, n2: self.n2, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            n1: self.n1,
            n2: self.n2,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        let n = self.n1 * self.n2;
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(idx) => {
                let k = if idx >= n { 1 } else { 0 };
                let r = idx % n;
                Err(Error::NonFinite { what, at: (r % self.n1, r / self.n1, k) })
            }
        }
    }
}

impl Add for &BoundaryField {
    type Output = BoundaryField;
    fn add(self, rhs: &BoundaryField) -> BoundaryField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &BoundaryField {
    type Output = BoundaryField;
    fn sub(self, rhs: &BoundaryField) -> BoundaryField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &BoundaryField {
    type Output = BoundaryField;
    fn mul(self, rhs: &BoundaryField) -> BoundaryField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

/// Fields made of stacked tangential planes; the spectral machinery acts plane by plane.
pub trait Planar: Sized {
    fn plane_shape(&self) -> (usize, usize);
    fn planes_data(&self) -> &[f64];
    fn with_planes_data(&self, data: Vec<f64>) -> Self;
}

impl Planar for ScalarField {
    fn plane_shape(&self) -> (usize, usize) {
        (self.dims.n1, self.dims.n2)
    }
    fn planes_data(&self) -> &[f64] {
        &self.data
    }
    fn with_planes_data(&self, data: Vec<f64>) -> Self {
        Self { dims: self.dims, data }
    }
}

impl Planar for BoundaryField {
    fn plane_shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }
    fn planes_data(&self) -> &[f64] {
        &self.data
    }
    fn with_planes_data(&self, data: Vec<f64>) -> Self {
        Self { n1: self.n1, n2: self.n2, data }
    }
}
