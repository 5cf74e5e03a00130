use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// 2D FFT over stacks of contiguous `n1 x n2` planes (y1 fastest).
#[derive(Clone)]
pub(crate) struct PlaneFft {
    n1: usize,
    n2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PlaneFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PlaneFft({}x{})", self.n1, self.n2)
    }
}

impl PlaneFft {
    pub fn new(n1: usize, n2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n1,
            n2,
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv2: planner.plan_fft_inverse(n2),
        }
    }

    fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        let plane = rows * cols;
        for (s, d) in src.chunks_exact(plane).zip(dst.chunks_exact_mut(plane)) {
            for r in 0..rows {
                for c in 0..cols {
                    d[c * rows + r] = s[r * cols + c];
                }
            }
        }
    }

    /// Unnormalized forward transform of every plane in `data`.
    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    fn forward_in_place(&self, buf: &mut Vec<Complex64>) {
        self.fwd1.process(buf);
        let mut tmp = vec![Complex64::default(); buf.len()];
        Self::transpose(buf, &mut tmp, self.n2, self.n1);
        self.fwd2.process(&mut tmp);
        Self::transpose(&tmp, buf, self.n1, self.n2);
    }

    /// Inverse transform with `1/(n1 n2)` normalization; returns the real part.
    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inv1.process(&mut buf);
        let mut tmp = vec![Complex64::default(); buf.len()];
        Self::transpose(&buf, &mut tmp, self.n2, self.n1);
        self.inv2.process(&mut tmp);
        let scale = 1.0 / (self.n1 * self.n2) as f64;
        let mut out = vec![0.0; buf.len()];
        let plane = self.n1 * self.n2;
        for (s, d) in tmp.chunks_exact(plane).zip(out.chunks_exact_mut(plane)) {
            for c in 0..self.n1 {
                for r in 0..self.n2 {
                    d[r * self.n1 + c] = s[c * self.n2 + r].re * scale;
                }
            }
        }
        out
    }
}
