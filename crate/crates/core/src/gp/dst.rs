//! Type-I discrete sine transform through a complex FFT of the odd
//! extension, and the Dirichlet Sobolev preconditioner built on it.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// `F_k = Σ_{n=1}^{N} f_n sin(π k n / (N+1))` for `k = 1..N`, applied to
/// strided complex data.
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let m = 2 * (n + 1);
        let fft = FftPlanner::new().plan_fft_forward(m);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Dst1 { n, fft, buf: vec![Complex64::new(0.0, 0.0); m], scratch }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms `data[offset + k*stride]`, `k = 0..N`, in place.
    pub fn apply(&mut self, data: &mut [Complex64], offset: usize, stride: usize) {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        self.buf[0] = zero;
        self.buf[n + 1] = zero;
        for k in 0..n {
            let v = data[offset + k * stride];
            self.buf[k + 1] = v;
            self.buf[2 * n + 1 - k] = -v;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        // FFT of the odd extension is −2i times the sine transform.
        let half_i = Complex64::new(0.0, 0.5);
        for k in 0..n {
            data[offset + k * stride] = half_i * self.buf[k + 1];
        }
    }
}

/// `(α − ½Δ_h)⁻¹` with homogeneous Dirichlet conditions on an `nx × ny`
/// interior grid stored row-major.
pub struct SobolevPreconditioner {
    nx: usize,
    ny: usize,
    row: Dst1,
    col: Dst1,
    inv_symbol: Vec<f64>,
}

impl SobolevPreconditioner {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, alpha: f64) -> Self {
        let ex: Vec<f64> = (1..=nx)
            .map(|k| (2.0 - 2.0 * (PI * k as f64 / (nx + 1) as f64).cos()) / (hx * hx))
            .collect();
        let ey: Vec<f64> = (1..=ny)
            .map(|k| (2.0 - 2.0 * (PI * k as f64 / (ny + 1) as f64).cos()) / (hy * hy))
            .collect();
        // Forward and inverse DST-I differ by 2/(N+1) per axis; fold it in.
        let norm = 4.0 / ((nx + 1) as f64 * (ny + 1) as f64);
        let mut inv_symbol = Vec::with_capacity(nx * ny);
        for &b in &ey {
            for &a in &ex {
                inv_symbol.push(norm / (alpha + 0.5 * (a + b)));
            }
        }
        SobolevPreconditioner { nx, ny, row: Dst1::new(nx), col: Dst1::new(ny), inv_symbol }
    }

    fn transform(&mut self, data: &mut [Complex64]) {
        for j in 0..self.ny {
            self.row.apply(data, j * self.nx, 1);
        }
        for i in 0..self.nx {
            self.col.apply(data, i, self.nx);
        }
    }

    pub fn apply(&mut self, data: &mut [Complex64]) {
        self.transform(data);
        for (v, s) in data.iter_mut().zip(&self.inv_symbol) {
            *v *= *s;
        }
        self.transform(data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        (1..=n)
            .map(|k| {
                f.iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j + 1) as f64 / (n + 1) as f64).sin())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let f: Vec<Complex64> = (0..7).map(|k| Complex64::new((k as f64).sin(), 0.3 * k as f64)).collect();
        let mut g = f.clone();
        Dst1::new(7).apply(&mut g, 0, 1);
        for (a, b) in g.iter().zip(naive(&f)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_inverts_the_operator() {
        let (nx, ny, hx, hy, alpha) = (9, 6, 0.1, 0.15, 2.0);
        let u: Vec<Complex64> = (0..nx * ny).map(|k| Complex64::new((0.7 * k as f64).cos(), (0.3 * k as f64).sin())).collect();
        // Apply (α − ½Δ_h) directly with zero boundary values.
        let at = |i: isize, j: isize| -> Complex64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                Complex64::new(0.0, 0.0)
            } else {
                u[j as usize * nx + i as usize]
            }
        };
        let mut lu = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let c = at(i, j);
                let lap = (at(i + 1, j) + at(i - 1, j) - 2.0 * c) / (hx * hx)
                    + (at(i, j + 1) + at(i, j - 1) - 2.0 * c) / (hy * hy);
                lu[j as usize * nx + i as usize] = alpha * c - 0.5 * lap;
            }
        }
        SobolevPreconditioner::new(nx, ny, hx, hy, alpha).apply(&mut lu);
        for (a, b) in lu.iter().zip(&u) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
