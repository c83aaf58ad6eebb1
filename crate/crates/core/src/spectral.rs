//! Periodic grids and differentiation backends.
//!
//! Grid functions on `(0,b)^m` are stored with axis 0 contiguous: the value at
//! node `(i, j)` lives at `j * n + i`. Both backends produce real, skew-symmetric
//! first-derivative operators, so `<D f, g> = -<f, D g>` holds exactly at the
//! grid level. The price is a small kernel: besides constants, the checkerboard
//! modes (wavenumber `n/2` on every axis where it is nonzero) are annihilated.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// Differentiation backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Trigonometric interpolation (Nyquist derivative set to zero).
    #[default]
    Spectral,
    /// Second-order centered differences.
    FiniteDifference,
}

/// A uniform periodic grid with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    m: usize,
    n: usize,
    b: f64,
    backend: Backend,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("b", &self.b)
            .field("backend", &self.backend)
            .finish()
    }
}

impl Grid {
    pub fn new(m: usize, n: usize, b: f64, backend: Backend) -> Result<Self> {
        if m != 1 && m != 2 {
            return Err(FlowError::invalid(format!("graph dimension must be 1 or 2, got {m}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(FlowError::invalid(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(FlowError::invalid(format!("period must be positive, got {b}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            m,
            n,
            b,
            backend,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.b
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn with_backend(&self, backend: Backend) -> Grid {
        Grid {
            backend,
            ..self.clone()
        }
    }

    /// Number of nodes, `n^m`.
    pub fn len(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.b / self.n as f64
    }

    /// Cell volume `(b/n)^m`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.m as i32)
    }

    /// Node coordinates `(x_1, x_2)` (second entry is 0 when `m = 1`).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let i = idx % self.n;
        let j = idx / self.n;
        [i as f64 * h, j as f64 * h]
    }

    /// Signed integer wavenumber for FFT index `k` (in `-n/2..n/2`, Nyquist negative).
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2 pi k / b` with the Nyquist entry kept.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.signed_index(k) as f64 / self.b
    }

    /// Angular wavenumber used by the spectral first derivative (Nyquist zeroed).
    fn derivative_wavenumber(&self, k: usize) -> f64 {
        if k == self.n / 2 {
            0.0
        } else {
            self.wavenumber(k)
        }
    }

    pub fn sum(&self, f: &[f64]) -> f64 {
        f.iter().sum()
    }

    /// Grid quadrature `cell * sum(f)`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.cell() * self.sum(f)
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        self.sum(f) / f.len() as f64
    }

    /// Discrete `L^2` inner product.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.cell() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(FlowError::invalid(format!(
                "grid function has {} entries, expected {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// First derivative along `axis`.
    pub fn deriv(&self, f: &[f64], axis: usize) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.len());
        debug_assert!(axis < self.m);
        match self.backend {
            Backend::Spectral => self.spectral_deriv(f, axis),
            Backend::FiniteDifference => self.fd_deriv(f, axis),
        }
    }

    /// Composed second derivative `D_a (D_b f)`.
    pub fn deriv2(&self, f: &[f64], a: usize, b: usize) -> Vec<f64> {
        self.deriv(&self.deriv(f, b), a)
    }

    /// Gradient as one vector per axis.
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        (0..self.m).map(|a| self.deriv(f, a)).collect()
    }

    /// Discrete divergence `sum_a D_a F_a`.
    pub fn divergence(&self, field: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (a, comp) in field.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(self.deriv(comp, a)) {
                *o += d;
            }
        }
        out
    }

    fn fd_deriv(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let n = self.n;
        let inv = 1.0 / (2.0 * self.spacing());
        let stride = if axis == 0 { 1 } else { n };
        let mut out = vec![0.0; f.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let i = if axis == 0 { idx % n } else { idx / n };
            let base = idx - i * stride;
            let ip = base + ((i + 1) % n) * stride;
            let im = base + ((i + n - 1) % n) * stride;
            *o = (f[ip] - f[im]) * inv;
        }
        out
    }

    fn spectral_deriv(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mean = self.mean(f);
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
        self.transform_axis(&mut data, axis, false);
        let n = self.n;
        for (idx, c) in data.iter_mut().enumerate() {
            let k = if axis == 0 { idx % n } else { idx / n };
            let q = self.derivative_wavenumber(k);
            *c = Complex64::new(-q * c.im, q * c.re);
        }
        self.transform_axis(&mut data, axis, true);
        let scale = 1.0 / n as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// In-place unnormalized 1D transforms along one axis.
    fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        if axis == 0 {
            for row in data.chunks_mut(n) {
                plan.process(row);
            }
        } else {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    col[j] = data[j * n + i];
                }
                plan.process(&mut col);
                for j in 0..n {
                    data[j * n + i] = col[j];
                }
            }
        }
    }

    /// Full forward transform (unnormalized).
    pub fn fft(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for axis in 0..self.m {
            self.transform_axis(&mut data, axis, false);
        }
        data
    }

    /// Inverse of [`Grid::fft`], returning the real part.
    pub fn ifft(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        for axis in 0..self.m {
            self.transform_axis(&mut data, axis, true);
        }
        let scale = 1.0 / self.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Wavevector of the Fourier coefficient stored at `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let k0 = idx % self.n;
        let k1 = idx / self.n;
        [self.wavenumber(k0), if self.m == 2 { self.wavenumber(k1) } else { 0.0 }]
    }

    /// Fourier symbol of the backend's first derivative (divided by `i`) at one axis index.
    pub fn effective_wavenumber(&self, k: usize) -> f64 {
        match self.backend {
            Backend::Spectral => self.derivative_wavenumber(k),
            Backend::FiniteDifference => {
                (2.0 * PI * k as f64 / self.n as f64).sin() / self.spacing()
            }
        }
    }

    /// `|q_eff|^2` of the discrete Laplacian `sum_a D_a D_a` at coefficient `idx`.
    pub fn laplacian_symbol(&self, idx: usize) -> f64 {
        let k0 = idx % self.n;
        let k1 = idx / self.n;
        let mut s = self.effective_wavenumber(k0).powi(2);
        if self.m == 2 {
            s += self.effective_wavenumber(k1).powi(2);
        }
        s
    }

    /// Multiply the spectrum of `f` by a real symbol of the wavevector.
    pub fn fourier_multiply(&self, f: &[f64], symbol: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut data = self.fft(f);
        for (idx, c) in data.iter_mut().enumerate() {
            *c *= symbol(self.wavevector(idx));
        }
        self.ifft(data)
    }

    /// Kernel basis of the discrete gradient: constants and checkerboards.
    fn kernel_sign(&self, idx: usize, which: usize) -> f64 {
        let i = idx % self.n;
        let j = idx / self.n;
        let si = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sj = if j % 2 == 0 { 1.0 } else { -1.0 };
        match which {
            0 => 1.0,
            1 => si,
            2 => sj,
            _ => si * sj,
        }
    }

    fn kernel_dim(&self) -> usize {
        1 << self.m
    }

    /// Components of `f` along the normalized kernel basis (mean first).
    pub fn kernel_components(&self, f: &[f64]) -> Vec<f64> {
        let len = f.len() as f64;
        (0..self.kernel_dim())
            .map(|w| {
                f.iter()
                    .enumerate()
                    .map(|(idx, v)| v * self.kernel_sign(idx, w))
                    .sum::<f64>()
                    / len
            })
            .collect()
    }

    /// Remove the mean and checkerboard components, in place.
    pub fn project_out_kernel(&self, f: &mut [f64]) {
        let comps = self.kernel_components(f);
        for (idx, v) in f.iter_mut().enumerate() {
            for (w, c) in comps.iter().enumerate() {
                *v -= c * self.kernel_sign(idx, w);
            }
        }
    }

    pub fn remove_mean(&self, f: &mut [f64]) {
        let m = self.mean(f);
        f.iter_mut().for_each(|v| *v -= m);
    }

    /// Validate a grid function against this grid.
    pub fn validate(&self, f: &[f64]) -> Result<()> {
        self.check_len(f)?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::invalid("grid function contains non-finite values"));
        }
        Ok(())
    }
}
