//! Fourier-spectral differentiation on the periodic grid.
//!
//! For an even number of collocation points `n` on `[0, 2*pi)` the
//! differentiation matrix has the closed form
//! `D[i][j] = (1/2) (-1)^(i-j) cot((i-j) pi / n)` off the diagonal,
//! which differentiates trigonometric polynomials with modes below the
//! Nyquist frequency exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;
use crate::tensor::Backend;

/// Dense spectral differentiation matrix for `n` points (row-major).
pub fn diff_matrix(n: usize) -> Vec<f64> {
    debug_assert!(n % 2 == 0);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let k = i as i64 - j as i64;
            let ang = core::f64::consts::PI * k as f64 / n as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            m[i * n + j] = 0.5 * sign * fmath::cos(ang) / fmath::sin(ang);
        }
    }
    m
}

/// Partial derivative of one stored component along `axis`.
///
/// `data` holds one value per grid point in the layout of
/// [`Backend::coords`]; the result has the same layout. On the homogeneous
/// backend every admissible field is constant, so the derivative is zero.
pub fn partial(backend: Backend, data: &[f64], axis: usize, dmat: &[f64]) -> Vec<f64> {
    if !backend.is_grid() {
        return vec![0.0; data.len()];
    }
    let n = backend.axis_points();
    let d = backend.dim();
    let pts = backend.points();
    debug_assert_eq!(data.len(), pts);
    debug_assert!(axis < d);
    let stride = n.pow(axis as u32);
    let block = stride * n;
    let mut out = vec![0.0; pts];
    // walk every 1-D line along `axis`
    let lines = pts / n;
    for line in 0..lines {
        let base = (line / stride) * block + (line % stride);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += dmat[i * n + j] * data[base + j * stride];
            }
            out[base + i * stride] = s;
        }
    }
    out
}

/// Cached differentiation matrix bound to a backend.
#[derive(Clone, Debug)]
pub struct Differentiator {
    backend: Backend,
    dmat: Vec<f64>,
}

impl Differentiator {
    pub fn new(backend: Backend) -> Self {
        let dmat = if backend.is_grid() {
            diff_matrix(backend.axis_points())
        } else {
            Vec::new()
        };
        Differentiator { backend, dmat }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn partial(&self, data: &[f64], axis: usize) -> Vec<f64> {
        partial(self.backend, data, axis, &self.dmat)
    }
}

/// Naive complex DFT over the full grid (per-axis transforms).
///
/// Forward uses `e^{-i m y}`; modes along each axis are indexed
/// `0..n` with frequency `m` for `m <= n/2` and `m - n` above.
#[derive(Clone, Debug)]
pub struct Dft {
    backend: Backend,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
}

impl Dft {
    pub fn new(backend: Backend) -> Self {
        let n = backend.axis_points();
        let mut cos_t = vec![0.0; n * n];
        let mut sin_t = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                let ang = 2.0 * core::f64::consts::PI * (k * j % n) as f64 / n as f64;
                cos_t[k * n + j] = fmath::cos(ang);
                sin_t[k * n + j] = fmath::sin(ang);
            }
        }
        Dft {
            backend,
            cos_t,
            sin_t,
        }
    }

    /// Axis frequency of mode index `m`.
    pub fn freq(&self, m: usize) -> f64 {
        let n = self.backend.axis_points();
        if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        }
    }

    fn transform_axis(&self, re: &mut [f64], im: &mut [f64], axis: usize, inverse: bool) {
        let n = self.backend.axis_points();
        let pts = self.backend.points();
        let stride = n.pow(axis as u32);
        let block = stride * n;
        let lines = pts / n;
        let norm = if inverse { 1.0 } else { 1.0 / n as f64 };
        let mut tr = vec![0.0; n];
        let mut ti = vec![0.0; n];
        for line in 0..lines {
            let base = (line / stride) * block + (line % stride);
            for k in 0..n {
                let mut sr = 0.0;
                let mut si = 0.0;
                for j in 0..n {
                    let c = self.cos_t[k * n + j];
                    // forward: e^{-i..} ; inverse: e^{+i..}
                    let s = if inverse {
                        self.sin_t[k * n + j]
                    } else {
                        -self.sin_t[k * n + j]
                    };
                    let xr = re[base + j * stride];
                    let xi = im[base + j * stride];
                    sr += c * xr - s * xi;
                    si += c * xi + s * xr;
                }
                tr[k] = sr * norm;
                ti[k] = si * norm;
            }
            for k in 0..n {
                re[base + k * stride] = tr[k];
                im[base + k * stride] = ti[k];
            }
        }
    }

    /// Forward transform of a real scalar array; returns (re, im) modes.
    pub fn forward(&self, data: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut re = data.to_vec();
        let mut im = vec![0.0; data.len()];
        for axis in 0..self.backend.dim() {
            self.transform_axis(&mut re, &mut im, axis, false);
        }
        (re, im)
    }

    /// Inverse transform; returns the real part (input assumed conjugate
    /// symmetric).
    pub fn inverse(&self, re: &[f64], im: &[f64]) -> Vec<f64> {
        let mut r = re.to_vec();
        let mut i = im.to_vec();
        for axis in 0..self.backend.dim() {
            self.transform_axis(&mut r, &mut i, axis, true);
        }
        r
    }

    /// Frequency vector of the grid mode with linear index `p`.
    pub fn freqs(&self, p: usize) -> Vec<f64> {
        let d = self.backend.dim();
        let n = self.backend.axis_points();
        let mut f = vec![0.0; d];
        let mut q = p;
        for fi in f.iter_mut() {
            *fi = self.freq(q % n);
            q /= n;
        }
        f
    }
}
