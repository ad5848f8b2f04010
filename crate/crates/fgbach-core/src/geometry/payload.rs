//! Internal higher-rank field payloads used by the curvature machinery.
//!
//! These are not part of the public tensor algebra (which stops at
//! symmetric rank 2); they carry Christoffel symbols, Riemann blocks and
//! covariant-derivative intermediates. On the homogeneous backend each
//! payload is one `f64`: the multiple of the invariant model pattern
//! (`h0` for one-free-index-pair shapes, `h0 (x) h0` antisymmetrized for
//! Riemann shapes), or structurally zero for odd ranks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fmath;
use crate::tensor::{sym_idx, Backend};
use crate::Result;

/// Packed index of the antisymmetric pair `(i, j)`, `i < j`.
#[inline]
pub fn asym_idx(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Number of antisymmetric pairs in dimension `d`.
#[inline]
pub fn asym_len(d: usize) -> usize {
    d * (d - 1) / 2
}

/// Component-major storage shared by the payload wrappers.
#[derive(Clone, Debug)]
pub struct Block {
    backend: Backend,
    comps: usize,
    data: Vec<f64>,
}

impl Block {
    pub fn zeros(backend: Backend, grid_comps: usize) -> Self {
        let comps = if backend.is_grid() { grid_comps } else { 1 };
        Block {
            backend,
            comps,
            data: vec![0.0; comps * backend.points()],
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    #[inline]
    pub fn at(&self, c: usize, p: usize) -> f64 {
        self.data[c * self.backend.points() + p]
    }

    #[inline]
    pub fn set(&mut self, c: usize, p: usize, v: f64) {
        self.data[c * self.backend.points() + p] = v;
    }

    #[inline]
    pub fn add(&mut self, c: usize, p: usize, v: f64) {
        self.data[c * self.backend.points() + p] += v;
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let pts = self.backend.points();
        &self.data[c * pts..(c + 1) * pts]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn homog_value(&self) -> f64 {
        debug_assert!(!self.backend.is_grid());
        self.data[0]
    }

    pub fn set_homog(&mut self, v: f64) {
        debug_assert!(!self.backend.is_grid());
        self.data[0] = v;
    }

    pub fn axpy(&mut self, s: f64, other: &Block) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale_mut(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(fmath::abs(*v)))
    }

    pub fn check_shape(&self, other: &Block, what: &str) -> Result<()> {
        if self.backend != other.backend || self.comps != other.comps {
            return Err(CoreError::BackendMismatch(String::from(what)));
        }
        Ok(())
    }
}

/// General (not necessarily symmetric) two-index spatial field `t_{ij}`.
/// Homogeneous representation: multiple of the model metric.
#[derive(Clone, Debug)]
pub struct FieldR2Full(pub Block);

impl FieldR2Full {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let d = backend.dim();
        FieldR2Full(Block::zeros(backend, d * d))
    }

    #[inline]
    pub fn at(&self, p: usize, i: usize, j: usize) -> f64 {
        let d = self.0.backend().dim();
        self.0.at(i * d + j, p)
    }

    #[inline]
    pub fn add(&mut self, p: usize, i: usize, j: usize, v: f64) {
        let d = self.0.backend().dim();
        self.0.add(i * d + j, p, v);
    }
}

/// Three-index spatial field with a symmetric trailing pair: `t_{m(jk)}`.
/// Used for Christoffel symbols (upper `m`) and first covariant
/// derivatives of symmetric 2-tensors (derivative index first).
/// Homogeneous representation: structurally zero.
#[derive(Clone, Debug)]
pub struct FieldR3S(pub Block);

impl FieldR3S {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let d = backend.dim();
        FieldR3S(Block::zeros(backend, d * (d * (d + 1) / 2)))
    }

    #[inline]
    fn cidx(&self, m: usize, j: usize, k: usize) -> usize {
        let d = self.0.backend().dim();
        m * (d * (d + 1) / 2) + sym_idx(d, j, k)
    }

    #[inline]
    pub fn at(&self, p: usize, m: usize, j: usize, k: usize) -> f64 {
        self.0.at(self.cidx(m, j, k), p)
    }

    #[inline]
    pub fn set(&mut self, p: usize, m: usize, j: usize, k: usize, v: f64) {
        let c = self.cidx(m, j, k);
        self.0.set(c, p, v);
    }

    #[inline]
    pub fn add(&mut self, p: usize, m: usize, j: usize, k: usize, v: f64) {
        let c = self.cidx(m, j, k);
        self.0.add(c, p, v);
    }
}

/// Three-index spatial field antisymmetric in the trailing pair:
/// `t_{m[jk]}`. Used for the mixed Riemann block. Homogeneous: zero.
#[derive(Clone, Debug)]
pub struct FieldR3A(pub Block);

impl FieldR3A {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let d = backend.dim();
        FieldR3A(Block::zeros(backend, d * asym_len(d)))
    }

    #[inline]
    pub fn at(&self, p: usize, m: usize, j: usize, k: usize) -> f64 {
        if j == k {
            return 0.0;
        }
        let d = self.0.backend().dim();
        let (a, sign) = if j < k {
            (asym_idx(d, j, k), 1.0)
        } else {
            (asym_idx(d, k, j), -1.0)
        };
        sign * self.0.at(m * asym_len(d) + a, p)
    }

    #[inline]
    pub fn add(&mut self, p: usize, m: usize, j: usize, k: usize, v: f64) {
        debug_assert!(j != k);
        let d = self.0.backend().dim();
        let (a, sign) = if j < k {
            (asym_idx(d, j, k), 1.0)
        } else {
            (asym_idx(d, k, j), -1.0)
        };
        self.0.add(m * asym_len(d) + a, p, sign * v);
    }
}

/// Four-index field with Riemann symmetries: antisymmetric pairs
/// `[ij]`, `[kl]`, symmetric under pair swap. Stored as a packed
/// symmetric matrix over antisymmetric pair indices.
/// Homogeneous representation: multiple of
/// `h0_{ik} h0_{jl} - h0_{il} h0_{jk}`.
#[derive(Clone, Debug)]
pub struct FieldR4Riem(pub Block);

impl FieldR4Riem {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let a = asym_len(backend.dim());
        FieldR4Riem(Block::zeros(backend, a * (a + 1) / 2))
    }

    #[inline]
    pub fn at(&self, p: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let d = self.0.backend().dim();
        let a = asym_len(d);
        let (p1, s1) = if i < j {
            (asym_idx(d, i, j), 1.0)
        } else {
            (asym_idx(d, j, i), -1.0)
        };
        let (p2, s2) = if k < l {
            (asym_idx(d, k, l), 1.0)
        } else {
            (asym_idx(d, l, k), -1.0)
        };
        s1 * s2 * self.0.at(sym_idx(a, p1, p2), p)
    }

    /// Set the canonical component `i<j`, `k<l`, `(ij) <= (kl)`.
    #[inline]
    pub fn set_canonical(&mut self, p: usize, pair1: usize, pair2: usize, v: f64) {
        let d = self.0.backend().dim();
        let a = asym_len(d);
        self.0.set(sym_idx(a, pair1, pair2), p, v);
    }
}

/// Enumerate antisymmetric pairs `(i, j)`, `i < j`, in packed order.
pub fn asym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(asym_len(d));
    for i in 0..d {
        for j in (i + 1)..d {
            v.push((i, j));
        }
    }
    v
}

/// Enumerate symmetric pairs `(i, j)`, `i <= j`, in packed order.
pub fn sym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            v.push((i, j));
        }
    }
    v
}
