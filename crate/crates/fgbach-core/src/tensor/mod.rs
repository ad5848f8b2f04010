//! Pointwise symmetric tensor algebra over a boundary chart.
//!
//! Fields are rank 0, 1 or 2 (symmetric) and live on one of two backends:
//!
//! * [`Backend::PeriodicGrid`] — a flat-coordinate torus chart with `n`
//!   collocation points per axis and period `2*pi`; components are stored
//!   per grid point, rank 2 packed as the `d(d+1)/2` upper triangle.
//! * [`Backend::Homogeneous`] — a constant-curvature model on which every
//!   admissible field is a constant multiple of the model metric (rank 2),
//!   a constant (rank 0), or zero (rank 1). One `f64` per field.
//!
//! Fields are immutable after construction; every operation allocates its
//! result. All fields entering one operation must share the backend.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fmath;
use crate::Result;

/// Chart backend descriptor. Cheap to copy and compare; the tag carried by
/// every field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Backend {
    /// Flat periodic chart `[0, 2*pi)^d` with `n` points per axis (`n` even,
    /// `n >= 8`), spectral differentiation.
    PeriodicGrid { dim: u8, n: u16 },
    /// Constant-curvature homogeneous model; `kappa` is the sectional
    /// curvature of the boundary metric `h0` it represents.
    Homogeneous { dim: u8, kappa: f64 },
}

impl Backend {
    pub fn grid(dim: usize, n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(CoreError::InvalidSpec {
                field: String::from("grid.n"),
                message: String::from("points per axis must be even and >= 8"),
            });
        }
        if !(2..=6).contains(&dim) {
            return Err(CoreError::InvalidSpec {
                field: String::from("grid.dim"),
                message: String::from("boundary dimension must be in 2..=6"),
            });
        }
        Ok(Backend::PeriodicGrid {
            dim: dim as u8,
            n: n as u16,
        })
    }

    pub fn homogeneous(dim: usize, kappa: f64) -> Self {
        Backend::Homogeneous {
            dim: dim as u8,
            kappa,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Backend::PeriodicGrid { dim, .. } => *dim as usize,
            Backend::Homogeneous { dim, .. } => *dim as usize,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Backend::PeriodicGrid { .. })
    }

    /// Sectional curvature of the model (homogeneous backends only).
    pub fn model_curvature(&self) -> f64 {
        match self {
            Backend::PeriodicGrid { .. } => 0.0,
            Backend::Homogeneous { kappa, .. } => *kappa,
        }
    }

    /// Number of stored points (1 on the homogeneous backend).
    pub fn points(&self) -> usize {
        match self {
            Backend::PeriodicGrid { dim, n } => (*n as usize).pow(*dim as u32),
            Backend::Homogeneous { .. } => 1,
        }
    }

    pub fn axis_points(&self) -> usize {
        match self {
            Backend::PeriodicGrid { n, .. } => *n as usize,
            Backend::Homogeneous { .. } => 1,
        }
    }

    /// Stored components per point for a given rank.
    pub fn comps(&self, rank: Rank) -> usize {
        let d = self.dim();
        match self {
            Backend::PeriodicGrid { .. } => match rank {
                Rank::Scalar => 1,
                Rank::Vector => d,
                Rank::Sym2 => d * (d + 1) / 2,
            },
            Backend::Homogeneous { .. } => 1,
        }
    }

    /// Coordinates of grid point `p` (grid backends).
    pub fn coords(&self, p: usize) -> Vec<f64> {
        let d = self.dim();
        let n = self.axis_points();
        let step = 2.0 * core::f64::consts::PI / n as f64;
        let mut c = vec![0.0; d];
        let mut q = p;
        for ci in c.iter_mut() {
            *ci = (q % n) as f64 * step;
            q /= n;
        }
        c
    }

    pub fn check_same(&self, other: &Backend, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::BackendMismatch(String::from(what)))
        }
    }
}

/// Tensor rank of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    Sym2,
}

/// Packed index of the symmetric pair `(i, j)`, `i <= j`, in dimension `d`.
#[inline]
pub fn sym_idx(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

/// A rank-0/1/2 symmetric tensor field over a boundary chart.
///
/// Storage is component-major: `data[c * points + p]`. On the homogeneous
/// backend a field is one `f64`: the constant (rank 0), the multiple of the
/// model metric (rank 2), or necessarily `0.0` (rank 1).
#[derive(Clone, Debug)]
pub struct SymTensorField {
    backend: Backend,
    rank: Rank,
    data: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(backend: Backend, rank: Rank) -> Self {
        let len = backend.comps(rank) * backend.points();
        SymTensorField {
            backend,
            rank,
            data: vec![0.0; len],
        }
    }

    pub fn from_raw(backend: Backend, rank: Rank, data: Vec<f64>) -> Result<Self> {
        let expect = backend.comps(rank) * backend.points();
        if data.len() != expect {
            return Err(CoreError::RankMismatch(String::from(
                "raw data length does not match backend layout",
            )));
        }
        Ok(SymTensorField {
            backend,
            rank,
            data,
        })
    }

    /// Constant scalar field.
    pub fn constant(backend: Backend, value: f64) -> Self {
        let mut f = Self::zeros(backend, Rank::Scalar);
        for v in f.data.iter_mut() {
            *v = value;
        }
        f
    }

    /// Homogeneous-backend field: `value` times the model metric (rank 2),
    /// or the constant `value` (rank 0).
    pub fn homog(backend: Backend, rank: Rank, value: f64) -> Result<Self> {
        if backend.is_grid() {
            return Err(CoreError::BackendMismatch(String::from(
                "homog constructor on grid backend",
            )));
        }
        if rank == Rank::Vector && value != 0.0 {
            return Err(CoreError::UnsupportedHomogeneous(String::from(
                "nonzero invariant vector field",
            )));
        }
        Ok(SymTensorField {
            backend,
            rank,
            data: vec![value],
        })
    }

    /// Scalar grid field sampled from a closure of the chart coordinates.
    pub fn scalar_from_fn(backend: Backend, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = Self::zeros(backend, Rank::Scalar);
        for p in 0..backend.points() {
            out.data[p] = f(&backend.coords(p));
        }
        out
    }

    /// Symmetric rank-2 grid field sampled from a closure returning the
    /// `(i, j)` component at the given coordinates.
    pub fn sym2_from_fn(backend: Backend, f: impl Fn(&[f64], usize, usize) -> f64) -> Self {
        let d = backend.dim();
        let pts = backend.points();
        let mut out = Self::zeros(backend, Rank::Sym2);
        for p in 0..pts {
            let y = backend.coords(p);
            for i in 0..d {
                for j in i..d {
                    out.data[sym_idx(d, i, j) * pts + p] = f(&y, i, j);
                }
            }
        }
        out
    }

    pub fn vector_from_fn(backend: Backend, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let d = backend.dim();
        let pts = backend.points();
        let mut out = Self::zeros(backend, Rank::Vector);
        for p in 0..pts {
            let y = backend.coords(p);
            for (i, chunk) in out.data.chunks_mut(pts).enumerate().take(d) {
                chunk[p] = f(&y, i);
            }
        }
        out
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn points(&self) -> usize {
        self.backend.points()
    }

    /// Homogeneous coefficient (the single stored value).
    pub fn homog_value(&self) -> f64 {
        debug_assert!(!self.backend.is_grid());
        self.data[0]
    }

    #[inline]
    pub fn scalar_at(&self, p: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::Scalar);
        self.data[p]
    }

    #[inline]
    pub fn vec_at(&self, p: usize, i: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::Vector);
        self.data[i * self.points() + p]
    }

    #[inline]
    pub fn sym_at(&self, p: usize, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::Sym2);
        let d = self.backend.dim();
        self.data[sym_idx(d, i, j) * self.points() + p]
    }

    /// Sup norm of the raw component data.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(fmath::abs(*v)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.backend.check_same(&other.backend, "axpy")?;
        if self.rank != other.rank {
            return Err(CoreError::RankMismatch(String::from("axpy")));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
        Ok(())
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.backend.check_same(&other.backend, "pointwise op")?;
        if self.rank != other.rank {
            return Err(CoreError::RankMismatch(String::from("pointwise op")));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a = f(*a, *b);
        }
        Ok(out)
    }

    /// Pointwise product with a scalar field (any rank times rank 0).
    pub fn mul_scalar_field(&self, s: &SymTensorField) -> Result<Self> {
        self.backend.check_same(&s.backend, "scalar multiply")?;
        if s.rank != Rank::Scalar {
            return Err(CoreError::RankMismatch(String::from(
                "multiplier must be a scalar field",
            )));
        }
        let mut out = self.clone();
        let pts = self.points();
        for c in 0..self.backend.comps(self.rank) {
            for p in 0..pts {
                out.data[c * pts + p] *= s.data[p];
            }
        }
        Ok(out)
    }
}

/// A pointwise positive-definite rank-2 field with its cached inverse.
///
/// Values are frozen at construction; the inverse satisfies
/// `h * h^-1 = id` to machine precision componentwise.
#[derive(Clone, Debug)]
pub struct Metric2 {
    field: SymTensorField,
    inverse: SymTensorField,
}

impl Metric2 {
    pub fn new(field: SymTensorField) -> Result<Self> {
        if field.rank() != Rank::Sym2 {
            return Err(CoreError::RankMismatch(String::from(
                "metric must be rank 2",
            )));
        }
        let inverse = invert_sym2(&field)?;
        Ok(Metric2 { field, inverse })
    }

    /// Homogeneous model metric `h0` itself (coefficient 1).
    pub fn model(backend: Backend) -> Result<Self> {
        let field = SymTensorField::homog(backend, Rank::Sym2, 1.0)?;
        Metric2::new(field)
    }

    pub fn backend(&self) -> Backend {
        self.field.backend()
    }

    pub fn field(&self) -> &SymTensorField {
        &self.field
    }

    /// Inverse components. On the grid this is the packed pointwise matrix
    /// inverse; on the homogeneous backend the reciprocal coefficient.
    pub fn inverse(&self) -> &SymTensorField {
        &self.inverse
    }
}

/// Pointwise inverse of a positive-definite packed symmetric field.
pub fn invert_sym2(field: &SymTensorField) -> Result<SymTensorField> {
    if field.rank() != Rank::Sym2 {
        return Err(CoreError::RankMismatch(String::from("invert_sym2")));
    }
    let backend = field.backend();
    if !backend.is_grid() {
        let v = field.homog_value();
        if v <= 0.0 {
            return Err(CoreError::NotPositiveDefinite { point: 0 });
        }
        return SymTensorField::homog(backend, Rank::Sym2, 1.0 / v);
    }
    let d = backend.dim();
    let pts = backend.points();
    let mut out = SymTensorField::zeros(backend, Rank::Sym2);
    let mut m = vec![0.0; d * d];
    let mut inv = vec![0.0; d * d];
    for p in 0..pts {
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = field.sym_at(p, i, j);
            }
        }
        if !cholesky_posdef(&m, d) {
            return Err(CoreError::NotPositiveDefinite { point: p });
        }
        invert_dense(&m, &mut inv, d).ok_or(CoreError::NotPositiveDefinite { point: p })?;
        for i in 0..d {
            for j in i..d {
                out.data[sym_idx(d, i, j) * pts + p] = 0.5 * (inv[i * d + j] + inv[j * d + i]);
            }
        }
    }
    Ok(out)
}

/// Cholesky feasibility check (positive definiteness).
fn cholesky_posdef(m: &[f64], d: usize) -> bool {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return false;
                }
                l[i * d + i] = fmath::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    true
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
pub(crate) fn invert_dense(m: &[f64], out: &mut [f64], d: usize) -> Option<()> {
    let mut a = m.to_vec();
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = if i == j { 1.0 } else { 0.0 };
        }
    }
    for col in 0..d {
        let mut piv = col;
        let mut best = fmath::abs(a[col * d + col]);
        for r in (col + 1)..d {
            let v = fmath::abs(a[r * d + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..d {
                a.swap(piv * d + c, col * d + c);
                out.swap(piv * d + c, col * d + c);
            }
        }
        let diag = a[col * d + col];
        for c in 0..d {
            a[col * d + c] /= diag;
            out[col * d + c] /= diag;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a[r * d + col];
            if f != 0.0 {
                for c in 0..d {
                    a[r * d + c] -= f * a[col * d + c];
                    out[r * d + c] -= f * out[col * d + c];
                }
            }
        }
    }
    Some(())
}

/// `h^{ij} t_{ij}` pointwise.
pub fn trace(t: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    t.backend().check_same(&h.backend(), "trace")?;
    if t.rank() != Rank::Sym2 {
        return Err(CoreError::RankMismatch(String::from("trace")));
    }
    let backend = t.backend();
    if !backend.is_grid() {
        let v = t.homog_value() * h.inverse().homog_value() * backend.dim() as f64;
        return SymTensorField::homog(backend, Rank::Scalar, v);
    }
    let d = backend.dim();
    let pts = backend.points();
    let hinv = h.inverse();
    let mut out = SymTensorField::zeros(backend, Rank::Scalar);
    for p in 0..pts {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += hinv.sym_at(p, i, j) * t.sym_at(p, i, j);
            }
        }
        out.data[p] = s;
    }
    Ok(out)
}

/// `t - (trace(t, h) / d) h`; traces to zero within roundoff.
pub fn tracefree(t: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    let tr = trace(t, h)?;
    let d = t.backend().dim() as f64;
    let scaled = h.field().mul_scalar_field(&tr.scale(1.0 / d))?;
    t.sub(&scaled)
}

/// Symmetrized composition `(a . b)_{ij} = sym(a_{ik} h^{kl} b_{lj})`.
pub fn dot(a: &SymTensorField, b: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    a.backend().check_same(&b.backend(), "dot")?;
    a.backend().check_same(&h.backend(), "dot")?;
    if a.rank() != Rank::Sym2 || b.rank() != Rank::Sym2 {
        return Err(CoreError::RankMismatch(String::from("dot")));
    }
    let backend = a.backend();
    if !backend.is_grid() {
        let v = a.homog_value() * h.inverse().homog_value() * b.homog_value();
        return SymTensorField::homog(backend, Rank::Sym2, v);
    }
    let d = backend.dim();
    let pts = backend.points();
    let hinv = h.inverse();
    let mut out = SymTensorField::zeros(backend, Rank::Sym2);
    for p in 0..pts {
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        let hkl = hinv.sym_at(p, k, l);
                        s += 0.5 * hkl * (a.sym_at(p, i, k) * b.sym_at(p, l, j))
                            + 0.5 * hkl * (b.sym_at(p, i, k) * a.sym_at(p, l, j));
                    }
                }
                out.data[sym_idx(d, i, j) * pts + p] = s;
            }
        }
    }
    Ok(out)
}

/// Full contraction `a_{ij} b_{kl} h^{ik} h^{jl}` pointwise.
pub fn inner(a: &SymTensorField, b: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    a.backend().check_same(&b.backend(), "inner")?;
    a.backend().check_same(&h.backend(), "inner")?;
    if a.rank() != Rank::Sym2 || b.rank() != Rank::Sym2 {
        return Err(CoreError::RankMismatch(String::from("inner")));
    }
    let backend = a.backend();
    if !backend.is_grid() {
        let hi = h.inverse().homog_value();
        let v = a.homog_value() * b.homog_value() * hi * hi * backend.dim() as f64;
        return SymTensorField::homog(backend, Rank::Scalar, v);
    }
    let d = backend.dim();
    let pts = backend.points();
    let hinv = h.inverse();
    let mut out = SymTensorField::zeros(backend, Rank::Scalar);
    for p in 0..pts {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        s += a.sym_at(p, i, j)
                            * b.sym_at(p, k, l)
                            * hinv.sym_at(p, i, k)
                            * hinv.sym_at(p, j, l);
                    }
                }
            }
        }
        out.data[p] = s;
    }
    Ok(out)
}

/// `|t|_h^2 = inner(t, t, h)`.
pub fn norm2(t: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    inner(t, t, h)
}

/// Contraction of two rank-1 fields: `h^{ij} v_i w_j`.
pub fn inner_vec(v: &SymTensorField, w: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    v.backend().check_same(&w.backend(), "inner_vec")?;
    if v.rank() != Rank::Vector || w.rank() != Rank::Vector {
        return Err(CoreError::RankMismatch(String::from("inner_vec")));
    }
    let backend = v.backend();
    if !backend.is_grid() {
        return SymTensorField::homog(backend, Rank::Scalar, 0.0);
    }
    let d = backend.dim();
    let pts = backend.points();
    let hinv = h.inverse();
    let mut out = SymTensorField::zeros(backend, Rank::Scalar);
    for p in 0..pts {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += hinv.sym_at(p, i, j) * v.vec_at(p, i) * w.vec_at(p, j);
            }
        }
        out.data[p] = s;
    }
    Ok(out)
}
