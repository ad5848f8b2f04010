//! Truncated power series in the defining function `x` with tensor-field
//! coefficients.
//!
//! A [`JetSeries`] stores coefficients for the orders `lo ..= hi` of a
//! (possibly Laurent) series. Everything below `lo` is structurally zero;
//! everything above `hi` is unknown, unless the series is marked `exact`
//! (a polynomial known in full). Arithmetic propagates the window of
//! validity honestly: a product never reads beyond what its operands
//! actually determine, and results carry the minimal window.
//!
//! Negative orders exist because normal-form curvature formulas divide by
//! `x` before cancellations make the assembled quantity regular again;
//! [`JetSeries::regularize`] performs the final tolerance-checked trim.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geometry::payload::{Block, FieldR2Full, FieldR3A, FieldR3S, FieldR4Riem};
use crate::tensor::{Backend, SymTensorField};
use crate::Result;

/// Coefficient payload of a jet: cloneable field with linear structure.
pub trait Coeff: Clone {
    fn backend(&self) -> Backend;
    fn zeros_like(&self) -> Self;
    /// `self += s * other`.
    fn axpy_from(&mut self, s: f64, other: &Self);
    fn scale_mut(&mut self, s: f64);
    fn max_abs(&self) -> f64;
}

impl Coeff for SymTensorField {
    fn backend(&self) -> Backend {
        SymTensorField::backend(self)
    }
    fn zeros_like(&self) -> Self {
        SymTensorField::zeros(self.backend(), self.rank())
    }
    fn axpy_from(&mut self, s: f64, other: &Self) {
        SymTensorField::axpy(self, s, other).expect("axpy shape mismatch");
    }
    fn scale_mut(&mut self, s: f64) {
        for v in self.data_mut().iter_mut() {
            *v *= s;
        }
    }
    fn max_abs(&self) -> f64 {
        SymTensorField::max_abs(self)
    }
}

macro_rules! impl_coeff_block {
    ($t:ty) => {
        impl Coeff for $t {
            fn backend(&self) -> Backend {
                self.0.backend()
            }
            fn zeros_like(&self) -> Self {
                Self(Block::zeros(self.0.backend(), self.0.comps()))
            }
            fn axpy_from(&mut self, s: f64, other: &Self) {
                self.0.axpy(s, &other.0);
            }
            fn scale_mut(&mut self, s: f64) {
                self.0.scale_mut(s);
            }
            fn max_abs(&self) -> f64 {
                self.0.max_abs()
            }
        }
    };
}

impl_coeff_block!(FieldR2Full);
impl_coeff_block!(FieldR3S);
impl_coeff_block!(FieldR3A);
impl_coeff_block!(FieldR4Riem);

/// Coefficient lookup result.
pub enum CoeffAt<'a, P> {
    /// Below the leading order: structurally zero.
    Zero,
    Known(&'a P),
    /// Above the window of a non-exact series.
    Unknown,
}

/// Truncated (Laurent) power series with coefficients of type `P`.
#[derive(Clone, Debug)]
pub struct JetSeries<P: Coeff> {
    lo: i32,
    coeffs: Vec<P>,
    exact: bool,
}

impl<P: Coeff> JetSeries<P> {
    /// Series with given leading order. Not exact: orders above the last
    /// coefficient are treated as unknown.
    pub fn new(lo: i32, coeffs: Vec<P>) -> Self {
        assert!(!coeffs.is_empty());
        JetSeries {
            lo,
            coeffs,
            exact: false,
        }
    }

    /// Polynomial: all orders above the stored window are exactly zero.
    pub fn polynomial(lo: i32, coeffs: Vec<P>) -> Self {
        assert!(!coeffs.is_empty());
        JetSeries {
            lo,
            coeffs,
            exact: true,
        }
    }

    /// Identically zero polynomial shaped like `proto`.
    pub fn zero_poly(proto: &P) -> Self {
        JetSeries::polynomial(0, vec![proto.zeros_like()])
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Highest determined order.
    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub(crate) fn set_exact(&mut self, exact: bool) {
        self.exact = exact;
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn backend(&self) -> Backend {
        self.coeffs[0].backend()
    }

    pub fn coeffs(&self) -> &[P] {
        &self.coeffs
    }

    pub fn get(&self, order: i32) -> CoeffAt<'_, P> {
        if order < self.lo {
            CoeffAt::Zero
        } else if order <= self.hi() {
            CoeffAt::Known(&self.coeffs[(order - self.lo) as usize])
        } else if self.exact {
            CoeffAt::Zero
        } else {
            CoeffAt::Unknown
        }
    }

    /// Coefficient at `order`, or a zero field when it is structurally
    /// zero. Errors if the order lies beyond the determined window.
    pub fn coeff(&self, order: i32) -> Result<P> {
        match self.get(order) {
            CoeffAt::Known(c) => Ok(c.clone()),
            CoeffAt::Zero => Ok(self.coeffs[0].zeros_like()),
            CoeffAt::Unknown => Err(CoreError::WindowExhausted {
                lo: order,
                hi: self.hi(),
            }),
        }
    }

    /// Largest coefficient magnitude over the stored window.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// Drop leading coefficients that are bitwise zero, keeping at least
    /// one. Exactness is preserved.
    pub fn trim_leading_exact_zeros(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs[0].max_abs() == 0.0 {
            self.coeffs.remove(0);
            self.lo += 1;
        }
        self
    }

    /// Restrict the window to orders `<= hi` (no-op if already inside).
    pub fn truncated(mut self, hi: i32) -> Result<Self> {
        if hi < self.lo {
            return Err(CoreError::WindowExhausted { lo: self.lo, hi });
        }
        if hi < self.hi() {
            self.coeffs.truncate((hi - self.lo + 1) as usize);
            self.exact = false;
        }
        Ok(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            c.scale_mut(s);
        }
        out
    }

    /// Multiply by the monomial `x^k` (exact shift, `k` may be negative).
    pub fn shift_mul_xk(&self, k: i32) -> Self {
        let mut out = self.clone();
        out.lo += k;
        out
    }

    /// Termwise derivative in `x`.
    pub fn diff_x(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (idx, c) in self.coeffs.iter().enumerate() {
            let order = self.lo + idx as i32;
            let mut d = c.clone();
            d.scale_mut(order as f64);
            coeffs.push(d);
        }
        JetSeries {
            lo: self.lo - 1,
            coeffs,
            exact: self.exact,
        }
        .trim_leading_exact_zeros()
    }

    /// Exact division by `x^k`: coefficients at orders below `k` must be
    /// negligible against `tol = 1e-9 * max coefficient norm` (or the
    /// explicit scale). They are zeroed; the rest shifts down.
    pub fn shift_div_xk(&self, k: i32, scale: Option<f64>) -> Result<Self> {
        let tol = 1e-9 * scale.unwrap_or_else(|| self.max_abs()).max(1e-300);
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let order = out.lo + idx as i32;
            if order < k {
                let norm = c.max_abs();
                if norm > tol {
                    return Err(CoreError::InexactDivision {
                        power: k,
                        order,
                        norm,
                        tol,
                    });
                }
                *c = c.zeros_like();
            }
        }
        out.lo -= k;
        Ok(out.trim_leading_exact_zeros())
    }

    /// Tolerance-checked trim of negative orders after an assembly whose
    /// mathematical value is regular at `x = 0`.
    pub fn regularize(&self, scale: f64) -> Result<Self> {
        let tol = 1e-9 * scale.max(1e-300);
        let mut out = self.clone();
        while out.lo < 0 {
            let norm = out.coeffs[0].max_abs();
            if norm > tol {
                return Err(CoreError::InexactDivision {
                    power: -out.lo,
                    order: out.lo,
                    norm,
                    tol,
                });
            }
            if out.coeffs.len() == 1 {
                out.coeffs[0] = out.coeffs[0].zeros_like();
                out.lo = 0;
                break;
            }
            out.coeffs.remove(0);
            out.lo += 1;
        }
        Ok(out)
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: f64) -> P {
        let mut acc = self.coeffs.last().expect("nonempty").clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc.scale_mut(x);
            acc.axpy_from(1.0, c);
        }
        let mut pre = 1.0;
        let mut k = self.lo;
        while k > 0 {
            pre *= x;
            k -= 1;
        }
        while k < 0 {
            pre /= x;
            k += 1;
        }
        acc.scale_mut(pre);
        acc
    }

    /// Linear combination `self + s * other` on the common window.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        let lo = self.lo.min(other.lo);
        let hi = match (self.exact, other.exact) {
            (true, true) => self.hi().max(other.hi()),
            (true, false) => other.hi(),
            (false, true) => self.hi(),
            (false, false) => self.hi().min(other.hi()),
        };
        if hi < lo {
            return Err(CoreError::WindowExhausted { lo, hi });
        }
        let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
        for order in lo..=hi {
            let mut c = self.coeffs[0].zeros_like();
            if let CoeffAt::Known(a) = self.get(order) {
                c.axpy_from(1.0, a);
            }
            if let CoeffAt::Known(b) = other.get(order) {
                c.axpy_from(s, b);
            }
            coeffs.push(c);
        }
        Ok(JetSeries {
            lo,
            coeffs,
            exact: self.exact && other.exact,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }
}

/// Cauchy product of two series through a bilinear contraction kernel.
///
/// `make` builds a zero coefficient of the result type; `acc` adds the
/// contraction of one coefficient pair into the accumulator. The result
/// window is the honest minimum: order `k` is kept only when every pair
/// `(p, q)` with `p + q = k` is determined by the operands.
pub fn combine<A: Coeff, B: Coeff, C: Coeff>(
    a: &JetSeries<A>,
    b: &JetSeries<B>,
    make: impl Fn() -> C,
    acc: impl Fn(&A, &B, &mut C),
) -> Result<JetSeries<C>> {
    let lo = a.lo + b.lo;
    let hi = match (a.exact, b.exact) {
        (true, true) => a.hi() + b.hi(),
        (true, false) => a.lo + b.hi(),
        (false, true) => a.hi() + b.lo,
        (false, false) => (a.hi() + b.lo).min(a.lo + b.hi()),
    };
    if hi < lo {
        return Err(CoreError::WindowExhausted { lo, hi });
    }
    let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
    for k in lo..=hi {
        let mut c = make();
        let p_min = a.lo.max(k - b.hi());
        let p_max = a.hi().min(k - b.lo);
        for p in p_min..=p_max {
            if let (CoeffAt::Known(ap), CoeffAt::Known(bq)) = (a.get(p), b.get(k - p)) {
                acc(ap, bq, &mut c);
            }
        }
        coeffs.push(c);
    }
    Ok(JetSeries {
        lo,
        coeffs,
        exact: a.exact && b.exact,
    })
}

/// Windowed sum of several series (all with the same payload type).
pub fn sum_series<P: Coeff>(terms: &[&JetSeries<P>]) -> Result<JetSeries<P>> {
    let mut it = terms.iter();
    let first = it.next().expect("sum of at least one term");
    let mut acc = (*first).clone();
    for t in it {
        acc = acc.add(t)?;
    }
    Ok(acc)
}

pub mod ops;

#[cfg(test)]
mod tests;
