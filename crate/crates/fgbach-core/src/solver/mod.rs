//! Order-by-order determination of the radial Taylor coefficients from
//! boundary free data, for the Einstein, Bach (n = 4) and extended-Bach
//! (n >= 5) equation families, with conformal-gauge fixing.
//!
//! Unknown tracefree parts are solved by probing: the equation jet is
//! assembled once with the trial coefficient zero and once with a basis
//! tensor, the scalar multiplier is extracted and cross-checked against
//! its analytic value, and the affine relation is inverted. Trace parts
//! are solved the same way against the gauge equation (or, for the
//! extended-Bach family, against the trace part of the tensor equation,
//! whose multiplier is a pointwise field).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::jet::JetSeries;
use crate::tensor::{
    inner_vec, norm2, trace, tracefree, Backend, Metric2, Rank, SymTensorField,
};
use crate::Result;

mod bach;
mod einstein;
mod extended;
mod pn;
mod spec;

pub use bach::solve_bach4;
pub use einstein::solve_einstein;
pub use extended::solve_extended_bach;
pub use pn::{pn_audit, pn_polynomial, PnAudit, PnRow};
pub use spec::{EquationFamily, ExpansionSpec, GaugeChoice, Tolerances};

type J = JetSeries<SymTensorField>;

/// Where a solved coefficient part came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffSource {
    /// The boundary metric itself (order 0).
    BoundaryMetric,
    /// Supplied free datum.
    FreeDatum,
    /// Solved from the field-equation recursion.
    Recursion,
    /// Fixed by the conformal gauge.
    Gauge,
    /// Forced to zero by the equations at low order.
    Forced,
}

/// Per-order provenance and residual record.
#[derive(Clone, Debug)]
pub struct OrderRecord {
    pub order: usize,
    pub tracefree_source: CoeffSource,
    pub trace_source: CoeffSource,
    /// Probed scalar multiplier of the tracefree solve.
    pub multiplier_tf: Option<f64>,
    /// Probed trace multiplier (its grid minimum for field multipliers).
    pub multiplier_tr: Option<f64>,
    /// Equation order that fixed the trace (extended-Bach family).
    pub trace_equation_order: Option<i32>,
    /// Consistency residual of the equation at this order after solving.
    pub residual: f64,
    /// Obstruction norm at free-data orders where the multiplier vanishes.
    pub obstruction_norm: Option<f64>,
}

/// Constraint checks recorded with a result.
#[derive(Clone, Debug, Default)]
pub struct ConstraintReport {
    /// `|div tracefree h^(n-1)(0)|` (even-n Einstein consistency).
    pub fg_divergence: Option<f64>,
    /// `A = 0` gauge consistency residual at its free order.
    pub f4_residual: Option<f64>,
    /// `Q = const` gauge consistency residual at its free order.
    pub q_gauge_residual: Option<f64>,
    /// Free mixed-component coefficient of the extended Bach tensor after
    /// the divergence fix.
    pub b0i_free_residual: Option<f64>,
    /// Free normal-component coefficient of the extended Bach tensor.
    pub b00_free_residual: Option<f64>,
}

/// Solved expansion with provenance and diagnostics.
#[derive(Clone)]
pub struct ExpansionResult {
    pub n: usize,
    pub equation: EquationFamily,
    pub order: usize,
    pub h_jet: J,
    pub orders: Vec<OrderRecord>,
    pub constraints: ConstraintReport,
    pub validity: bool,
    /// Mass aspect function (n = 4, solved through order 4).
    pub mass_aspect: Option<SymTensorField>,
}

impl ExpansionResult {
    pub fn coefficient(&self, order: usize) -> Result<SymTensorField> {
        self.h_jet.coeff(order as i32)
    }

    /// Radial derivative `h^(k)(0) = k! c_k`.
    pub fn derivative_at_zero(&self, order: usize) -> Result<SymTensorField> {
        let mut f = 1.0;
        for i in 1..=order {
            f *= i as f64;
        }
        Ok(self.coefficient(order)?.scale(f))
    }
}

/// Replace (or append) the coefficient at `order` in a series whose lower
/// coefficients are already determined; intermediate slots pad with zero.
pub(crate) fn with_coeff(jet: &J, order: usize, value: SymTensorField) -> J {
    assert_eq!(jet.lo(), 0);
    let mut coeffs: Vec<SymTensorField> = jet.coeffs().to_vec();
    while coeffs.len() <= order {
        coeffs.push(coeffs[0].zeros_like_field());
    }
    coeffs[order] = value;
    JetSeries::new(0, coeffs)
}

impl SymTensorField {
    pub(crate) fn zeros_like_field(&self) -> SymTensorField {
        SymTensorField::zeros(self.backend(), self.rank())
    }
}

/// Tracefree probe tensor for the affine solves. Must be nonzero and
/// `h0`-tracefree; on the grid a constant deviator works.
pub(crate) fn tf_probe(h0: &Metric2) -> Result<SymTensorField> {
    let backend = h0.backend();
    let base = SymTensorField::sym2_from_fn(backend, |_, i, j| {
        if i == 0 && j == 0 {
            1.0
        } else if i == 1 && j == 1 {
            -1.0
        } else if i == 0 && j == 1 {
            0.5
        } else {
            0.0
        }
    });
    tracefree(&base, h0)
}

/// Scalar multiplier extraction: the response to a tracefree probe must be
/// `mu * probe` for a constant `mu`; returns `(mu, relative deviation)`.
pub(crate) fn scalar_multiplier(resp: &SymTensorField, probe: &SymTensorField) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, u) in resp.data().iter().zip(probe.data().iter()) {
        num += r * u;
        den += u * u;
    }
    if den == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let mu = num / den;
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (r, u) in resp.data().iter().zip(probe.data().iter()) {
        dev = dev.max(crate::fmath::abs(r - mu * u));
        scale = scale.max(crate::fmath::abs(mu * u));
    }
    (mu, dev / scale.max(1e-300))
}

/// Pointwise affine trace solve: `base + m * tau = 0` with a field
/// multiplier `m`; fails when `m` is small anywhere relative to its scale.
pub(crate) fn pointwise_trace_solve(
    base: &SymTensorField,
    m: &SymTensorField,
    context: &str,
) -> Result<SymTensorField> {
    let mscale = m.max_abs();
    let floor = 1e-6 * mscale.max(1e-12);
    let mut out = base.clone();
    let min_m = m
        .data()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(crate::fmath::abs(*v)));
    if mscale < 1e-10 || min_m < floor {
        return Err(CoreError::GaugeSingular(format!(
            "{context}: trace multiplier range [{min_m:.3e}, {mscale:.3e}]"
        )));
    }
    for (o, mv) in out.data_mut().iter_mut().zip(m.data().iter()) {
        *o = -*o / *mv;
    }
    Ok(out)
}

/// Validate that `psi` is tracefree and divergence free against `h0`.
pub(crate) fn check_tt(
    psi: &SymTensorField,
    h0: &Metric2,
    tol_tf: f64,
    tol_div: f64,
    field: &str,
) -> Result<()> {
    let scale = psi.max_abs().max(1.0);
    let tr = trace(psi, h0)?.max_abs();
    if tr > tol_tf * scale {
        return Err(CoreError::InvalidSpec {
            field: String::from(field),
            message: format!("trace norm {tr:.3e} exceeds {tol_tf:.1e} (scale {scale:.3e})"),
        });
    }
    if tol_div.is_finite() {
        let geo = crate::geometry::SliceGeometry::new(h0.clone());
        let div = geo.divergence(psi)?;
        let dn = div.max_abs();
        if dn > tol_div * scale {
            return Err(CoreError::InvalidSpec {
                field: String::from(field),
                message: format!(
                    "divergence norm {dn:.3e} exceeds {tol_div:.1e} (scale {scale:.3e})"
                ),
            });
        }
    }
    Ok(())
}

/// Norm helpers used by records: sup norm of the h0-tracefree part and of
/// the trace part.
pub(crate) fn split_norms(t: &SymTensorField, h0: &Metric2) -> Result<(f64, f64)> {
    let tf = tracefree(t, h0)?;
    let tr = trace(t, h0)?;
    Ok((tf.max_abs(), tr.max_abs()))
}

pub(crate) fn scalar_of(backend: Backend, v: f64) -> SymTensorField {
    if backend.is_grid() {
        SymTensorField::constant(backend, v)
    } else {
        SymTensorField::homog(backend, Rank::Scalar, v).expect("scalar")
    }
}

pub(crate) use crate::normal_form::state::NormalFormState as State;

/// Compute `T4` from a mass-aspect target:
/// `T4 = 6 mu + (3/2) |h''(0)|^2 = 6 mu + 6 |c2|^2`.
pub(crate) fn t4_from_mu(
    mu: &SymTensorField,
    c2: &SymTensorField,
    h0: &Metric2,
) -> Result<SymTensorField> {
    let n2 = norm2(c2, h0)?;
    mu.scale(6.0).add(&n2.scale(6.0))
}

pub(crate) fn vec_norm(v: &SymTensorField, h0: &Metric2) -> Result<f64> {
    let n2 = inner_vec(v, v, h0)?;
    Ok(crate::fmath::sqrt(n2.max_abs()))
}

#[cfg(test)]
mod tests;
