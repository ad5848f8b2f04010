//! Scalar invariants of the expansion: Q-curvature, the conformal-gauge
//! condition series, the higher-dimensional trace condition, and the mass
//! aspect.

use crate::jet::ops::mul_scalar;
use crate::jet::JetSeries;
use crate::tensor::{trace, norm2, Metric2, SymTensorField};
use crate::Result;

use super::bach::e_norm2;
use super::bulk::bulk_lap_scalar;
use super::e_tensor::EDecomposition;
use super::state::NormalFormState;

type J = JetSeries<SymTensorField>;

/// Branson Q-curvature series (bulk dimension 4):
/// `Q = -lap_g A / 6 - A - |E|^2/2 + A^2/6 + 6`.
pub fn q_curvature(state: &NormalFormState, e: &EDecomposition) -> Result<J> {
    assert_eq!(state.n(), 4, "Q-curvature series is a 4-dimensional tool");
    let lap_a = bulk_lap_scalar(state, &e.a)?;
    let e2 = e_norm2(state, e)?;
    let a2 = mul_scalar(&e.a, &e.a)?;
    let six = JetSeries::polynomial(
        0,
        alloc::vec![constant_scalar(state, 6.0)],
    );
    lap_a
        .scale(-1.0 / 6.0)
        .sub(&e.a)?
        .add(&e2.scale(-0.5))?
        .add(&a2.scale(1.0 / 6.0))?
        .add(&six)
}

/// The `A = 0` gauge series in its regular form `A / x`.
pub fn a_condition(e: &EDecomposition) -> Result<J> {
    Ok(e.a.shift_mul_xk(-1))
}

/// Trace-condition series `4 |E|_g^2 - A_g^2` of the extended Bach gauge.
pub fn trace_condition(state: &NormalFormState, e: &EDecomposition) -> Result<J> {
    let e2 = e_norm2(state, e)?;
    let a2 = mul_scalar(&e.a, &e.a)?;
    e2.scale(4.0).sub(&a2)
}

/// Mass aspect `mu = tr_{h0} h^(4)(0) / 3! - |h''(0) / 2|^2_{h0}`
/// (bulk dimension 4; needs the jet solved through order 4).
pub fn mass_aspect(state: &NormalFormState) -> Result<SymTensorField> {
    assert_eq!(state.n(), 4);
    let h0 = Metric2::new(state.h.coeffs()[0].clone())?;
    let c4 = state.h.coeff(4)?;
    let c2 = state.h.coeff(2)?;
    // h^(4)(0) = 4! c4 ; h''(0) = 2 c2
    let tr4 = trace(&c4.scale(24.0 / 6.0), &h0)?;
    let n2 = norm2(&c2, &h0)?; // |h''(0)/2|^2 = |c2|^2
    tr4.sub(&n2)
}

fn constant_scalar(state: &NormalFormState, v: f64) -> SymTensorField {
    let backend = state.backend();
    if backend.is_grid() {
        SymTensorField::constant(backend, v)
    } else {
        SymTensorField::homog(backend, crate::tensor::Rank::Scalar, v).expect("homog scalar")
    }
}
