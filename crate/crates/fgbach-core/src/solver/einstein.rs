//! Einstein-family march: tracefree parts from the tangential equation,
//! traces from the normal (Hamiltonian-type) equation.

use alloc::format;
use alloc::vec;

use crate::error::CoreError;
use crate::jet::JetSeries;
use crate::normal_form::e_components;
use crate::tensor::{tracefree, SymTensorField};
use crate::Result;

use super::{
    scalar_multiplier, spec::EquationFamily, tf_probe, with_coeff, CoeffSource, ConstraintReport,
    ExpansionResult, ExpansionSpec, OrderRecord, State,
};

type J = JetSeries<SymTensorField>;

/// Equation jets used by the Einstein march: `2x E_perp` (tangential) and
/// `2x E_00` (normal).
fn equations(n: usize, jet: &J) -> Result<(J, J)> {
    let state = State::new(n, jet.clone())?;
    let e = e_components(&state)?;
    Ok((
        e.eperp.shift_mul_xk(1).scale(2.0),
        e.e00.shift_mul_xk(1).scale(2.0),
    ))
}

pub fn solve_einstein(spec: &ExpansionSpec) -> Result<ExpansionResult> {
    spec.validate()?;
    let n = spec.n;
    let kmax = spec.order;
    let h0 = spec.h0.clone();
    let backend = h0.backend();
    let d = (n - 1) as f64;
    let probe = if backend.is_grid() {
        Some(tf_probe(&h0)?)
    } else {
        None
    };
    let h0_field = h0.field().clone();
    let mut jet = JetSeries::new(0, vec![h0_field.clone()]);
    let mut records = vec![OrderRecord {
        order: 0,
        tracefree_source: CoeffSource::BoundaryMetric,
        trace_source: CoeffSource::BoundaryMetric,
        multiplier_tf: None,
        multiplier_tr: None,
        trace_equation_order: None,
        residual: 0.0,
        obstruction_norm: None,
    }];
    let mut validity = true;
    let mut constraints = ConstraintReport::default();

    for s in 1..=kmax {
        let si = s as i32;
        let zero = SymTensorField::zeros(backend, crate::tensor::Rank::Sym2);
        let (teq0, geq0) = equations(n, &with_coeff(&jet, s, zero.clone()))?;
        let t_r = teq0.coeff(si - 1)?;
        let g_r = geq0.coeff(si - 1)?;
        let scale = jet.max_abs().max(1.0);

        // tracefree part
        let (tf_sol, mu_tf, tf_source, obstruction) = if s == n - 1 {
            let obs = tracefree(&t_r, &h0)?.max_abs();
            if obs > spec.tol.obstruction * scale {
                validity = false;
            }
            let psi = spec
                .psi
                .clone()
                .unwrap_or_else(|| zero.clone());
            (psi, None, CoeffSource::FreeDatum, Some(obs))
        } else if let Some(u) = &probe {
            let (tequ, _) = equations(n, &with_coeff(&jet, s, u.clone()))?;
            let resp = tequ.coeff(si - 1)?.sub(&t_r)?;
            let (mu, dev) = scalar_multiplier(&resp, u);
            let analytic = (s as f64) * (n as f64 - 1.0 - s as f64);
            if dev > spec.tol.probe || crate::fmath::abs(mu - analytic) > spec.tol.probe * analytic.abs().max(1.0) {
                return Err(CoreError::ProbeNonlinear {
                    order: s,
                    relative: dev.max(crate::fmath::abs(mu - analytic)),
                });
            }
            let tf_sol = tracefree(&t_r, &h0)?.scale(-1.0 / mu);
            (tf_sol, Some(mu), CoeffSource::Recursion, None)
        } else {
            // homogeneous backend: the tracefree subspace is trivial
            (zero.clone(), None, CoeffSource::Recursion, None)
        };

        // trace part: probe with the metric itself (tau increment d)
        let (teq_h, geq_h) = equations(n, &with_coeff(&jet, s, h0_field.clone()))?;
        let (base, resp_per_tau, mu_analytic, trace_eq_order) = if s <= 2 {
            let base = crate::tensor::trace(&t_r, &h0)?;
            let resp = crate::tensor::trace(&teq_h.coeff(si - 1)?.sub(&t_r)?, &h0)?.scale(1.0 / d);
            let analytic = (s as f64) * (2.0 * n as f64 - 2.0 - s as f64);
            (base, resp, analytic, si - 1)
        } else {
            let resp = geq_h.coeff(si - 1)?.sub(&g_r)?.scale(1.0 / d);
            let analytic = (s as f64) * (2.0 - s as f64);
            (g_r.clone(), resp, analytic, si - 1)
        };
        // constant-multiplier check, then pointwise solve
        let mu_tr = {
            let mmax = resp_per_tau.max_abs();
            let dev = resp_per_tau
                .data()
                .iter()
                .fold(0.0f64, |m, v| m.max(crate::fmath::abs(v - mu_analytic)));
            if dev > spec.tol.probe * mu_analytic.abs().max(1.0) {
                return Err(CoreError::ProbeNonlinear {
                    order: s,
                    relative: dev / mu_analytic.abs().max(1.0),
                });
            }
            mmax.min(mu_analytic.abs())
        };
        let tau = super::pointwise_trace_solve(&base, &resp_per_tau, &format!("einstein order {s}"))?;
        let c_s = tf_sol.add(&h0_field.mul_scalar_field(&tau.scale(1.0 / d))?)?;
        jet = with_coeff(&jet, s, c_s);

        records.push(OrderRecord {
            order: s,
            tracefree_source: tf_source,
            trace_source: CoeffSource::Recursion,
            multiplier_tf: mu_tf,
            multiplier_tr: Some(mu_tr),
            trace_equation_order: Some(trace_eq_order),
            residual: 0.0,
            obstruction_norm: obstruction,
        });
    }

    // final residual sweep with the fully solved jet
    let (teq, geq) = equations(n, &jet)?;
    for rec in records.iter_mut().skip(1) {
        let si = rec.order as i32;
        let mut r = teq.coeff(si - 1)?.max_abs();
        r = r.max(geq.coeff(si - 1)?.max_abs());
        if rec.order == n - 1 {
            // keep only the trace residual at the free order; the tracefree
            // slot is occupied by the datum
            r = crate::tensor::trace(&teq.coeff(si - 1)?, &h0)?.max_abs();
            r = r.max(geq.coeff(si - 1)?.max_abs());
        }
        rec.residual = r;
    }

    // even-n consistency: divergence of the tracefree order-(n-1) datum
    if backend.is_grid() {
        let geo = crate::geometry::SliceGeometry::new(h0.clone());
        let mut fact = 1.0;
        for i in 1..n {
            fact *= i as f64;
        }
        let tfc = tracefree(&jet.coeff((n - 1) as i32)?, &h0)?.scale(fact);
        constraints.fg_divergence = Some(super::vec_norm(&geo.divergence(&tfc)?, &h0)?);
    } else {
        constraints.fg_divergence = Some(0.0);
    }

    let mass_aspect = if n == 4 {
        let state = State::new(n, jet.clone())?;
        Some(crate::normal_form::mass_aspect(&state)?)
    } else {
        None
    };

    Ok(ExpansionResult {
        n,
        equation: EquationFamily::Einstein,
        order: kmax,
        h_jet: jet,
        orders: records,
        constraints,
        validity,
        mass_aspect,
    })
}
