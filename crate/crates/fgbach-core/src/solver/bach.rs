//! Bach-flat march in bulk dimension 4: tracefree parts from the
//! tangential Bach equation, traces from the conformal gauge (`A = 0`,
//! constant Q-curvature, or explicit trace data).
//!
//! The gauge scalar series is independent of the tracefree coefficient
//! being solved at the same order (its tracefree response is a pure-trace
//! tensor killed by the contraction), so one full assembly with the trial
//! coefficient zero serves both solves; probes use a cheap E-only pass
//! for the gauge and one full pass for the tangential block.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::CoreError;
use crate::jet::JetSeries;
use crate::normal_form::{a_condition, bach_components, bulk_curvature, e_components, q_curvature};
use crate::tensor::{tracefree, SymTensorField};
use crate::Result;

use super::{
    scalar_multiplier, spec::EquationFamily, tf_probe, with_coeff, CoeffSource, ConstraintReport,
    ExpansionResult, ExpansionSpec, GaugeChoice, OrderRecord, State,
};

type J = JetSeries<SymTensorField>;

/// Gauge scalar series only (E-level assembly).
fn gauge_series(spec: &ExpansionSpec, jet: &J) -> Result<Option<J>> {
    let state = State::new(spec.n, jet.clone())?;
    let e = e_components(&state)?;
    Ok(match spec.gauge {
        GaugeChoice::AZero => Some(a_condition(&e)?),
        GaugeChoice::QSix => Some(q_curvature(&state, &e)?),
        _ => None,
    })
}

/// Full assembly: tangential Bach block (regularized) plus gauge series.
fn full_equations(spec: &ExpansionSpec, jet: &J) -> Result<(J, Option<J>)> {
    let state = State::new(spec.n, jet.clone())?;
    let e = e_components(&state)?;
    let gauge = match spec.gauge {
        GaugeChoice::AZero => Some(a_condition(&e)?),
        GaugeChoice::QSix => Some(q_curvature(&state, &e)?),
        _ => None,
    };
    let w = bulk_curvature(&state)?;
    let b = bach_components(&state, &e, &w)?;
    let scale = b.bij.max_abs().max(jet.max_abs()).max(1.0);
    Ok((b.bij.regularize(scale)?, gauge))
}

/// Gauge-equation order paired with the trace of order `s`, and the
/// analytic multiplier per unit trace derivative at that order.
fn gauge_pairing(gauge: &GaugeChoice, n: usize, s: usize) -> (i32, f64) {
    let sf = s as f64;
    match gauge {
        GaugeChoice::AZero => ((s as i32) - 1, (n as f64 - sf) * sf),
        GaugeChoice::QSix => (s as i32, sf * (sf - 4.0) * (sf * sf - 3.0 * sf + 6.0) / 6.0),
        _ => (0, 0.0),
    }
}

pub fn solve_bach4(spec: &ExpansionSpec) -> Result<ExpansionResult> {
    spec.validate()?;
    if spec.n != 4 {
        return Err(CoreError::InvalidSpec {
            field: String::from("n"),
            message: String::from("solve_bach4 requires n = 4"),
        });
    }
    let n = spec.n;
    let kmax = spec.order;
    let h0 = spec.h0.clone();
    let backend = h0.backend();
    let d = (n - 1) as f64;
    let h0_field = h0.field().clone();
    let zero = SymTensorField::zeros(backend, crate::tensor::Rank::Sym2);
    let probe = if backend.is_grid() {
        Some(tf_probe(&h0)?)
    } else {
        None
    };

    let phi = spec.phi.clone().unwrap_or_else(|| zero.clone());
    let psi = spec.psi.clone().unwrap_or_else(|| zero.clone());
    let hp0 = spec.hprime0.clone().unwrap_or_else(|| zero.clone());

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
    let mut constraints = ConstraintReport::default();
    let validity = true;

    for s in 1..=kmax {
        let si = s as i32;
        // --- tracefree part ---
        let (tf_sol, mu_tf, tf_source) = match s {
            1 => (tracefree(&hp0, &h0)?, None, CoeffSource::FreeDatum),
            2 => (phi.clone(), None, CoeffSource::FreeDatum),
            3 => (psi.clone(), None, CoeffSource::FreeDatum),
            _ => {
                let (bij0, _) = full_equations(spec, &with_coeff(&jet, s, zero.clone()))?;
                let b_r = bij0.coeff(si - 2)?;
                if let Some(u) = &probe {
                    let (biju, _) = full_equations(spec, &with_coeff(&jet, s, u.clone()))?;
                    let resp = biju.coeff(si - 2)?.sub(&b_r)?;
                    let (mu, dev) = scalar_multiplier(&resp, u);
                    let sf = s as f64;
                    let analytic = -0.25 * sf * (sf - 1.0) * (sf - 2.0) * (sf - 3.0);
                    if dev > spec.tol.probe
                        || crate::fmath::abs(mu - analytic)
                            > spec.tol.probe * analytic.abs().max(1.0)
                    {
                        return Err(CoreError::ProbeNonlinear {
                            order: s,
                            relative: dev
                                .max(crate::fmath::abs(mu - analytic) / analytic.abs().max(1.0)),
                        });
                    }
                    let tf_sol = tracefree(&b_r, &h0)?.scale(-1.0 / mu);
                    (tf_sol, Some(mu), CoeffSource::Recursion)
                } else {
                    (zero.clone(), None, CoeffSource::Recursion)
                }
            }
        };

        // --- trace part from the gauge ---
        let (tau, mu_tr, trace_source, trace_eq_order) = match &spec.gauge {
            GaugeChoice::ExplicitTraces(list) => {
                let t = list
                    .get(s)
                    .cloned()
                    .unwrap_or_else(|| super::scalar_of(backend, 0.0));
                let mut fact = 1.0;
                for i in 1..=s {
                    fact *= i as f64;
                }
                (t.scale(1.0 / fact), None, CoeffSource::FreeDatum, None)
            }
            gauge => {
                let (eq_order, analytic) = gauge_pairing(gauge, n, s);
                let base = gauge_series(spec, &with_coeff(&jet, s, zero.clone()))?
                    .expect("gauge series")
                    .coeff(eq_order)?;
                if crate::fmath::abs(analytic) < 1e-9 {
                    // the multiplier vanishes: T4 is free data here
                    let c2 = jet.coeff(2)?;
                    let t4 = if let Some(t4) = &spec.t4 {
                        t4.clone()
                    } else if let Some(mu_target) = &spec.mu {
                        super::t4_from_mu(mu_target, &c2, &h0)?
                    } else {
                        // Einstein-selection default: vanishing mass aspect
                        super::t4_from_mu(&super::scalar_of(backend, 0.0), &c2, &h0)?
                    };
                    let resid = base.max_abs();
                    match spec.gauge {
                        GaugeChoice::AZero => constraints.f4_residual = Some(resid),
                        GaugeChoice::QSix => constraints.q_gauge_residual = Some(resid),
                        _ => {}
                    }
                    (
                        t4.scale(1.0 / 24.0),
                        None,
                        CoeffSource::FreeDatum,
                        Some(eq_order),
                    )
                } else {
                    let resp = gauge_series(spec, &with_coeff(&jet, s, h0_field.clone()))?
                        .expect("gauge series")
                        .coeff(eq_order)?
                        .sub(&base)?
                        .scale(1.0 / d);
                    let dev = resp
                        .data()
                        .iter()
                        .fold(0.0f64, |m, v| m.max(crate::fmath::abs(v - analytic)));
                    if dev > spec.tol.probe * analytic.abs().max(1.0) {
                        return Err(CoreError::ProbeNonlinear {
                            order: s,
                            relative: dev / analytic.abs().max(1.0),
                        });
                    }
                    let tau = super::pointwise_trace_solve(
                        &base,
                        &resp,
                        &format!("bach gauge order {s}"),
                    )?;
                    (tau, Some(analytic), CoeffSource::Gauge, Some(eq_order))
                }
            }
        };

        let c_s = tf_sol.add(&h0_field.mul_scalar_field(&tau.scale(1.0 / d))?)?;
        jet = with_coeff(&jet, s, c_s);
        records.push(OrderRecord {
            order: s,
            tracefree_source: tf_source,
            trace_source,
            multiplier_tf: mu_tf,
            multiplier_tr: mu_tr,
            trace_equation_order: trace_eq_order,
            residual: 0.0,
            obstruction_norm: None,
        });
    }

    // final residual sweep over the tangential equation
    let (bij, _) = full_equations(spec, &jet)?;
    for rec in records.iter_mut() {
        let o = rec.order as i32;
        let at = if rec.order < 2 { o } else { o - 2 };
        if at <= bij.hi() {
            rec.residual = bij.coeff(at)?.max_abs();
        }
    }

    let state = State::new(n, jet.clone())?;
    let mass_aspect = Some(crate::normal_form::mass_aspect(&state)?);

    Ok(ExpansionResult {
        n,
        equation: EquationFamily::Bach4,
        order: kmax,
        h_jet: jet,
        orders: records,
        constraints,
        validity,
        mass_aspect,
    })
}
