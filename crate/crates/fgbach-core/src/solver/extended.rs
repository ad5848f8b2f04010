//! Extended-Bach march for bulk dimension 5 and up.
//!
//! Tracefree parts come from the tangential block of the divergence-free
//! extension (free data at orders n-2 and n-1); the trace of each order
//! is fixed by the trace part of the same tensor equation, whose
//! multiplier is a pointwise field proportional to the boundary scalar
//! curvature. The pairing between trace unknowns and equation orders is
//! discovered by probing: candidates at offsets 2 and 1 below the
//! coefficient order are tried in turn and the first one with a healthy
//! multiplier is used. The order-(n-1) tracefree datum receives the
//! determined divergence part through the mixed-component equation.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::CoreError;
use crate::geometry::divergence_potential;
use crate::jet::JetSeries;
use crate::normal_form::{bulk_curvature, e_components, extended_bach, bach_components, BachJets};
use crate::tensor::{trace, tracefree, SymTensorField};
use crate::Result;

use super::{
    scalar_multiplier, spec::EquationFamily, tf_probe, with_coeff, CoeffSource, ConstraintReport,
    ExpansionResult, ExpansionSpec, GaugeChoice, OrderRecord, State,
};

type J = JetSeries<SymTensorField>;

struct HatJets {
    bij: J,
    b0i: J,
    b00: J,
}

fn assemble(spec: &ExpansionSpec, jet: &J) -> Result<HatJets> {
    let state = State::new(spec.n, jet.clone())?;
    let e = e_components(&state)?;
    let w = bulk_curvature(&state)?;
    let b = bach_components(&state, &e, &w)?;
    let hb: BachJets = extended_bach(&state, &e, &b)?;
    let scale = hb.bij.max_abs().max(jet.max_abs()).max(1.0);
    Ok(HatJets {
        bij: hb.bij.regularize(scale)?,
        b0i: hb.b0i.regularize(scale)?,
        b00: hb.b00.regularize(scale)?,
    })
}

/// Trial jet with coefficient `c_s` and one zero-padded extra order, so
/// equation coefficients one order past the solve order are available
/// (their dependence on the padded slot has a vanishing multiplier).
fn padded(jet: &J, s: usize, c: SymTensorField) -> J {
    let zero = c.zeros_like_field();
    with_coeff(&with_coeff(jet, s, c), s + 1, zero)
}

pub fn solve_extended_bach(spec: &ExpansionSpec) -> Result<ExpansionResult> {
    spec.validate()?;
    if spec.n < 5 {
        return Err(CoreError::InvalidSpec {
            field: String::from("n"),
            message: String::from("the extended-Bach family needs n >= 5"),
        });
    }
    if !matches!(
        spec.gauge,
        GaugeChoice::TraceCondition | GaugeChoice::ExplicitTraces(_)
    ) {
        return Err(CoreError::InvalidSpec {
            field: String::from("gauge"),
            message: String::from("extended-Bach runs use the trace condition or explicit traces"),
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

    // order 0: boundary metric; order 1: h'(0) = 0 by hypothesis
    let mut jet = JetSeries::new(0, vec![h0_field.clone(), zero.clone()]);
    let mut records = vec![
        OrderRecord {
            order: 0,
            tracefree_source: CoeffSource::BoundaryMetric,
            trace_source: CoeffSource::BoundaryMetric,
            multiplier_tf: None,
            multiplier_tr: None,
            trace_equation_order: None,
            residual: 0.0,
            obstruction_norm: None,
        },
        OrderRecord {
            order: 1,
            tracefree_source: CoeffSource::Forced,
            trace_source: CoeffSource::Forced,
            multiplier_tf: None,
            multiplier_tr: None,
            trace_equation_order: None,
            residual: 0.0,
            obstruction_norm: None,
        },
    ];
    let mut constraints = ConstraintReport::default();
    let mut validity = true;

    for s in 2..=kmax {
        let si = s as i32;
        let base0 = assemble(spec, &padded(&jet, s, zero.clone()))?;
        let b_r = base0.bij.coeff(si - 2)?;
        let scale = jet.max_abs().max(1.0);

        // --- tracefree part ---
        let sf = s as f64;
        let tf_analytic =
            -(sf - n as f64 + 2.0) * (sf - n as f64 + 1.0) * sf * (sf - 1.0) / (2.0 * (n as f64 - 2.0));
        let (mut tf_sol, mu_tf, tf_source, obstruction) = if s == n - 2 || s == n - 1 {
            let obs = tracefree(&b_r, &h0)?.max_abs();
            if obs > spec.tol.obstruction * scale {
                validity = false;
            }
            let datum = if s == n - 2 { phi.clone() } else { psi.clone() };
            (datum, None, CoeffSource::FreeDatum, Some(obs))
        } else if let Some(u) = &probe {
            let equ = assemble(spec, &padded(&jet, s, u.clone()))?;
            let resp = equ.bij.coeff(si - 2)?.sub(&b_r)?;
            let (mu, dev) = scalar_multiplier(&resp, u);
            if dev > spec.tol.probe
                || crate::fmath::abs(mu - tf_analytic) > spec.tol.probe * tf_analytic.abs().max(1.0)
            {
                return Err(CoreError::ProbeNonlinear {
                    order: s,
                    relative: dev.max(crate::fmath::abs(mu - tf_analytic) / tf_analytic.abs().max(1.0)),
                });
            }
            let tf_sol = tracefree(&b_r, &h0)?.scale(-1.0 / mu);
            (tf_sol, Some(mu), CoeffSource::Recursion, None)
        } else {
            (zero.clone(), None, CoeffSource::Recursion, None)
        };

        // --- divergence fix of the order-(n-1) datum ---
        if s == n - 1 && backend.is_grid() {
            let with_psi = assemble(spec, &padded(&jet, s, tf_sol.clone()))?;
            let r_i = with_psi.b0i.coeff(si - 1)?;
            let scale_v = with_psi.bij.max_abs().max(1.0);
            if r_i.max_abs() > 1e-12 * scale_v {
                // multiplier of D^j V_ij in that coefficient: (n-1)/2
                let w_target = r_i.scale(-2.0 / (n as f64 - 1.0));
                let v = divergence_potential(&w_target, &h0)?;
                tf_sol = tf_sol.add(&v)?;
            }
            let check = assemble(spec, &padded(&jet, s, tf_sol.clone()))?;
            constraints.b0i_free_residual = Some(check.b0i.coeff(si - 1)?.max_abs());
        } else if s == n - 1 {
            constraints.b0i_free_residual = Some(0.0);
        }

        // --- trace part ---
        let (tau, mu_tr, trace_source, trace_eq_order) = match (&spec.gauge, s) {
            (GaugeChoice::ExplicitTraces(list), _) => {
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
            (_, 2) => {
                // second-order trace: tr h''(0) = -scal/(n-2), i.e.
                // tau_2 = -scal / (2(n-2))
                let scal = crate::geometry::curvature(&h0)?.scal;
                (
                    scal.scale(-1.0 / (2.0 * (n as f64 - 2.0))),
                    None,
                    CoeffSource::Gauge,
                    None,
                )
            }
            _ => {
                // probe the trace response of the tensor equation at the
                // two candidate orders s-2 and s-1
                let base = assemble(spec, &padded(&jet, s, tf_sol.clone()))?;
                let resp = assemble(spec, &padded(&jet, s, tf_sol.add(&h0_field)?))?;
                let mut chosen: Option<(i32, SymTensorField, SymTensorField, f64)> = None;
                for eq_order in [si - 2, si - 1] {
                    for (b_base, b_resp) in [
                        (&base.bij, &resp.bij),
                        (&base.b00, &resp.b00),
                    ] {
                        let (bval, rval) = if b_base.coeffs()[0].rank()
                            == crate::tensor::Rank::Sym2
                        {
                            (
                                trace(&b_base.coeff(eq_order)?, &h0)?,
                                trace(&b_resp.coeff(eq_order)?, &h0)?,
                            )
                        } else {
                            (b_base.coeff(eq_order)?, b_resp.coeff(eq_order)?)
                        };
                        let m = rval.sub(&bval)?.scale(1.0 / d);
                        let mmax = m.max_abs();
                        let mmin = m
                            .data()
                            .iter()
                            .fold(f64::INFINITY, |a, v| a.min(crate::fmath::abs(*v)));
                        // healthy multiplier: bounded away from zero pointwise
                        if mmax > 1e-8 * scale && mmin > 1e-6 * mmax {
                            chosen = Some((eq_order, bval, m, mmin));
                            break;
                        }
                    }
                    if chosen.is_some() {
                        break;
                    }
                }
                let (eq_order, bval, m, mmin) = chosen.ok_or_else(|| {
                    CoreError::GaugeSingular(format!(
                        "no trace multiplier found at order {s}; the trace condition \
                         degenerates (vanishing boundary scalar curvature?)"
                    ))
                })?;
                let tau = super::pointwise_trace_solve(
                    &bval,
                    &m,
                    &format!("extended-Bach trace order {s}"),
                )?;
                let _ = mmin;
                (tau, Some(m.max_abs()), CoeffSource::Gauge, Some(eq_order))
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
            obstruction_norm: obstruction,
        });
    }

    // final residual sweep
    let eqf = assemble(spec, &padded(&jet, kmax + 1, zero.clone()))?;
    for rec in records.iter_mut() {
        let o = rec.order as i32;
        let at = if rec.order < 2 { o } else { o - 2 };
        if at <= eqf.bij.hi() {
            rec.residual = eqf.bij.coeff(at)?.max_abs();
        }
    }
    constraints.b00_free_residual = Some(eqf.b00.coeff((n - 2) as i32)?.max_abs());
    if constraints.b0i_free_residual.is_none() {
        constraints.b0i_free_residual = Some(eqf.b0i.coeff((n - 2) as i32)?.max_abs());
    }
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

    Ok(ExpansionResult {
        n,
        equation: EquationFamily::ExtendedBach,
        order: kmax,
        h_jet: jet,
        orders: records,
        constraints,
        validity,
        mass_aspect: None,
    })
}
