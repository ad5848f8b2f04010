use super::*;
use crate::normal_form::tests::{random_series, random_series_amp};
use crate::tensor::{Rank, SymTensorField};
use alloc::vec;

pub(crate) fn unit_sphere(d: usize) -> Metric2 {
    Metric2::model(Backend::homogeneous(d, 1.0)).unwrap()
}

pub(crate) fn flat_torus(d: usize, n_grid: usize) -> Metric2 {
    let backend = Backend::grid(d, n_grid).unwrap();
    Metric2::new(SymTensorField::sym2_from_fn(backend, |_, i, j| {
        if i == j {
            1.0
        } else {
            0.0
        }
    }))
    .unwrap()
}

/// Expected warp coefficients of hyperbolic space: c_0 = 1, c_2 = -1/2,
/// c_4 = 1/16, all other orders zero (multiples of h0).
fn warp_coefficient(k: usize) -> f64 {
    match k {
        0 => 1.0,
        2 => -0.5,
        4 => 0.0625,
        _ => 0.0,
    }
}

fn assert_warp(result: &ExpansionResult, tol: f64) {
    for k in 0..=result.order {
        let c = result.coefficient(k).unwrap();
        let dev = (c.homog_value() - warp_coefficient(k)).abs();
        assert!(
            dev < tol,
            "order {k}: coefficient {} vs warp {} (dev {dev:.3e})",
            c.homog_value(),
            warp_coefficient(k)
        );
    }
}

#[test]
fn einstein_recovers_hyperbolic_space_on_spheres() {
    for n in [4usize, 5, 6] {
        let h0 = unit_sphere(n - 1);
        let spec = ExpansionSpec::new(n, EquationFamily::Einstein, GaugeChoice::AZero, h0);
        let spec = ExpansionSpec {
            gauge: GaugeChoice::ExplicitTraces(vec![]),
            ..spec
        };
        let result = solve_einstein(&spec).unwrap();
        assert_warp(&result, 1e-12);
        assert!(result.validity);
    }
}

#[test]
fn einstein_cusp_on_flat_torus() {
    for n in [4usize, 5] {
        let h0 = flat_torus(n - 1, 8);
        let spec = ExpansionSpec {
            gauge: GaugeChoice::ExplicitTraces(vec![]),
            ..ExpansionSpec::new(n, EquationFamily::Einstein, GaugeChoice::AZero, h0)
        };
        let result = solve_einstein(&spec).unwrap();
        for k in 1..=result.order {
            assert!(
                result.coefficient(k).unwrap().max_abs() < 1e-12,
                "n={n} order {k} nonzero"
            );
        }
    }
}

#[test]
fn bach4_with_einstein_data_recovers_warp_on_s3() {
    // data of the Einstein-selection corollary: h'(0) = 0,
    // h''(0) = -2P = -h0 (Phi = 0), Psi = 0, mass aspect zero
    let h0 = unit_sphere(3);
    let spec = ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::AZero, h0);
    let result = solve_bach4(&spec).unwrap();
    assert_warp(&result, 1e-10);
    let mu = result.mass_aspect.as_ref().unwrap();
    assert!(mu.max_abs() < 1e-10, "mass aspect {}", mu.max_abs());
    assert!(result.constraints.f4_residual.unwrap() < 1e-9);
    let q = ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::QSix, unit_sphere(3));
    let result_q = solve_bach4(&q).unwrap();
    assert_warp(&result_q, 1e-10);
    assert!(result_q.constraints.q_gauge_residual.unwrap() < 1e-9);
}

#[test]
fn extended_bach_recovers_warp_on_s4_and_s5() {
    for n in [5usize, 6] {
        let h0 = unit_sphere(n - 1);
        let spec = ExpansionSpec::new(n, EquationFamily::ExtendedBach, GaugeChoice::TraceCondition, h0);
        let result = solve_extended_bach(&spec).unwrap();
        assert_warp(&result, 1e-10);
        assert!(result.validity, "obstruction flagged for n={n}");
        // trace h''(0) = -scal/(n-2): scal = (n-1)(n-2) on the unit sphere,
        // so tr h''(0) = -(n-1), i.e. c2 = -1/2 per h0 (checked by warp)
    }
}

#[test]
fn extended_bach_matches_einstein_on_sphere() {
    let n = 6;
    let h0 = unit_sphere(n - 1);
    let hb = solve_extended_bach(&ExpansionSpec::new(
        n,
        EquationFamily::ExtendedBach,
        GaugeChoice::TraceCondition,
        h0.clone(),
    ))
    .unwrap();
    let ein = solve_einstein(&ExpansionSpec {
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(n, EquationFamily::Einstein, GaugeChoice::AZero, h0)
    })
    .unwrap();
    for k in 0..=hb.order.min(ein.order) {
        let dev = (hb.coefficient(k).unwrap().homog_value()
            - ein.coefficient(k).unwrap().homog_value())
        .abs();
        assert!(dev < 1e-9, "order {k} deviation {dev:.3e}");
    }
}

#[test]
fn bach4_matches_einstein_on_grid() {
    // Einstein-selection data on a nonsymmetric torus metric: both gauges
    // must reproduce the Einstein expansion per order.
    let backend = Backend::grid(3, 16).unwrap();
    let h0f = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        let phase = (i + 2 * j) as f64;
        base + 0.04 * (y[0] + 0.7 * phase).sin()
            + 0.03 * (y[1] - y[2] + phase).cos()
            + if i == j { 0.02 * (y[(i + 1) % 3]).cos() } else { 0.0 }
    });
    let h0 = Metric2::new(h0f).unwrap();
    let order = 6; // keep the unit test quick; acceptance runs order 8
    let ein = solve_einstein(&ExpansionSpec {
        order,
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(4, EquationFamily::Einstein, GaugeChoice::AZero, h0.clone())
    })
    .unwrap();
    // corollary data: Phi = tf h''(0) = -2 Z (Einstein value), Psi = 0,
    // T4 = 3! |P|^2  <=> mass aspect zero
    let curv = crate::geometry::curvature(&h0).unwrap();
    let phi = curv.z.scale(-2.0);
    for gauge in [GaugeChoice::AZero, GaugeChoice::QSix] {
        let spec = ExpansionSpec {
            order,
            phi: Some(phi.clone()),
            ..ExpansionSpec::new(4, EquationFamily::Bach4, gauge.clone(), h0.clone())
        };
        let bach = solve_bach4(&spec).unwrap();
        for k in 0..=order {
            let e_k = ein.coefficient(k).unwrap();
            let b_k = bach.coefficient(k).unwrap();
            let dev = b_k.sub(&e_k).unwrap().max_abs();
            let scale = e_k.max_abs().max(1.0);
            assert!(
                dev < 1e-8 * scale,
                "gauge {gauge:?}, order {k}: dev {dev:.3e} (scale {scale:.3e})"
            );
        }
    }
}

#[test]
fn einstein_solution_is_bach_flat_on_grid() {
    // cross-validation of the Bach assembly against the independent
    // Einstein recursion: the solved Einstein series must annihilate the
    // Bach jets through the truncation window.
    let h0 = {
        let backend = Backend::grid(3, 16).unwrap();
        Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + 0.05 * (y[(i + j) % 3] + (i * j) as f64).sin()
        }))
        .unwrap()
    };
    let ein = solve_einstein(&ExpansionSpec {
        order: 6,
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(4, EquationFamily::Einstein, GaugeChoice::AZero, h0)
    })
    .unwrap();
    let state = State::new(4, ein.h_jet.clone()).unwrap();
    let (_e, _w, b, _hb) = crate::normal_form::assemble(&state).unwrap();
    let scale = ein.h_jet.max_abs().max(1.0);
    let bij = b.bij.regularize(scale).unwrap();
    for k in 0..=bij.hi().min(4) {
        assert!(
            bij.coeff(k).unwrap().max_abs() < 1e-9 * scale,
            "Bach residual at order {k}: {}",
            bij.coeff(k).unwrap().max_abs()
        );
    }
}

#[test]
fn bach4_mass_aspect_freedom() {
    // shifting T4 so mu = 0.3 leaves the Bach and gauge equations solved
    // and moves only the order-4 trace (and its downstream orders)
    let h0 = unit_sphere(3);
    let mu_target = SymTensorField::homog(h0.backend(), Rank::Scalar, 0.3).unwrap();
    let spec = ExpansionSpec {
        mu: Some(mu_target),
        ..ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::AZero, h0.clone())
    };
    let result = solve_bach4(&spec).unwrap();
    let mu = result.mass_aspect.as_ref().unwrap();
    assert!((mu.homog_value() - 0.3).abs() < 1e-10);
    // deviation from the Einstein warp appears exactly at order 4
    for k in 0..=3 {
        let dev = (result.coefficient(k).unwrap().homog_value() - warp_coefficient(k)).abs();
        assert!(dev < 1e-10, "order {k} moved: {dev:.3e}");
    }
    let dev4 = (result.coefficient(4).unwrap().homog_value() - warp_coefficient(4)).abs();
    assert!(dev4 > 1e-3, "order 4 should move with the mass aspect");
}

#[test]
fn einstein_detects_odd_dimension_obstruction() {
    // n = 5: the order-(n-1) obstruction of a generic 4-dimensional
    // boundary metric is nonzero; the solver continues but flags it.
    let h = random_series_amp(4, 8, 1, 31, true, 0.05, 0.0);
    let h0 = Metric2::new(h.coeffs()[0].clone()).unwrap();
    let spec = ExpansionSpec {
        order: 6,
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(5, EquationFamily::Einstein, GaugeChoice::AZero, h0)
    };
    let result = solve_einstein(&spec).unwrap();
    let obs = result.orders[4].obstruction_norm.unwrap();
    assert!(obs > 1e-10, "expected a nonzero obstruction, got {obs:.3e}");
    assert!(!result.validity);
}

#[test]
fn einstein_even_n_parity_and_divergence() {
    let h0 = {
        let backend = Backend::grid(3, 16).unwrap();
        Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + 0.05 * (y[0] - y[(i + j) % 3]).cos()
        }))
        .unwrap()
    };
    let result = solve_einstein(&ExpansionSpec {
        order: 6,
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(4, EquationFamily::Einstein, GaugeChoice::AZero, h0.clone())
    })
    .unwrap();
    // odd coefficients below n-1 vanish
    assert!(result.coefficient(1).unwrap().max_abs() < 1e-10);
    // trace of the order-3 coefficient vanishes (even n)
    let tr3 = crate::tensor::trace(&result.coefficient(3).unwrap(), &h0).unwrap();
    assert!(tr3.max_abs() < 1e-10, "trace h'''(0): {}", tr3.max_abs());
    assert!(result.constraints.fg_divergence.unwrap() < 1e-9);
}

#[test]
fn probe_multipliers_match_analytic_values() {
    let h0 = flat_torus(3, 8);
    let result = solve_einstein(&ExpansionSpec {
        order: 6,
        gauge: GaugeChoice::ExplicitTraces(vec![]),
        ..ExpansionSpec::new(4, EquationFamily::Einstein, GaugeChoice::AZero, h0)
    })
    .unwrap();
    for rec in result.orders.iter().skip(1) {
        if let Some(mu) = rec.multiplier_tf {
            let s = rec.order as f64;
            let expect = s * (3.0 - s);
            assert!((mu - expect).abs() < 1e-7 * expect.abs().max(1.0));
        }
    }
}

#[test]
fn determinism_bitwise() {
    let h = random_series(3, 8, 1, 41, true);
    let h0 = Metric2::new(h.coeffs()[0].clone()).unwrap();
    let spec = ExpansionSpec {
        order: 5,
        ..ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::AZero, h0)
    };
    let a = solve_bach4(&spec).unwrap();
    let b = solve_bach4(&spec).unwrap();
    for k in 0..=5usize {
        let ca = a.coefficient(k).unwrap();
        let cb = b.coefficient(k).unwrap();
        assert_eq!(ca.data(), cb.data(), "order {k} not bitwise equal");
    }
    for (ra, rb) in a.orders.iter().zip(b.orders.iter()) {
        assert_eq!(ra.tracefree_source, rb.tracefree_source);
        assert_eq!(ra.trace_source, rb.trace_source);
    }
}

#[test]
fn pn_audit_matches_pinned_values() {
    // P_5(t) = 3t^2 + 2t - 11: P_5(1) = -6, P_5(2) = 5, discriminant 136
    assert_eq!(pn_polynomial(5, 1), -6);
    assert_eq!(pn_polynomial(5, 2), 5);
    // P_6(t) = 8t^2 + 3t - 79: P_6(3) = 2
    assert_eq!(pn_polynomial(6, 3), 2);
    let audit = pn_audit(5, 64, 200);
    assert!(audit.pass);
    assert_eq!(audit.disc5, 136);
    assert!(!audit.disc5_is_square);
    for row in &audit.rows {
        assert!(row.min_abs > 0, "P_{} vanished at l = {}", row.n, row.argmin);
        assert!(row.root_bracketed);
    }
}

#[test]
fn spec_validation_rejects_bad_data() {
    let h0 = flat_torus(3, 8);
    // non-tracefree Phi
    let backend = h0.backend();
    let bad_phi = SymTensorField::sym2_from_fn(backend, |_, i, j| if i == j { 1.0 } else { 0.0 });
    let spec = ExpansionSpec {
        phi: Some(bad_phi),
        ..ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::AZero, h0.clone())
    };
    assert!(matches!(
        spec.validate(),
        Err(crate::CoreError::InvalidSpec { .. })
    ));
    // non-divergence-free Psi
    let bad_psi = {
        let t = SymTensorField::sym2_from_fn(backend, |y, i, j| {
            if i == 0 && j == 0 {
                y[0].sin()
            } else if i == 1 && j == 1 {
                -y[0].sin()
            } else {
                0.0
            }
        });
        t
    };
    let spec = ExpansionSpec {
        psi: Some(bad_psi),
        ..ExpansionSpec::new(4, EquationFamily::Bach4, GaugeChoice::AZero, h0.clone())
    };
    assert!(spec.validate().is_err());
    // trace-condition gauge on a scalar-flat boundary
    let spec = ExpansionSpec::new(
        5,
        EquationFamily::ExtendedBach,
        GaugeChoice::TraceCondition,
        flat_torus(4, 8),
    );
    assert!(matches!(
        spec.validate(),
        Err(crate::CoreError::GaugeSingular(_))
    ));
}

#[test]
fn extended_bach_cusp_with_explicit_traces() {
    // flat boundary: the trace condition is singular, but explicit zero
    // traces give the cusp
    let h0 = flat_torus(4, 8);
    let spec = ExpansionSpec {
        order: 7,
        ..ExpansionSpec::new(
            5,
            EquationFamily::ExtendedBach,
            GaugeChoice::ExplicitTraces(vec![]),
            h0,
        )
    };
    let result = solve_extended_bach(&spec).unwrap();
    for k in 1..=7usize {
        assert!(
            result.coefficient(k).unwrap().max_abs() < 1e-10,
            "order {k}: {}",
            result.coefficient(k).unwrap().max_abs()
        );
    }
}
