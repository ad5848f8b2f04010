use super::*;
use crate::tensor::inner;

fn delta_t3(n: usize) -> Metric2 {
    let backend = Backend::grid(3, n).unwrap();
    Metric2::new(SymTensorField::sym2_from_fn(backend, |_, i, j| {
        if i == j {
            1.0
        } else {
            0.0
        }
    }))
    .unwrap()
}

/// Conformally flat metric (2 + sin y0) * delta on the 3-torus.
fn conformal_t3(n: usize) -> Metric2 {
    let backend = Backend::grid(3, n).unwrap();
    Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
        if i == j {
            2.0 + y[0].sin()
        } else {
            0.0
        }
    }))
    .unwrap()
}

#[test]
fn spectral_derivative_of_fourier_mode_is_exact() {
    let backend = Backend::grid(3, 16).unwrap();
    let diff = Differentiator::new(backend);
    let f = SymTensorField::scalar_from_fn(backend, |y| (3.0 * y[1]).sin() + (2.0 * y[0]).cos());
    let dy1 = diff.partial(f.data(), 1);
    let dy0 = diff.partial(f.data(), 0);
    for p in 0..backend.points() {
        let y = backend.coords(p);
        assert!((dy1[p] - 3.0 * (3.0 * y[1]).cos()).abs() < 1e-12);
        assert!((dy0[p] + 2.0 * (2.0 * y[0]).sin()).abs() < 1e-12);
    }
}

#[test]
fn flat_christoffel_vanishes() {
    let h = delta_t3(8);
    let xi = christoffel(&h).unwrap();
    assert!(xi.raw().0.max_abs() < 1e-13);
}

#[test]
fn constant_metric_christoffel_vanishes() {
    let backend = Backend::grid(3, 8).unwrap();
    let h = Metric2::new(SymTensorField::sym2_from_fn(backend, |_, i, j| {
        if i == j {
            1.5
        } else {
            0.2
        }
    }))
    .unwrap();
    let xi = christoffel(&h).unwrap();
    assert!(xi.raw().0.max_abs() < 1e-13);
}

#[test]
fn conformal_christoffel_matches_hand_formula() {
    // h = e^{2 phi} delta with phi = 0.5 ln(2 + sin y0):
    // xi^i_jk = delta^i_j phi_k + delta^i_k phi_j - delta_jk phi^i.
    let h = conformal_t3(16);
    let backend = h.backend();
    let xi = christoffel(&h).unwrap();
    for p in 0..backend.points() {
        let y = backend.coords(p);
        let dphi = [0.5 * y[0].cos() / (2.0 + y[0].sin()), 0.0, 0.0];
        for m in 0..3 {
            for j in 0..3 {
                for k in j..3 {
                    let mut expect = 0.0;
                    if m == j {
                        expect += dphi[k];
                    }
                    if m == k {
                        expect += dphi[j];
                    }
                    if j == k {
                        expect -= dphi[m];
                    }
                    assert!(
                        (xi.at(p, m, j, k) - expect).abs() < 1e-10,
                        "xi^{m}_{j}{k} mismatch"
                    );
                }
            }
        }
    }
}

#[test]
fn christoffel_is_metric_compatible() {
    // D h = 0 to 1e-9 on the grid.
    let backend = Backend::grid(3, 16).unwrap();
    let h = Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + 0.1 * ((y[i % 3] + 2.0 * y[j % 3]).sin())
    }))
    .unwrap();
    let geo = SliceGeometry::new(h.clone());
    let dh = geo.cov_deriv_sym2(h.field()).unwrap();
    assert!(dh.0.max_abs() < 1e-9);
}

#[test]
fn homogeneous_curvature_closed_forms() {
    // unit round S^3: scal = 6, Ric = 2 h, P = h/2, Z = 0
    let backend = Backend::homogeneous(3, 1.0);
    let h = Metric2::model(backend).unwrap();
    let c = curvature(&h).unwrap();
    assert!((c.scal.homog_value() - 6.0).abs() < 1e-14);
    assert!((c.ricci.homog_value() - 2.0).abs() < 1e-14);
    assert!((c.schouten.homog_value() - 0.5).abs() < 1e-14);
    assert!(c.z.max_abs() < 1e-14);
}

#[test]
fn flat_torus_curvature_vanishes() {
    let h = delta_t3(8);
    let c = curvature(&h).unwrap();
    assert!(c.riemann.0.max_abs() < 1e-12);
    assert!(c.ricci.max_abs() < 1e-12);
    assert!(c.scal.max_abs() < 1e-12);
}

#[test]
fn conformal_scalar_curvature_matches_analytic_formula() {
    // scal(e^{2phi} delta) = e^{-2phi} (-2(d-1) lap phi - (d-1)(d-2)|grad phi|^2)
    // The conformal factor is not a trig polynomial, so the resolution must
    // be high enough for its spectral tail to clear the 1e-8 target.
    let h = conformal_t3(48);
    let backend = h.backend();
    let c = curvature(&h).unwrap();
    for p in 0..backend.points() {
        let y = backend.coords(p);
        let s = y[0].sin();
        let cphi = 2.0 + s;
        // phi = 0.5 ln(2+sin), flat derivatives:
        let phi1 = 0.5 * y[0].cos() / cphi;
        let phi11 = 0.5 * (-s / cphi - y[0].cos() * y[0].cos() / (cphi * cphi));
        let expect = (1.0 / cphi) * (-4.0 * phi11 - 2.0 * phi1 * phi1);
        assert!(
            (c.scal.scalar_at(p) - expect).abs() < 1e-8,
            "scal mismatch at {p}: {} vs {}",
            c.scal.scalar_at(p),
            expect
        );
    }
}

#[test]
fn contracted_bianchi_identity_on_grid() {
    // div Ric = (1/2) d scal to 1e-8
    let backend = Backend::grid(3, 16).unwrap();
    let h = Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + 0.08 * (y[0] + y[1]).sin() * if i == j { 1.0 } else { 0.5 }
            + if i + j == 2 { 0.05 * (y[2]).cos() } else { 0.0 }
    }))
    .unwrap();
    let geo = SliceGeometry::new(h.clone());
    let c = curvature(&h).unwrap();
    let div_ric = geo.divergence(&c.ricci).unwrap();
    let grad_scal = geo.grad(&c.scal).unwrap();
    let resid = div_ric.sub(&grad_scal.scale(0.5)).unwrap();
    assert!(
        resid.max_abs() < 1e-8,
        "bianchi residual {}",
        resid.max_abs()
    );
}

#[test]
fn rescaling_laws_on_homogeneous_backend() {
    // scal(c^2 h) = scal(h) / c^2 ; Schouten invariant as a (0,2) tensor
    let backend = Backend::homogeneous(3, 1.0);
    let h = Metric2::model(backend).unwrap();
    let c2 = 2.25;
    let scaled = Metric2::new(h.field().scale(c2)).unwrap();
    let base = curvature(&h).unwrap();
    let scal2 = curvature(&scaled).unwrap();
    assert!((scal2.scal.homog_value() - base.scal.homog_value() / c2).abs() < 1e-13);
    // schouten stored as multiple of h0; invariance means same coefficient
    assert!((scal2.schouten.homog_value() - base.schouten.homog_value()).abs() < 1e-13);
    assert!((scal2.ricci.homog_value() - base.ricci.homog_value()).abs() < 1e-13);
}

#[test]
fn hessian_of_sin_on_flat_torus() {
    let h = delta_t3(16);
    let backend = h.backend();
    let geo = SliceGeometry::new(h);
    let f = SymTensorField::scalar_from_fn(backend, |y| y[0].sin());
    let hess = geo.hessian(&f).unwrap();
    for p in 0..backend.points() {
        let y = backend.coords(p);
        assert!((hess.sym_at(p, 0, 0) + y[0].sin()).abs() < 1e-11);
        assert!(hess.sym_at(p, 1, 1).abs() < 1e-11);
        assert!(hess.sym_at(p, 0, 1).abs() < 1e-11);
        assert!(hess.sym_at(p, 2, 2).abs() < 1e-11);
    }
}

#[test]
fn divergence_of_constant_fields_on_flat_torus() {
    let h = delta_t3(8);
    let backend = h.backend();
    let geo = SliceGeometry::new(h);
    let c = SymTensorField::sym2_from_fn(backend, |_, i, j| 0.3 * ((i + j) as f64) + 1.0);
    assert!(geo.divergence(&c).unwrap().max_abs() < 1e-13);
}

#[test]
fn tt_project_fixes_divergence_on_flat_torus() {
    let h = delta_t3(16);
    let backend = h.backend();
    let geo = SliceGeometry::new(h.clone());
    // t = tracefree(sin(y0) e0 (x) e0): not divergence free
    let t = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        if i == 0 && j == 0 {
            y[0].sin()
        } else {
            0.0
        }
    });
    let t = tracefree(&t, &h).unwrap();
    assert!(geo.divergence(&t).unwrap().max_abs() > 1e-3);
    let tt = tt_project(&t, &h).unwrap();
    assert!(geo.divergence(&tt).unwrap().max_abs() < 1e-8);
    assert!(trace(&tt, &h).unwrap().max_abs() < 1e-12);
}

#[test]
fn tt_project_keeps_constant_tracefree_fields() {
    let h = delta_t3(8);
    let backend = h.backend();
    let t = SymTensorField::sym2_from_fn(backend, |_, i, j| {
        if i == j {
            [1.0, -0.5, -0.5][i]
        } else {
            0.25
        }
    });
    let tt = tt_project(&t, &h).unwrap();
    assert!(tt.sub(&t).unwrap().max_abs() < 1e-12);
}

#[test]
fn tt_project_kills_pure_trace_input() {
    let h = delta_t3(8);
    let backend = h.backend();
    let f = SymTensorField::scalar_from_fn(backend, |y| 1.0 + 0.3 * y[1].cos());
    let t = h.field().mul_scalar_field(&f).unwrap();
    let tt = tt_project(&t, &h).unwrap();
    assert!(tt.max_abs() < 1e-10);
}

#[test]
fn tt_project_on_curved_metric_converges() {
    let backend = Backend::grid(3, 16).unwrap();
    let h = Metric2::new(SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + 0.05 * (y[0] - y[1]).cos() * if i == j { 1.0 } else { 0.3 }
    }))
    .unwrap();
    let geo = SliceGeometry::new(h.clone());
    let t = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        0.5 * ((i * j) as f64 + 1.0) * (y[0] + y[2]).sin()
    });
    let tt = tt_project(&t, &h).unwrap();
    let scale = tt.max_abs().max(1.0);
    assert!(geo.divergence(&tt).unwrap().max_abs() < 1e-7 * scale);
    assert!(trace(&tt, &h).unwrap().max_abs() < 1e-11);
}

#[test]
fn laplacian_of_mode_on_flat_torus() {
    let h = delta_t3(16);
    let backend = h.backend();
    let geo = SliceGeometry::new(h.clone());
    let f = SymTensorField::scalar_from_fn(backend, |y| (2.0 * y[1]).cos());
    let lap = geo.laplacian_scalar(&f).unwrap();
    for p in 0..backend.points() {
        let y = backend.coords(p);
        assert!((lap.scalar_at(p) + 4.0 * (2.0 * y[1]).cos()).abs() < 1e-10);
    }
    // rank-2 rough laplacian agrees componentwise on the flat torus
    let t = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        if i == 1 && j == 2 {
            (2.0 * y[1]).cos()
        } else {
            0.0
        }
    });
    let lap2 = geo.laplacian_sym2(&t).unwrap();
    for p in 0..backend.points() {
        let y = backend.coords(p);
        assert!((lap2.sym_at(p, 1, 2) + 4.0 * (2.0 * y[1]).cos()).abs() < 1e-10);
        assert!(lap2.sym_at(p, 0, 0).abs() < 1e-10);
    }
}

#[test]
fn inner_vec_contracts_with_inverse_metric() {
    let h = delta_t3(8);
    let backend = h.backend();
    let v = SymTensorField::vector_from_fn(backend, |_, i| (i + 1) as f64);
    let n2 = crate::tensor::inner_vec(&v, &v, &h).unwrap();
    for p in 0..backend.points() {
        assert!((n2.scalar_at(p) - 14.0).abs() < 1e-13);
    }
    let _ = inner; // silence unused import when tests shrink
}
