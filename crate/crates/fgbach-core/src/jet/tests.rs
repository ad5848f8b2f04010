use super::ops::*;
use super::*;
use crate::tensor::{Metric2, Rank};

fn scal(backend: Backend, v: f64) -> SymTensorField {
    if backend.is_grid() {
        SymTensorField::constant(backend, v)
    } else {
        SymTensorField::homog(backend, Rank::Scalar, v).unwrap()
    }
}

fn scalar_series(backend: Backend, vals: &[f64], exact: bool) -> JetSeries<SymTensorField> {
    let coeffs: Vec<_> = vals.iter().map(|v| scal(backend, *v)).collect();
    if exact {
        JetSeries::polynomial(0, coeffs)
    } else {
        JetSeries::new(0, coeffs)
    }
}

fn homog3() -> Backend {
    Backend::homogeneous(3, 1.0)
}

fn series_scalar_coeff(s: &JetSeries<SymTensorField>, order: i32) -> f64 {
    match s.get(order) {
        CoeffAt::Known(c) => {
            if c.backend().is_grid() {
                c.scalar_at(0)
            } else {
                c.homog_value()
            }
        }
        CoeffAt::Zero => 0.0,
        CoeffAt::Unknown => panic!("order {order} not determined"),
    }
}

#[test]
fn one_plus_x_times_one_minus_x() {
    let b = homog3();
    let a = scalar_series(b, &[1.0, 1.0, 0.0, 0.0], false); // 1 + x, window K=3
    let c = scalar_series(b, &[1.0, -1.0, 0.0, 0.0], false); // 1 - x
    let p = mul_scalar(&a, &c).unwrap();
    assert_eq!(p.lo(), 0);
    assert_eq!(p.hi(), 3);
    let expect = [1.0, 0.0, -1.0, 0.0];
    for (k, e) in expect.iter().enumerate() {
        assert!((series_scalar_coeff(&p, k as i32) - e).abs() < 1e-15);
    }
}

#[test]
fn square_of_warp_factor() {
    // (1 - x^2/4)^2 = 1 - x^2/2 + x^4/16
    let b = homog3();
    let f = scalar_series(b, &[1.0, 0.0, -0.25], true);
    let f2 = mul_scalar(&f, &f).unwrap();
    assert!(f2.is_exact());
    let expect = [1.0, 0.0, -0.5, 0.0, 0.0625];
    for (k, e) in expect.iter().enumerate() {
        assert!((series_scalar_coeff(&f2, k as i32) - e).abs() < 1e-15);
    }
}

#[test]
fn metric_series_times_inverse_is_identity() {
    let backend = Backend::grid(3, 8).unwrap();
    let h0 = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + 0.1 * (y[0] + (i + j) as f64).sin()
    });
    let c2 = SymTensorField::sym2_from_fn(backend, |y, i, j| 0.2 * (y[1] * (1 + i + j) as f64).cos());
    let h = JetSeries::new(0, vec![h0.clone(), SymTensorField::zeros(backend, Rank::Sym2), c2]);
    let hinv = invert_metric_series(&h).unwrap();
    // h_{im} hinv^{mj} must be the identity series through the window
    let prod = raise_series(&h, &hinv).unwrap();
    for k in 0..=prod.hi() {
        if let CoeffAt::Known(m) = prod.get(k) {
            for p in 0..backend.points() {
                for i in 0..3 {
                    for j in 0..3 {
                        let expect = if k == 0 && i == j { 1.0 } else { 0.0 };
                        assert!(
                            (m.at(p, i, j) - expect).abs() < 1e-12,
                            "identity fails at order {k}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn diff_of_hyperbolic_warp() {
    // d/dx (1 - x^2/4)^2 = -x + x^3/4
    let b = homog3();
    let f = scalar_series(b, &[1.0, 0.0, -0.5, 0.0, 0.0625], true);
    let df = f.diff_x();
    assert_eq!(df.lo(), 1); // leading zero trimmed
    assert!((series_scalar_coeff(&df, 1) + 1.0).abs() < 1e-15);
    assert!((series_scalar_coeff(&df, 2)).abs() < 1e-15);
    assert!((series_scalar_coeff(&df, 3) - 0.25).abs() < 1e-15);
}

#[test]
fn shift_div_examples() {
    let b = homog3();
    // (x^2 - x^3) / x^2 = 1 - x
    let f = scalar_series(b, &[0.0, 0.0, 1.0, -1.0], false);
    let g = f.shift_div_xk(2, None).unwrap();
    assert_eq!(g.lo(), 0);
    assert!((series_scalar_coeff(&g, 0) - 1.0).abs() < 1e-15);
    assert!((series_scalar_coeff(&g, 1) + 1.0).abs() < 1e-15);
    // (1 + x^2) / x -> inexact division
    let f = scalar_series(b, &[1.0, 0.0, 1.0], false);
    assert!(matches!(
        f.shift_div_xk(1, None),
        Err(crate::CoreError::InexactDivision { .. })
    ));
}

#[test]
fn horner_eval() {
    let b = homog3();
    let f = scalar_series(b, &[1.0, 0.0, -0.5, 0.0, 0.0625], true);
    let v = f.eval(0.2);
    assert!((v.homog_value() - 0.9801).abs() < 1e-15);
    let v0 = f.eval(0.0);
    assert!((v0.homog_value() - 1.0).abs() < 1e-15);
}

#[test]
fn trace_series_of_metric_against_itself() {
    // trace series of h against its own inverse series is the constant d
    let backend = Backend::grid(3, 8).unwrap();
    let h0 = SymTensorField::sym2_from_fn(backend, |y, i, j| {
        let base = if i == j { 1.2 } else { 0.1 };
        base + 0.05 * (y[2] + i as f64 * y[0]).sin()
    });
    let c1 = SymTensorField::sym2_from_fn(backend, |y, i, j| 0.1 * (y[0] * (1 + i + j) as f64).sin());
    let h = JetSeries::new(0, vec![h0, c1]);
    let hinv = invert_metric_series(&h).unwrap();
    let tr = trace_series(&h, &hinv).unwrap();
    assert!((series_scalar_coeff(&tr, 0) - 3.0).abs() < 1e-12);
    for p in 0..backend.points() {
        if let CoeffAt::Known(c) = tr.get(1) {
            assert!(c.scalar_at(p).abs() < 1e-12);
        }
    }
}

#[test]
fn window_rules_honest() {
    let b = homog3();
    // non-exact windows shrink: [0..3] * [0..2] -> hi = min(3+0, 0+2) = 2
    let a = scalar_series(b, &[1.0, 1.0, 1.0, 1.0], false);
    let c = scalar_series(b, &[1.0, 1.0, 1.0], false);
    let p = mul_scalar(&a, &c).unwrap();
    assert_eq!(p.hi(), 2);
    // exact polynomial on the left does not limit the window
    let a = scalar_series(b, &[2.0], true);
    let p = mul_scalar(&a, &c).unwrap();
    assert_eq!(p.hi(), 2);
    assert!((series_scalar_coeff(&p, 2) - 2.0).abs() < 1e-15);
}

#[test]
fn laurent_shift_and_regularize() {
    let b = homog3();
    let f = scalar_series(b, &[1.0, 2.0], false).shift_mul_xk(-1);
    assert_eq!(f.lo(), -1);
    // 1/x + 2: regularize must fail (pole is real)
    assert!(f.regularize(1.0).is_err());
    // but a numerically-zero pole coefficient trims away
    let g = scalar_series(b, &[1e-12, 2.0], false).shift_mul_xk(-1);
    let r = g.regularize(1.0).unwrap();
    assert_eq!(r.lo(), 0);
    assert!((series_scalar_coeff(&r, 0) - 2.0).abs() < 1e-15);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_series() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0f64..2.0, 5)
    }

    proptest! {
        #[test]
        fn cauchy_product_associativity(a in arb_series(), b in arb_series(), c in arb_series()) {
            let backend = Backend::homogeneous(3, 1.0);
            let ja = scalar_series(backend, &a, false);
            let jb = scalar_series(backend, &b, false);
            let jc = scalar_series(backend, &c, false);
            let left = mul_scalar(&mul_scalar(&ja, &jb).unwrap(), &jc).unwrap();
            let right = mul_scalar(&ja, &mul_scalar(&jb, &jc).unwrap()).unwrap();
            prop_assert_eq!(left.hi(), right.hi());
            for k in 0..=left.hi() {
                let l = series_scalar_coeff(&left, k);
                let r = series_scalar_coeff(&right, k);
                prop_assert!((l - r).abs() < 1e-12);
            }
        }

        #[test]
        fn cauchy_product_distributivity(a in arb_series(), b in arb_series(), c in arb_series()) {
            let backend = Backend::homogeneous(3, 1.0);
            let ja = scalar_series(backend, &a, false);
            let jb = scalar_series(backend, &b, false);
            let jc = scalar_series(backend, &c, false);
            let left = mul_scalar(&ja, &jb.add(&jc).unwrap()).unwrap();
            let right = mul_scalar(&ja, &jb).unwrap().add(&mul_scalar(&ja, &jc).unwrap()).unwrap();
            for k in 0..=left.hi().min(right.hi()) {
                let l = series_scalar_coeff(&left, k);
                let r = series_scalar_coeff(&right, k);
                prop_assert!((l - r).abs() < 1e-12);
            }
        }

        #[test]
        fn derivative_undoes_integration_above_constant(a in arb_series()) {
            let backend = Backend::homogeneous(3, 1.0);
            let ja = scalar_series(backend, &a, false);
            // integrate: coefficient k -> k+1 with weight 1/(k+1)
            let coeffs: Vec<_> = core::iter::once(scal(backend, 0.0))
                .chain(a.iter().enumerate().map(|(k, v)| scal(backend, v / (k as f64 + 1.0))))
                .collect();
            let integrated = JetSeries::new(0, coeffs);
            let back = integrated.diff_x();
            for k in 0..=back.hi().min(ja.hi()) {
                prop_assert!((series_scalar_coeff(&back, k) - series_scalar_coeff(&ja, k)).abs() < 1e-12);
            }
        }
    }
}
