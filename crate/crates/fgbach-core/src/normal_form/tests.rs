use super::*;
use crate::jet::ops::{inner_series, trace_series};
use crate::jet::{CoeffAt, JetSeries};
use crate::tensor::{Backend, Rank, SymTensorField};
use alloc::vec;
use alloc::vec::Vec;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

type J = JetSeries<SymTensorField>;

/// Hyperbolic-space warp factor (1 - x^2/4)^2 as a metric series on the
/// unit round sphere of dimension d.
fn warp_series(d: usize, orders: usize) -> J {
    let backend = Backend::homogeneous(d, 1.0);
    let f = |k: usize| -> f64 {
        match k {
            0 => 1.0,
            2 => -0.5,
            4 => 0.0625,
            _ => 0.0,
        }
    };
    let coeffs: Vec<SymTensorField> = (0..orders)
        .map(|k| SymTensorField::homog(backend, Rank::Sym2, f(k)).unwrap())
        .collect();
    JetSeries::polynomial(0, coeffs)
}

fn cusp_series(d: usize, n_grid: usize, orders: usize) -> J {
    let backend = Backend::grid(d, n_grid).unwrap();
    let delta = SymTensorField::sym2_from_fn(backend, |_, i, j| if i == j { 1.0 } else { 0.0 });
    let mut coeffs = vec![delta];
    for _ in 1..orders {
        coeffs.push(SymTensorField::zeros(backend, Rank::Sym2));
    }
    JetSeries::polynomial(0, coeffs)
}

/// Random smooth normal-form series on a small torus grid.
pub(crate) fn random_series(
    d: usize,
    n_grid: usize,
    orders: usize,
    seed: u64,
    zero_c1: bool,
) -> J {
    random_series_amp(d, n_grid, orders, seed, zero_c1, 0.04, 0.08)
}

pub(crate) fn random_series_amp(
    d: usize,
    n_grid: usize,
    orders: usize,
    seed: u64,
    zero_c1: bool,
    amp0: f64,
    ampk: f64,
) -> J {
    let backend = Backend::grid(d, n_grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep all Fourier content at per-axis mode <= 1 with small
    // amplitudes: nonlinear assemblies then stay far below the Nyquist
    // frequency, so spectral derivatives of derived quantities (inverse
    // metric, connection) are exact to near machine precision.
    let mut coeffs: Vec<SymTensorField> = Vec::new();
    for k in 0..orders {
        if k == 1 && zero_c1 {
            coeffs.push(SymTensorField::zeros(backend, Rank::Sym2));
            continue;
        }
        let amp = if k == 0 { amp0 } else { ampk };
        let na = d * (d + 1) / 2 * 3;
        let amps: Vec<f64> = (0..na).map(|_| rng.gen_range(-amp..amp)).collect();
        let phases: Vec<f64> = (0..na).map(|_| rng.gen_range(0.0..6.28)).collect();
        let f = SymTensorField::sym2_from_fn(backend, |y, i, j| {
            let base = if k == 0 && i == j { 1.0 } else { 0.0 };
            let c = crate::tensor::sym_idx(d, i, j);
            let a0 = y[0] + phases[3 * c];
            let a1 = y[1 % d] - y[(i + 1) % d] * if (i + 1) % d == 1 % d { 0.0 } else { 1.0 };
            let a2 = y[(i + j) % d] + phases[3 * c + 2];
            base + amps[3 * c] * a0.sin() + amps[3 * c + 1] * a1.cos() + amps[3 * c + 2] * a2.cos()
        });
        coeffs.push(f);
    }
    JetSeries::new(0, coeffs)
}

fn max_through<P: crate::jet::Coeff>(series: &JetSeries<P>, hi: i32) -> f64 {
    let mut m: f64 = 0.0;
    for k in series.lo()..=hi.min(series.hi()) {
        if let CoeffAt::Known(c) = series.get(k) {
            m = m.max(c.max_abs());
        }
    }
    m
}

#[test]
fn warp_is_einstein_and_bach_flat() {
    for (d, n) in [(3usize, 4usize), (4, 5), (5, 6)] {
        let h = warp_series(d, 9);
        let state = NormalFormState::new(n, h).unwrap();
        let e = e_components(&state).unwrap();
        assert!(max_through(&e.e00, 6) < 1e-13, "E00 nonzero for n={n}");
        assert!(max_through(&e.eperp, 6) < 1e-13, "Eperp nonzero for n={n}");
        assert!(max_through(&e.a, 7) < 1e-13);
        let w = bulk_curvature(&state).unwrap();
        assert!(max_through(&w.wn, 5) < 1e-12, "Weyl normal block n={n}");
        assert!(max_through(&w.wt, 5) < 1e-12, "Weyl tangential block n={n}");
        let b = bach_components(&state, &e, &w).unwrap();
        let scale = 1.0;
        let b00 = b.b00.regularize(scale).unwrap();
        let bij = b.bij.regularize(scale).unwrap();
        assert!(max_through(&b00, 5) < 1e-11, "B00 nonzero for n={n}");
        assert!(max_through(&bij, 5) < 1e-11, "Bij nonzero for n={n}");
        let hb = extended_bach(&state, &e, &b).unwrap();
        let hb00 = hb.b00.regularize(scale).unwrap();
        assert!(max_through(&hb00, 5) < 1e-11, "extended B00 nonzero n={n}");
    }
}

#[test]
fn flat_cusp_curvature_all_zero() {
    let h = cusp_series(3, 8, 9);
    let state = NormalFormState::new(4, h).unwrap();
    let (e, w, b, hb) = assemble(&state).unwrap();
    assert!(max_through(&e.e00, 6) < 1e-13);
    assert!(max_through(&e.ediamond, 6) < 1e-13);
    assert!(max_through(&e.eperp, 6) < 1e-13);
    assert!(max_through(&w.wt, 5) < 1e-13);
    assert!(max_through(&b.bij.regularize(1.0).unwrap(), 5) < 1e-12);
    assert!(max_through(&hb.b0i.regularize(1.0).unwrap(), 5) < 1e-12);
    // Q == 6 for the cusp
    let q = q_curvature(&state, &e).unwrap();
    let six_dev = q.coeff(0).unwrap().data()[0] - 6.0;
    assert!(six_dev.abs() < 1e-12);
    assert!(max_through(&q.truncated(6).unwrap(), 6).max(0.0) >= 6.0 - 1e-12);
}

#[test]
fn warp_q_curvature_is_six() {
    let h = warp_series(3, 9);
    let state = NormalFormState::new(4, h).unwrap();
    let e = e_components(&state).unwrap();
    let q = q_curvature(&state, &e).unwrap();
    assert!((q.coeff(0).unwrap().homog_value() - 6.0).abs() < 1e-12);
    for k in 1..=6 {
        assert!(q.coeff(k).unwrap().max_abs() < 1e-12, "Q coefficient {k}");
    }
    // A-condition series vanishes
    let a = a_condition(&e).unwrap();
    assert!(max_through(&a, 6) < 1e-13);
}

#[test]
fn warp_mass_aspect_vanishes() {
    let h = warp_series(3, 9);
    let state = NormalFormState::new(4, h).unwrap();
    let mu = mass_aspect(&state).unwrap();
    assert!(mu.max_abs() < 1e-14);
}

#[test]
fn gauss_codazzi_reproduces_e_blocks() {
    // E from contracted bulk curvature + conformal relations must equal
    // the direct assembly, pinning the sign conventions.
    let h = random_series(3, 16, 6, 7, false);
    let state = NormalFormState::new(4, h).unwrap();
    let e = e_components(&state).unwrap();
    let w = bulk_curvature(&state).unwrap();
    let n = 4.0;
    // E_00 = Ric~_00 - H/x ; E_dia = Ric~_0i ;
    // E_perp = Ric~_ij - (n-2) K/x - (H/x) h
    let e00_alt = w.ric00.sub(&state.hmean.shift_mul_xk(-1)).unwrap();
    let dev00 = e00_alt.sub(&e.e00).unwrap();
    assert!(max_through(&dev00, 3) < 1e-8, "E00 mismatch {}", max_through(&dev00, 3));
    let dev0i = w.ric0i.sub(&e.ediamond).unwrap();
    assert!(
        max_through(&dev0i, 3) < 1e-8,
        "Ediamond mismatch {}",
        max_through(&dev0i, 3)
    );
    let hh = crate::jet::ops::mul_scalar(&state.hmean, &state.h).unwrap();
    let eperp_alt = w
        .ricij
        .sub(&state.kk.shift_mul_xk(-1).scale(n - 2.0))
        .unwrap()
        .sub(&hh.shift_mul_xk(-1))
        .unwrap();
    let devp = eperp_alt.sub(&e.eperp).unwrap();
    assert!(max_through(&devp, 3) < 1e-8, "Eperp mismatch {}", max_through(&devp, 3));
}

#[test]
fn bulk_laplacian_annihilates_the_metric() {
    // lap_g g = 0: metricity of the assembled conformal connection.
    for seed in [1u64, 2] {
        let h = random_series(3, 8, 5, seed, false);
        let state = NormalFormState::new(4, h.clone()).unwrap();
        let g = BulkSym2 {
            t00: JetSeries::polynomial(-2, vec![one_scalar(&state)]),
            t0i: state.zero_vector_series(),
            tij: h.shift_mul_xk(-2),
        };
        let lap = bulk_laplacian(&state, &g).unwrap();
        assert!(max_through(&lap.t00, 2) < 1e-10, "lap g 00: {}", max_through(&lap.t00, 2));
        assert!(max_through(&lap.t0i, 2) < 1e-10, "lap g 0i");
        assert!(max_through(&lap.tij, 2) < 1e-10, "lap g ij: {}", max_through(&lap.tij, 2));
    }
}

fn one_scalar(state: &NormalFormState) -> SymTensorField {
    let backend = state.backend();
    if backend.is_grid() {
        SymTensorField::constant(backend, 1.0)
    } else {
        SymTensorField::homog(backend, Rank::Scalar, 1.0).unwrap()
    }
}

#[test]
fn bulk_laplacian_of_scalar_times_metric() {
    // lap_g (f g) = (lap_g f) g for a radial scalar series f.
    let h = random_series(3, 8, 5, 11, false);
    let state = NormalFormState::new(4, h.clone()).unwrap();
    let backend = state.backend();
    let f = JetSeries::new(
        0,
        vec![
            SymTensorField::constant(backend, 0.7),
            SymTensorField::constant(backend, -0.3),
            SymTensorField::constant(backend, 0.11),
            SymTensorField::constant(backend, 0.05),
            SymTensorField::constant(backend, -0.02),
        ],
    );
    let fg = BulkSym2 {
        t00: f.shift_mul_xk(-2),
        t0i: state.zero_vector_series(),
        tij: crate::jet::ops::mul_scalar(&f, &h).unwrap().shift_mul_xk(-2),
    };
    let lap = bulk_laplacian(&state, &fg).unwrap();
    let lap_f = bulk_lap_scalar(&state, &f).unwrap();
    // expect lap.t00 = lap_f * x^-2, lap.tij = lap_f * h * x^-2
    let dev00 = lap.t00.sub(&lap_f.shift_mul_xk(-2)).unwrap();
    assert!(max_through(&dev00, 1) < 1e-10, "{}", max_through(&dev00, 1));
    let expect_ij = crate::jet::ops::mul_scalar(&lap_f, &h).unwrap().shift_mul_xk(-2);
    let devij = lap.tij.sub(&expect_ij).unwrap();
    assert!(max_through(&devij, 1) < 1e-10, "{}", max_through(&devij, 1));
    assert!(max_through(&lap.t0i, 1) < 1e-10);
}

#[test]
fn bach_divergence_identity_on_random_jets_n4() {
    // The assembled Bach tensor of any normal-form series is divergence
    // free in dimension 4 (contracted Bianchi); this pins every term of
    // the assembly.
    let h = random_series(3, 16, 7, 3, true);
    let state = NormalFormState::new(4, h).unwrap();
    let (_e, _w, b, _hb) = assemble(&state).unwrap();
    let (d0, di) = bulk_divergence(&state, &b.as_bulk()).unwrap();
    let scale = b.bij.max_abs().max(1.0);
    // divergence blocks start at order... check through the usable window
    assert!(
        max_through(&d0, 2) < 1e-8 * scale,
        "div B (0): {}",
        max_through(&d0, 2) / scale
    );
    assert!(
        max_through(&di, 2) < 1e-8 * scale,
        "div B (i): {}",
        max_through(&di, 2) / scale
    );
}

#[test]
fn extended_bach_divergence_identity_n5() {
    // d = 4 grids stay at N = 8 for cost; quartic aliasing tails then sit
    // near amp^4, so use small amplitudes and a 1e-7 relative gate.
    let h = random_series_amp(4, 8, 8, 5, true, 0.01, 0.02);
    let state = NormalFormState::new(5, h).unwrap();
    let (_e, _w, _b, hb) = assemble(&state).unwrap();
    let (d0, di) = bulk_divergence(&state, &hb.as_bulk()).unwrap();
    let scale = hb.bij.max_abs().max(1e-3);
    assert!(
        max_through(&d0, 2) < 1e-7 * scale,
        "div hatB (0): {}",
        max_through(&d0, 2) / scale
    );
    assert!(
        max_through(&di, 2) < 1e-7 * scale,
        "div hatB (i): {}",
        max_through(&di, 2) / scale
    );
}

#[test]
fn n4_bach_blocks_vanish_at_conformal_infinity() {
    let h = random_series(3, 16, 6, 13, false);
    let state = NormalFormState::new(4, h).unwrap();
    let (_e, _w, b, _) = assemble(&state).unwrap();
    let scale = b.bij.max_abs().max(1.0);
    for (name, series) in [("b00", &b.b00), ("b0i", &b.b0i), ("bij", &b.bij)] {
        let reg = series.regularize(scale).unwrap();
        let c0 = reg.coeff(0).unwrap();
        assert!(
            c0.max_abs() < 1e-9 * scale,
            "{name} order-0 coefficient {} (scale {scale})",
            c0.max_abs()
        );
    }
}

#[test]
fn n4_bach_is_gauge_traceless() {
    // trace_g B = x^2 (B_00 + tr_h B_perp) = 0 identically for n = 4.
    let h = random_series_amp(3, 16, 6, 17, false, 0.02, 0.04);
    let state = NormalFormState::new(4, h).unwrap();
    let (_e, _w, b, _) = assemble(&state).unwrap();
    let trb = trace_series(&b.bij, &state.hinv).unwrap();
    let total = trb.add(&b.b00).unwrap();
    let scale = b.bij.max_abs().max(1.0);
    assert!(
        max_through(&total, 3) < 1e-10 * scale,
        "g-trace of B: {}",
        max_through(&total, 3) / scale
    );
}

#[test]
fn extended_bach_leading_order_matches_mean_curvature_formula() {
    // For n = 5 and general h'(0):
    // hatB_00(0) = -(n-4)/2 (|K|^2 - H^2) at x = 0.
    let h = random_series_amp(4, 8, 6, 23, false, 0.01, 0.02);
    let state = NormalFormState::new(5, h).unwrap();
    let (e, w, b, hb) = assemble(&state).unwrap();
    let _ = (&e, &w, &b);
    let hb00 = hb.b00.regularize(hb.b00.max_abs()).unwrap();
    let got = hb00.coeff(0).unwrap();
    // |K|^2 - H^2 at order 0 via the series
    let k2 = inner_series(&state.kk, &state.kk, &state.hinv).unwrap();
    let h2 = crate::jet::ops::mul_scalar(&state.hmean, &state.hmean).unwrap();
    let expect = k2.sub(&h2).unwrap().coeff(0).unwrap().scale(-0.5);
    let dev = got.sub(&expect).unwrap().max_abs();
    assert!(dev < 1e-9 * expect.max_abs().max(1.0), "deviation {dev}");
}

#[test]
fn n5_leading_tangential_block_matches_expansion() {
    // h'(0) = 0: Bij(0) = (n-4)/(n-2) [ (n-3)(K'(0) - H'(0) h0/(n-1)) - Z ].
    let h = random_series_amp(4, 8, 6, 29, true, 0.01, 0.02);
    let state = NormalFormState::new(5, h).unwrap();
    let (e, w, b, _) = assemble(&state).unwrap();
    let _ = (&e, &w);
    let n = 5.0;
    let got = b
        .bij
        .regularize(b.bij.max_abs())
        .unwrap()
        .coeff(0)
        .unwrap();
    let kp0 = state.kk.diff_x().coeff(0).unwrap();
    let hp0 = state.hmean.diff_x().coeff(0).unwrap();
    let h0m = crate::tensor::Metric2::new(state.h.coeffs()[0].clone()).unwrap();
    let ric0 = state.ric_h.coeff(0).unwrap();
    let z0 = crate::tensor::tracefree(&ric0, &h0m).unwrap();
    let mut expect = kp0.clone();
    expect
        .axpy(
            -1.0 / (n - 1.0),
            &h0m.field().mul_scalar_field(&hp0).unwrap(),
        )
        .unwrap();
    let expect = expect.scale(n - 3.0).sub(&z0).unwrap().scale((n - 4.0) / (n - 2.0));
    let dev = got.sub(&expect).unwrap().max_abs();
    assert!(
        dev < 1e-9 * expect.max_abs().max(1.0),
        "deviation {dev} vs scale {}",
        expect.max_abs()
    );
}

#[test]
fn trace_condition_series_low_orders_vanish_with_gauge() {
    // h'(0) = 0 and tr h''(0) = -scal/(n-2), tf h''(0) = -2 Z/(n-3):
    // 4|E|^2 - A^2 vanishes through order 4.
    let n = 6usize;
    let d = n - 1;
    let backend = Backend::homogeneous(d, 1.0);
    let scal = (d * (d - 1)) as f64;
    let tau2 = -scal / (2.0 * (n as f64 - 2.0)) / d as f64; // trace coefficient per h0
    let coeffs = vec![
        SymTensorField::homog(backend, Rank::Sym2, 1.0).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, 0.0).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, tau2).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, 0.033).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, -0.017).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, 0.4).unwrap(),
        SymTensorField::homog(backend, Rank::Sym2, 0.1).unwrap(),
    ];
    let h = JetSeries::new(0, coeffs);
    let state = NormalFormState::new(n, h).unwrap();
    let e = e_components(&state).unwrap();
    let tc = trace_condition(&state, &e).unwrap();
    for k in tc.lo()..=4 {
        if let CoeffAt::Known(c) = tc.get(k) {
            assert!(c.max_abs() < 1e-12, "trace condition order {k}: {}", c.max_abs());
        }
    }
}
