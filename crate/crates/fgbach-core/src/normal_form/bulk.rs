//! Bulk tensor calculus on normal-form jets.
//!
//! A symmetric bulk 2-tensor is carried as its normal-form blocks
//! `(T_00, T_0i, T_ij)`, each a (possibly Laurent) jet. The engine
//! provides the covariant operators of `g = x^-2 (dx^2 + h_x)` —
//! Laplacian, Hessian, divergence — by differentiating with the product
//! connection of `dx^2 + h_x` and adding the conformal `1/x` corrections,
//! plus the Gauss–Codazzi curvature of the product metric and its Weyl
//! blocks.
//!
//! On the homogeneous backend covector blocks vanish identically and the
//! two-index blocks are multiples of the model metric (lower indices),
//! the identity (mixed) or the inverse metric (upper indices); every
//! contraction kernel below carries its homogeneous branch.

use alloc::vec::Vec;

use crate::geometry::payload::{asym_pairs, FieldR2Full, FieldR3A, FieldR3S, FieldR4Riem};
use crate::jet::ops::{k_compose, k_scalar_mul, mul_scalar, trace_series};
use crate::jet::{combine, JetSeries};
use crate::tensor::{sym_idx, Rank, SymTensorField};
use crate::Result;

use super::state::{ricci_from_riemann_series, NormalFormState};

type J<P> = JetSeries<P>;
type Stf = SymTensorField;

/// Symmetric bulk (0,2)-tensor in normal-form blocks.
#[derive(Clone)]
pub struct BulkSym2 {
    pub t00: J<Stf>,
    pub t0i: J<Stf>,
    pub tij: J<Stf>,
}

/// Covariant derivative blocks `P_{d a c} = grad_d T_{a c}` (symmetric in
/// the trailing pair).
pub struct BulkCov3 {
    pub p000: J<Stf>,
    pub p00k: J<Stf>,
    pub pi00: J<Stf>,
    pub p0jk: J<Stf>,
    pub pi0k: J<FieldR2Full>,
    pub pijk: J<FieldR3S>,
}

fn zeros_r2full(state: &NormalFormState) -> impl Fn() -> FieldR2Full {
    let backend = state.backend();
    move || FieldR2Full::zeros(backend)
}

fn zeros_scalar(state: &NormalFormState) -> impl Fn() -> Stf {
    let backend = state.backend();
    move || Stf::zeros(backend, Rank::Scalar)
}

fn zeros_vec(state: &NormalFormState) -> impl Fn() -> Stf {
    let backend = state.backend();
    move || Stf::zeros(backend, Rank::Vector)
}

fn zeros_sym2(state: &NormalFormState) -> impl Fn() -> Stf {
    let backend = state.backend();
    move || Stf::zeros(backend, Rank::Sym2)
}

/// `out_i += sum_k M(k, i) v_k` (apply the transpose of a mixed block to
/// a covector). Homogeneous: covectors vanish.
fn k_matvec_t(m: &FieldR2Full, v: &Stf, out: &mut Stf) {
    let backend = v.backend();
    if !backend.is_grid() {
        return;
    }
    let d = backend.dim();
    let pts = backend.points();
    for p in 0..pts {
        for i in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += m.at(p, k, i) * v.vec_at(p, k);
            }
            out.data_mut()[i * pts + p] += s;
        }
    }
}

/// `out(i,k) += sum_m M(m, i) t_{m k}` with `M` mixed (delta-multiple on
/// the homogeneous backend) and `t` symmetric (model-metric multiple), so
/// the homogeneous result is a model-metric multiple.
fn k_mixed_sym_full(m: &FieldR2Full, t: &Stf, out: &mut FieldR2Full) {
    let backend = t.backend();
    if !backend.is_grid() {
        let v = m.0.homog_value() * t.homog_value();
        let h = out.0.homog_value();
        out.0.set_homog(h + v);
        return;
    }
    let d = backend.dim();
    let pts = backend.points();
    for p in 0..pts {
        for i in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for mm in 0..d {
                    s += m.at(p, mm, i) * t.sym_at(p, mm, k);
                }
                out.add(p, i, k, s);
            }
        }
    }
}

/// `out(i,k) += K_{ik} s` into a full block (model-metric multiple).
fn k_sym_scalar_full(kk: &Stf, s: &Stf, out: &mut FieldR2Full) {
    let backend = kk.backend();
    if !backend.is_grid() {
        let v = kk.homog_value() * s.homog_value();
        let h = out.0.homog_value();
        out.0.set_homog(h + v);
        return;
    }
    let d = backend.dim();
    let pts = backend.points();
    for p in 0..pts {
        for i in 0..d {
            for k in 0..d {
                out.add(p, i, k, kk.sym_at(p, i, k) * s.scalar_at(p));
            }
        }
    }
}

/// Full two-index trace of an upper-upper block against a lower-lower
/// block: `out += sum U(k,m) V(k,m)`; homogeneous picks up a factor `d`.
fn k_full_pair_trace(u: &FieldR2Full, v: &FieldR2Full, out: &mut Stf) {
    let backend = u.backend();
    let d = backend.dim();
    if !backend.is_grid() {
        out.data_mut()[0] += u.0.homog_value() * v.0.homog_value() * d as f64;
        return;
    }
    let pts = backend.points();
    for p in 0..pts {
        let mut s = 0.0;
        for k in 0..d {
            for m in 0..d {
                s += u.at(p, k, m) * v.at(p, k, m);
            }
        }
        out.data_mut()[p] += s;
    }
}

/// Symmetric-2 view of a full block: `out_ij += m(i,j) + m(j,i)`.
fn full_to_sym_sum(m: &J<FieldR2Full>, state: &NormalFormState) -> J<Stf> {
    let backend = state.backend();
    let coeffs: Vec<Stf> = m
        .coeffs()
        .iter()
        .map(|c| {
            let mut out = Stf::zeros(backend, Rank::Sym2);
            if !backend.is_grid() {
                out.data_mut()[0] = 2.0 * c.0.homog_value();
                return out;
            }
            let d = backend.dim();
            let pts = backend.points();
            for i in 0..d {
                for j in i..d {
                    for p in 0..pts {
                        out.data_mut()[sym_idx(d, i, j) * pts + p] = c.at(p, i, j) + c.at(p, j, i);
                    }
                }
            }
            out
        })
        .collect();
    let mut out = JetSeries::new(m.lo(), coeffs);
    if m.is_exact() {
        out.set_exact(true);
    }
    out
}

/// Embed a symmetric block into full storage.
fn sym_to_full(t: &J<Stf>, state: &NormalFormState) -> J<FieldR2Full> {
    let backend = state.backend();
    let coeffs: Vec<FieldR2Full> = t
        .coeffs()
        .iter()
        .map(|c| {
            let mut out = FieldR2Full::zeros(backend);
            if !backend.is_grid() {
                out.0.set_homog(c.homog_value());
                return out;
            }
            let d = backend.dim();
            let pts = backend.points();
            for i in 0..d {
                for j in 0..d {
                    for p in 0..pts {
                        out.add(p, i, j, c.sym_at(p, i, j));
                    }
                }
            }
            out
        })
        .collect();
    let mut out = JetSeries::new(t.lo(), coeffs);
    if t.is_exact() {
        out.set_exact(true);
    }
    out
}

/// Product connection derivative `grad~ T` of a bulk symmetric tensor.
pub fn nabla_tilde(state: &NormalFormState, t: &BulkSym2) -> Result<BulkCov3> {
    let lmix = &state.lmix;
    let kk = &state.kk;

    let p000 = t.t00.diff_x();

    let lv = combine(lmix, &t.t0i, zeros_vec(state), k_matvec_t)?;
    let p00k = t.t0i.diff_x().sub(&lv)?;

    let grad_t00 = state.grad_series(&t.t00);
    let pi00 = grad_t00.add_scaled(&lv, -2.0)?;

    let lt = combine(&t.tij, lmix, zeros_sym2(state), k_compose)?;
    let p0jk = t.tij.diff_x().add_scaled(&lt, -2.0)?;

    // grad~_i T_0k = D_i T_0k - L^m_i T_mk - K_ik T_00
    let dvec = state.dvec_series(&t.t0i)?;
    let lmt = combine(lmix, &t.tij, zeros_r2full(state), k_mixed_sym_full)?;
    let kt00 = combine(kk, &t.t00, zeros_r2full(state), k_sym_scalar_full)?;
    let pi0k = dvec.add_scaled(&lmt, -1.0)?.add_scaled(&kt00, -1.0)?;

    // grad~_l T_ij = D_l T_ij - K_li T_0j - K_lj T_0i
    let dsym = state.dsym2_series(&t.tij)?;
    let backend = state.backend();
    let kv = combine(
        kk,
        &t.t0i,
        move || FieldR3S::zeros(backend),
        |kp, vq, out| {
            let backend = vq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for l in 0..d {
                    for i in 0..d {
                        for j in i..d {
                            let v = -kp.sym_at(p, l, i) * vq.vec_at(p, j)
                                - kp.sym_at(p, l, j) * vq.vec_at(p, i);
                            out.add(p, l, i, j, v);
                        }
                    }
                }
            }
        },
    )?;
    let pijk = dsym.add(&kv)?;

    Ok(BulkCov3 {
        p000,
        p00k,
        pi00,
        p0jk,
        pi0k,
        pijk,
    })
}

/// `grad T` of the conformal metric: product-connection derivative plus
/// the `1/x` correction blocks.
pub fn g_cov3(state: &NormalFormState, t: &BulkSym2) -> Result<BulkCov3> {
    let nab = nabla_tilde(state, t)?;
    let p000 = nab.p000.add(&t.t00.shift_mul_xk(-1).scale(2.0))?;
    let p00k = nab.p00k.add(&t.t0i.shift_mul_xk(-1).scale(2.0))?;
    let pi00 = nab.pi00.add(&t.t0i.shift_mul_xk(-1).scale(2.0))?;
    let p0jk = nab.p0jk.add(&t.tij.shift_mul_xk(-1).scale(2.0))?;
    // (1/x)(T_ik - h_ik T_00)
    let ht00 = mul_scalar(&t.t00, &state.h)?;
    let corr = sym_to_full(&t.tij.sub(&ht00)?.shift_mul_xk(-1), state);
    let pi0k = nab.pi0k.add(&corr)?;
    // -(1/x)(h_ij T_0k + h_ik T_0j)
    let backend = state.backend();
    let hv = combine(
        &state.h,
        &t.t0i,
        move || FieldR3S::zeros(backend),
        |hp, vq, out| {
            let backend = vq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for l in 0..d {
                    for i in 0..d {
                        for j in i..d {
                            let v = -hp.sym_at(p, l, i) * vq.vec_at(p, j)
                                - hp.sym_at(p, l, j) * vq.vec_at(p, i);
                            out.add(p, l, i, j, v);
                        }
                    }
                }
            }
        },
    )?;
    let pijk = nab.pijk.add(&hv.shift_mul_xk(-1))?;
    Ok(BulkCov3 {
        p000,
        p00k,
        pi00,
        p0jk,
        pi0k,
        pijk,
    })
}

/// Rough Laplacian `lap_g T` of a bulk symmetric tensor.
pub fn bulk_laplacian(state: &NormalFormState, t: &BulkSym2) -> Result<BulkSym2> {
    let n = state.n() as f64;
    let p = g_cov3(state, t)?;
    let lmix = &state.lmix;
    let lup = &state.lup;
    let hmean = &state.hmean;
    let hinv = &state.hinv;

    // alpha blocks: grad~_0 P_{0 a c}
    let a00 = p.p000.diff_x();
    let lp = combine(lmix, &p.p00k, zeros_vec(state), k_matvec_t)?;
    let a0k = p.p00k.diff_x().sub(&lp)?;
    let lpjk = combine(&p.p0jk, lmix, zeros_sym2(state), k_compose)?;
    let ajk = p.p0jk.diff_x().add_scaled(&lpjk, -2.0)?;

    // beta blocks: h^{jk} grad~_j P_{k a c}
    let b00 = {
        let divv = state.div_vec_series(&p.pi00)?;
        let hh = mul_scalar(hmean, &p.p000)?;
        let luptr = combine(lup, &p.pi0k, zeros_scalar(state), k_full_pair_trace)?;
        divv.sub(&hh)?.add_scaled(&luptr, -2.0)?
    };
    let b0c = {
        let div1 = state.div1_r2full(&p.pi0k)?;
        let hh = mul_scalar(hmean, &p.p00k)?;
        let backend = state.backend();
        let lup_pijk = combine(
            lup,
            &p.pijk,
            move || Stf::zeros(backend, Rank::Vector),
            |up, tq, out| {
                let backend = tq.backend();
                if !backend.is_grid() {
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for c in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            for m in 0..d {
                                s += up.at(p, k, m) * tq.at(p, k, m, c);
                            }
                        }
                        out.data_mut()[c * pts + p] += s;
                    }
                }
            },
        )?;
        let lpi00 = combine(lmix, &p.pi00, zeros_vec(state), k_matvec_t)?;
        div1.sub(&hh)?.add_scaled(&lup_pijk, -1.0)?.add(&lpi00)?
    };
    let bjk = {
        let div1 = state.div1_r3s(&p.pijk)?;
        let hh = mul_scalar(hmean, &p.p0jk)?;
        let backend = state.backend();
        let lpi0k = combine(
            lmix,
            &p.pi0k,
            move || Stf::zeros(backend, Rank::Sym2),
            |lm, mq, out| {
                let backend = mq.backend();
                if !backend.is_grid() {
                    // both terms contribute lambda * pi
                    out.data_mut()[0] += 2.0 * lm.0.homog_value() * mq.0.homog_value();
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        for c in i..d {
                            let mut s = 0.0;
                            for l in 0..d {
                                s += lm.at(p, l, i) * mq.at(p, l, c) + lm.at(p, l, c) * mq.at(p, l, i);
                            }
                            out.data_mut()[sym_idx(d, i, c) * pts + p] += s;
                        }
                    }
                }
            },
        )?;
        div1.sub(&hh)?.add(&lpi0k)?
    };

    // order-x bracket
    let tr12_0 = {
        let c0 = combine(hinv, &p.pi0k, zeros_scalar(state), |hq, mq, out| {
            let backend = hq.backend();
            let d = backend.dim();
            if !backend.is_grid() {
                out.data_mut()[0] += hq.homog_value() * mq.0.homog_value() * d as f64;
                return;
            }
            let pts = backend.points();
            for p in 0..pts {
                let mut s = 0.0;
                for k in 0..d {
                    for j in 0..d {
                        s += hq.sym_at(p, k, j) * mq.at(p, k, j);
                    }
                }
                out.data_mut()[p] += s;
            }
        })?;
        p.p000.add(&c0)?
    };
    let tr12_i = {
        let backend = state.backend();
        let ci = combine(
            hinv,
            &p.pijk,
            move || Stf::zeros(backend, Rank::Vector),
            |hq, tq, out| {
                let backend = hq.backend();
                if !backend.is_grid() {
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            for j in 0..d {
                                s += hq.sym_at(p, k, j) * tq.at(p, k, j, i);
                            }
                        }
                        out.data_mut()[i * pts + p] += s;
                    }
                }
            },
        )?;
        p.p00k.add(&ci)?
    };
    let xb00 = p.p000.scale(2.0 - n).add(&tr12_0.scale(2.0))?;
    let xb0i = p
        .p00k
        .scale(4.0 - n)
        .add(&tr12_i)?
        .sub(&p.p00k)?
        .sub(&p.pi00)?;
    let xbij = p
        .p0jk
        .scale(4.0 - n)
        .sub(&full_to_sym_sum(&p.pi0k, state))?;

    Ok(BulkSym2 {
        t00: a00.add(&b00)?.shift_mul_xk(2).add(&xb00.shift_mul_xk(1))?,
        t0i: a0k.add(&b0c)?.shift_mul_xk(2).add(&xb0i.shift_mul_xk(1))?,
        tij: ajk.add(&bjk)?.shift_mul_xk(2).add(&xbij.shift_mul_xk(1))?,
    })
}

/// Bulk Hessian of a scalar series (blocks of `grad grad f` for `g`).
pub fn bulk_hessian_scalar(state: &NormalFormState, f: &J<Stf>) -> Result<BulkSym2> {
    let fp = f.diff_x();
    let fpp = fp.diff_x();
    let grad_f = state.grad_series(f);
    let grad_fp = state.grad_series(&fp);
    let t00 = fpp.add(&fp.shift_mul_xk(-1))?;
    let lgrad = combine(&state.lmix, &grad_f, zeros_vec(state), k_matvec_t)?;
    let t0i = grad_fp.sub(&lgrad)?.add(&grad_f.shift_mul_xk(-1))?;
    let kfp = combine(&state.kk, &fp, zeros_sym2(state), |kp, sq, out| {
        k_scalar_mul(sq, kp, out)
    })?;
    let hfp = mul_scalar(&fp, &state.h)?;
    let tij = state
        .hess_series(f)?
        .sub(&kfp)?
        .sub(&hfp.shift_mul_xk(-1))?;
    Ok(BulkSym2 { t00, t0i, tij })
}

/// Bulk rough Laplacian of a scalar series:
/// `x^2 (f'' - H f' + lap_h f) - (n-2) x f'`.
pub fn bulk_lap_scalar(state: &NormalFormState, f: &J<Stf>) -> Result<J<Stf>> {
    let n = state.n() as f64;
    let fp = f.diff_x();
    let fpp = fp.diff_x();
    let hfp = mul_scalar(&state.hmean, &fp)?;
    let lap = state.lap_scalar_series(f)?;
    let inner = fpp.sub(&hfp)?.add(&lap)?;
    inner
        .shift_mul_xk(2)
        .add(&fp.shift_mul_xk(1).scale(-(n - 2.0)))
}

/// Curvature of the product metric `dx^2 + h_x` and its Weyl blocks.
pub struct BulkCurvature {
    /// `R~_{0i0j}`
    pub rn: J<Stf>,
    /// `R~_{0ijk}` (antisymmetric trailing pair)
    pub rm: J<FieldR3A>,
    /// tangential `R~_{ijkl}`
    pub rt: J<FieldR4Riem>,
    pub ric00: J<Stf>,
    pub ric0i: J<Stf>,
    pub ricij: J<Stf>,
    pub scal: J<Stf>,
    /// Weyl blocks `W~_{0i0j}`, `W~_{0ijk}`, `W~_{ijkl}`
    pub wn: J<Stf>,
    pub wm: J<FieldR3A>,
    pub wt: J<FieldR4Riem>,
}

/// Assemble Gauss–Codazzi curvature and Weyl of `dx^2 + h_x`.
pub fn bulk_curvature(state: &NormalFormState) -> Result<BulkCurvature> {
    let n = state.n() as f64;
    let backend = state.backend();
    let kk = &state.kk;
    let hinv = &state.hinv;

    // normal block: R~_{0i0j} = K'_{ij} + (K.K)_{ij}
    let kdotk = crate::jet::ops::compose_series(kk, kk, hinv)?;
    let rn = kk.diff_x().add(&kdotk)?;

    // mixed block: R~_{0ijk} = D_j K_{ik} - D_k K_{ij}
    let dk = state.dsym2_series(kk)?;
    let rm = {
        let coeffs: Vec<FieldR3A> = dk
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = FieldR3A::zeros(backend);
                if backend.is_grid() {
                    let d = backend.dim();
                    let pts = backend.points();
                    for p in 0..pts {
                        for i in 0..d {
                            for (j, k) in asym_pairs(d) {
                                out.add(p, i, j, k, c.at(p, j, i, k) - c.at(p, k, i, j));
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut s = JetSeries::new(dk.lo(), coeffs);
        if dk.is_exact() {
            s.set_exact(true);
        }
        s
    };

    // tangential block: R~_{mijk} = R^h_{mijk} - K_{mj} K_{ik} + K_{mk} K_{ij}
    let kkpat = combine(
        kk,
        kk,
        move || FieldR4Riem::zeros(backend),
        |a, b, out| {
            let backend = a.backend();
            if !backend.is_grid() {
                // -K_mj K_ik + K_mk K_ij = -(coef product) * riemann pattern
                let h = out.0.homog_value();
                out.0.set_homog(h - a.homog_value() * b.homog_value());
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            let pairs = asym_pairs(d);
            for p in 0..pts {
                for (p1, &(m, i)) in pairs.iter().enumerate() {
                    for (p2, &(j, k)) in pairs.iter().enumerate() {
                        if p2 < p1 {
                            continue;
                        }
                        let v = -a.sym_at(p, m, j) * b.sym_at(p, i, k)
                            + a.sym_at(p, m, k) * b.sym_at(p, i, j);
                        out.0.add(sym_idx(pairs.len(), p1, p2), p, v);
                    }
                }
            }
        },
    )?;
    let rt = state.rh4.add(&kkpat)?;

    // bulk Ricci blocks
    let ric00 = trace_series(&rn, hinv)?;
    let ric0i = combine(
        hinv,
        &rm,
        zeros_vec(state),
        |hq, rp, out| {
            let backend = hq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        for k in 0..d {
                            s -= hq.sym_at(p, j, k) * rp.at(p, j, k, i);
                        }
                    }
                    out.data_mut()[i * pts + p] += s;
                }
            }
        },
    )?;
    let ricij = rn.add(&ricci_from_riemann_series(&rt, hinv)?)?;
    let scal = ric00.add(&trace_series(&ricij, hinv)?)?;

    // Weyl blocks per the standard decomposition with bulk dimension n
    let c1 = 1.0 / (n - 2.0);
    let c2 = 1.0 / ((n - 1.0) * (n - 2.0));
    let h_ric00 = mul_scalar(&ric00, &state.h)?;
    let h_scal = mul_scalar(&scal, &state.h)?;
    let wn = rn
        .sub(&ricij.add(&h_ric00)?.scale(c1))?
        .add(&h_scal.scale(c2))?;

    let wm = {
        let corr = combine(
            &state.h,
            &ric0i,
            move || FieldR3A::zeros(backend),
            |hp, vq, out| {
                let backend = vq.backend();
                if !backend.is_grid() {
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        for (j, k) in asym_pairs(d) {
                            let v = hp.sym_at(p, i, j) * vq.vec_at(p, k)
                                - hp.sym_at(p, i, k) * vq.vec_at(p, j);
                            out.add(p, i, j, k, v);
                        }
                    }
                }
            },
        )?;
        rm.add(&corr.scale(c1))?
    };

    let wt = {
        // Kulkarni-Nomizu style four-term block of (h, Ric~_ij)
        let kn = combine(
            &state.h,
            &ricij,
            move || FieldR4Riem::zeros(backend),
            |hp, sq, out| {
                let backend = hp.backend();
                if !backend.is_grid() {
                    // f h0 (x) s h0 four-term combo = 2 f s * pattern
                    let h = out.0.homog_value();
                    out.0.set_homog(h + 2.0 * hp.homog_value() * sq.homog_value());
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                let pairs = asym_pairs(d);
                for p in 0..pts {
                    for (p1, &(m, i)) in pairs.iter().enumerate() {
                        for (p2, &(j, k)) in pairs.iter().enumerate() {
                            if p2 < p1 {
                                continue;
                            }
                            let v = hp.sym_at(p, m, j) * sq.sym_at(p, i, k)
                                - hp.sym_at(p, m, k) * sq.sym_at(p, i, j)
                                - hp.sym_at(p, i, j) * sq.sym_at(p, m, k)
                                + hp.sym_at(p, i, k) * sq.sym_at(p, m, j);
                            out.0.add(sym_idx(pairs.len(), p1, p2), p, v);
                        }
                    }
                }
            },
        )?;
        let hh = combine(
            &state.h,
            &state.h,
            move || FieldR4Riem::zeros(backend),
            |hp, hq, out| {
                let backend = hp.backend();
                if !backend.is_grid() {
                    let h = out.0.homog_value();
                    out.0.set_homog(h + hp.homog_value() * hq.homog_value());
                    return;
                }
                let d = backend.dim();
                let pts = backend.points();
                let pairs = asym_pairs(d);
                for p in 0..pts {
                    for (p1, &(m, i)) in pairs.iter().enumerate() {
                        for (p2, &(j, k)) in pairs.iter().enumerate() {
                            if p2 < p1 {
                                continue;
                            }
                            let v = hp.sym_at(p, m, j) * hq.sym_at(p, i, k)
                                - hp.sym_at(p, m, k) * hq.sym_at(p, i, j);
                            out.0.add(sym_idx(pairs.len(), p1, p2), p, v);
                        }
                    }
                }
            },
        )?;
        let scal_hh = combine(
            &scal,
            &hh,
            move || FieldR4Riem::zeros(backend),
            |sp, hq, out| {
                let backend = sp.backend();
                if !backend.is_grid() {
                    let h = out.0.homog_value();
                    out.0.set_homog(h + sp.homog_value() * hq.0.homog_value());
                    return;
                }
                let pts = backend.points();
                for c in 0..hq.0.comps() {
                    for p in 0..pts {
                        out.0.add(c, p, sp.scalar_at(p) * hq.0.at(c, p));
                    }
                }
            },
        )?;
        rt.sub(&kn.scale(c1))?.add(&scal_hh.scale(c2))?
    };

    Ok(BulkCurvature {
        rn,
        rm,
        rt,
        ric00,
        ric0i,
        ricij,
        scal,
        wn,
        wm,
        wt,
    })
}

/// Divergence blocks of a bulk symmetric tensor with respect to `g`:
///
/// ```text
/// (div T)_0 = x^2 [T_00' + div_h T_dia - H T_00 - Lup : T_perp]
///             + x [(3-n) T_00 + tr_h T_perp]
/// (div T)_i = x^2 [T_0i' + (div_h T_perp)_i - H T_0i] + (2-n) x T_0i
/// ```
pub fn bulk_divergence(state: &NormalFormState, t: &BulkSym2) -> Result<(J<Stf>, J<Stf>)> {
    let n = state.n() as f64;
    let tr_perp = trace_series(&t.tij, &state.hinv)?;
    let d0 = {
        let divv = state.div_vec_series(&t.t0i)?;
        let ht = mul_scalar(&state.hmean, &t.t00)?;
        // Lup : T_perp = (1/2) h'^{km} T_km (raised twice)
        let tup = sym_to_full(&t.tij, state);
        let luptr = combine(&state.lup, &tup, zeros_scalar(state), k_full_pair_trace)?;
        let inner = t.t00.diff_x().add(&divv)?.sub(&ht)?.sub(&luptr)?;
        let xpart = t.t00.scale(3.0 - n).add(&tr_perp)?;
        inner.shift_mul_xk(2).add(&xpart.shift_mul_xk(1))?
    };
    let di = {
        let divt = state.div_sym2_series(&t.tij)?;
        let ht = mul_scalar(&state.hmean, &t.t0i)?;
        let inner = t.t0i.diff_x().add(&divt)?.sub(&ht)?;
        inner
            .shift_mul_xk(2)
            .add(&t.t0i.shift_mul_xk(1).scale(2.0 - n))?
    };
    Ok((d0, di))
}
