//! Assembly of the Bach tensor and its divergence-free extension as
//! normal-form jets, from the Einstein-deviation blocks, the bulk Weyl
//! blocks and the conformal Laplacian engine:
//!
//! ```text
//! (n-2) B = lap E - (n-2)/(2(n-1)) hess A - g lap A / (2(n-1)) + 2 W.E
//!           - n/(n-2) [E.E - A E/(n-1)] + [|E|^2 - A^2/(n-1)] g/(n-2)
//!           + n E - g A
//! ```
//!
//! with every term expressed blockwise in the normal-form basis
//! (`g_00 = x^-2`, `g_ij = x^-2 h_ij`).

use crate::jet::ops::{mul_scalar, raise_series, vec_inner_series};
use crate::jet::{combine, JetSeries};
use crate::tensor::{sym_idx, Rank, SymTensorField};
use crate::Result;

use super::bulk::{
    bulk_curvature, bulk_hessian_scalar, bulk_lap_scalar, bulk_laplacian, BulkCurvature, BulkSym2,
};
use super::e_tensor::EDecomposition;
use super::state::NormalFormState;

type J<P> = JetSeries<P>;
type Stf = SymTensorField;

/// Normal-form blocks of a Bach-type tensor.
#[derive(Clone)]
pub struct BachJets {
    pub b00: J<Stf>,
    pub b0i: J<Stf>,
    pub bij: J<Stf>,
}

impl BachJets {
    pub fn as_bulk(&self) -> BulkSym2 {
        BulkSym2 {
            t00: self.b00.clone(),
            t0i: self.b0i.clone(),
            tij: self.bij.clone(),
        }
    }
}

/// Raise both indices of a symmetric block: `U^{ij} = hinv^{ik} hinv^{jl} t_{kl}`.
fn raise2_sym(t: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let m = raise_series(t, hinv)?; // m^k_l = hinv^{km} t_{ml}
    let backend = t.backend();
    combine(
        &m,
        hinv,
        move || Stf::zeros(backend, Rank::Sym2),
        |mp, hq, out| {
            let backend = mp.backend();
            if !backend.is_grid() {
                // delta-multiple times inverse-metric multiple
                out.data_mut()[0] += mp.0.homog_value() * hq.homog_value();
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    for j in i..d {
                        let mut s = 0.0;
                        for l in 0..d {
                            s += 0.5 * (mp.at(p, i, l) * hq.sym_at(p, l, j)
                                + mp.at(p, j, l) * hq.sym_at(p, l, i));
                        }
                        out.data_mut()[sym_idx(d, i, j) * pts + p] += s;
                    }
                }
            }
        },
    )
}

/// Raise a covector series: `v^i = hinv^{ij} v_j`.
fn raise_vec(v: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let backend = v.backend();
    combine(
        hinv,
        v,
        move || Stf::zeros(backend, Rank::Vector),
        |hq, vp, out| {
            let backend = vp.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += hq.sym_at(p, i, j) * vp.vec_at(p, j);
                    }
                    out.data_mut()[i * pts + p] += s;
                }
            }
        },
    )
}

/// The Weyl contraction blocks `2 W_{dabc} E^{bd}` of the conformal metric
/// (already including the conformal weight, i.e. the full term of the Bach
/// formula): blockwise `2 x^2 W~ . E~`.
pub struct WeylTerm {
    pub t00: J<Stf>,
    pub t0i: J<Stf>,
    pub tij: J<Stf>,
}

pub fn weyl_term(
    state: &NormalFormState,
    e: &EDecomposition,
    w: &BulkCurvature,
) -> Result<WeylTerm> {
    let hinv = &state.hinv;
    let eup2 = raise2_sym(&e.eperp, hinv)?;
    let e0up = raise_vec(&e.ediamond, hinv)?;
    let backend = state.backend();

    // W~_{i0j0} E~^{ij} = Wn : Eup
    let t00 = combine(
        &w.wn,
        &eup2,
        move || Stf::zeros(backend, Rank::Scalar),
        |wp, uq, out| {
            let backend = wp.backend();
            let d = backend.dim();
            if !backend.is_grid() {
                out.data_mut()[0] += wp.homog_value() * uq.homog_value() * d as f64;
                return;
            }
            let pts = backend.points();
            for p in 0..pts {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += wp.sym_at(p, i, j) * uq.sym_at(p, i, j);
                    }
                }
                out.data_mut()[p] += s;
            }
        },
    )?
    .shift_mul_xk(2)
    .scale(2.0);

    // -Wm(j,k,i) Eup^{kj} - Wn_{ji} E0up^{j}
    let wm_e = combine(
        &w.wm,
        &eup2,
        move || Stf::zeros(backend, Rank::Vector),
        |wp, uq, out| {
            let backend = uq.backend();
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
                            s += wp.at(p, j, k, i) * uq.sym_at(p, k, j);
                        }
                    }
                    out.data_mut()[i * pts + p] += s;
                }
            }
        },
    )?;
    let wn_e0 = combine(
        &w.wn,
        &e0up,
        move || Stf::zeros(backend, Rank::Vector),
        |wp, vq, out| {
            let backend = vq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += wp.sym_at(p, j, i) * vq.vec_at(p, j);
                    }
                    out.data_mut()[i * pts + p] += s;
                }
            }
        },
    )?;
    let t0i = wm_e
        .add(&wn_e0)?
        .shift_mul_xk(2)
        .scale(-2.0);

    // Wt_{kilj} Eup^{lk} + [Wm(i,k,j) + Wm(j,k,i)] E0up^k + Wn_ij E00
    let wt_e = combine(
        &w.wt,
        &eup2,
        move || Stf::zeros(backend, Rank::Sym2),
        |wp, uq, out| {
            let backend = uq.backend();
            let d = backend.dim();
            if !backend.is_grid() {
                out.data_mut()[0] += wp.0.homog_value() * uq.homog_value() * (d as f64 - 1.0);
                return;
            }
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    for j in i..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            for l in 0..d {
                                s += wp.at(p, k, i, l, j) * uq.sym_at(p, l, k);
                            }
                        }
                        out.data_mut()[sym_idx(d, i, j) * pts + p] += s;
                    }
                }
            }
        },
    )?;
    let wm_e0 = combine(
        &w.wm,
        &e0up,
        move || Stf::zeros(backend, Rank::Sym2),
        |wp, vq, out| {
            let backend = vq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    for j in i..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += (wp.at(p, i, k, j) + wp.at(p, j, k, i)) * vq.vec_at(p, k);
                        }
                        out.data_mut()[sym_idx(d, i, j) * pts + p] += s;
                    }
                }
            }
        },
    )?;
    let wn_e00 = mul_scalar(&e.e00, &w.wn)?;
    let tij = wt_e
        .add(&wm_e0)?
        .add(&wn_e00)?
        .shift_mul_xk(2)
        .scale(2.0);

    Ok(WeylTerm { t00, t0i, tij })
}

/// Blockwise `E . E` with one index raised by `g` (already includes the
/// conformal factor `x^2`).
fn e_compose(state: &NormalFormState, e: &EDecomposition) -> Result<BulkSym2> {
    let hinv = &state.hinv;
    let e00_sq = mul_scalar(&e.e00, &e.e00)?;
    let edia_sq = vec_inner_series(&e.ediamond, &e.ediamond, hinv)?;
    let t00 = e00_sq.add(&edia_sq)?.shift_mul_xk(2);

    // (E.E)_{0i} = x^2 [E_00 E_0i + hinv^{jk} E_0j Eperp_{ki}]
    let e00_e0 = mul_scalar(&e.e00, &e.ediamond)?;
    let e0up = raise_vec(&e.ediamond, hinv)?;
    let backend = state.backend();
    let e0_perp = combine(
        &e0up,
        &e.eperp,
        move || Stf::zeros(backend, Rank::Vector),
        |vq, tp, out| {
            let backend = vq.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += vq.vec_at(p, j) * tp.sym_at(p, j, i);
                    }
                    out.data_mut()[i * pts + p] += s;
                }
            }
        },
    )?;
    let t0i = e00_e0.add(&e0_perp)?.shift_mul_xk(2);

    // (E.E)_{ij} = x^2 [E_0i E_0j + (Eperp . Eperp)_{ij}]
    let e0e0 = combine(
        &e.ediamond,
        &e.ediamond,
        move || Stf::zeros(backend, Rank::Sym2),
        |vp, vq, out| {
            let backend = vp.backend();
            if !backend.is_grid() {
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    for j in i..d {
                        out.data_mut()[sym_idx(d, i, j) * pts + p] +=
                            0.5 * (vp.vec_at(p, i) * vq.vec_at(p, j)
                                + vp.vec_at(p, j) * vq.vec_at(p, i));
                    }
                }
            }
        },
    )?;
    let perp2 = crate::jet::ops::compose_series(&e.eperp, &e.eperp, hinv)?;
    let tij = e0e0.add(&perp2)?.shift_mul_xk(2);

    Ok(BulkSym2 { t00, t0i, tij })
}

/// `|E|_g^2` scalar series.
pub fn e_norm2(state: &NormalFormState, e: &EDecomposition) -> Result<J<Stf>> {
    let hinv = &state.hinv;
    let e00_sq = mul_scalar(&e.e00, &e.e00)?;
    let edia_sq = vec_inner_series(&e.ediamond, &e.ediamond, hinv)?;
    let perp_sq = crate::jet::ops::inner_series(&e.eperp, &e.eperp, hinv)?;
    Ok(e00_sq
        .add(&edia_sq.scale(2.0))?
        .add(&perp_sq)?
        .shift_mul_xk(4))
}

/// Assemble the Bach blocks from the state, the Einstein-deviation blocks
/// and the bulk curvature.
pub fn bach_components(
    state: &NormalFormState,
    e: &EDecomposition,
    w: &BulkCurvature,
) -> Result<BachJets> {
    let n = state.n() as f64;
    let e_bulk = BulkSym2 {
        t00: e.e00.clone(),
        t0i: e.ediamond.clone(),
        tij: e.eperp.clone(),
    };
    let lap_e = bulk_laplacian(state, &e_bulk)?;
    let hess_a = bulk_hessian_scalar(state, &e.a)?;
    let lap_a = bulk_lap_scalar(state, &e.a)?;
    let wterm = weyl_term(state, e, w)?;
    let ee = e_compose(state, e)?;
    let e2 = e_norm2(state, e)?;
    let a2 = mul_scalar(&e.a, &e.a)?;

    let ca = (n - 2.0) / (2.0 * (n - 1.0));
    let cg = 1.0 / (2.0 * (n - 1.0));
    let cq = n / (n - 2.0);
    let cs = 1.0 / (n - 2.0);

    // scalar combination [|E|^2 - A^2/(n-1)]/(n-2) - lap A/(2(n-1)) - A,
    // which multiplies g_{ac} = x^-2 g~_{ac}
    let gscal = e2
        .add(&a2.scale(-1.0 / (n - 1.0)))?
        .scale(cs)
        .sub(&lap_a.scale(cg))?
        .sub(&e.a)?
        .shift_mul_xk(-2);

    let ae = |block: &J<Stf>| -> Result<J<Stf>> { mul_scalar(&e.a, block) };

    let b00 = {
        let mut t = lap_e.t00.sub(&hess_a.t00.scale(ca))?;
        t = t.add(&wterm.t00)?;
        t = t.sub(&ee.t00.sub(&ae(&e.e00)?.scale(1.0 / (n - 1.0)))?.scale(cq))?;
        t = t.add(&e.e00.scale(n))?;
        t = t.add(&gscal)?; // g_00 = x^-2
        t.scale(1.0 / (n - 2.0))
    };
    let b0i = {
        let mut t = lap_e.t0i.sub(&hess_a.t0i.scale(ca))?;
        t = t.add(&wterm.t0i)?;
        t = t.sub(&ee.t0i.sub(&ae(&e.ediamond)?.scale(1.0 / (n - 1.0)))?.scale(cq))?;
        t = t.add(&e.ediamond.scale(n))?;
        t.scale(1.0 / (n - 2.0))
    };
    let bij = {
        let gh = mul_scalar(&gscal.shift_mul_xk(2), &state.h)?.shift_mul_xk(-2);
        let mut t = lap_e.tij.sub(&hess_a.tij.scale(ca))?;
        t = t.add(&wterm.tij)?;
        t = t.sub(&ee.tij.sub(&ae(&e.eperp)?.scale(1.0 / (n - 1.0)))?.scale(cq))?;
        t = t.add(&e.eperp.scale(n))?;
        t = t.add(&gh)?;
        t.scale(1.0 / (n - 2.0))
    };

    Ok(BachJets { b00, b0i, bij })
}

/// Divergence-free extension: `B - X` where
///
/// ```text
/// X = (n-4)/(2(n-2)^2) { n/(n-1) A E - 2 E.E
///                        + [|E|^2 - (n+2)/(4(n-1)) A^2] g }
/// ```
///
/// For `n = 4` this is `B` itself, bit for bit.
pub fn extended_bach(
    state: &NormalFormState,
    e: &EDecomposition,
    bach: &BachJets,
) -> Result<BachJets> {
    let n = state.n() as f64;
    if state.n() == 4 {
        return Ok(bach.clone());
    }
    let cx = (n - 4.0) / (2.0 * (n - 2.0) * (n - 2.0));
    let ee = e_compose(state, e)?;
    let e2 = e_norm2(state, e)?;
    let a2 = mul_scalar(&e.a, &e.a)?;
    let gs = e2
        .add(&a2.scale(-(n + 2.0) / (4.0 * (n - 1.0))))?
        .shift_mul_xk(-2);
    let x00 = mul_scalar(&e.a, &e.e00)?
        .scale(n / (n - 1.0))
        .add(&ee.t00.scale(-2.0))?
        .add(&gs)?
        .scale(cx);
    let x0i = mul_scalar(&e.a, &e.ediamond)?
        .scale(n / (n - 1.0))
        .add(&ee.t0i.scale(-2.0))?
        .scale(cx);
    let gh = mul_scalar(&gs.shift_mul_xk(2), &state.h)?.shift_mul_xk(-2);
    let xij = mul_scalar(&e.a, &e.eperp)?
        .scale(n / (n - 1.0))
        .add(&ee.tij.scale(-2.0))?
        .add(&gh)?
        .scale(cx);
    Ok(BachJets {
        b00: bach.b00.sub(&x00)?,
        b0i: bach.b0i.sub(&x0i)?,
        bij: bach.bij.sub(&xij)?,
    })
}

/// Convenience: assemble everything (curvature, E, B, extension) at once.
pub fn assemble(state: &NormalFormState) -> Result<(EDecomposition, BulkCurvature, BachJets, BachJets)> {
    let e = super::e_tensor::e_components(state)?;
    let w = bulk_curvature(state)?;
    let b = bach_components(state, &e, &w)?;
    let hb = extended_bach(state, &e, &b)?;
    Ok((e, w, b, hb))
}
