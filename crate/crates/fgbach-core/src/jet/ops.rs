//! Typed series algebra: contractions of jets with tensor-field
//! coefficients, index raising supplied by an inverse-metric series.
//!
//! Grid kernels loop over points; on the homogeneous backend every field
//! is a multiple of the model metric (lower indices), the identity (mixed
//! indices) or the inverse model metric (upper indices), so index-chain
//! contractions multiply coefficients and full traces pick up a factor of
//! the dimension.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::payload::FieldR2Full;
use crate::tensor::{invert_sym2, sym_idx, Rank, SymTensorField};
use crate::Result;

use super::{combine, CoeffAt, JetSeries};

type J<P> = JetSeries<P>;
type Stf = SymTensorField;

/// Pointwise scalar multiply `out += s * t` for any payload rank.
pub(crate) fn k_scalar_mul(s: &Stf, t: &Stf, out: &mut Stf) {
    debug_assert_eq!(s.rank(), Rank::Scalar);
    let backend = t.backend();
    if !backend.is_grid() {
        let v = s.homog_value() * t.homog_value();
        out.data_mut()[0] += v;
        return;
    }
    let pts = backend.points();
    let comps = backend.comps(t.rank());
    for c in 0..comps {
        for p in 0..pts {
            out.data_mut()[c * pts + p] += s.scalar_at(p) * t.data()[c * pts + p];
        }
    }
}

/// `out += hinv^{ij} t_{ij}` (full trace of a symmetric 2-tensor).
pub(crate) fn k_trace(t: &Stf, hinv: &Stf, out: &mut Stf) {
    let backend = t.backend();
    let d = backend.dim();
    if !backend.is_grid() {
        out.data_mut()[0] += t.homog_value() * hinv.homog_value() * d as f64;
        return;
    }
    let pts = backend.points();
    for p in 0..pts {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += hinv.sym_at(p, i, j) * t.sym_at(p, i, j);
            }
        }
        out.data_mut()[p] += s;
    }
}

/// `out^l_j += hinv^{lk} t_{kj}` (raise the first index).
pub(crate) fn k_raise(hinv: &Stf, t: &Stf, out: &mut FieldR2Full) {
    let backend = t.backend();
    if !backend.is_grid() {
        let v = hinv.homog_value() * t.homog_value();
        let h = out.0.homog_value();
        out.0.set_homog(h + v);
        return;
    }
    let d = backend.dim();
    let pts = backend.points();
    for p in 0..pts {
        for l in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += hinv.sym_at(p, l, k) * t.sym_at(p, k, j);
                }
                out.add(p, l, j, s);
            }
        }
    }
}

/// `out_{ij} += sym(t_{ik} m^k_j)` (compose and symmetrize).
pub(crate) fn k_compose(t: &Stf, m: &FieldR2Full, out: &mut Stf) {
    let backend = t.backend();
    if !backend.is_grid() {
        out.data_mut()[0] += t.homog_value() * m.0.homog_value();
        return;
    }
    let d = backend.dim();
    let pts = backend.points();
    for p in 0..pts {
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += 0.5
                        * (t.sym_at(p, i, k) * m.at(p, k, j) + t.sym_at(p, j, k) * m.at(p, k, i));
                }
                out.data_mut()[sym_idx(d, i, j) * pts + p] += s;
            }
        }
    }
}

fn zero_of(series: &J<Stf>, rank: Rank) -> impl Fn() -> Stf {
    let backend = series.backend();
    move || Stf::zeros(backend, rank)
}

/// Product of a scalar series with a series of any rank.
pub fn mul_scalar(s: &J<Stf>, t: &J<Stf>) -> Result<J<Stf>> {
    let rank = t.coeffs()[0].rank();
    combine(s, t, zero_of(t, rank), k_scalar_mul)
}

/// Trace series `hinv^{ij} t_{ij}` with convolved inverse-metric series.
pub fn trace_series(t: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    combine(t, hinv, zero_of(t, Rank::Scalar), |tp, hq, out| {
        k_trace(tp, hq, out)
    })
}

/// Mixed-index series `m^l_j = hinv^{lk} t_{kj}`.
pub fn raise_series(t: &J<Stf>, hinv: &J<Stf>) -> Result<J<FieldR2Full>> {
    let backend = t.backend();
    combine(
        hinv,
        t,
        move || FieldR2Full::zeros(backend),
        |hq, tp, out| k_raise(hq, tp, out),
    )
}

/// Symmetrized composition series `(t . u)_{ij} = t_{ik} hinv^{kl} u_{lj}`.
pub fn compose_series(t: &J<Stf>, u: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let raised = raise_series(u, hinv)?;
    combine(t, &raised, zero_of(t, Rank::Sym2), k_compose)
}

/// Full contraction series `t_{ij} u_{kl} hinv^{ik} hinv^{jl}`.
pub fn inner_series(t: &J<Stf>, u: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let comp = compose_series(t, u, hinv)?;
    trace_series(&comp, hinv)
}

/// Contraction of two covector series with the inverse-metric series.
pub fn vec_inner_series(v: &J<Stf>, w: &J<Stf>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let backend = v.backend();
    let raised = combine(
        v,
        hinv,
        move || Stf::zeros(backend, Rank::Vector),
        |vp, hq, out| {
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
    )?;
    combine(&raised, w, zero_of(v, Rank::Scalar), |vu, wq, out| {
        let backend = vu.backend();
        if !backend.is_grid() {
            return;
        }
        let d = backend.dim();
        let pts = backend.points();
        for p in 0..pts {
            let mut s = 0.0;
            for i in 0..d {
                s += vu.vec_at(p, i) * wq.vec_at(p, i);
            }
            out.data_mut()[p] += s;
        }
    })
}

/// Inverse of a rank-2 metric series about its invertible base
/// coefficient: `inv_k = -(sum_{a<k} inv_a h_{k-a}) inv_0` as pointwise
/// matrix products.
pub fn invert_metric_series(h: &J<Stf>) -> Result<J<Stf>> {
    assert_eq!(h.lo(), 0, "metric series must start at order 0");
    let backend = h.backend();
    let base_inv = invert_sym2(&h.coeffs()[0])?;
    let hi = h.hi();

    if !backend.is_grid() {
        // scalar reciprocal series of the coefficient of the model metric
        let f0 = h.coeffs()[0].homog_value();
        let mut inv = vec![1.0 / f0];
        for k in 1..=hi {
            let mut s = 0.0;
            for a in 0..k {
                if let CoeffAt::Known(hb) = h.get(k - a) {
                    s += inv[a as usize] * hb.homog_value();
                }
            }
            inv.push(-s / f0);
        }
        let coeffs: Vec<Stf> = inv
            .into_iter()
            .map(|v| Stf::homog(backend, Rank::Sym2, v).expect("homog"))
            .collect();
        let mut out = JetSeries::new(0, coeffs);
        if h.is_exact() && h.len() == 1 {
            out.set_exact(true);
        }
        return Ok(out);
    }

    let d = backend.dim();
    let pts = backend.points();
    let mut out_coeffs: Vec<Stf> = vec![base_inv.clone()];
    // dense per-point scratch
    let mut inv_hist: Vec<Vec<f64>> = vec![dense_of(&base_inv)];
    for k in 1..=hi {
        let mut acc = vec![0.0; pts * d * d];
        for a in 0..k {
            if let CoeffAt::Known(hb) = h.get(k - a) {
                let ia = &inv_hist[a as usize];
                for p in 0..pts {
                    for i in 0..d {
                        for j in 0..d {
                            let mut s = 0.0;
                            for m in 0..d {
                                s += ia[p * d * d + i * d + m] * hb.sym_at(p, m, j);
                            }
                            acc[p * d * d + i * d + j] += s;
                        }
                    }
                }
            }
        }
        // inv_k = -acc * inv_0
        let i0 = &inv_hist[0];
        let mut invk = vec![0.0; pts * d * d];
        for p in 0..pts {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for m in 0..d {
                        s += acc[p * d * d + i * d + m] * i0[p * d * d + m * d + j];
                    }
                    invk[p * d * d + i * d + j] = -s;
                }
            }
        }
        let mut field = Stf::zeros(backend, Rank::Sym2);
        for p in 0..pts {
            for i in 0..d {
                for j in i..d {
                    let v = 0.5 * (invk[p * d * d + i * d + j] + invk[p * d * d + j * d + i]);
                    field.data_mut()[sym_idx(d, i, j) * pts + p] = v;
                }
            }
        }
        inv_hist.push(invk);
        out_coeffs.push(field);
    }
    let mut out = JetSeries::new(0, out_coeffs);
    if h.is_exact() && h.len() == 1 {
        out.set_exact(true);
    }
    Ok(out)
}

fn dense_of(sym: &Stf) -> Vec<f64> {
    let backend = sym.backend();
    let d = backend.dim();
    let pts = backend.points();
    let mut m = vec![0.0; pts * d * d];
    for p in 0..pts {
        for i in 0..d {
            for j in 0..d {
                m[p * d * d + i * d + j] = sym.sym_at(p, i, j);
            }
        }
    }
    m
}
