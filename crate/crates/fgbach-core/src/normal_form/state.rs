//! Per-run normal-form state: the radial metric series `h_x` with every
//! derived series the curvature assembly consumes (inverse, extrinsic
//! curvature, mean curvature, slice connection and slice curvature), plus
//! slice-wise spatial operators acting on whole series through the
//! `x`-dependent connection.

use alloc::vec::Vec;

use crate::geometry::payload::{asym_pairs, Block, FieldR2Full, FieldR3S, FieldR4Riem};
use crate::geometry::spectral::Differentiator;
use crate::jet::ops::{mul_scalar, raise_series, trace_series};
use crate::jet::{combine, Coeff, JetSeries};
use crate::tensor::{sym_idx, Backend, Rank, SymTensorField};
use crate::Result;

type J<P> = JetSeries<P>;
type Stf = SymTensorField;

/// Full 3-index spatial payload (no symmetry): used for `partial(R2Full)`.
#[derive(Clone, Debug)]
pub struct FieldR3F(pub Block);

impl FieldR3F {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let d = backend.dim();
        FieldR3F(Block::zeros(backend, d * d * d))
    }
    #[inline]
    pub fn at(&self, p: usize, a: usize, b: usize, c: usize) -> f64 {
        let d = self.0.backend().dim();
        self.0.at((a * d + b) * d + c, p)
    }
}

/// 4-index payload `t_{m l (ij)}`, symmetric in the trailing pair: used
/// for `partial(R3S)`.
#[derive(Clone, Debug)]
pub struct FieldR4S(pub Block);

impl FieldR4S {
    pub fn backend(&self) -> Backend {
        self.0.backend()
    }

    pub fn zeros(backend: Backend) -> Self {
        let d = backend.dim();
        FieldR4S(Block::zeros(backend, d * d * (d * (d + 1) / 2)))
    }
    #[inline]
    pub fn at(&self, p: usize, m: usize, l: usize, i: usize, j: usize) -> f64 {
        let d = self.0.backend().dim();
        let sn = d * (d + 1) / 2;
        self.0.at((m * d + l) * sn + sym_idx(d, i, j), p)
    }
}

impl Coeff for FieldR3F {
    fn backend(&self) -> Backend {
        self.0.backend()
    }
    fn zeros_like(&self) -> Self {
        FieldR3F(Block::zeros(self.0.backend(), self.0.comps()))
    }
    fn axpy_from(&mut self, s: f64, other: &Self) {
        self.0.axpy(s, &other.0);
    }
    fn scale_mut(&mut self, s: f64) {
        self.0.scale_mut(s);
    }
    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

impl Coeff for FieldR4S {
    fn backend(&self) -> Backend {
        self.0.backend()
    }
    fn zeros_like(&self) -> Self {
        FieldR4S(Block::zeros(self.0.backend(), self.0.comps()))
    }
    fn axpy_from(&mut self, s: f64, other: &Self) {
        self.0.axpy(s, &other.0);
    }
    fn scale_mut(&mut self, s: f64) {
        self.0.scale_mut(s);
    }
    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

/// The normal-form metric series and its derived caches. Rebuilt whole
/// whenever the underlying jet changes; never patched in place.
pub struct NormalFormState {
    n: usize,
    backend: Backend,
    diff: Differentiator,
    /// `h_x` series (leading order 0).
    pub h: J<Stf>,
    /// inverse metric series
    pub hinv: J<Stf>,
    /// h'
    pub hp: J<Stf>,
    /// extrinsic curvature series `K = -h'/2`
    pub kk: J<Stf>,
    /// mixed connection block `L^i_j = (1/2) h^{ik} h'_{kj}`
    pub lmix: J<FieldR2Full>,
    /// both-indices-raised `L`: `(1/2) h^{ik} h^{jl} h'_{kl}`
    pub lup: J<FieldR2Full>,
    /// mean-curvature series `H = tr K`
    pub hmean: J<Stf>,
    /// slice Christoffel series (grid only)
    pub xi: Option<J<FieldR3S>>,
    /// slice Riemann series (lowered)
    pub rh4: J<FieldR4Riem>,
    /// slice Ricci series
    pub ric_h: J<Stf>,
    /// slice scalar-curvature series
    pub scal_h: J<Stf>,
}

impl NormalFormState {
    pub fn new(n: usize, h: J<Stf>) -> Result<Self> {
        assert!(h.lo() == 0, "metric series must start at order 0");
        let backend = h.backend();
        let diff = Differentiator::new(backend);
        let hinv = crate::jet::ops::invert_metric_series(&h)?;
        let hp = h.diff_x();
        let kk = hp.scale(-0.5);
        let lmix = raise_series(&hp, &hinv)?.scale(0.5);
        let lup = raise_r2full(&lmix, &hinv)?;
        let hmean = trace_series(&kk, &hinv)?;

        let (xi, rh4) = if backend.is_grid() {
            let xi = christoffel_series(&h, &hinv, &diff)?;
            let rh4 = riemann_series(&h, &xi, &diff)?;
            (Some(xi), rh4)
        } else {
            // R(f h0) = kappa f * (h0_ik h0_jl - h0_il h0_jk)
            let kappa = backend.model_curvature();
            let coeffs: Vec<FieldR4Riem> = h
                .coeffs()
                .iter()
                .map(|c| {
                    let mut r = FieldR4Riem::zeros(backend);
                    r.0.set_homog(kappa * c.homog_value());
                    r
                })
                .collect();
            let mut rh4 = JetSeries::new(0, coeffs);
            if h.is_exact() {
                rh4.set_exact(true);
            }
            (None, rh4)
        };
        let ric_h = ricci_from_riemann_series(&rh4, &hinv)?;
        let scal_h = trace_series(&ric_h, &hinv)?;
        Ok(NormalFormState {
            n,
            backend,
            diff,
            h,
            hinv,
            hp,
            kk,
            lmix,
            lup,
            hmean,
            xi,
            rh4,
            ric_h,
            scal_h,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary_dim(&self) -> usize {
        self.backend.dim()
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn differentiator(&self) -> &Differentiator {
        &self.diff
    }

    /// Identity-shaped zero series helpers.
    pub fn zero_scalar_series(&self) -> J<Stf> {
        JetSeries::zero_poly(&Stf::zeros(self.backend, Rank::Scalar))
    }

    pub fn zero_vector_series(&self) -> J<Stf> {
        JetSeries::zero_poly(&Stf::zeros(self.backend, Rank::Vector))
    }

    pub fn zero_sym2_series(&self) -> J<Stf> {
        JetSeries::zero_poly(&Stf::zeros(self.backend, Rank::Sym2))
    }

    /// Coefficient-wise spatial gradient of a scalar series.
    pub fn grad_series(&self, f: &J<Stf>) -> J<Stf> {
        if !self.backend.is_grid() {
            return self.zero_vector_series();
        }
        let d = self.backend.dim();
        let pts = self.backend.points();
        let coeffs: Vec<Stf> = f
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = Stf::zeros(self.backend, Rank::Vector);
                for i in 0..d {
                    let der = self.diff.partial(c.data(), i);
                    out.data_mut()[i * pts..(i + 1) * pts].copy_from_slice(&der);
                }
                out
            })
            .collect();
        let mut out = JetSeries::new(f.lo(), coeffs);
        if f.is_exact() {
            out.set_exact(true);
        }
        out
    }

    /// `(D t)_{l i j}` series through the `x`-dependent connection.
    pub fn dsym2_series(&self, t: &J<Stf>) -> Result<J<FieldR3S>> {
        if !self.backend.is_grid() {
            return Ok(JetSeries::zero_poly(&FieldR3S::zeros(self.backend)));
        }
        let d = self.backend.dim();
        let pts = self.backend.points();
        // partial-derivative part, coefficientwise
        let coeffs: Vec<FieldR3S> = t
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = FieldR3S::zeros(self.backend);
                for i in 0..d {
                    for j in i..d {
                        let comp = &c.data()[sym_idx(d, i, j) * pts..(sym_idx(d, i, j) + 1) * pts];
                        for l in 0..d {
                            let der = self.diff.partial(comp, l);
                            for (p, v) in der.iter().enumerate() {
                                out.set(p, l, i, j, *v);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut dpart = JetSeries::new(t.lo(), coeffs);
        if t.is_exact() {
            dpart.set_exact(true);
        }
        let xi = self.xi.as_ref().unwrap();
        let backend = self.backend;
        let corr = combine(
            xi,
            t,
            move || FieldR3S::zeros(backend),
            |xp, tq, out| {
                let backend = tq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for l in 0..d {
                        for i in 0..d {
                            for j in i..d {
                                let mut s = 0.0;
                                for m in 0..d {
                                    s -= xp.at(p, m, l, i) * tq.sym_at(p, m, j);
                                    s -= xp.at(p, m, l, j) * tq.sym_at(p, i, m);
                                }
                                out.add(p, l, i, j, s);
                            }
                        }
                    }
                }
            },
        )?;
        dpart.add(&corr)
    }

    /// `(D v)_{i j} = partial_i v_j - xi^m_{ij} v_m` series.
    pub fn dvec_series(&self, v: &J<Stf>) -> Result<J<FieldR2Full>> {
        if !self.backend.is_grid() {
            return Ok(JetSeries::zero_poly(&FieldR2Full::zeros(self.backend)));
        }
        let d = self.backend.dim();
        let pts = self.backend.points();
        let coeffs: Vec<FieldR2Full> = v
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = FieldR2Full::zeros(self.backend);
                for j in 0..d {
                    let comp = &c.data()[j * pts..(j + 1) * pts];
                    for i in 0..d {
                        let der = self.diff.partial(comp, i);
                        for (p, val) in der.iter().enumerate() {
                            out.add(p, i, j, *val);
                        }
                    }
                }
                out
            })
            .collect();
        let mut dpart = JetSeries::new(v.lo(), coeffs);
        if v.is_exact() {
            dpart.set_exact(true);
        }
        let xi = self.xi.as_ref().unwrap();
        let backend = self.backend;
        let corr = combine(
            xi,
            v,
            move || FieldR2Full::zeros(backend),
            |xp, vq, out| {
                let backend = vq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        for j in 0..d {
                            let mut s = 0.0;
                            for m in 0..d {
                                s -= xp.at(p, m, i, j) * vq.vec_at(p, m);
                            }
                            out.add(p, i, j, s);
                        }
                    }
                }
            },
        )?;
        dpart.add(&corr)
    }

    /// Divergence series `(div t)_i = h^{jk} D_j t_{ki}`.
    pub fn div_sym2_series(&self, t: &J<Stf>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_vector_series());
        }
        let dt = self.dsym2_series(t)?;
        let backend = self.backend;
        combine(
            &self.hinv,
            &dt,
            move || Stf::zeros(backend, Rank::Vector),
            |hq, dp, out| {
                let backend = dp.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        let mut s = 0.0;
                        for j in 0..d {
                            for k in 0..d {
                                s += hq.sym_at(p, j, k) * dp.at(p, j, k, i);
                            }
                        }
                        out.data_mut()[i * pts + p] += s;
                    }
                }
            },
        )
    }

    /// Scalar divergence of a covector series: `h^{jk} D_j v_k`.
    pub fn div_vec_series(&self, v: &J<Stf>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_scalar_series());
        }
        let dv = self.dvec_series(v)?;
        let backend = self.backend;
        combine(
            &self.hinv,
            &dv,
            move || Stf::zeros(backend, Rank::Scalar),
            |hq, dp, out| {
                let backend = dp.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    let mut s = 0.0;
                    for j in 0..d {
                        for k in 0..d {
                            s += hq.sym_at(p, j, k) * dp.at(p, j, k);
                        }
                    }
                    out.data_mut()[p] += s;
                }
            },
        )
    }

    /// Slice Hessian series of a scalar series.
    pub fn hess_series(&self, f: &J<Stf>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_sym2_series());
        }
        let grad = self.grad_series(f);
        let dgrad = self.dvec_series(&grad)?;
        // symmetric by construction; repack
        let backend = self.backend;
        let d = backend.dim();
        let pts = backend.points();
        let coeffs: Vec<Stf> = dgrad
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = Stf::zeros(backend, Rank::Sym2);
                for i in 0..d {
                    for j in i..d {
                        for p in 0..pts {
                            out.data_mut()[sym_idx(d, i, j) * pts + p] =
                                0.5 * (c.at(p, i, j) + c.at(p, j, i));
                        }
                    }
                }
                out
            })
            .collect();
        let mut out = JetSeries::new(dgrad.lo(), coeffs);
        if dgrad.is_exact() {
            out.set_exact(true);
        }
        Ok(out)
    }

    /// Slice rough Laplacian series of a scalar series.
    pub fn lap_scalar_series(&self, f: &J<Stf>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_scalar_series());
        }
        let hess = self.hess_series(f)?;
        trace_series(&hess, &self.hinv)
    }

    /// Covariant divergence in the first slot of a mixed-block series:
    /// `out_c = h^{jk} D_j m_{k c}`.
    pub fn div1_r2full(&self, m: &J<FieldR2Full>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_vector_series());
        }
        let d = self.backend.dim();
        let pts = self.backend.points();
        let coeffs: Vec<FieldR3F> = m
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = FieldR3F::zeros(self.backend);
                for k in 0..d {
                    for cc in 0..d {
                        let comp: Vec<f64> = (0..pts).map(|p| c.at(p, k, cc)).collect();
                        for j in 0..d {
                            let der = self.diff.partial(&comp, j);
                            for (p, v) in der.iter().enumerate() {
                                out.0.add((j * d + k) * d + cc, p, *v);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut dm = JetSeries::new(m.lo(), coeffs);
        if m.is_exact() {
            dm.set_exact(true);
        }
        let backend = self.backend;
        // h^{jk} [ dm_{jkc} ]
        let main = combine(
            &self.hinv,
            &dm,
            move || Stf::zeros(backend, Rank::Vector),
            |hq, dp, out| {
                let backend = hq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for c in 0..d {
                        let mut s = 0.0;
                        for j in 0..d {
                            for k in 0..d {
                                s += hq.sym_at(p, j, k) * dp.at(p, j, k, c);
                            }
                        }
                        out.data_mut()[c * pts + p] += s;
                    }
                }
            },
        )?;
        // correction terms: - h^{jk} xi^e_{jk} m_{ec} - h^{jk} xi^e_{jc} m_{ke}
        let xi = self.xi.as_ref().unwrap();
        let xim = combine(
            xi,
            m,
            move || FieldR3F::zeros(backend),
            |xp, mq, out| {
                let backend = mq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for j in 0..d {
                        for k in 0..d {
                            for c in 0..d {
                                let mut s = 0.0;
                                for e in 0..d {
                                    s -= xp.at(p, e, j, k) * mq.at(p, e, c);
                                    s -= xp.at(p, e, j, c) * mq.at(p, k, e);
                                }
                                out.0.add((j * d + k) * d + c, p, s);
                            }
                        }
                    }
                }
            },
        )?;
        let corr = combine(
            &self.hinv,
            &xim,
            move || Stf::zeros(backend, Rank::Vector),
            |hq, dp, out| {
                let backend = hq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for c in 0..d {
                        let mut s = 0.0;
                        for j in 0..d {
                            for k in 0..d {
                                s += hq.sym_at(p, j, k) * dp.at(p, j, k, c);
                            }
                        }
                        out.data_mut()[c * pts + p] += s;
                    }
                }
            },
        )?;
        main.add(&corr)
    }

    /// Covariant divergence in the first slot of a `t_{l (ij)}` series:
    /// `out_{ic} = h^{jl} D_j t_{l i c}`.
    pub fn div1_r3s(&self, t: &J<FieldR3S>) -> Result<J<Stf>> {
        if !self.backend.is_grid() {
            return Ok(self.zero_sym2_series());
        }
        let d = self.backend.dim();
        let sn = d * (d + 1) / 2;
        let coeffs: Vec<FieldR4S> = t
            .coeffs()
            .iter()
            .map(|c| {
                let mut out = FieldR4S::zeros(self.backend);
                for l in 0..d {
                    for s_idx in 0..sn {
                        let comp = c.0.comp(l * sn + s_idx);
                        for j in 0..d {
                            let der = self.diff.partial(comp, j);
                            for (p, v) in der.iter().enumerate() {
                                out.0.add((j * d + l) * sn + s_idx, p, *v);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut dt = JetSeries::new(t.lo(), coeffs);
        if t.is_exact() {
            dt.set_exact(true);
        }
        let backend = self.backend;
        let main = combine(
            &self.hinv,
            &dt,
            move || Stf::zeros(backend, Rank::Sym2),
            |hq, dp, out| {
                let backend = hq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        for c in i..d {
                            let mut s = 0.0;
                            for j in 0..d {
                                for l in 0..d {
                                    s += hq.sym_at(p, j, l) * dp.at(p, j, l, i, c);
                                }
                            }
                            out.data_mut()[sym_idx(d, i, c) * pts + p] += s;
                        }
                    }
                }
            },
        )?;
        // corrections: -h^{jl} [ xi^e_{jl} t_{eic} + xi^e_{ji} t_{lec} + xi^e_{jc} t_{lie} ]
        let xi = self.xi.as_ref().unwrap();
        let xit = combine(
            xi,
            t,
            move || FieldR4S::zeros(backend),
            |xp, tq, out| {
                let backend = tq.backend();
                let d = backend.dim();
                let sn = d * (d + 1) / 2;
                let pts = backend.points();
                for p in 0..pts {
                    for j in 0..d {
                        for l in 0..d {
                            for i in 0..d {
                                for c in i..d {
                                    let mut s = 0.0;
                                    for e in 0..d {
                                        s -= xp.at(p, e, j, l) * tq.at(p, e, i, c);
                                        s -= xp.at(p, e, j, i) * tq.at(p, l, e, c);
                                        s -= xp.at(p, e, j, c) * tq.at(p, l, i, e);
                                    }
                                    out.0.add((j * d + l) * sn + sym_idx(d, i, c), p, s);
                                }
                            }
                        }
                    }
                }
            },
        )?;
        let corr = combine(
            &self.hinv,
            &xit,
            move || Stf::zeros(backend, Rank::Sym2),
            |hq, dp, out| {
                let backend = hq.backend();
                let d = backend.dim();
                let pts = backend.points();
                for p in 0..pts {
                    for i in 0..d {
                        for c in i..d {
                            let mut s = 0.0;
                            for j in 0..d {
                                for l in 0..d {
                                    s += hq.sym_at(p, j, l) * dp.at(p, j, l, i, c);
                                }
                            }
                            out.data_mut()[sym_idx(d, i, c) * pts + p] += s;
                        }
                    }
                }
            },
        )?;
        main.add(&corr)
    }

    /// Trace of a symmetric-2 series against the inverse-metric series.
    pub fn trace_of(&self, t: &J<Stf>) -> Result<J<Stf>> {
        trace_series(t, &self.hinv)
    }

    /// Mean-curvature-weighted scalar product helper `H * f`.
    pub fn times_hmean(&self, f: &J<Stf>) -> Result<J<Stf>> {
        mul_scalar(&self.hmean, f)
    }
}

/// Christoffel series of the metric series: coefficientwise derivative of
/// `h` contracted with the inverse series.
fn christoffel_series(h: &J<Stf>, hinv: &J<Stf>, diff: &Differentiator) -> Result<J<FieldR3S>> {
    let backend = h.backend();
    let d = backend.dim();
    let pts = backend.points();
    // dh-series: (l, (i,j)) = partial_l h_ij, coefficientwise
    let coeffs: Vec<FieldR3S> = h
        .coeffs()
        .iter()
        .map(|c| {
            let mut out = FieldR3S::zeros(backend);
            for i in 0..d {
                for j in i..d {
                    let comp = &c.data()[sym_idx(d, i, j) * pts..(sym_idx(d, i, j) + 1) * pts];
                    for l in 0..d {
                        let der = diff.partial(comp, l);
                        for (p, v) in der.iter().enumerate() {
                            out.set(p, l, i, j, *v);
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut dh = JetSeries::new(h.lo(), coeffs);
    if h.is_exact() {
        dh.set_exact(true);
    }
    combine(
        hinv,
        &dh,
        move || FieldR3S::zeros(backend),
        |hq, dp, out| {
            let backend = hq.backend();
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for m in 0..d {
                    for j in 0..d {
                        for k in j..d {
                            let mut s = 0.0;
                            for l in 0..d {
                                s += 0.5
                                    * hq.sym_at(p, m, l)
                                    * (dp.at(p, j, l, k) + dp.at(p, k, l, j) - dp.at(p, l, j, k));
                            }
                            out.add(p, m, j, k, s);
                        }
                    }
                }
            }
        },
    )
}

/// Slice Riemann series (lowered) from the Christoffel series.
fn riemann_series(h: &J<Stf>, xi: &J<FieldR3S>, diff: &Differentiator) -> Result<J<FieldR4Riem>> {
    let backend = h.backend();
    let d = backend.dim();
    let pts = backend.points();
    let sn = d * (d + 1) / 2;
    // curv^e_{i[jk]} = partial_j xi^e_{ik} - partial_k xi^e_{ij} + xi xi - xi xi
    // realized as a full 4-index block (e, i, j, k) antisym in (j, k);
    // stored in FieldR4S-like raw layout (e*d + i, pair) via Block.
    let apairs = asym_pairs(d);
    let alen = apairs.len();
    let dpart_coeffs: Vec<Block> = xi
        .coeffs()
        .iter()
        .map(|c| {
            let mut out = Block::zeros(backend, d * d * alen);
            for e in 0..d {
                for i in 0..d {
                    for (ap, &(j, k)) in apairs.iter().enumerate() {
                        // partial_j xi^e_{ik}
                        let comp_ik = c.0.comp(e * sn + sym_idx(d, i, k));
                        let dj = diff.partial(comp_ik, j);
                        let comp_ij = c.0.comp(e * sn + sym_idx(d, i, j));
                        let dk = diff.partial(comp_ij, k);
                        for p in 0..pts {
                            out.add((e * d + i) * alen + ap, p, dj[p] - dk[p]);
                        }
                    }
                }
            }
            out
        })
        .collect();
    // xi*xi part via convolution
    let mut dpart = JetSeries::new(xi.lo(), dpart_coeffs.into_iter().map(RawBlock).collect());
    if xi.is_exact() {
        dpart.set_exact(true);
    }
    let xixi = combine(
        xi,
        xi,
        move || RawBlock(Block::zeros(backend, d * d * alen)),
        |a, b, out| {
            let backend = a.backend();
            let d = backend.dim();
            let pts = backend.points();
            let apairs = asym_pairs(d);
            for p in 0..pts {
                for e in 0..d {
                    for i in 0..d {
                        for (ap, &(j, k)) in apairs.iter().enumerate() {
                            let mut s = 0.0;
                            for f in 0..d {
                                s += a.at(p, e, j, f) * b.at(p, f, i, k)
                                    - a.at(p, e, k, f) * b.at(p, f, i, j);
                            }
                            out.0.add((e * d + i) * apairs.len() + ap, p, s);
                        }
                    }
                }
            }
        },
    )?;
    // combine both parts then lower with h
    let curv = dpart.add(&xixi)?;
    combine(
        h,
        &curv,
        move || FieldR4Riem::zeros(backend),
        |hc, cc, out| {
            let backend = hc.backend();
            let d = backend.dim();
            let pts = backend.points();
            let apairs = asym_pairs(d);
            for p in 0..pts {
                for (p1, &(m, i)) in apairs.iter().enumerate() {
                    for (p2, &(j, k)) in apairs.iter().enumerate() {
                        if p2 < p1 {
                            continue;
                        }
                        let mut v = 0.0;
                        for e in 0..d {
                            v += hc.sym_at(p, m, e) * cc.at(p, e, i, j, k);
                        }
                        out.0
                            .add(sym_idx(apairs.len(), p1, p2), p, v);
                    }
                }
            }
        },
    )
}

/// Raw 4-index block (e, i, [jk]) used only inside the Riemann assembly.
#[derive(Clone, Debug)]
struct RawBlock(Block);

impl RawBlock {
    #[inline]
    fn at(&self, p: usize, e: usize, i: usize, j: usize, k: usize) -> f64 {
        if j == k {
            return 0.0;
        }
        let d = self.0.backend().dim();
        let alen = d * (d - 1) / 2;
        let (ap, sign) = if j < k {
            (crate::geometry::payload::asym_idx(d, j, k), 1.0)
        } else {
            (crate::geometry::payload::asym_idx(d, k, j), -1.0)
        };
        sign * self.0.at((e * d + i) * alen + ap, p)
    }
}

impl Coeff for RawBlock {
    fn backend(&self) -> Backend {
        self.0.backend()
    }
    fn zeros_like(&self) -> Self {
        RawBlock(Block::zeros(self.0.backend(), self.0.comps()))
    }
    fn axpy_from(&mut self, s: f64, other: &Self) {
        self.0.axpy(s, &other.0);
    }
    fn scale_mut(&mut self, s: f64) {
        self.0.scale_mut(s);
    }
    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

/// Ricci series `Ric_{jl} = hinv^{ik} R_{ijkl}` from a Riemann series.
pub fn ricci_from_riemann_series(r4: &J<FieldR4Riem>, hinv: &J<Stf>) -> Result<J<Stf>> {
    let backend = r4.backend();
    combine(
        hinv,
        r4,
        move || Stf::zeros(backend, Rank::Sym2),
        |hq, rp, out| {
            let backend = hq.backend();
            let d = backend.dim();
            if !backend.is_grid() {
                // hinv = phi h0^{-1}, R = rho pattern: Ric = (d-1) phi rho h0
                out.data_mut()[0] +=
                    (d as f64 - 1.0) * hq.homog_value() * rp.0.homog_value();
                return;
            }
            let pts = backend.points();
            for p in 0..pts {
                for j in 0..d {
                    for l in j..d {
                        let mut s = 0.0;
                        for i in 0..d {
                            for k in 0..d {
                                s += hq.sym_at(p, i, k) * rp.at(p, i, j, k, l);
                            }
                        }
                        out.data_mut()[sym_idx(d, j, l) * pts + p] += s;
                    }
                }
            }
        },
    )
}

/// Second-index raise of a mixed block: `out^{ij} = m^i{}_k hinv^{kj}`.
fn raise_r2full(m: &J<FieldR2Full>, hinv: &J<Stf>) -> Result<J<FieldR2Full>> {
    let backend = m.backend();
    combine(
        m,
        hinv,
        move || FieldR2Full::zeros(backend),
        |mp, hq, out| {
            let backend = mp.backend();
            if !backend.is_grid() {
                // delta-multiple times h0^{-1}-multiple: upper-upper multiple
                let v = mp.0.homog_value() * hq.homog_value();
                let h = out.0.homog_value();
                out.0.set_homog(h + v);
                return;
            }
            let d = backend.dim();
            let pts = backend.points();
            for p in 0..pts {
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for k in 0..d {
                            s += mp.at(p, i, k) * hq.sym_at(p, k, j);
                        }
                        out.add(p, i, j, s);
                    }
                }
            }
        },
    )
}
