//! Boundary charts and intrinsic differential geometry of slice metrics:
//! Christoffel symbols, curvature, Schouten, covariant operators, and the
//! transverse-traceless projector used to manufacture admissible data.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::tensor::{sym_idx, trace, tracefree, Backend, Metric2, Rank, SymTensorField};
use crate::Result;

pub mod payload;
pub mod spectral;

use payload::{asym_pairs, FieldR3S, FieldR4Riem};
use spectral::Differentiator;

/// Levi-Civita connection coefficients of a slice metric on the grid,
/// `xi^m_{jk}`, symmetric in the lower pair.
#[derive(Clone, Debug)]
pub struct Christoffel {
    xi: FieldR3S,
}

impl Christoffel {
    #[inline]
    pub fn at(&self, p: usize, m: usize, j: usize, k: usize) -> f64 {
        self.xi.at(p, m, j, k)
    }

    pub fn backend(&self) -> Backend {
        self.xi.0.backend()
    }

    pub fn raw(&self) -> &FieldR3S {
        &self.xi
    }
}

/// Christoffel symbols of `h` on a periodic grid by the standard formula,
/// with Fourier-spectral spatial derivatives.
pub fn christoffel(h: &Metric2) -> Result<Christoffel> {
    let backend = h.backend();
    if !backend.is_grid() {
        return Err(CoreError::UnsupportedHomogeneous(String::from(
            "christoffel symbols of a curved model chart; use the closed-form curvature ops",
        )));
    }
    let diff = Differentiator::new(backend);
    Ok(christoffel_with(h, &diff))
}

pub(crate) fn christoffel_with(h: &Metric2, diff: &Differentiator) -> Christoffel {
    let backend = h.backend();
    let d = backend.dim();
    let pts = backend.points();
    let symn = d * (d + 1) / 2;
    // dh[l][sym] = partial_l h_sym
    let mut dh: Vec<Vec<f64>> = Vec::with_capacity(d * symn);
    for l in 0..d {
        for c in 0..symn {
            let comp = &h.field().data()[c * pts..(c + 1) * pts];
            dh.push(diff.partial(comp, l));
        }
    }
    let dh_at = |l: usize, i: usize, j: usize, p: usize| dh[l * symn + sym_idx(d, i, j)][p];
    let hinv = h.inverse();
    let mut xi = FieldR3S::zeros(backend);
    for p in 0..pts {
        for m in 0..d {
            for j in 0..d {
                for k in j..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += 0.5
                            * hinv.sym_at(p, m, l)
                            * (dh_at(j, l, k, p) + dh_at(k, l, j, p) - dh_at(l, j, k, p));
                    }
                    xi.set(p, m, j, k, s);
                }
            }
        }
    }
    Christoffel { xi }
}

/// Intrinsic curvature bundle of a slice metric.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    /// Lowered Riemann tensor `R_{ijkl}`.
    pub riemann: FieldR4Riem,
    /// Ricci tensor `R_{jl} = h^{ik} R_{ijkl}`.
    pub ricci: SymTensorField,
    /// Scalar curvature.
    pub scal: SymTensorField,
    /// Tracefree Ricci `Z = Ric - (scal/d) h`.
    pub z: SymTensorField,
    /// Schouten tensor of the slice (uses the slice dimension).
    pub schouten: SymTensorField,
}

/// Full curvature of the slice metric: Riemann, Ricci, scalar, tracefree
/// Ricci and Schouten. Closed-form on the homogeneous backend.
pub fn curvature(h: &Metric2) -> Result<CurvatureData> {
    let backend = h.backend();
    let d = backend.dim();
    if d < 3 {
        return Err(CoreError::InvalidSpec {
            field: String::from("dim"),
            message: String::from("curvature bundle needs boundary dimension >= 3"),
        });
    }
    if !backend.is_grid() {
        let kappa = backend.model_curvature();
        let c = h.field().homog_value();
        let mut riemann = FieldR4Riem::zeros(backend);
        riemann.0.set_homog(kappa * c);
        let ricci = SymTensorField::homog(backend, Rank::Sym2, (d as f64 - 1.0) * kappa)?;
        let scal =
            SymTensorField::homog(backend, Rank::Scalar, d as f64 * (d as f64 - 1.0) * kappa / c)?;
        let z = SymTensorField::homog(backend, Rank::Sym2, 0.0)?;
        let schouten = SymTensorField::homog(backend, Rank::Sym2, 0.5 * kappa)?;
        return Ok(CurvatureData {
            riemann,
            ricci,
            scal,
            z,
            schouten,
        });
    }

    let diff = Differentiator::new(backend);
    let xi = christoffel_with(h, &diff);
    let riemann = riemann_grid(h, &xi, &diff);
    curvature_from_riemann(h, riemann)
}

pub(crate) fn curvature_from_riemann(h: &Metric2, riemann: FieldR4Riem) -> Result<CurvatureData> {
    let backend = h.backend();
    let d = backend.dim();
    let pts = backend.points();
    let hinv = h.inverse();
    let mut ricci = SymTensorField::zeros(backend, Rank::Sym2);
    {
        let data = ricci.data_mut();
        for p in 0..pts {
            for j in 0..d {
                for l in j..d {
                    let mut s = 0.0;
                    for i in 0..d {
                        for k in 0..d {
                            s += hinv.sym_at(p, i, k) * riemann.at(p, i, j, k, l);
                        }
                    }
                    data[sym_idx(d, j, l) * pts + p] = s;
                }
            }
        }
    }
    let scal = trace(&ricci, h)?;
    let z = tracefree(&ricci, h)?;
    // Schouten with the slice dimension d: (Ric - scal/(2(d-1)) h) / (d-2)
    let shift = h
        .field()
        .mul_scalar_field(&scal.scale(-1.0 / (2.0 * (d as f64 - 1.0))))?;
    let schouten = ricci.add(&shift)?.scale(1.0 / (d as f64 - 2.0));
    Ok(CurvatureData {
        riemann,
        ricci,
        scal,
        z,
        schouten,
    })
}

/// Lowered Riemann tensor on the grid from Christoffel symbols.
pub(crate) fn riemann_grid(h: &Metric2, xi: &Christoffel, diff: &Differentiator) -> FieldR4Riem {
    let backend = h.backend();
    let d = backend.dim();
    let pts = backend.points();
    let symn = d * (d + 1) / 2;
    // dxi[c][m*symn + sym(j,k)] = partial_c xi^m_{jk}
    let mut dxi: Vec<Vec<f64>> = Vec::with_capacity(d * d * symn);
    for c in 0..d {
        for comp in 0..d * symn {
            dxi.push(diff.partial(xi.raw().0.comp(comp), c));
        }
    }
    let dxi_at = |c: usize, m: usize, j: usize, k: usize, p: usize| {
        dxi[c * d * symn + m * symn + sym_idx(d, j, k)][p]
    };
    let pairs = asym_pairs(d);
    let mut riem = FieldR4Riem::zeros(backend);
    for p in 0..pts {
        for (p1, &(i, j)) in pairs.iter().enumerate() {
            for (p2, &(k, l)) in pairs.iter().enumerate() {
                if p2 < p1 {
                    continue;
                }
                // R_{ijkl} = h_{ie} R^e_{jkl}
                let mut v = 0.0;
                for e in 0..d {
                    let mut r = dxi_at(k, e, j, l, p) - dxi_at(l, e, j, k, p);
                    for m in 0..d {
                        r += xi.at(p, e, k, m) * xi.at(p, m, j, l)
                            - xi.at(p, e, l, m) * xi.at(p, m, j, k);
                    }
                    v += h.field().sym_at(p, i, e) * r;
                }
                riem.set_canonical(p, p1, p2, v);
            }
        }
    }
    riem
}

/// Slice geometry bundle: metric, connection, differentiator. Immutable.
pub struct SliceGeometry {
    h: Metric2,
    xi: Option<Christoffel>,
    diff: Differentiator,
}

impl SliceGeometry {
    pub fn new(h: Metric2) -> Self {
        let diff = Differentiator::new(h.backend());
        let xi = if h.backend().is_grid() {
            Some(christoffel_with(&h, &diff))
        } else {
            None
        };
        SliceGeometry { h, xi, diff }
    }

    pub fn metric(&self) -> &Metric2 {
        &self.h
    }

    pub fn backend(&self) -> Backend {
        self.h.backend()
    }

    pub fn differentiator(&self) -> &Differentiator {
        &self.diff
    }

    pub fn christoffel(&self) -> Option<&Christoffel> {
        self.xi.as_ref()
    }

    /// Gradient (covariant differential) of a scalar field.
    pub fn grad(&self, f: &SymTensorField) -> Result<SymTensorField> {
        expect_rank(f, Rank::Scalar, "grad")?;
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Vector, 0.0);
        }
        let d = backend.dim();
        let pts = backend.points();
        let mut out = SymTensorField::zeros(backend, Rank::Vector);
        for i in 0..d {
            let der = self.diff.partial(f.data(), i);
            out.data_mut()[i * pts..(i + 1) * pts].copy_from_slice(&der);
        }
        Ok(out)
    }

    /// Covariant derivative of a covector: `D_i v_j`.
    pub fn cov_deriv_vec(&self, v: &SymTensorField) -> Result<payload::FieldR2Full> {
        expect_rank(v, Rank::Vector, "cov_deriv_vec")?;
        let backend = self.backend();
        let mut out = payload::FieldR2Full::zeros(backend);
        if !backend.is_grid() {
            return Ok(out);
        }
        let d = backend.dim();
        let pts = backend.points();
        let xi = self.xi.as_ref().unwrap();
        for j in 0..d {
            let comp = &v.data()[j * pts..(j + 1) * pts];
            for i in 0..d {
                let der = self.diff.partial(comp, i);
                for p in 0..pts {
                    let mut s = der[p];
                    for m in 0..d {
                        s -= xi.at(p, m, i, j) * v.vec_at(p, m);
                    }
                    out.add(p, i, j, s);
                }
            }
        }
        Ok(out)
    }

    /// Covariant derivative of a symmetric 2-tensor: `(Dt)_{l ij}`.
    pub fn cov_deriv_sym2(&self, t: &SymTensorField) -> Result<FieldR3S> {
        expect_rank(t, Rank::Sym2, "cov_deriv_sym2")?;
        let backend = self.backend();
        let mut out = FieldR3S::zeros(backend);
        if !backend.is_grid() {
            if t.homog_value() != 0.0 {
                // D h0 = 0: derivatives of invariant fields vanish
                return Ok(out);
            }
            return Ok(out);
        }
        let d = backend.dim();
        let pts = backend.points();
        let xi = self.xi.as_ref().unwrap();
        for i in 0..d {
            for j in i..d {
                let comp = &t.data()[sym_idx(d, i, j) * pts..(sym_idx(d, i, j) + 1) * pts];
                for l in 0..d {
                    let der = self.diff.partial(comp, l);
                    for p in 0..pts {
                        let mut s = der[p];
                        for m in 0..d {
                            s -= xi.at(p, m, l, i) * t.sym_at(p, m, j);
                            s -= xi.at(p, m, l, j) * t.sym_at(p, i, m);
                        }
                        out.set(p, l, i, j, s);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Divergence `(div t)_i = h^{jk} D_j t_{ki}` of a symmetric 2-tensor.
    pub fn divergence(&self, t: &SymTensorField) -> Result<SymTensorField> {
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Vector, 0.0);
        }
        let dt = self.cov_deriv_sym2(t)?;
        let d = backend.dim();
        let pts = backend.points();
        let hinv = self.h.inverse();
        let mut out = SymTensorField::zeros(backend, Rank::Vector);
        for i in 0..d {
            for p in 0..pts {
                let mut s = 0.0;
                for j in 0..d {
                    for k in 0..d {
                        s += hinv.sym_at(p, j, k) * dt.at(p, j, k, i);
                    }
                }
                out.data_mut()[i * pts + p] = s;
            }
        }
        Ok(out)
    }

    /// Hessian `D_i D_j f` of a scalar field.
    pub fn hessian(&self, f: &SymTensorField) -> Result<SymTensorField> {
        expect_rank(f, Rank::Scalar, "hessian")?;
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Sym2, 0.0);
        }
        let d = backend.dim();
        let pts = backend.points();
        let xi = self.xi.as_ref().unwrap();
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            grads.push(self.diff.partial(f.data(), i));
        }
        let mut out = SymTensorField::zeros(backend, Rank::Sym2);
        for i in 0..d {
            for j in i..d {
                let der = self.diff.partial(&grads[j], i);
                for p in 0..pts {
                    let mut s = der[p];
                    for m in 0..d {
                        s -= xi.at(p, m, i, j) * grads[m][p];
                    }
                    out.data_mut()[sym_idx(d, i, j) * pts + p] = s;
                }
            }
        }
        Ok(out)
    }

    /// Rough Laplacian of a scalar field.
    pub fn laplacian_scalar(&self, f: &SymTensorField) -> Result<SymTensorField> {
        let hess = self.hessian(f)?;
        trace(&hess, &self.h)
    }

    /// Rough Laplacian of a covector field: `h^{lm} D_l D_m v_i`.
    pub fn laplacian_vec(&self, v: &SymTensorField) -> Result<SymTensorField> {
        expect_rank(v, Rank::Vector, "laplacian_vec")?;
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Vector, 0.0);
        }
        let dv = self.cov_deriv_vec(v)?; // (Dv)_{l j}
        let d = backend.dim();
        let pts = backend.points();
        let xi = self.xi.as_ref().unwrap();
        let hinv = self.h.inverse();
        // second derivative contracted on the fly
        let mut out = SymTensorField::zeros(backend, Rank::Vector);
        for l in 0..d {
            for j in 0..d {
                // partials of (Dv)_{l j} along every axis
                let comp: Vec<f64> = (0..pts).map(|p| dv.at(p, l, j)).collect();
                for m in 0..d {
                    let der = self.diff.partial(&comp, m);
                    for p in 0..pts {
                        let mut s = der[p];
                        for e in 0..d {
                            s -= xi.at(p, e, m, l) * dv.at(p, e, j);
                            s -= xi.at(p, e, m, j) * dv.at(p, l, e);
                        }
                        out.data_mut()[j * pts + p] += hinv.sym_at(p, m, l) * s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rough Laplacian of a symmetric 2-tensor: `h^{ml} D_m D_l t_{ij}`.
    pub fn laplacian_sym2(&self, t: &SymTensorField) -> Result<SymTensorField> {
        expect_rank(t, Rank::Sym2, "laplacian_sym2")?;
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Sym2, 0.0);
        }
        let dt = self.cov_deriv_sym2(t)?; // (Dt)_{l i j}
        let d = backend.dim();
        let pts = backend.points();
        let xi = self.xi.as_ref().unwrap();
        let hinv = self.h.inverse();
        let mut out = SymTensorField::zeros(backend, Rank::Sym2);
        for l in 0..d {
            for i in 0..d {
                for j in i..d {
                    let comp: Vec<f64> = (0..pts).map(|p| dt.at(p, l, i, j)).collect();
                    for m in 0..d {
                        let der = self.diff.partial(&comp, m);
                        for p in 0..pts {
                            let mut s = der[p];
                            for e in 0..d {
                                s -= xi.at(p, e, m, l) * dt.at(p, e, i, j);
                                s -= xi.at(p, e, m, i) * dt.at(p, l, e, j);
                                s -= xi.at(p, e, m, j) * dt.at(p, l, i, e);
                            }
                            out.data_mut()[sym_idx(d, i, j) * pts + p] += hinv.sym_at(p, m, l) * s;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Symmetrized covariant derivative of a covector (the Lie derivative
    /// of the metric along its raised field): `D_i w_j + D_j w_i`.
    pub fn lie_along(&self, w: &SymTensorField) -> Result<SymTensorField> {
        expect_rank(w, Rank::Vector, "lie_along")?;
        let backend = self.backend();
        if !backend.is_grid() {
            return SymTensorField::homog(backend, Rank::Sym2, 0.0);
        }
        let dw = self.cov_deriv_vec(w)?;
        let d = backend.dim();
        let pts = backend.points();
        let mut out = SymTensorField::zeros(backend, Rank::Sym2);
        for i in 0..d {
            for j in i..d {
                for p in 0..pts {
                    out.data_mut()[sym_idx(d, i, j) * pts + p] = dw.at(p, i, j) + dw.at(p, j, i);
                }
            }
        }
        Ok(out)
    }
}

fn expect_rank(t: &SymTensorField, rank: Rank, what: &str) -> Result<()> {
    if t.rank() != rank {
        return Err(CoreError::RankMismatch(String::from(what)));
    }
    Ok(())
}

mod project;
pub use project::{divergence_potential, tt_project};

#[cfg(test)]
mod tests;
