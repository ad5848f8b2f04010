//! Transverse-traceless projection on the periodic grid.
//!
//! Removes the trace and then subtracts a symmetrized-gradient correction
//! `X(w) = tracefree(D_i w_j + D_j w_i)` whose potential `w` solves
//! `div X(w) = div tracefree(t)`. For a constant metric the solve is exact
//! in Fourier space; otherwise a fixed-point iteration preconditioned by
//! the grid-mean metric is used.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::tensor::{invert_dense, sym_idx, tracefree, Metric2, Rank, SymTensorField};
use crate::Result;

use super::spectral::Dft;
use super::SliceGeometry;

const TOL_DIV: f64 = 1e-8;
const MAX_ITERS: usize = 500;

/// Project a symmetric 2-tensor onto its transverse-traceless part.
///
/// The output traces to zero within 1e-12 and has pointwise divergence
/// below 1e-8 (relative to the field scale); failure to converge reports
/// the residual.
pub fn tt_project(t: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    let backend = t.backend();
    backend.check_same(&h.backend(), "tt_project")?;
    if !backend.is_grid() {
        // invariant fields on the model are already TT after trace removal
        return tracefree(t, h);
    }
    let geo = SliceGeometry::new(h.clone());
    let tf = tracefree(t, h)?;
    let scale = tf.max_abs().max(1.0);
    let w0 = geo.divergence(&tf)?;
    if w0.max_abs() <= TOL_DIV * scale {
        return Ok(tf);
    }

    let d = backend.dim();
    let pts = backend.points();
    // constant reference metric: grid mean of h
    let mut mean = vec![0.0; d * (d + 1) / 2];
    for (c, m) in mean.iter_mut().enumerate() {
        let comp = &h.field().data()[c * pts..(c + 1) * pts];
        *m = comp.iter().sum::<f64>() / pts as f64;
    }
    let mut mean_full = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            mean_full[i * d + j] = mean[sym_idx(d, i, j)];
        }
    }
    let mut mean_inv = vec![0.0; d * d];
    invert_dense(&mean_full, &mut mean_inv, d).ok_or(CoreError::NotPositiveDefinite {
        point: usize::MAX,
    })?;
    let dft = Dft::new(backend);

    let mut potential = SymTensorField::zeros(backend, Rank::Vector);
    let mut residual = w0;
    let mut res_norm = residual.max_abs();
    for _ in 0..MAX_ITERS {
        if res_norm <= TOL_DIV * scale {
            let correction = tracefree(&geo.lie_along(&potential)?, h)?;
            let out = tf.sub(&correction)?;
            let check = geo.divergence(&out)?.max_abs();
            if check <= TOL_DIV * scale * 10.0 {
                return Ok(out);
            }
            return Err(CoreError::ConvergenceFailure {
                op: "tt_project",
                residual: check,
                iters: MAX_ITERS,
            });
        }
        let delta = flat_solve(&dft, &mean_inv, &residual)?;
        potential.axpy(1.0, &delta)?;
        let correction = tracefree(&geo.lie_along(&potential)?, h)?;
        residual = geo.divergence(&tf.sub(&correction)?)?;
        res_norm = residual.max_abs();
    }
    Err(CoreError::ConvergenceFailure {
        op: "tt_project",
        residual: res_norm,
        iters: MAX_ITERS,
    })
}

/// Find a symmetric tracefree field `X` with prescribed divergence:
/// `div_h X = w`. Used to repair non-divergence-free data and to realize
/// the determined divergence part of free coefficients.
pub fn divergence_potential(w: &SymTensorField, h: &Metric2) -> Result<SymTensorField> {
    let backend = w.backend();
    backend.check_same(&h.backend(), "divergence_potential")?;
    if !backend.is_grid() {
        if w.max_abs() == 0.0 {
            return Ok(SymTensorField::zeros(backend, Rank::Sym2));
        }
        return Err(crate::error::CoreError::UnsupportedHomogeneous(
            alloc::string::String::from("divergence potential of a nonzero invariant covector"),
        ));
    }
    let geo = SliceGeometry::new(h.clone());
    let d = backend.dim();
    let pts = backend.points();
    let mut mean = vec![0.0; d * (d + 1) / 2];
    for (c, m) in mean.iter_mut().enumerate() {
        let comp = &h.field().data()[c * pts..(c + 1) * pts];
        *m = comp.iter().sum::<f64>() / pts as f64;
    }
    let mut mean_full = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            mean_full[i * d + j] = mean[sym_idx(d, i, j)];
        }
    }
    let mut mean_inv = vec![0.0; d * d];
    invert_dense(&mean_full, &mut mean_inv, d).ok_or(CoreError::NotPositiveDefinite {
        point: usize::MAX,
    })?;
    let dft = Dft::new(backend);
    let scale = w.max_abs().max(1e-300);
    let mut potential = SymTensorField::zeros(backend, Rank::Vector);
    for it in 0..MAX_ITERS {
        let x = tracefree(&geo.lie_along(&potential)?, h)?;
        let residual = w.sub(&geo.divergence(&x)?)?;
        if residual.max_abs() <= TOL_DIV * scale {
            return Ok(x);
        }
        let delta = flat_solve(&dft, &mean_inv, &residual)?;
        potential.axpy(1.0, &delta)?;
        if it == MAX_ITERS - 1 {
            return Err(CoreError::ConvergenceFailure {
                op: "divergence_potential",
                residual: residual.max_abs(),
                iters: MAX_ITERS,
            });
        }
    }
    unreachable!()
}

/// Solve `div_ref X(w) = target` exactly in Fourier space for the constant
/// reference metric with inverse `ref_inv` (row-major dense).
pub(crate) fn flat_solve(
    dft: &Dft,
    ref_inv: &[f64],
    target: &SymTensorField,
) -> Result<SymTensorField> {
    let backend = target.backend();
    let d = backend.dim();
    let pts = backend.points();
    // transform each covector component
    let mut t_re: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut t_im: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let (re, im) = dft.forward(&target.data()[i * pts..(i + 1) * pts]);
        t_re.push(re);
        t_im.push(im);
    }
    let mut w_re: Vec<Vec<f64>> = vec![vec![0.0; pts]; d];
    let mut w_im: Vec<Vec<f64>> = vec![vec![0.0; pts]; d];
    let factor = 1.0 - 2.0 / d as f64;
    let mut a = vec![0.0; d * d];
    let mut a_inv = vec![0.0; d * d];
    for p in 0..pts {
        let m = dft.freqs(p);
        let m2: f64 = (0..d)
            .map(|i| (0..d).map(|j| ref_inv[i * d + j] * m[i] * m[j]).sum::<f64>())
            .sum();
        if m2 == 0.0 {
            continue; // mean mode: not reachable by a gradient correction
        }
        // div X(w) in modes: -( m2 I + factor m (x) u ) w  with u = hinv m
        let mut u = vec![0.0; d];
        for (l, ul) in u.iter_mut().enumerate() {
            *ul = (0..d).map(|k| ref_inv[k * d + l] * m[k]).sum();
        }
        for i in 0..d {
            for l in 0..d {
                a[i * d + l] = -(if i == l { m2 } else { 0.0 }) - factor * m[i] * u[l];
            }
        }
        if invert_dense(&a, &mut a_inv, d).is_none() {
            return Err(CoreError::ConvergenceFailure {
                op: "tt_project flat solve",
                residual: f64::INFINITY,
                iters: 0,
            });
        }
        for i in 0..d {
            let mut sr = 0.0;
            let mut si = 0.0;
            for l in 0..d {
                sr += a_inv[i * d + l] * t_re[l][p];
                si += a_inv[i * d + l] * t_im[l][p];
            }
            w_re[i][p] = sr;
            w_im[i][p] = si;
        }
    }
    let mut out = SymTensorField::zeros(backend, Rank::Vector);
    for i in 0..d {
        let real = dft.inverse(&w_re[i], &w_im[i]);
        out.data_mut()[i * pts..(i + 1) * pts].copy_from_slice(&real);
    }
    Ok(out)
}
