//! Power-series engine for conformally compact metrics in Graham–Lee normal
//! form `g = x^-2 (dx^2 + h_x)`.
//!
//! The crate solves, order by order in the defining function `x`, the radial
//! Taylor coefficients of `h_x` for three equation families on an
//! `n`-dimensional bulk:
//!
//! * the negative Einstein equation `Ric(g) + (n-1) g = 0`,
//! * the Bach equation `B(g) = 0` in bulk dimension 4,
//! * the divergence-free extension of the Bach tensor in bulk dimension 5+,
//!
//! together with conformal-gauge fixing (vanishing scalar deviation,
//! constant Q-curvature, or the higher-dimensional trace condition) and a
//! battery of independent residual diagnostics.
//!
//! Boundary data lives on one of two chart backends: a periodic grid with
//! Fourier-spectral derivatives, or a homogeneous constant-curvature model
//! whose fields are multiples of the model metric. All numerics are `f64`.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only switches float intrinsics and error-trait plumbing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub(crate) mod fmath;
pub mod geometry;
pub mod jet;
pub mod normal_form;
pub mod solver;
pub mod tensor;

pub use error::CoreError;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, CoreError>;
