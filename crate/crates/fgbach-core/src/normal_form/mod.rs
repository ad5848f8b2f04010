//! Normal-form curvature series: every quantity entering the Bach-type
//! equations of a metric `g = x^-2 (dx^2 + h_x)`, assembled as jets.

pub mod bach;
pub mod bulk;
pub mod e_tensor;
pub mod scalars;
pub mod state;

pub use bach::{assemble, bach_components, extended_bach, weyl_term, BachJets};
pub use bulk::{
    bulk_curvature, bulk_divergence, bulk_hessian_scalar, bulk_lap_scalar, bulk_laplacian,
    BulkCurvature, BulkSym2,
};
pub use e_tensor::{e_components, EDecomposition};
pub use scalars::{a_condition, mass_aspect, q_curvature, trace_condition};
pub use state::NormalFormState;

#[cfg(test)]
pub(crate) mod tests;
