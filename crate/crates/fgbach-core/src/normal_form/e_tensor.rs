//! Einstein-deviation tensor `E = Ric(g) + (n-1) g` of the normal-form
//! metric, decomposed into normal, mixed and tangential blocks as Laurent
//! jets, together with its full trace `A`.

use crate::jet::ops::{inner_series, mul_scalar, trace_series};
use crate::jet::JetSeries;
use crate::tensor::SymTensorField;
use crate::Result;

use super::state::NormalFormState;

type J = JetSeries<SymTensorField>;

/// Blocks of `E` and the scalar `A = trace_g E`.
///
/// `e00` and `eperp` generically carry simple poles at `x = 0` (they are
/// `O(1/x)` for a general normal-form series); `a` is `O(x)`.
#[derive(Clone)]
pub struct EDecomposition {
    pub e00: J,
    pub ediamond: J,
    pub eperp: J,
    pub a: J,
}

/// Assemble the blocks:
///
/// ```text
/// E_00     = -tr h''/2 + tr h'/(2x) + |h'|^2/4
/// E_dia__i = (div h' - d tr h')_i / 2
/// E_perp   = -h''/2 + (n-2) h'/(2x) + h tr h'/(2x)
///            + (h'.h')/2 - h' tr h'/4 + Ric(h_x)
/// A        = x^2 (E_00 + tr E_perp)
/// ```
pub fn e_components(state: &NormalFormState) -> Result<EDecomposition> {
    let hp = &state.hp;
    let hpp = hp.diff_x();
    let hinv = &state.hinv;
    let tr_hp = trace_series(hp, hinv)?;
    let tr_hpp = trace_series(&hpp, hinv)?;
    let hp_sq = inner_series(hp, hp, hinv)?; // |h'|^2 series
    let hp_dot_hp = crate::jet::ops::compose_series(hp, hp, hinv)?;

    // E_00
    let e00 = tr_hpp
        .scale(-0.5)
        .add(&tr_hp.shift_mul_xk(-1).scale(0.5))?
        .add(&hp_sq.scale(0.25))?;

    // E_diamond
    let div_hp = state.div_sym2_series(hp)?;
    let grad_tr_hp = state.grad_series(&tr_hp);
    let ediamond = div_hp.sub(&grad_tr_hp)?.scale(0.5);

    // E_perp
    let n = state.n() as f64;
    let h_tr_hp = mul_scalar(&tr_hp, &state.h)?;
    let hp_tr_hp = mul_scalar(&tr_hp, hp)?;
    let eperp = hpp
        .scale(-0.5)
        .add(&hp.shift_mul_xk(-1).scale((n - 2.0) / 2.0))?
        .add(&h_tr_hp.shift_mul_xk(-1).scale(0.5))?
        .add(&hp_dot_hp.scale(0.5))?
        .add(&hp_tr_hp.scale(-0.25))?
        .add(&state.ric_h)?;

    // A = x^2 (E_00 + tr E_perp)
    let tr_eperp = trace_series(&eperp, hinv)?;
    let a = e00.add(&tr_eperp)?.shift_mul_xk(2);

    Ok(EDecomposition {
        e00,
        ediamond,
        eperp,
        a,
    })
}
