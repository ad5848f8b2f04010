//! Expansion specification: equation family, gauge, truncation order,
//! free data and tolerances, with up-front validation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geometry::curvature;
use crate::tensor::{trace, Metric2, SymTensorField};
use crate::Result;

/// Which field equation the expansion solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationFamily {
    Einstein,
    Bach4,
    /// Divergence-free extension of the Bach tensor (n >= 5).
    ExtendedBach,
}

/// Conformal-gauge choice supplying the trace data.
#[derive(Clone, Debug)]
pub enum GaugeChoice {
    /// `A = 0` (vanishing scalar-curvature deviation), n = 4.
    AZero,
    /// Constant Q-curvature, n = 4.
    QSix,
    /// Higher-dimensional trace condition of the extended Bach equation.
    TraceCondition,
    /// Explicit trace data `tr h^(k)(0)` per order (missing entries zero).
    ExplicitTraces(Vec<SymTensorField>),
}

/// Tolerance block; defaults match the engine contract.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Probe linearity / analytic-multiplier agreement (relative).
    pub probe: f64,
    /// Obstruction norm above which a result is flagged invalid.
    pub obstruction: f64,
    /// Tracefree validation for `Phi`, `Psi` (relative).
    pub tracefree: f64,
    /// Divergence-free validation for `Psi` (relative).
    pub divergence: f64,
    /// Pointwise lower bound on `|scal_{h0}|` relative to the Ricci scale.
    pub scal_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            probe: 1e-7,
            obstruction: 1e-8,
            tracefree: 1e-10,
            divergence: 1e-8,
            scal_floor: 1e-6,
        }
    }
}

/// Free data and run parameters for one expansion.
#[derive(Clone)]
pub struct ExpansionSpec {
    pub n: usize,
    pub equation: EquationFamily,
    pub gauge: GaugeChoice,
    /// Truncation order `K`.
    pub order: usize,
    pub h0: Metric2,
    /// `h'(0)` datum (default zero; must vanish for the extended family).
    pub hprime0: Option<SymTensorField>,
    /// Tracefree order-(n-2) datum.
    pub phi: Option<SymTensorField>,
    /// Transverse-traceless order-(n-1) datum.
    pub psi: Option<SymTensorField>,
    /// Explicit `T_4 = tr h^(4)(0)` (n = 4).
    pub t4: Option<SymTensorField>,
    /// Mass-aspect target, alternative to `t4` (n = 4).
    pub mu: Option<SymTensorField>,
    pub tol: Tolerances,
}

impl ExpansionSpec {
    /// Default truncation: 8 for n = 4, n + 3 otherwise.
    pub fn default_order(n: usize) -> usize {
        if n == 4 {
            8
        } else {
            n + 3
        }
    }

    pub fn new(n: usize, equation: EquationFamily, gauge: GaugeChoice, h0: Metric2) -> Self {
        ExpansionSpec {
            n,
            equation,
            gauge,
            order: Self::default_order(n),
            h0,
            hprime0: None,
            phi: None,
            psi: None,
            t4: None,
            mu: None,
            tol: Tolerances::default(),
        }
    }

    pub fn boundary_dim(&self) -> usize {
        self.n - 1
    }

    /// Validate dimension/gauge/data coherence before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| -> Result<()> {
            Err(CoreError::InvalidSpec {
                field: String::from(field),
                message,
            })
        };
        if !(4..=8).contains(&self.n) {
            return bad("n", format!("bulk dimension {} outside 4..=8", self.n));
        }
        if self.h0.backend().dim() != self.n - 1 {
            return bad(
                "h0",
                format!(
                    "boundary dimension {} does not match n - 1 = {}",
                    self.h0.backend().dim(),
                    self.n - 1
                ),
            );
        }
        if self.order < self.n || self.order > 24 {
            return bad(
                "order",
                format!("truncation order {} outside n..=24", self.order),
            );
        }
        match self.equation {
            EquationFamily::Bach4 if self.n != 4 => {
                return bad("equation", String::from("bach4 requires n = 4"));
            }
            EquationFamily::ExtendedBach if self.n < 5 => {
                return bad("equation", String::from("extended Bach requires n >= 5"));
            }
            _ => {}
        }
        match (&self.gauge, self.n) {
            (GaugeChoice::TraceCondition, n) if n < 5 => {
                return bad("gauge", String::from("trace condition requires n >= 5"));
            }
            (GaugeChoice::AZero | GaugeChoice::QSix, n) if n != 4 => {
                return bad("gauge", String::from("A = 0 / Q gauges are n = 4 gauges"));
            }
            _ => {}
        }
        if (self.t4.is_some() || self.mu.is_some()) && self.n != 4 {
            return bad("t4", String::from("T4 / mass-aspect data only exist for n = 4"));
        }
        if self.t4.is_some() && self.mu.is_some() {
            return bad("mu", String::from("give either t4 or mu, not both"));
        }
        if let Some(hp) = &self.hprime0 {
            if self.equation == EquationFamily::ExtendedBach && hp.max_abs() > 0.0 {
                return Err(CoreError::UnsupportedData(String::from(
                    "extended Bach expansion assumes h'(0) = 0",
                )));
            }
            if matches!(self.gauge, GaugeChoice::AZero | GaugeChoice::QSix) {
                let tr = trace(hp, &self.h0)?.max_abs();
                if tr > self.tol.tracefree * hp.max_abs().max(1.0) {
                    return bad(
                        "hprime0",
                        format!("gauge forces tr h'(0) = 0 but |tr| = {tr:.3e}"),
                    );
                }
            }
        }
        if let Some(phi) = &self.phi {
            super::check_tt(phi, &self.h0, self.tol.tracefree, f64::INFINITY, "phi")?;
        }
        if let Some(psi) = &self.psi {
            super::check_tt(psi, &self.h0, self.tol.tracefree, self.tol.divergence, "psi")?;
        }
        if matches!(self.gauge, GaugeChoice::TraceCondition) {
            let c = curvature(&self.h0)?;
            let ric_scale = c.ricci.max_abs().max(1.0);
            let scal_min = c
                .scal
                .data()
                .iter()
                .fold(f64::INFINITY, |m, v| m.min(crate::fmath::abs(*v)));
            if scal_min < self.tol.scal_floor * ric_scale {
                return Err(CoreError::GaugeSingular(format!(
                    "boundary scalar curvature reaches {scal_min:.3e} (Ricci scale {ric_scale:.3e}); \
                     the trace condition needs |scal| bounded away from zero"
                )));
            }
        }
        Ok(())
    }
}
