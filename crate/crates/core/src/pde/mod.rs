//! Finite-difference residuals of the partial and ordinary differential
//! equations satisfied by `T = ln tau_n^J(ξ, t)`.
//!
//! Jets come from a [`TauGrid`]: derivatives carrying a ξ index are taken
//! on the gap layers, pure t derivatives add the free part of `ln tau_n(t)`.

mod jet;
mod painleve;
mod residuals;
mod sweep;

pub use jet::{
    check_margin, derivative, derivative_1d, extract_jet, mixed_partial_routes, JetOptions, Partials, PdeJet,
};
pub use painleve::{
    gap_profile, painleve4_residual, painleve5_residual, painleve5_unshifted_residual, GapProfile, PainleveOptions,
    PainleveReport, PainleveState, SECONDARY_TOL,
};
pub use residuals::{
    gh_eval, gh_h_flipped_sign_residual, phi_representation, recursion_ladder, residual_equivalent_forms,
    residual_system, residual_universal_t, residual_universal_tplus, resolvent_diagonal, virasoro_reduce, GH,
};
pub use sweep::{sweep, Sweep, SweepOptions, SweepSummary};

use serde::Serialize;

use crate::error::Result;
use crate::measure::{DomainJ, WeightSpec};
use crate::tau::{build_grid, centered_axis, TauGrid};

/// Default tolerance of the universal system and its equivalent forms.
pub const SYSTEM_TOL: f64 = 1e-5;
/// Default tolerance of the universal PDEs, the G/H structure and the ladder.
pub const PDE_TOL: f64 = 1e-4;
/// Division guard: denominators below this multiple of their scale skip the point.
pub const GUARD: f64 = 1e-10;

/// Residual of one equation at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeResidual {
    pub id: String,
    pub xi: f64,
    pub t: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub h_xi: f64,
    pub h_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PdeResidual {
    pub(crate) fn new(id: &str, jet: &PdeJet, residual: f64, tolerance: f64) -> Self {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual.abs() };
        Self {
            id: id.to_string(),
            xi: jet.xi,
            t: jet.t,
            residual,
            tolerance,
            pass: residual <= tolerance,
            h_xi: jet.h_xi,
            h_t: jet.h_t,
            note: None,
        }
    }

    pub(crate) fn skipped(id: &str, jet: &PdeJet, why: &str) -> Self {
        Self { residual: 0.0, pass: true, note: Some(format!("skipped: {why}")), ..Self::new(id, jet, 0.0, 0.0) }
    }

    pub fn is_skipped(&self) -> bool {
        self.note.as_deref().is_some_and(|n| n.starts_with("skipped"))
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self.pass = self.is_skipped() || self.residual <= tol;
        self
    }
}

/// Grid centred on `(xi0, t0)` with step `h` and room for jets with
/// `opts` at every point within `interior` cells of the centre.
#[allow(clippy::too_many_arguments)]
pub fn centered_grid(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    n: usize,
    xi0: f64,
    t0: f64,
    h: f64,
    opts: JetOptions,
    interior: usize,
) -> Result<TauGrid> {
    let rx = opts.margin_xi() + 2 * opts.stride + interior;
    let rt = opts.margin_t() + interior;
    build_grid(w, j, j_star, n, &centered_axis(xi0, h, rx), &centered_axis(t0, h, rt))
}

/// `max(residual)` over the non-skipped entries with the given id.
pub fn max_residual(rows: &[PdeResidual], id: &str) -> Option<f64> {
    rows.iter().filter(|r| r.id == id && !r.is_skipped()).map(|r| r.residual).reduce(f64::max)
}
