//! Residual tables over a rectangle of target points.

use rayon::prelude::*;
use serde::Serialize;

use super::jet::{extract_jet, JetOptions};
use super::residuals::{
    gh_eval, phi_representation, recursion_ladder, residual_equivalent_forms, residual_system, residual_universal_t,
    residual_universal_tplus, resolvent_diagonal, virasoro_reduce,
};
use super::PdeResidual;
use crate::error::{Error, Result};
use crate::measure::{DomainJ, WeightKind, WeightSpec};
use crate::tau::{build_grid, uniform_axis, TauGrid};

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub jet: JetOptions,
    /// Also build the grid at `n + 1` and evaluate the ladder.
    pub ladder: bool,
    /// Use the resolvent diagonal as the left side of the second-order equation.
    pub resolvent: bool,
    /// Compute plain-stencil convergence ratios.
    pub convergence: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { jet: JetOptions::default(), ladder: true, resolvent: false, convergence: true }
    }
}

/// Per-identity summary of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub id: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub evaluated: usize,
    pub skipped: usize,
    /// `max residual(coarse) / max residual(fine)` of the plain stencils,
    /// with coarse twice fine. See [`Sweep::ratio_steps`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub rows: Vec<PdeResidual>,
    pub summary: Vec<SweepSummary>,
    /// The (fine, coarse) ξ steps behind `convergence_ratio`.
    pub ratio_steps: Option<(f64, f64)>,
}

impl Sweep {
    pub fn all_pass(&self) -> bool {
        self.summary.iter().all(|s| s.pass)
    }

    pub fn get(&self, id: &str) -> Option<&SweepSummary> {
        self.summary.iter().find(|s| s.id == id)
    }
}

/// Evaluates every residual at the points `xi_start + k h_xi` (`k < nx`) and
/// `t_start + l h_t` (`l < nt`), moving endpoint `j_star` of `J`.
///
/// The grid is padded on every side so that each target point has the
/// margin its stencils need; padding that leaves the support surfaces as a
/// domain error from the grid builder.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    n: usize,
    (xi_start, h_xi, nx): (f64, f64, usize),
    (t_start, h_t, nt): (f64, f64, usize),
    opts: SweepOptions,
) -> Result<Sweep> {
    if nx == 0 || nt == 0 {
        return Err(Error::InvalidGrid("sweep needs at least one target point on each axis".into()));
    }
    if !(h_xi > 0.0) || !(h_t > 0.0) {
        return Err(Error::InvalidGrid(format!("steps must be positive, got h_ξ = {h_xi}, h_t = {h_t}")));
    }
    let main = opts.jet;
    let (fine, coarse) = ratio_pair(main);
    let mut px = main.margin_xi() + 2 * main.stride;
    let mut pt = main.margin_t();
    if opts.convergence {
        px = px.max(coarse.margin_xi());
        pt = pt.max(coarse.margin_t());
    }
    let xi_axis = uniform_axis(xi_start - px as f64 * h_xi, h_xi, nx + 2 * px);
    let t_axis = uniform_axis(t_start - pt as f64 * h_t, h_t, nt + 2 * pt);
    let grid = build_grid(w, j, j_star, n, &xi_axis, &t_axis)?;
    let upper = if opts.ladder { Some(build_grid(w, j, j_star, n + 1, &xi_axis, &t_axis)?) } else { None };

    let points: Vec<(usize, usize)> = (0..nx).flat_map(|k| (0..nt).map(move |l| (px + k, pt + l))).collect();
    let per_point = points
        .par_iter()
        .map(|&(i, jj)| point_rows(w, j, j_star, &grid, upper.as_ref(), i, jj, opts))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<PdeResidual> = per_point.into_iter().flatten().collect();

    let ratios = if opts.convergence {
        let plain = |o: JetOptions| -> Result<Vec<PdeResidual>> {
            let per = points
                .par_iter()
                .map(|&(i, jj)| {
                    let jet = extract_jet(&grid, i, jj, o)?;
                    Ok(jet_rows(&jet, None))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(per.into_iter().flatten().collect())
        };
        Some((plain(fine)?, plain(coarse)?))
    } else {
        None
    };

    let mut ids: Vec<String> = Vec::new();
    for r in &rows {
        if !ids.contains(&r.id) {
            ids.push(r.id.clone());
        }
    }
    let summary = ids
        .into_iter()
        .map(|id| {
            let mine: Vec<&PdeResidual> = rows.iter().filter(|r| r.id == id).collect();
            let live: Vec<&&PdeResidual> = mine.iter().filter(|r| !r.is_skipped()).collect();
            let max_residual = live.iter().map(|r| r.residual).fold(0.0, f64::max);
            let tolerance = mine.iter().map(|r| r.tolerance).fold(0.0, f64::max);
            let convergence_ratio = ratios.as_ref().and_then(|(f, c)| {
                let m = |v: &[PdeResidual]| super::max_residual(v, &id);
                match (m(f), m(c)) {
                    (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                    _ => None,
                }
            });
            SweepSummary {
                pass: mine.iter().all(|r| r.pass),
                skipped: mine.len() - live.len(),
                evaluated: live.len(),
                id,
                max_residual,
                tolerance,
                convergence_ratio,
            }
        })
        .collect();
    let ratio_steps = opts.convergence.then_some((h_xi * fine.stride as f64, h_xi * coarse.stride as f64));
    Ok(Sweep { rows, summary, ratio_steps })
}

/// Plain stencils at the jet's step and at half of it when the stride is
/// even, otherwise at the jet's step and twice it.
fn ratio_pair(main: JetOptions) -> (JetOptions, JetOptions) {
    if main.stride.is_multiple_of(2) {
        (JetOptions::new(main.stride / 2, 0), JetOptions::new(main.stride, 0))
    } else {
        (JetOptions::new(main.stride, 0), JetOptions::new(2 * main.stride, 0))
    }
}

fn jet_rows(jet: &super::PdeJet, resolvent: Option<f64>) -> Vec<PdeResidual> {
    let mut out = residual_system(jet, resolvent);
    out.extend(residual_equivalent_forms(jet));
    out.extend(gh_eval(jet).1);
    out.push(residual_universal_t(jet));
    out.push(residual_universal_tplus(jet));
    out
}

#[allow(clippy::too_many_arguments)]
fn point_rows(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    grid: &TauGrid,
    upper: Option<&TauGrid>,
    i: usize,
    jj: usize,
    opts: SweepOptions,
) -> Result<Vec<PdeResidual>> {
    let jet = extract_jet(grid, i, jj, opts.jet)?;
    let r = if opts.resolvent { Some(resolvent_diagonal(w, j, j_star, grid.n, jet.xi, jet.t)?) } else { None };
    let mut out = jet_rows(&jet, r);
    if w.kind != WeightKind::Custom {
        out.extend(virasoro_reduce(w.kind, &jet)?);
    }
    out.extend(phi_representation(grid, i, jj, opts.jet)?);
    if let Some(g1) = upper {
        out.extend(recursion_ladder(grid, g1, i, jj, opts.jet)?);
    }
    Ok(out)
}
