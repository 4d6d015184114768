//! Pointwise residuals of the universal system and its consequences.

use super::jet::{check_margin, extract_jet, JetOptions, PdeJet};
use super::{PdeResidual, GUARD, PDE_TOL, SYSTEM_TOL};
use crate::error::{Error, Result};
use crate::measure::{DomainJ, WeightKind, WeightSpec};
use crate::numeric::normalized_residual;
use crate::resolvent::RestrictedFamily;
use crate::tau::TauGrid;

fn guarded(d: f64, scale: f64) -> bool {
    d.abs() < GUARD * scale.abs().max(f64::MIN_POSITIVE)
}

/// `|sum| / sum |terms|`.
fn sum_normalized(terms: &[f64]) -> f64 {
    let s: f64 = terms.iter().sum();
    let a: f64 = terms.iter().map(|x| x.abs()).sum();
    s.abs() / (a + 1e-300)
}

/// `U_ξt / U` and `W_ξt / W` in log form.
fn log_mixed(jet: &PdeJet) -> (f64, f64) {
    let p = &jet.plus;
    let m = &jet.minus;
    (p.xt + p.x * p.t, m.xt + m.x * m.t)
}

/// `R_n(ξ, ξ)` from the restricted basis at the moving endpoint.
pub fn resolvent_diagonal(w: &WeightSpec, j: &DomainJ, j_star: usize, n: usize, xi: f64, t: f64) -> Result<f64> {
    let wt = w.deform(t)?;
    let dom = j.with_endpoint(&wt.support, j_star, xi)?;
    let fam = RestrictedFamily::build(&wt, &dom, n)?;
    let basis = fam.restricted_basis(n)?;
    Ok(fam.resolvent_routes(&basis, n, xi, xi)?.r_sum)
}

/// Toda equation, the two U/W equations and the universal second-order
/// equation for `T_ξ^2` (or `R_n(ξ,ξ)^2` when supplied).
pub fn residual_system(jet: &PdeJet, resolvent_diag: Option<f64>) -> Vec<PdeResidual> {
    let (p, m, t) = (&jet.plus, &jet.minus, &jet.tj);
    let uw = jet.uw();
    let (lu, lw) = log_mixed(jet);
    let mut out = vec![
        PdeResidual::new("system_toda", jet, normalized_residual(t.tt, uw), SYSTEM_TOL),
        PdeResidual::new("system_u", jet, normalized_residual(lu, jet.xi * p.x + 2.0 * jet.v_xi), SYSTEM_TOL),
        PdeResidual::new("system_w", jet, normalized_residual(lw, -jet.xi * m.x + 2.0 * jet.v_xi), SYSTEM_TOL),
    ];
    if guarded(p.x, p.xx.abs() + p.x * p.x) || guarded(m.x, m.xx.abs() + m.x * m.x) {
        out.push(PdeResidual::skipped("system_resolvent", jet, "near-singular U_ξ or W_ξ"));
    } else {
        let bracket = (p.xx + p.x * p.x) / p.x - (m.xx + m.x * m.x) / m.x;
        let rhs = -0.25 * uw * p.x * m.x * bracket * bracket;
        let lhs = resolvent_diag.map_or(t.x * t.x, |r| r * r);
        out.push(PdeResidual::new("system_resolvent", jet, normalized_residual(lhs, rhs), SYSTEM_TOL));
    }
    out
}

/// Eliminated forms: `T_ξt^2 = -U_ξ W_ξ`, `W U_ξt - U W_ξt = ξ T_ξtt`,
/// `2 T_ξ T_ξt = U_ξ W_ξξ - W_ξ U_ξξ`.
///
/// The middle one is normalized by the sum of its expanded terms: for the
/// exponential gap of the Laguerre weight with `α = 0` both sides vanish
/// identically.
pub fn residual_equivalent_forms(jet: &PdeJet) -> Vec<PdeResidual> {
    let (p, m, t) = (&jet.plus, &jet.minus, &jet.tj);
    let uw = jet.uw();
    let r55 = normalized_residual(t.xt * t.xt, -uw * p.x * m.x);
    let r56 = sum_normalized(&[uw * p.xt, uw * p.x * p.t, -uw * m.xt, -uw * m.x * m.t, -jet.xi * t.xtt]);
    let rhs57 = uw * (p.x * (m.xx + m.x * m.x) - m.x * (p.xx + p.x * p.x));
    let r57 = normalized_residual(2.0 * t.x * t.xt, rhs57);
    vec![
        PdeResidual::new("form_product", jet, r55, SYSTEM_TOL),
        PdeResidual::new("form_wronskian", jet, r56, SYSTEM_TOL),
        PdeResidual::new("form_xi", jet, r57, SYSTEM_TOL),
    ]
}

/// `G = W U_ξ - U W_ξ`, `H = W U_t - U W_t` and `G_ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GH {
    pub g: f64,
    pub h: f64,
    pub g_xi: f64,
}

/// `H` expressed through T and G.
fn h_from_g(jet: &PdeJet, g: f64) -> f64 {
    let t = &jet.tj;
    2.0 * jet.xi * t.tt - (2.0 * t.tt * t.xttt - t.ttt * t.xtt + 8.0 * t.tt * t.tt * t.xt) / g
}

/// `G` expressed through T alone (divided by `T_ξ`).
fn g_from_t(jet: &PdeJet) -> f64 {
    let t = &jet.tj;
    (t.xt * t.xxtt - t.xtt * t.xxt + 2.0 * t.xt.powi(3)) / t.x
}

/// G and H with residuals of `G^2 = 4 T_tt T_ξt^2 + T_ξtt^2`, of
/// `T_ξ G = T_ξt T_ξξtt - T_ξtt T_ξξt + 2 T_ξt^3`, of H in terms of G, and
/// of `G_t + H_ξ = 2 ξ T_ξtt`.
pub fn gh_eval(jet: &PdeJet) -> (GH, Vec<PdeResidual>) {
    let (p, m, t) = (&jet.plus, &jet.minus, &jet.tj);
    let uw = jet.uw();
    let g = uw * (p.x - m.x);
    let h = uw * (p.t - m.t);
    let g_xi = uw * ((p.x + m.x) * (p.x - m.x) + p.xx - m.xx);
    let gh = GH { g, h, g_xi };

    let mut out = Vec::new();
    let r_g = normalized_residual(g * g, 4.0 * t.tt * t.xt * t.xt + t.xtt * t.xtt);
    out.push(PdeResidual::new("gh_g_square", jet, r_g, PDE_TOL));
    let rhs_g = t.xt * t.xxtt - t.xtt * t.xxt + 2.0 * t.xt.powi(3);
    out.push(PdeResidual::new("gh_g_from_t", jet, normalized_residual(t.x * g, rhs_g), PDE_TOL));
    if guarded(g, t.tt.abs() * (t.xttt.abs() + t.xt.abs()) + t.ttt.abs() * t.xtt.abs()) {
        out.push(PdeResidual::skipped("gh_h_from_g", jet, "near-singular G"));
    } else {
        out.push(PdeResidual::new("gh_h_from_g", jet, normalized_residual(h, h_from_g(jet, g)), PDE_TOL));
    }
    let terms_compat = [uw * p.xt, -uw * m.xt, uw * p.t * p.x, -uw * m.t * m.x, -jet.xi * t.xtt];
    out.push(PdeResidual::new("gh_compat", jet, sum_normalized(&terms_compat), PDE_TOL));
    (gh, out)
}

/// Residual of H against the variant with the opposite sign of the
/// `T_tt^2 T_ξt` term. It does not vanish, which pins the sign down.
pub fn gh_h_flipped_sign_residual(jet: &PdeJet) -> f64 {
    let t = &jet.tj;
    let g = jet.uw() * (jet.plus.x - jet.minus.x);
    let h = jet.uw() * (jet.plus.t - jet.minus.t);
    let flipped = 2.0 * jet.xi * t.tt - (2.0 * t.tt * t.xttt - t.ttt * t.xtt - 8.0 * t.tt * t.tt * t.xt) / g;
    normalized_residual(h, flipped)
}

/// Universal PDE for T, normalized by the sum of absolute values of all
/// monomials of the expanded equation.
pub fn residual_universal_t(jet: &PdeJet) -> PdeResidual {
    let t = &jet.tj;
    let a = t.xt * t.xxtt;
    let b = -t.xtt * t.xxt;
    let c = 2.0 * t.xt.powi(3);
    let d = 4.0 * t.x * t.x * t.tt * t.xt * t.xt;
    let e = t.x * t.x * t.xtt * t.xtt;
    let lhs = (a + b + c) * (a + b + c);
    let denom = (a.abs() + b.abs() + c.abs()).powi(2) + d.abs() + e.abs();
    if denom < 1e-300 {
        return PdeResidual::skipped("pde_t", jet, "all monomials vanish");
    }
    PdeResidual::new("pde_t", jet, (lhs - d - e).abs() / denom, PDE_TOL)
}

/// Universal PDE for `T_+ = ln(tau_{n+1}^J / tau_n^J)`, sum-normalized.
pub fn residual_universal_tplus(jet: &PdeJet) -> PdeResidual {
    let p = &jet.plus;
    if guarded(p.x, p.xx.abs() + p.xt.abs() + 1.0) {
        return PdeResidual::skipped("pde_tplus", jet, "near-singular T_+'");
    }
    let terms = [
        p.xxtt,
        -p.xtt * p.xx / p.x,
        -p.x * p.x * p.tt,
        -p.xt * p.xxt / p.x,
        p.xt * p.xt * p.xx / (p.x * p.x),
        (jet.xi - p.t) * p.x * (2.0 * p.xt - 1.0),
    ];
    PdeResidual::new("pde_tplus", jet, sum_normalized(&terms), PDE_TOL)
}

/// The two pairs of recursions linking levels n and n+1, with G and H of
/// each level expressed through that level's T alone.
///
/// `grid_n` and `grid_n1` share their axes; `grid_n1` is built at size
/// `n + 1`.
pub fn recursion_ladder(
    grid_n: &TauGrid,
    grid_n1: &TauGrid,
    i: usize,
    j: usize,
    opts: JetOptions,
) -> Result<Vec<PdeResidual>> {
    if grid_n1.n != grid_n.n + 1 || grid_n.xi_axis != grid_n1.xi_axis || grid_n.t_axis != grid_n1.t_axis {
        return Err(Error::InvalidGrid("ladder needs grids at n and n+1 on identical axes".into()));
    }
    let a = extract_jet(grid_n, i, j, opts)?;
    let b = extract_jet(grid_n1, i, j, opts)?;
    let (ta, tb) = (&a.tj, &b.tj);
    let mut out = Vec::new();
    for (id, jet) in [("Ladder_xi_up", &a), ("Ladder_xi_down", &b), ("Ladder_t_up", &a), ("Ladder_t_down", &b)] {
        if guarded(jet.tj.x, 1.0) || guarded(jet.tj.tt, 1.0) {
            out.push(PdeResidual::skipped(id, jet, "near-singular T_ξ or T_tt"));
            continue;
        }
        let g = g_from_t(jet);
        let r = match id {
            "Ladder_xi_up" => normalized_residual(2.0 * tb.x, 2.0 * ta.x + ta.xtt / ta.tt + g / ta.tt),
            "Ladder_xi_down" => normalized_residual(2.0 * ta.x, 2.0 * tb.x + tb.xtt / tb.tt - g / tb.tt),
            "Ladder_t_up" => {
                let h = h_from_g(jet, g);
                normalized_residual(2.0 * tb.t, 2.0 * ta.t + ta.ttt / ta.tt + h / ta.tt)
            }
            _ => {
                let h = h_from_g(jet, g);
                normalized_residual(2.0 * ta.t, 2.0 * tb.t + tb.ttt / tb.tt - h / tb.tt)
            }
        };
        out.push(PdeResidual::new(id, jet, r, PDE_TOL));
    }
    Ok(out)
}

/// Virasoro constraints for a single moving endpoint. They are the t = 0
/// forms `T_t + ½T_ξ = 0`, `T_tt - ¼T_ξξ - n/2 = 0` (Gaussian) and
/// `T_t + ξT_ξ - n(n+α) = 0`, `T_tt - ξ²T_ξξ - n(n+α) = 0` (Laguerre),
/// carried to general t by the shift and scaling that generate the flow.
pub fn virasoro_reduce(kind: WeightKind, jet: &PdeJet) -> Result<Vec<PdeResidual>> {
    let t = &jet.tj;
    let nf = jet.n as f64;
    let tol = SYSTEM_TOL;
    let norm = |terms: &[f64]| sum_normalized(terms);
    match kind {
        WeightKind::Gaussian => Ok(vec![
            PdeResidual::new("Virasoro1", jet, norm(&[t.t, 0.5 * t.x, -0.5 * nf * jet.t]), tol),
            PdeResidual::new("Virasoro2", jet, norm(&[t.tt, -0.25 * t.xx, -0.5 * nf]), tol),
        ]),
        WeightKind::Laguerre { alpha } => {
            let q = 1.0 - jet.t;
            let c = nf * (nf + alpha);
            Ok(vec![
                PdeResidual::new("Virasoro1", jet, norm(&[t.t, jet.xi * t.x / q, -c / q]), tol),
                PdeResidual::new("Virasoro2", jet, norm(&[t.tt, -jet.xi * jet.xi * t.xx / (q * q), -c / (q * q)]), tol),
            ])
        }
        WeightKind::Custom => Err(Error::Unsupported("no Virasoro reduction implemented for custom weights".into())),
    }
}

/// `Φ = (r_t r_ξtt - r_tt r_ξt + 2 r_t^3) / (r r_t)` with `r = T_ξ`.
fn phi(jet: &PdeJet) -> Option<f64> {
    let t = &jet.tj;
    let (r, rt) = (t.x, t.xt);
    if guarded(r, 1.0) || guarded(rt, t.xtt.abs() + 1.0) {
        return None;
    }
    Some((rt * t.xxtt - t.xtt * t.xxt + 2.0 * rt.powi(3)) / (r * rt))
}

/// `Φ^2 = (r_tt / r_t)^2 + 4 T_tt` and `Φ_ξ = r r_tt / r_t^2`, with `Φ_ξ`
/// from a Richardson-extrapolated central difference of Φ in ξ.
pub fn phi_representation(grid: &TauGrid, i: usize, j: usize, opts: JetOptions) -> Result<Vec<PdeResidual>> {
    let s = opts.stride;
    check_margin(grid, i, j, opts.margin_xi() + 2 * s, opts.margin_t())?;
    let jet = extract_jet(grid, i, j, opts)?;
    let t = &jet.tj;
    let Some(phi0) = phi(&jet) else {
        return Ok(vec![
            PdeResidual::skipped("phi_square", &jet, "near-singular r or r_t"),
            PdeResidual::skipped("phi_xi", &jet, "near-singular r or r_t"),
        ]);
    };
    let ratio = t.xtt / t.xt;
    let mut out = vec![PdeResidual::new(
        "phi_square",
        &jet,
        normalized_residual(phi0 * phi0, ratio * ratio + 4.0 * t.tt),
        PDE_TOL,
    )];
    let at = |k: isize| -> Result<Option<f64>> {
        let jj = extract_jet(grid, (i as isize + k) as usize, j, opts)?;
        Ok(phi(&jj))
    };
    let si = s as isize;
    let vals = [at(si)?, at(-si)?, at(2 * si)?, at(-2 * si)?];
    if vals.iter().any(Option::is_none) {
        out.push(PdeResidual::skipped("phi_xi", &jet, "near-singular r or r_t nearby"));
        return Ok(out);
    }
    let v: Vec<f64> = vals.iter().map(|x| x.unwrap()).collect();
    let h = grid.h_xi() * s as f64;
    let d1 = (v[0] - v[1]) / (2.0 * h);
    let d2 = (v[2] - v[3]) / (4.0 * h);
    let phi_xi = if opts.richardson > 0 { (4.0 * d1 - d2) / 3.0 } else { d1 };
    let rhs = t.x * t.xtt / (t.xt * t.xt);
    if t.xtt.abs() < 1e-6 * (t.xt.abs() + t.x.abs()) {
        out.push(PdeResidual::skipped("phi_xi", &jet, "r_tt vanishes to difference precision"));
        return Ok(out);
    }
    out.push(PdeResidual::new("phi_xi", &jet, normalized_residual(phi_xi, rhs), PDE_TOL));
    Ok(out)
}
