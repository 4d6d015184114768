//! Residual evaluators for the finite-n identities of the restricted
//! ensemble, with a machine-readable report per identity and configuration.
//!
//! Every report carries a short identity id (`tau_u`, `three_term_q`, ...).
//! Function identities are checked on deterministic sample points and
//! reported sup-normalized: `max |lhs - rhs| / max (|lhs| + |rhs|)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{DomainJ, Interval, WeightKind, WeightSpec, DEFAULT_TOL};
use crate::numeric::normalized_residual;
use crate::orthopoly::OrthoSystem;
use crate::resolvent::{tw_inner_products, RestrictedFamily};
use crate::tau::GapLadder;

/// Tolerance for identities that involve no finite differences.
pub const ALGEBRAIC_TOL: f64 = 1e-8;
/// Tolerance for function identities at sample points.
pub const FUNCTION_TOL: f64 = 1e-9;
/// Absolute tolerance for finite differences in t.
pub const TODA_TOL: f64 = 1e-6;
/// Tolerance for finite differences in an endpoint.
pub const ENDPOINT_TOL: f64 = 1e-6;

/// Labels identifying the configuration of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigLabel {
    pub weight: String,
    #[serde(rename = "J")]
    pub j: serde_json::Value,
    pub n: usize,
    pub t: f64,
}

/// One residual evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity_id: String,
    pub config: ConfigLabel,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn new(id: &str, config: ConfigLabel, residual: f64, tolerance: f64) -> Self {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual.abs() };
        Self { identity_id: id.to_string(), config, residual, tolerance, pass: residual <= tolerance, note: None }
    }

    /// A point excluded by a division guard or a precondition.
    pub fn skipped(id: &str, config: ConfigLabel, reason: &str) -> Self {
        Self {
            identity_id: id.to_string(),
            config,
            residual: 0.0,
            tolerance: 0.0,
            pass: true,
            note: Some(format!("skipped: {reason}")),
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(id: &str, config: ConfigLabel, err: &Error) -> Self {
        Self {
            identity_id: id.to_string(),
            config,
            residual: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
            note: Some(format!("error: {err}")),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.note.as_deref().is_some_and(|n| n.starts_with("skipped"))
    }

    /// One JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| "{}".into())
    }
}

/// A weight, domain, size and deformation time.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityConfig {
    /// Undeformed weight.
    pub weight: WeightSpec,
    pub j: DomainJ,
    pub n: usize,
    pub t: f64,
}

impl IdentityConfig {
    pub fn new(weight: WeightSpec, j: DomainJ, n: usize, t: f64) -> Self {
        Self { weight, j, n, t }
    }

    pub fn label(&self) -> ConfigLabel {
        ConfigLabel { weight: self.weight.label(), j: self.j.to_json(), n: self.n, t: self.t }
    }
}

/// Knobs for the identity checks.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOptions {
    /// Step for finite differences in t.
    pub h_t: f64,
    /// Step for finite differences in an endpoint.
    pub h_xi: f64,
    pub tol: f64,
    /// Relative corruption applied to `b_{n-1}` on the tau side of
    /// `tau_u`/`tau_w`; a negative-control hook, zero in normal runs.
    pub b_perturbation: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        Self { h_t: 1e-3, h_xi: 1e-3, tol: DEFAULT_TOL, b_perturbation: 0.0 }
    }
}

/// Standard configuration matrix: Gaussian and Laguerre `alpha in {0, 1}`,
/// `n = 2..=10`, left ray / right ray / bounded `J`, `t in {0, 0.2}`.
///
/// `J` is placed relative to the bulk of the spectrum: Gaussian domains are
/// shifted by `t/2`, Laguerre domains scaled by `1/(1-t)`, matching how the
/// deformation moves the eigenvalues.
pub fn standard_matrix() -> Vec<IdentityConfig> {
    let mut out = Vec::new();
    let weights = [
        WeightSpec::gaussian(),
        WeightSpec::laguerre(0.0).expect("valid alpha"),
        WeightSpec::laguerre(1.0).expect("valid alpha"),
    ];
    for w in &weights {
        for n in 2..=10 {
            for j in standard_domains(w, n, 0.0) {
                for t in [0.0, 0.2] {
                    let jt = standard_domain_at(w, &j, t);
                    out.push(IdentityConfig::new(w.clone(), jt, n, t));
                }
            }
        }
    }
    out
}

/// Left ray, right ray and bounded domain scaled to the spectrum of size `n`.
pub fn standard_domains(w: &WeightSpec, n: usize, _t: f64) -> Vec<DomainJ> {
    let nf = n as f64;
    let d = |lo: f64, hi: f64| DomainJ::single(lo, hi).expect("valid interval");
    match w.kind {
        WeightKind::Laguerre { alpha } => {
            vec![d(0.0, 4.0 * nf + alpha), d(0.5 / nf, f64::INFINITY), d(0.25 / nf, 4.0 * nf + alpha + 2.0)]
        }
        _ => {
            let e = (2.0 * nf).sqrt();
            vec![d(f64::NEG_INFINITY, e), d(-e, f64::INFINITY), d(-e - 0.5, e + 0.5)]
        }
    }
}

fn standard_domain_at(w: &WeightSpec, j: &DomainJ, t: f64) -> DomainJ {
    let map = |x: f64| match w.kind {
        WeightKind::Laguerre { .. } => x / (1.0 - t),
        _ => x + t / 2.0,
    };
    DomainJ::new(j.intervals().iter().map(|iv| Interval::new(map(iv.lo), map(iv.hi))).collect())
        .expect("mapped domain stays valid")
}

/// Shared data for all checks of one configuration.
pub struct CheckContext {
    pub cfg: IdentityConfig,
    pub label: ConfigLabel,
    pub weight_t: WeightSpec,
    /// States up to `n + 1`.
    pub family: RestrictedFamily,
    pub samples: Vec<f64>,
    pub opts: IdentityOptions,
}

impl CheckContext {
    pub fn new(cfg: &IdentityConfig, opts: IdentityOptions) -> Result<Self> {
        if cfg.n == 0 {
            return Err(Error::Config("identity checks need n >= 1".into()));
        }
        let weight_t = cfg.weight.deform(cfg.t)?;
        let family = RestrictedFamily::build_with_tol(&weight_t, &cfg.j, cfg.n + 1, opts.tol)?;
        let samples = sample_points(&weight_t, &cfg.j);
        Ok(Self { cfg: cfg.clone(), label: cfg.label(), weight_t, family, samples, opts })
    }

    fn report(&self, id: &str, residual: f64, tol: f64) -> ResidualReport {
        ResidualReport::new(id, self.label.clone(), residual, tol)
    }

    fn domain_shifted(&self, endpoint: Option<usize>, delta: f64) -> Result<DomainJ> {
        let support = self.weight_t.support;
        match endpoint {
            Some(k) => {
                let e = self.cfg.j.endpoints(&support)[k];
                self.cfg.j.with_endpoint(&support, k, e.position + delta)
            }
            None => {
                let ivs = self.cfg.j.clipped(&support);
                let shifted = ivs
                    .iter()
                    .map(|iv| {
                        let lo = if iv.lo > support.lo { iv.lo + delta } else { iv.lo };
                        let hi = if iv.hi < support.hi { iv.hi + delta } else { iv.hi };
                        Interval::new(lo, hi)
                    })
                    .collect();
                DomainJ::new(shifted)
            }
        }
    }

    /// Central difference with one Richardson level of `f(delta)`.
    fn richardson<F: Fn(f64) -> Result<f64>>(h: f64, f: F) -> Result<(f64, f64)> {
        let d1 = (f(h)? - f(-h)?) / (2.0 * h);
        let d2 = (f(2.0 * h)? - f(-2.0 * h)?) / (4.0 * h);
        Ok(((4.0 * d1 - d2) / 3.0, d1))
    }
}

/// Deterministic sample points: Chebyshev points on each bounded piece of
/// `J` and `J^c` and geometrically spaced points on each unbounded piece.
pub fn sample_points(w: &WeightSpec, j: &DomainJ) -> Vec<f64> {
    let support = w.support;
    let mut pieces: Vec<Interval> = j.clipped(&support);
    pieces.extend(j.complement(&support));
    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let unbounded = pieces.iter().filter(|p| !p.is_bounded()).count();
    let bounded = pieces.len() - unbounded;
    let tail = [0.1, 0.3, 0.7, 1.5, 3.0];
    let per_bounded = (20 - tail.len() * unbounded).checked_div(bounded).map_or(0, |m| m.max(3));
    let mut out = Vec::new();
    for p in pieces {
        if p.is_bounded() {
            let m = per_bounded;
            for k in 0..m {
                let c = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos();
                out.push(0.5 * (p.lo + p.hi) + 0.5 * (p.hi - p.lo) * c);
            }
        } else if p.hi.is_infinite() && p.lo.is_finite() {
            out.extend(tail.iter().map(|d| p.lo + d));
        } else if p.lo.is_infinite() && p.hi.is_finite() {
            out.extend(tail.iter().map(|d| p.hi - d));
        } else {
            out.extend([-3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0]);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// `max |l - r| / max (|l| + |r|)` over pairs.
fn sup_normalized(pairs: &[(f64, f64)]) -> f64 {
    let num = pairs.iter().fold(0.0f64, |m, (l, r)| m.max((l - r).abs()));
    let den = pairs.iter().fold(0.0f64, |m, (l, r)| m.max(l.abs() + r.abs()));
    num / (den + 1e-300)
}

/// `max |residual| / max (sum of |terms|)`.
fn sup_term_normalized(rows: &[(f64, f64)]) -> f64 {
    let num = rows.iter().fold(0.0f64, |m, (r, _)| m.max(r.abs()));
    let den = rows.iter().fold(0.0f64, |m, (_, s)| m.max(*s));
    num / (den + 1e-300)
}

/// `u_n = b_{n-1} (1 - (tau^J_{n+1}/tau_{n+1}) / (tau^J_n/tau_n))`.
pub fn check_tau_relation_u(ctx: &CheckContext) -> ResidualReport {
    let n = ctx.cfg.n;
    let res = (|| -> Result<f64> {
        let st = ctx.family.state(n)?;
        let (u, _, _) = tw_inner_products(st)?;
        let b = st.b * (1.0 + ctx.opts.b_perturbation);
        let rhs = -b * (ctx.family.log_gap(n + 1) - ctx.family.log_gap(n)).exp_m1();
        Ok(normalized_residual(u, rhs))
    })();
    match res {
        Ok(r) => ctx.report("tau_u", r, ALGEBRAIC_TOL),
        Err(e) => ResidualReport::failed("tau_u", ctx.label.clone(), &e),
    }
}

/// `w_n = b_{n-1} ((tau^J_{n-1}/tau_{n-1}) / (tau^J_n/tau_n) - 1)`.
pub fn check_tau_relation_w(ctx: &CheckContext) -> ResidualReport {
    let n = ctx.cfg.n;
    let res = (|| -> Result<f64> {
        let st = ctx.family.state(n)?;
        let (_, _, w) = tw_inner_products(st)?;
        let b = st.b * (1.0 + ctx.opts.b_perturbation);
        let rhs = b * (ctx.family.log_gap(n - 1) - ctx.family.log_gap(n)).exp_m1();
        Ok(normalized_residual(w, rhs))
    })();
    match res {
        Ok(r) => ctx.report("tau_w", r, ALGEBRAIC_TOL),
        Err(e) => ResidualReport::failed("tau_w", ctx.label.clone(), &e),
    }
}

/// Restricted Toda coefficient:
/// `b^2 (1 - ubar_n)(1 + wbar_n) = tau^J_{n+1} tau^J_{n-1} / (tau^J_n)^2`.
pub fn check_restricted_toda(ctx: &CheckContext) -> ResidualReport {
    let n = ctx.cfg.n;
    let res = (|| -> Result<f64> {
        let st = ctx.family.state(n)?;
        let lhs = st.b * st.b * (1.0 - st.ubar) * (1.0 + st.wbar);
        Ok(normalized_residual(lhs, ctx.family.ladder(n).restricted_b_squared()))
    })();
    match res {
        Ok(r) => ctx.report("restricted_toda", r, ALGEBRAIC_TOL),
        Err(e) => ResidualReport::failed("restricted_toda", ctx.label.clone(), &e),
    }
}

/// `ln(tau^J_m / tau_m)` and `ln tau_m` at `t + dt` for `m = n-1, n, n+1`.
fn ladder_at_t(ctx: &CheckContext, dt: f64) -> Result<([f64; 3], [f64; 3])> {
    let n = ctx.cfg.n;
    let w = ctx.cfg.weight.deform(ctx.cfg.t + dt)?;
    let sys = OrthoSystem::new(&w, n + 2, ctx.opts.tol)?;
    let gl = GapLadder::new(&sys, &ctx.cfg.j, n)?;
    Ok((
        [gl.log_gap(n - 1), gl.log_gap(n), gl.log_gap(n + 1)],
        [sys.log_tau(n - 1), sys.log_tau(n), sys.log_tau(n + 1)],
    ))
}

/// Central difference in t of a function of the ladder: the plain
/// second-order quotient and its Richardson extrapolation over `h, 2h`.
fn fd_t<F: Fn(&[f64; 3], &[f64; 3]) -> f64>(ctx: &CheckContext, h: f64, f: F) -> Result<(f64, f64)> {
    let eval = |d: f64| ladder_at_t(ctx, d).map(|(g, fr)| f(&g, &fr));
    let (rich, plain) = CheckContext::richardson(h, eval)?;
    Ok((plain, rich))
}

/// `v_n = -d/dt ln(tau^J_n / tau_n)`.
///
/// The residual uses the Richardson-extrapolated central difference at
/// `h_t`; the plain second-order residual is kept in the note. The order
/// report checks the plain quotient under halving `h_t`.
pub fn check_v_toda(ctx: &CheckContext, h_t: f64) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    let res = (|| -> Result<(f64, f64, f64)> {
        let v = ctx.family.state(n)?.v;
        let (p1, rich) = fd_t(ctx, h_t, |g, _| g[1])?;
        let (p2, _) = fd_t(ctx, 0.5 * h_t, |g, _| g[1])?;
        Ok(((v + rich).abs(), (v + p1).abs(), (v + p2).abs()))
    })();
    match res {
        Ok((rich, r1, r2)) => {
            let main = ctx
                .report("v_toda", rich, TODA_TOL)
                .with_note(format!("absolute, h_t = {h_t:e}, plain central residual {r1:.3e}"));
            vec![main, order_report("v_toda_order", ctx.label.clone(), r1, r2, 0.5 * h_t)]
        }
        Err(e) => vec![ResidualReport::failed("v_toda", ctx.label.clone(), &e)],
    }
}

/// Order check: the ratio of residuals under halving lies in `[3, 5]`,
/// unless both sit at the rounding floor of the difference quotient.
pub(crate) fn order_report(id: &str, label: ConfigLabel, coarse: f64, fine: f64, fine_h: f64) -> ResidualReport {
    let floor = 1e-13 / fine_h;
    if coarse < 100.0 * floor {
        return ResidualReport::skipped(id, label, &format!("residual {coarse:.1e} at rounding floor"));
    }
    let ratio = coarse / fine;
    let distance = if (3.0..=5.0).contains(&ratio) { 0.0 } else { (ratio - 4.0).abs() - 1.0 };
    ResidualReport::new(id, label, distance, 0.0).with_note(format!("ratio = {ratio:.3}"))
}

/// `v_+ = v_{n+1} - v_n - a_n = -d/dt ln(tau^J_{n+1}/tau^J_n)` and the
/// companion `v_- = v_{n-1} - v_n + a_{n-1} = -d/dt ln(tau^J_{n-1}/tau^J_n)`.
/// Evaluated at `t = 0` only.
pub fn check_v_plus_minus(ctx: &CheckContext) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    if ctx.cfg.t != 0.0 {
        return vec![];
    }
    if n < 2 {
        return vec![ResidualReport::skipped("v_plus_minus", ctx.label.clone(), "needs n >= 2")];
    }
    let h = ctx.opts.h_t;
    let res = (|| -> Result<(f64, f64)> {
        let tab = &ctx.family.sys.table;
        let v = |m: usize| ctx.family.state(m).map(|s| s.v);
        let vp = v(n + 1)? - v(n)? - tab.a[n];
        let vm = v(n - 1)? - v(n)? + tab.a[n - 1];
        let dp = fd_t(ctx, h, |g, f| (g[2] + f[2]) - (g[1] + f[1]))?.1;
        let dm = fd_t(ctx, h, |g, f| (g[0] + f[0]) - (g[1] + f[1]))?.1;
        Ok(((vp + dp).abs(), (vm + dm).abs()))
    })();
    match res {
        Ok((rp, rm)) => vec![
            ctx.report("v_plus", rp, TODA_TOL).with_note("absolute"),
            ctx.report("v_minus", rm, TODA_TOL).with_note("absolute"),
        ],
        Err(e) => vec![ResidualReport::failed("v_plus_minus", ctx.label.clone(), &e)],
    }
}

/// `P_{n+1}(1 - ubar_n) = Q_n`, `Q_{n-1}(1 + wbar_n) = P_n` at the sample
/// points, and `wbar_{n+1} = ubar_n / (1 - ubar_n)`.
pub fn check_lemma1(ctx: &CheckContext) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    let res = (|| -> Result<(f64, f64)> {
        let fam = &ctx.family;
        let ub = fam.state(n)?.ubar;
        let wb = fam.state(n)?.wbar;
        let mut pairs = Vec::new();
        for &x in &ctx.samples {
            let (_, p_next) = fam.qp(n + 1, x)?;
            let (q, p) = fam.qp(n, x)?;
            let q_prev = fam.q(n - 1, x)?;
            pairs.push((p_next * (1.0 - ub), q));
            pairs.push((q_prev * (1.0 + wb), p));
        }
        let scalar = normalized_residual(fam.state(n + 1)?.wbar, ub / (1.0 - ub));
        Ok((sup_normalized(&pairs), scalar))
    })();
    match res {
        Ok((f, s)) => vec![ctx.report("lemma_qp", f, FUNCTION_TOL), ctx.report("lemma_wbar", s, FUNCTION_TOL)],
        Err(e) => vec![ResidualReport::failed("lemma_qp", ctx.label.clone(), &e)],
    }
}

/// Three-term recurrences of `Q_n` and `P_n`.
pub fn check_three_term(ctx: &CheckContext) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    let fam = &ctx.family;
    let tab = &fam.sys.table;
    let q_rows = (|| -> Result<Vec<(f64, f64)>> {
        let sn = fam.state(n)?;
        let sn1 = fam.state(n + 1)?;
        let c_mid = tab.a[n] + sn.v - sn1.v;
        let c_low = sn.b * (1.0 - sn.ubar) * (1.0 + sn.wbar);
        let mut rows = Vec::new();
        for &x in &ctx.samples {
            let q = fam.q(n, x)?;
            let terms = [x * q, -tab.b[n] * fam.q(n + 1, x)?, -c_mid * q, -c_low * fam.q(n - 1, x)?];
            rows.push((terms.iter().sum(), terms.iter().map(|v| v.abs()).sum()));
        }
        Ok(rows)
    })();
    let mut out = vec![match q_rows {
        Ok(rows) => ctx.report("three_term_q", sup_term_normalized(&rows), FUNCTION_TOL),
        Err(e) => ResidualReport::failed("three_term_q", ctx.label.clone(), &e),
    }];
    if n < 2 {
        out.push(ResidualReport::skipped("three_term_p", ctx.label.clone(), "needs n >= 2"));
        return out;
    }
    let p_rows = (|| -> Result<Vec<(f64, f64)>> {
        let sn = fam.state(n)?;
        let sp = fam.state(n - 1)?;
        let c_up = sn.b * (1.0 - sn.ubar) * (1.0 + sn.wbar);
        let c_mid = tab.a[n - 1] - sn.v + sp.v;
        let mut rows = Vec::new();
        for &x in &ctx.samples {
            let p = fam.qp(n, x)?.1;
            let terms = [x * p, -c_up * fam.qp(n + 1, x)?.1, -c_mid * p, -tab.b[n - 2] * fam.qp(n - 1, x)?.1];
            rows.push((terms.iter().sum(), terms.iter().map(|v| v.abs()).sum()));
        }
        Ok(rows)
    })();
    out.push(match p_rows {
        Ok(rows) => ctx.report("three_term_p", sup_term_normalized(&rows), FUNCTION_TOL),
        Err(e) => ResidualReport::failed("three_term_p", ctx.label.clone(), &e),
    });
    out
}

/// `∂ ln tau_m^J / ∂ a_k` at the configuration, Richardson-extrapolated.
fn endpoint_log_gap_derivative(ctx: &CheckContext, k: usize, m: usize) -> Result<f64> {
    let h = ctx.opts.h_xi;
    let sys = &ctx.family.sys;
    let f = |d: f64| -> Result<f64> {
        let dom = ctx.domain_shifted(Some(k), d)?;
        Ok(GapLadder::new(sys, &dom, m)?.log_gap(m))
    };
    Ok(CheckContext::richardson(h, f)?.0)
}

/// Resolvent: three routes on a 5x5 mesh, the Jacobi relation of `r_k`,
/// the diagonal at endpoints against `∂ ln tau^J` and the telescoping
/// `R_{n+1}(a,a) - R_n(a,a) = r_n(a)^2`.
pub fn check_cd_resolvent(ctx: &CheckContext) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    let fam = &ctx.family;
    let mut out = Vec::new();

    let mesh = (|| -> Result<f64> {
        let basis = fam.restricted_basis(n)?;
        let step = (ctx.samples.len() / 5).max(1);
        let pts: Vec<f64> = ctx.samples.iter().step_by(step).take(5).copied().collect();
        let mut worst: f64 = 0.0;
        for &x in &pts {
            for &y in &pts {
                let val = fam.resolvent_routes(&basis, n, x, y)?;
                let dx = fam.resolvent_routes(&basis, n, x, x)?.r_sum;
                let dy = fam.resolvent_routes(&basis, n, y, y)?.r_sum;
                let scale = (dx * dy).sqrt().max(val.r_sum.abs()).max(1e-300);
                worst = worst.max(val.mismatch(scale));
            }
        }
        Ok(worst)
    })();
    out.push(match mesh {
        Ok(r) => ctx.report("resolvent_routes", r, ALGEBRAIC_TOL),
        Err(e) => ResidualReport::failed("resolvent_routes", ctx.label.clone(), &e),
    });

    let jacobi = (|| -> Result<f64> {
        let basis = fam.restricted_basis(n + 1)?;
        let diag = fam.sys.table.a[n] + fam.state(n)?.v - fam.state(n + 1)?.v;
        let (bu, bl) = (fam.beta(n + 1)?, fam.beta(n)?);
        let mut rows = Vec::new();
        for &x in &ctx.samples {
            let r = fam.r_values(&basis, x)?;
            let terms = [x * r[n], -bu * r[n + 1], -diag * r[n], -bl * r[n - 1]];
            rows.push((terms.iter().sum(), terms.iter().map(|v| v.abs()).sum()));
        }
        Ok(sup_term_normalized(&rows))
    })();
    out.push(match jacobi {
        Ok(r) => ctx.report("resolvent_jacobi", r, FUNCTION_TOL),
        Err(e) => ResidualReport::failed("resolvent_jacobi", ctx.label.clone(), &e),
    });

    let endpoints = fam.endpoints();
    if endpoints.is_empty() {
        out.push(ResidualReport::skipped("resolvent_endpoint", ctx.label.clone(), "no finite endpoint"));
        out.push(ResidualReport::skipped("resolvent_telescoping", ctx.label.clone(), "no finite endpoint"));
        return out;
    }
    let diag = (|| -> Result<(f64, f64, usize)> {
        let basis = fam.restricted_basis(n + 1)?;
        let (mut r_endpoint, mut r_telescoping, mut contradictions) = (0.0f64, 0.0f64, 0usize);
        for e in &endpoints {
            let a = e.position;
            let rn = fam.resolvent_routes(&basis, n, a, a)?.r_sum;
            let rn1 = fam.resolvent_routes(&basis, n + 1, a, a)?.r_sum;
            let dn = endpoint_log_gap_derivative(ctx, e.index, n)?;
            let dn1 = endpoint_log_gap_derivative(ctx, e.index, n + 1)?;
            if (-e.parity * dn).signum() != rn.signum() {
                contradictions += 1;
            }
            r_endpoint = r_endpoint.max(normalized_residual(rn, -e.parity * dn));
            let rv = fam.r_values(&basis, a)?;
            r_telescoping = r_telescoping.max(normalized_residual(-e.parity * (dn1 - dn), rv[n] * rv[n]));
            let _ = rn1;
        }
        Ok((r_endpoint, r_telescoping, contradictions))
    })();
    match diag {
        Ok((r_endpoint, r_telescoping, c)) => {
            let mut rep = ctx.report("resolvent_endpoint", r_endpoint, 1e-7);
            if c > 0 {
                rep = rep.with_note(format!("parity self-test contradicts convention at {c} endpoint(s)"));
            }
            out.push(rep);
            out.push(ctx.report("resolvent_telescoping", r_telescoping, 1e-7));
        }
        Err(e) => out.push(ResidualReport::failed("resolvent_endpoint", ctx.label.clone(), &e)),
    }
    out
}

/// Endpoint equations `∂u/∂a_j = s q^2`, `∂v/∂a_j = s q p`,
/// `∂w/∂a_j = s p^2`, assembled as `∂Δ/∂a_j = A_j` with
/// `Δ = [[-v, u], [-w, v]]` and `A_j = s [[-qp, q^2], [-p^2, qp]]`.
///
/// The residual is `max |FD - exact| / (q^2 + p^2)` over endpoints and
/// entries. The sign `s` of each endpoint is cross-checked against the sign
/// of the difference quotient of `u`.
pub fn check_tw_endpoint(ctx: &CheckContext, h_xi: f64) -> Vec<ResidualReport> {
    let n = ctx.cfg.n;
    let fam = &ctx.family;
    let endpoints = fam.endpoints();
    if endpoints.is_empty() {
        return vec![
            ctx.report("endpoint_uvw", 0.0, ENDPOINT_TOL).with_note("vacuous: no finite endpoint"),
            ctx.report("endpoint_matrix", 0.0, ENDPOINT_TOL).with_note("vacuous: no finite endpoint"),
            ctx.report("endpoint_trace", 0.0, 0.0).with_note("vacuous: no finite endpoint"),
        ];
    }
    let res = (|| -> Result<(f64, f64, f64, usize)> {
        let basis = fam.restricted_basis(n)?;
        let sys = &fam.sys;
        let (mut worst, mut worst_matrix, mut trace, mut contradictions) = (0.0f64, 0.0f64, 0.0f64, 0usize);
        for (e, q, p) in &basis.endpoint_values {
            let uvw = |d: f64| -> Result<[f64; 3]> {
                let dom = ctx.domain_shifted(Some(e.index), d)?;
                let f = RestrictedFamily::new(sys.clone(), &dom, n)?;
                let st = f.state(n)?;
                Ok([st.u, st.v, st.w])
            };
            let (p1, m1, p2, m2) = (uvw(h_xi)?, uvw(-h_xi)?, uvw(2.0 * h_xi)?, uvw(-2.0 * h_xi)?);
            let fd: Vec<f64> = (0..3)
                .map(|k| {
                    let d1 = (p1[k] - m1[k]) / (2.0 * h_xi);
                    let d2 = (p2[k] - m2[k]) / (4.0 * h_xi);
                    (4.0 * d1 - d2) / 3.0
                })
                .collect();
            let s = e.parity;
            let exact = [s * q * q, s * q * p, s * p * p];
            let scale = q * q + p * p + 1e-300;
            if fd[0] != 0.0 && fd[0].signum() != s {
                contradictions += 1;
            }
            for k in 0..3 {
                worst = worst.max((fd[k] - exact[k]).abs() / scale);
            }
            // Matrix form: dΔ/da against A_j.
            let a_j = [[-s * q * p, s * q * q], [-s * p * p, s * q * p]];
            let d_delta = [[-fd[1], fd[0]], [-fd[2], fd[1]]];
            for r in 0..2 {
                for c in 0..2 {
                    worst_matrix = worst_matrix.max((d_delta[r][c] - a_j[r][c]).abs() / scale);
                }
            }
            trace = trace.max((a_j[0][0] + a_j[1][1]).abs());
        }
        Ok((worst, worst_matrix, trace, contradictions))
    })();
    match res {
        Ok((w, wm, tr, c)) => {
            let mut first = ctx.report("endpoint_uvw", w, ENDPOINT_TOL);
            if c > 0 {
                first = first.with_note(format!("parity self-test contradicts convention at {c} endpoint(s)"));
            }
            vec![first, ctx.report("endpoint_matrix", wm, ENDPOINT_TOL), ctx.report("endpoint_trace", tr, 0.0)]
        }
        Err(e) => vec![ResidualReport::failed("endpoint_uvw", ctx.label.clone(), &e)],
    }
}

/// All checks for one configuration.
pub fn check_all(cfg: &IdentityConfig, opts: IdentityOptions) -> Vec<ResidualReport> {
    let ctx = match CheckContext::new(cfg, opts) {
        Ok(c) => c,
        Err(e) => return vec![ResidualReport::failed("setup", cfg.label(), &e)],
    };
    let mut out = vec![check_tau_relation_u(&ctx), check_tau_relation_w(&ctx), check_restricted_toda(&ctx)];
    out.extend(check_v_toda(&ctx, opts.h_t));
    out.extend(check_v_plus_minus(&ctx));
    out.extend(check_lemma1(&ctx));
    out.extend(check_three_term(&ctx));
    out.extend(check_cd_resolvent(&ctx));
    out.extend(check_tw_endpoint(&ctx, opts.h_xi));
    out
}

/// Runs every configuration in parallel; reports ordered by identity id and
/// then by configuration index.
pub fn run_matrix(configs: &[IdentityConfig], opts: IdentityOptions) -> Vec<ResidualReport> {
    let per: Vec<Vec<ResidualReport>> = configs.par_iter().map(|c| check_all(c, opts)).collect();
    let mut tagged: Vec<(usize, ResidualReport)> =
        per.into_iter().enumerate().flat_map(|(i, v)| v.into_iter().map(move |r| (i, r))).collect();
    tagged.sort_by(|a, b| a.1.identity_id.cmp(&b.1.identity_id).then(a.0.cmp(&b.0)));
    tagged.into_iter().map(|(_, r)| r).collect()
}
