//! Ordinary differential equations in the moving endpoint at `t = 0`.

use rayon::prelude::*;
use serde::Serialize;

use super::jet::{derivative_1d, JetOptions};
use crate::error::{Error, Result};
use crate::measure::{DomainJ, WeightKind, WeightSpec, DEFAULT_TOL};
use crate::orthopoly::OrthoSystem;
use crate::tau::{uniform_axis, GapLadder};

/// Tolerance of the higher-order secondary forms, which need one more
/// derivative and are evaluated at the coarser stride.
pub const SECONDARY_TOL: f64 = 1e-3;

/// `ln(tau_n^J / tau_n)` at `t = 0` along a uniform ξ axis that extends
/// `margin` steps beyond the target range `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct GapProfile {
    pub n: usize,
    pub kind: WeightKind,
    pub xi: Vec<f64>,
    pub log_gap: Vec<f64>,
    pub h: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Computes the profile for the endpoint `j_star` of `J`.
#[allow(clippy::too_many_arguments)]
pub fn gap_profile(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    n: usize,
    lo: f64,
    hi: f64,
    h: f64,
    margin: usize,
) -> Result<GapProfile> {
    if !(h > 0.0) || !(hi > lo) {
        return Err(Error::InvalidGrid(format!("bad ξ range [{lo}, {hi}] with step {h}")));
    }
    let count = ((hi - lo) / h).round() as usize + 1 + 2 * margin;
    let xi = uniform_axis(lo - margin as f64 * h, h, count);
    let sys = OrthoSystem::new(w, n + 1, DEFAULT_TOL)?;
    let support = w.support;
    if j_star >= j.endpoints(&support).len() {
        return Err(Error::InvalidDomain(format!("J = {} has no endpoint {j_star}", j.label())));
    }
    let log_gap = xi
        .par_iter()
        .map(|&x| {
            let dom = j.with_endpoint(&support, j_star, x)?;
            Ok(GapLadder::new(&sys, &dom, n)?.log_gap(n))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GapProfile { n, kind: w.kind, xi, log_gap, h, lo, hi })
}

/// Stencil settings for the endpoint ODE checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PainleveOptions {
    /// Richardson levels for every derivative.
    pub richardson: u32,
    /// Stride of the main equation.
    pub stride: usize,
    /// Stride for the higher-order secondary forms.
    pub secondary_stride: usize,
}

impl Default for PainleveOptions {
    fn default() -> Self {
        Self { richardson: 1, stride: 1, secondary_stride: 4 }
    }
}

impl PainleveOptions {
    /// Profile margin needed by both strides.
    pub fn margin(&self) -> usize {
        2 * (self.stride.max(self.secondary_stride) << self.richardson)
    }
}

/// `r = T_ξ` (or `σ = ξ r`) and its first three derivatives along the
/// interior of a profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PainleveState {
    pub xi: Vec<f64>,
    pub r: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl PainleveState {
    /// Derivatives of `L = ln(gap)` up to order 4, at stride `stride`.
    pub fn from_profile(p: &GapProfile, richardson: u32, stride: usize) -> Result<Self> {
        let opts = JetOptions::new(stride, richardson);
        let mut st = PainleveState::default();
        for k in interior(p) {
            st.xi.push(p.xi[k]);
            st.r.push(derivative_1d(&p.log_gap, k, 1, opts, p.h)?);
            st.r1.push(derivative_1d(&p.log_gap, k, 2, opts, p.h)?);
            st.r2.push(derivative_1d(&p.log_gap, k, 3, opts, p.h)?);
            st.r3.push(derivative_1d(&p.log_gap, k, 4, opts, p.h)?);
        }
        Ok(st)
    }

    /// `σ = ξ r` and its derivatives.
    pub fn sigma(&self) -> Self {
        let mut s = PainleveState { xi: self.xi.clone(), ..Default::default() };
        for k in 0..self.xi.len() {
            let x = self.xi[k];
            s.r.push(x * self.r[k]);
            s.r1.push(self.r[k] + x * self.r1[k]);
            s.r2.push(2.0 * self.r1[k] + x * self.r2[k]);
            s.r3.push(3.0 * self.r2[k] + x * self.r3[k]);
        }
        s
    }
}

fn interior(p: &GapProfile) -> impl Iterator<Item = usize> + '_ {
    let eps = 1e-9 * p.h;
    (0..p.xi.len()).filter(move |&k| p.xi[k] >= p.lo - eps && p.xi[k] <= p.hi + eps)
}

/// Sup of a pointwise residual over the target range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PainleveReport {
    pub id: String,
    pub residual: f64,
    pub at_xi: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub h: f64,
    pub richardson: u32,
    pub pointwise: Vec<(f64, f64)>,
}

impl PainleveReport {
    fn from_points(id: &str, pointwise: Vec<(f64, f64)>, tolerance: f64, h: f64, richardson: u32) -> Self {
        let (at_xi, residual) = pointwise
            .iter()
            .copied()
            .map(|(x, r)| (x, if r.is_nan() { f64::INFINITY } else { r }))
            .fold((f64::NAN, 0.0f64), |acc, (x, r)| if r > acc.1 || acc.0.is_nan() { (x, r.max(acc.1)) } else { acc });
        Self { id: id.into(), residual, at_xi, tolerance, pass: residual <= tolerance, h, richardson, pointwise }
    }
}

fn norm2(l: f64, r: f64) -> f64 {
    (l - r).abs() / (l.abs() + r.abs() + 1e-300)
}

/// Painlevé IV for the Gaussian weight with one moving endpoint:
/// `r''^2 + 4 r'^2 (r' + 2n) = 4 (ξ r' - r)^2` with `r = T_ξ`.
///
/// Secondary reports: the third-order forms
/// `r''' + 6 r'^2 + 8 n r' = 4 ξ (ξ r' - r)` and
/// `(r' r''' - r''^2 + 2 r'^3)^2 = 4 r^2 (r''^2 + 4 r'^2 (r' + 2n))`,
/// evaluated at the secondary stride.
pub fn painleve4_residual(p: &GapProfile, opts: PainleveOptions, tol: f64) -> Result<Vec<PainleveReport>> {
    if p.kind != WeightKind::Gaussian {
        return Err(Error::Unsupported("Painlevé IV check needs the Gaussian weight".into()));
    }
    let n = p.n as f64;
    let main = PainleveState::from_profile(p, opts.richardson, opts.stride)?;
    let pts_main: Vec<(f64, f64)> = (0..main.xi.len())
        .map(|k| {
            let (x, r, r1, r2) = (main.xi[k], main.r[k], main.r1[k], main.r2[k]);
            let lhs = r2 * r2 + 4.0 * r1 * r1 * (r1 + 2.0 * n);
            (x, norm2(lhs, 4.0 * (x * r1 - r).powi(2)))
        })
        .collect();
    let sec = PainleveState::from_profile(p, opts.richardson, opts.secondary_stride)?;
    let mut pts_third = Vec::new();
    let mut pts_squared = Vec::new();
    for k in 0..sec.xi.len() {
        let (x, r, r1, r2, r3) = (sec.xi[k], sec.r[k], sec.r1[k], sec.r2[k], sec.r3[k]);
        let terms = [r3, 6.0 * r1 * r1, 8.0 * n * r1, -4.0 * x * (x * r1 - r)];
        let s: f64 = terms.iter().sum();
        let a: f64 = terms.iter().map(|v| v.abs()).sum();
        pts_third.push((x, s.abs() / (a + 1e-300)));
        let lhs = (r1 * r3 - r2 * r2 + 2.0 * r1.powi(3)).powi(2);
        let rhs = 4.0 * r * r * (r2 * r2 + 4.0 * r1 * r1 * (r1 + 2.0 * n));
        pts_squared.push((x, norm2(lhs, rhs)));
    }
    let hs = p.h * opts.secondary_stride as f64;
    Ok(vec![
        PainleveReport::from_points("painleve4", pts_main, tol, p.h * opts.stride as f64, opts.richardson),
        PainleveReport::from_points("painleve4_third", pts_third, SECONDARY_TOL.max(tol), hs, opts.richardson),
        PainleveReport::from_points("painleve4_squared", pts_squared, SECONDARY_TOL.max(tol), hs, opts.richardson),
    ])
}

/// Painlevé V σ-form for the Laguerre weight with one moving endpoint,
/// `σ = ξ T_ξ`:
/// `ξ^2 σ''^2 + 4 (ξσ' - σ + n(n+α)) σ'^2 - (ξσ' - σ - (2n+α) σ')^2 = 0`.
///
/// Secondary report: the third-order intermediate
/// `ξ^2 (-σ'(ξσ''' + σ'') + ξσ''^2 - 2σ'^3)^2 = σ^2 (4(ξσ' - σ + n(n+α))σ'^2 + ξ^2 σ''^2)`,
/// evaluated at the secondary stride.
pub fn painleve5_residual(p: &GapProfile, opts: PainleveOptions, tol: f64) -> Result<Vec<PainleveReport>> {
    let WeightKind::Laguerre { alpha } = p.kind else {
        return Err(Error::Unsupported("Painlevé V check needs the Laguerre weight".into()));
    };
    let n = p.n as f64;
    let c = n * (n + alpha);
    let s = PainleveState::from_profile(p, opts.richardson, opts.stride)?.sigma();
    let pts_main: Vec<(f64, f64)> = (0..s.xi.len())
        .map(|k| {
            let (x, sg, s1, s2) = (s.xi[k], s.r[k], s.r1[k], s.r2[k]);
            let a = x * x * s2 * s2 + 4.0 * (x * s1 - sg + c) * s1 * s1;
            let b = (x * s1 - sg - (2.0 * n + alpha) * s1).powi(2);
            (x, norm2(a, b))
        })
        .collect();
    let sec = PainleveState::from_profile(p, opts.richardson, opts.secondary_stride)?.sigma();
    let pts_third: Vec<(f64, f64)> = (0..sec.xi.len())
        .map(|k| {
            let (x, sg, s1, s2, s3) = (sec.xi[k], sec.r[k], sec.r1[k], sec.r2[k], sec.r3[k]);
            let lhs = x * x * (-s1 * (x * s3 + s2) + x * s2 * s2 - 2.0 * s1.powi(3)).powi(2);
            let rhs = sg * sg * (4.0 * (x * s1 - sg + c) * s1 * s1 + x * x * s2 * s2);
            (x, norm2(lhs, rhs))
        })
        .collect();
    Ok(vec![
        PainleveReport::from_points("painleve5_sigma", pts_main, tol, p.h * opts.stride as f64, opts.richardson),
        PainleveReport::from_points(
            "painleve5_third",
            pts_third,
            SECONDARY_TOL.max(tol),
            p.h * opts.secondary_stride as f64,
            opts.richardson,
        ),
    ])
}

/// Sup residual of the σ-form with `(ξσ' - σ)^2` as the subtracted square,
/// i.e. without the `(2n+α)σ'` shift; for comparison only.
pub fn painleve5_unshifted_residual(p: &GapProfile, opts: PainleveOptions) -> Result<f64> {
    let WeightKind::Laguerre { alpha } = p.kind else {
        return Err(Error::Unsupported("Painlevé V check needs the Laguerre weight".into()));
    };
    let n = p.n as f64;
    let s = PainleveState::from_profile(p, opts.richardson, opts.stride)?.sigma();
    Ok((0..s.xi.len())
        .map(|k| {
            let (x, sg, s1, s2) = (s.xi[k], s.r[k], s.r1[k], s.r2[k]);
            let a = x * x * s2 * s2 + 4.0 * (x * s1 - sg + n * (n + alpha)) * s1 * s1;
            norm2(a, (x * s1 - sg).powi(2))
        })
        .fold(0.0, f64::max))
}
