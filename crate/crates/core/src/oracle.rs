//! Ground truth that shares no code path with the determinant pipeline:
//! nested Gauss–Legendre quadrature of the n-fold matrix integral for
//! n ≤ 3, and a Monte-Carlo sampler of the classical matrix models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{DomainJ, Interval, WeightKind, WeightSpec};
use crate::numeric::gauss_legendre;

/// Samples per Monte-Carlo batch; each batch owns one generator stream.
pub const MC_BATCH: u64 = 10_000;

const GL_ORDER: usize = 16;
const MAX_REFINEMENTS: u32 = 5;
/// Envelope drop (in natural-log units) below the peak at which the
/// integration range is cut.
const ENVELOPE_DROP: f64 = 55.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OracleMethod {
    NestedQuadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub value: f64,
    /// Quadrature: change between the last two panel refinements.
    /// Monte Carlo: binomial standard error, floored at `1/N`.
    pub est_error: f64,
    pub n: usize,
    pub method: OracleMethod,
    /// Quadrature nodes per axis, or Monte-Carlo draws.
    pub samples_or_nodes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Gap probability `P(all n eigenvalues in J)` as the ratio of two n-fold
/// integrals of `Δ(x)^2 Π ρ(x_i)`, over `J^n` and over the full support.
pub fn gap_bruteforce(w: &WeightSpec, j: &DomainJ, n: usize, tol: f64) -> Result<BruteForceResult> {
    let range = integration_range(w, n)?;
    let inside: Vec<Interval> = j.intervals().iter().filter_map(|iv| iv.intersect(&range)).collect();
    let num = refine(w, &inside, n, tol)?;
    let den = refine(w, &[range], n, tol)?;
    if !(den.value > 0.0) {
        return Err(Error::Singular("full-support matrix integral vanished".into()));
    }
    let value = num.value / den.value;
    let rel = num.est_error / den.value + num.value * den.est_error / (den.value * den.value);
    Ok(BruteForceResult {
        value,
        est_error: floor_error(rel, value),
        n,
        method: OracleMethod::NestedQuadrature,
        samples_or_nodes: num.samples_or_nodes.max(den.samples_or_nodes),
        seed: None,
    })
}

/// `tau_n^J = (1/n!) ∫_{J^n} Δ(x)^2 Π ρ(x_i) dx_i` itself, for n ≤ 3.
pub fn tau_bruteforce(w: &WeightSpec, j: &DomainJ, n: usize, tol: f64) -> Result<BruteForceResult> {
    let range = integration_range(w, n)?;
    let inside: Vec<Interval> = j.intervals().iter().filter_map(|iv| iv.intersect(&range)).collect();
    refine(w, &inside, n, tol)
}

/// Fraction of sampled matrices with every eigenvalue in `J`.
///
/// Gaussian draws a symmetric tridiagonal model with density `∝ e^{-tr X^2}`,
/// Laguerre a bidiagonal Wishart factor whose eigenvalues have density
/// `∝ x^α e^{-x}`. Batches run in parallel with generator stream `b` of the
/// master seed, so the result does not depend on the thread count.
pub fn mc_gap(kind: WeightKind, n: usize, j: &DomainJ, samples: u64, seed: u64) -> Result<BruteForceResult> {
    if n == 0 {
        return Err(Error::InvalidDomain("Monte-Carlo sampling needs n ≥ 1".into()));
    }
    if samples == 0 {
        return Err(Error::Config("Monte-Carlo sampling needs at least one sample".into()));
    }
    let model = Model::new(kind, n)?;
    let intervals = j.intervals().to_vec();
    let batches = samples.div_ceil(MC_BATCH);
    let counts: Vec<u64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = MC_BATCH.min(samples - b * MC_BATCH);
            let mut diag = vec![0.0; n];
            let mut off2 = vec![0.0; n.saturating_sub(1)];
            let mut hits = 0u64;
            for _ in 0..len {
                model.draw(&mut rng, &mut diag, &mut off2);
                if all_inside(&diag, &off2, &intervals) {
                    hits += 1;
                }
            }
            hits
        })
        .collect();
    let hits: u64 = counts.iter().sum();
    let total = samples as f64;
    let p = hits as f64 / total;
    Ok(BruteForceResult {
        value: p,
        est_error: (p * (1.0 - p) / total).sqrt().max(1.0 / total),
        n,
        method: OracleMethod::MonteCarlo,
        samples_or_nodes: samples,
        seed: Some(seed),
    })
}

fn floor_error(err: f64, value: f64) -> f64 {
    err.max(f64::EPSILON * value.abs()).max(f64::MIN_POSITIVE)
}

/// Finite range carrying all but `e^{-55}` of the envelope
/// `ρ(x) (1 + |x|)^{2(n-1)}`, clipped to the support.
fn integration_range(w: &WeightSpec, n: usize) -> Result<Interval> {
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!("nested quadrature is limited to n ≤ 3, got {n}")));
    }
    let s = w.support;
    let env = |x: f64| w.log_density(x) + 2.0 * (n as f64 - 1.0) * (1.0 + x.abs()).ln();
    let lo = if s.lo.is_finite() { s.lo + 0.5 } else { -200.0 };
    let hi = if s.hi.is_finite() { s.hi - 0.5 } else { 200.0 };
    let (mut peak_x, mut peak) = (lo, f64::NEG_INFINITY);
    for k in 0..=8000 {
        let x = lo + (hi - lo) * k as f64 / 8000.0;
        let e = env(x);
        if e > peak {
            (peak_x, peak) = (x, e);
        }
    }
    if !peak.is_finite() {
        return Err(Error::NonIntegrable("density vanishes on the scanned range".into()));
    }
    let walk = |dir: f64, stop: f64| -> Result<f64> {
        let mut x = peak_x;
        for _ in 0..100_000 {
            x += 0.5 * dir;
            if (x - stop) * dir >= 0.0 {
                return Ok(stop);
            }
            if env(x) < peak - ENVELOPE_DROP {
                return Ok(x);
            }
        }
        Err(Error::NonIntegrable("density tail does not decay".into()))
    };
    Ok(Interval::new(walk(-1.0, s.lo)?, walk(1.0, s.hi)?))
}

/// Evaluates the integral at successively halved panel widths until two
/// consecutive values agree to `tol` (relative to the full-support scale).
fn refine(w: &WeightSpec, region: &[Interval], n: usize, tol: f64) -> Result<BruteForceResult> {
    let base = match w.kind {
        WeightKind::Laguerre { .. } => 4.0,
        _ => 2.0,
    };
    let singular_edge = w.alpha().is_some_and(|a| a.fract() != 0.0);
    let mut prev: Option<f64> = None;
    let mut change = f64::INFINITY;
    for level in 0..=MAX_REFINEMENTS {
        let nodes = panel_nodes(w, region, base / f64::from(1u32 << level), singular_edge);
        let value = sum_ordered_tuples(&nodes, n);
        if let Some(p) = prev {
            change = (value - p).abs();
            if change <= tol * value.abs().max(1e-300) || change == 0.0 {
                return Ok(BruteForceResult {
                    value,
                    est_error: floor_error(change, value),
                    n,
                    method: OracleMethod::NestedQuadrature,
                    samples_or_nodes: nodes.len() as u64,
                    seed: None,
                });
            }
        }
        prev = Some(value);
    }
    Err(Error::NoConvergence { levels: MAX_REFINEMENTS, change })
}

/// `(x, ρ(x) dx)` on panels of width at most `width`. Next to a support
/// endpoint where `x^α` is not smooth, panels are graded geometrically
/// and the innermost sliver uses the one-point rule exact for `x^α (c0 + c1 x)`.
fn panel_nodes(w: &WeightSpec, region: &[Interval], width: f64, singular_edge: bool) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(GL_ORDER);
    let mut out = Vec::new();
    let panel = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, wt) in gx.iter().zip(&gw) {
            let xx = c + r * x;
            out.push((xx, wt * r * w.density(xx)));
        }
    };
    for iv in region {
        let (mut a, b) = (iv.lo, iv.hi);
        if !(b > a) {
            continue;
        }
        if singular_edge && a == w.support.lo {
            let alpha = w.alpha().unwrap_or(0.0);
            let top = width.min(b - a);
            let mut edges = vec![a + top];
            while edges.last().unwrap() - a > 1e-10 {
                edges.push(a + 0.25 * (edges.last().unwrap() - a));
            }
            let eps = edges.last().unwrap() - a;
            let x0 = a + eps * (alpha + 1.0) / (alpha + 2.0);
            let mass = eps.powf(alpha + 1.0) / (alpha + 1.0);
            out.push((x0, mass * w.density(x0) * (x0 - a).powf(-alpha)));
            for k in (1..edges.len()).rev() {
                panel(edges[k], edges[k - 1], &mut out);
            }
            a += top;
        }
        let count = ((b - a) / width).ceil().max(1.0) as usize;
        let step = (b - a) / count as f64;
        for k in 0..count {
            panel(a + k as f64 * step, if k + 1 == count { b } else { a + (k + 1) as f64 * step }, &mut out);
        }
    }
    out
}

/// `Σ_{i<j<...} Π w Δ^2` over strictly increasing index tuples, which equals
/// `(1/n!) Σ` over all tuples.
fn sum_ordered_tuples(nodes: &[(f64, f64)], n: usize) -> f64 {
    let m = nodes.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (xi, wi) = nodes[i];
            match n {
                1 => wi,
                2 => nodes[i + 1..].iter().map(|&(xj, wj)| wi * wj * (xi - xj).powi(2)).sum(),
                _ => {
                    let mut s = 0.0;
                    for jj in i + 1..m {
                        let (xj, wj) = nodes[jj];
                        let dij = wi * wj * (xi - xj).powi(2);
                        let mut inner = 0.0;
                        for &(xk, wk) in &nodes[jj + 1..] {
                            inner += wk * ((xi - xk) * (xj - xk)).powi(2);
                        }
                        s += dij * inner;
                    }
                    s
                }
            }
        })
        .collect();
    rows.iter().sum()
}

enum Model {
    Gaussian { diag: Normal<f64>, off: Vec<Gamma<f64>> },
    Laguerre { diag: Vec<Gamma<f64>>, sub: Vec<Gamma<f64>> },
}

impl Model {
    fn new(kind: WeightKind, n: usize) -> Result<Self> {
        let gamma =
            |shape: f64| Gamma::new(shape, 1.0).map_err(|e| Error::InvalidWeight(format!("gamma({shape}): {e}")));
        match kind {
            WeightKind::Gaussian => Ok(Model::Gaussian {
                diag: Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal"),
                off: (1..n).rev().map(|k| gamma(k as f64)).collect::<Result<_>>()?,
            }),
            WeightKind::Laguerre { alpha } => Ok(Model::Laguerre {
                diag: (0..n).map(|i| gamma((n - i) as f64 + alpha)).collect::<Result<_>>()?,
                sub: (0..n - 1).map(|i| gamma((n - 1 - i) as f64)).collect::<Result<_>>()?,
            }),
            WeightKind::Custom => Err(Error::Unsupported("Monte-Carlo sampling needs a classical weight".into())),
        }
    }

    /// Fills the diagonal and squared off-diagonal of a symmetric tridiagonal matrix.
    fn draw(&self, rng: &mut ChaCha8Rng, diag: &mut [f64], off2: &mut [f64]) {
        match self {
            Model::Gaussian { diag: nd, off } => {
                for d in diag.iter_mut() {
                    *d = nd.sample(rng);
                }
                for (e, g) in off2.iter_mut().zip(off) {
                    *e = 0.5 * g.sample(rng);
                }
            }
            Model::Laguerre { diag: gd, sub } => {
                // B lower bidiagonal with B_ii^2 = x_i, B_{i+1,i}^2 = y_i; T = B B^T.
                let mut prev_y = 0.0;
                for i in 0..diag.len() {
                    let x = gd[i].sample(rng);
                    diag[i] = x + prev_y;
                    if i < sub.len() {
                        let y = sub[i].sample(rng);
                        off2[i] = x * y;
                        prev_y = y;
                    }
                }
            }
        }
    }
}

/// Number of eigenvalues below `c` of the tridiagonal matrix (Sturm count).
fn count_below(diag: &[f64], off2: &[f64], c: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        q = diag[i] - c - if i > 0 { off2[i - 1] / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + c.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn all_inside(diag: &[f64], off2: &[f64], j: &[Interval]) -> bool {
    let n = diag.len();
    let below = |c: f64| {
        if c == f64::NEG_INFINITY {
            0
        } else if c == f64::INFINITY {
            n
        } else {
            count_below(diag, off2, c)
        }
    };
    j.iter().map(|iv| below(iv.hi) - below(iv.lo)).sum::<usize>() == n
}
