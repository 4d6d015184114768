//! Orthonormal quasi-polynomials `phi_k = pi_k sqrt(rho)` for a weight on a
//! region, built by the discretized Stieltjes procedure, and the
//! Christoffel–Darboux kernel.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::{build_nodes_for_degree, Interval, NodeSet, WeightSpec, DEFAULT_TOL};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Jacobi coefficients of `x phi_k = b_k phi_{k+1} + a_k phi_k + b_{k-1} phi_{k-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceTable {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `∫ rho_t dx` over the region.
    pub norm0: f64,
}

impl RecurrenceTable {
    /// Basis size `N`: `a` and `b` each hold `N` entries.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `ln h_k` where `h_k = norm0 prod_{j<k} b_j^2` is the squared norm of
    /// the monic polynomial of degree `k`.
    pub fn log_h(&self, k: usize) -> f64 {
        self.norm0.ln() + 2.0 * self.b[..k].iter().map(|b| b.ln()).sum::<f64>()
    }

    /// `ln prod_{k<n} h_k`.
    pub fn log_norm_product(&self, n: usize) -> f64 {
        (0..n).map(|k| self.log_h(k)).sum()
    }
}

/// Basis values `phi_0(x)..phi_n(x)` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval {
    pub x: f64,
    pub values: Vec<f64>,
    /// `exp((-V(x) + t1 x) / 2)`
    pub weight_half: f64,
}

/// Recurrence coefficients for `rho_t` restricted to `region`.
pub fn stieltjes(w: &WeightSpec, region: &[Interval], n: usize, tol: f64) -> Result<RecurrenceTable> {
    if n == 0 {
        return Err(Error::Config("basis size must be at least 1".into()));
    }
    let nodes = build_nodes_for_degree(region, w, tol, 2 * n + 2)?;
    stieltjes_on_nodes(w, &nodes, n)
}

/// Discretized Stieltjes (Lanczos) on a fixed node set.
pub fn stieltjes_on_nodes(w: &WeightSpec, nodes: &NodeSet, n: usize) -> Result<RecurrenceTable> {
    let weighted = nodes.weighted(w);
    let xs: Vec<f64> = weighted.iter().map(|p| p.0).collect();
    let om: Vec<f64> = weighted.iter().map(|p| p.1).collect();
    let norm0 = compensated_sum(om.iter().copied());
    if !(norm0 > 0.0) || !norm0.is_finite() {
        return Err(Error::Degenerate { k: 0, b2: norm0 });
    }
    let wdot = |u: &[f64], v: &[f64]| {
        let mut acc = CompensatedSum::new();
        for i in 0..u.len() {
            acc.add(om[i] * u[i] * v[i]);
        }
        acc.value()
    };
    let m = xs.len();
    let mut prev = vec![0.0; m];
    let mut cur = vec![1.0 / norm0.sqrt(); m];
    let mut a = Vec::with_capacity(n);
    let mut b: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        let xp: Vec<f64> = (0..m).map(|i| xs[i] * cur[i]).collect();
        let ak = wdot(&xp, &cur);
        let bprev = if k > 0 { b[k - 1] } else { 0.0 };
        let mut q: Vec<f64> = (0..m).map(|i| xp[i] - ak * cur[i] - bprev * prev[i]).collect();
        // One reorthogonalization sweep against the last two vectors.
        let c1 = wdot(&q, &cur);
        let c0 = if k > 0 { wdot(&q, &prev) } else { 0.0 };
        for i in 0..m {
            q[i] -= c1 * cur[i] + c0 * prev[i];
        }
        let raw2 = wdot(&xp, &xp);
        let b2 = wdot(&q, &q);
        if !(b2 > 1e-26 * raw2) {
            return Err(Error::Degenerate { k, b2 });
        }
        let bk = b2.sqrt();
        a.push(ak);
        b.push(bk);
        q.iter_mut().for_each(|v| *v /= bk);
        prev = std::mem::replace(&mut cur, q);
    }
    Ok(RecurrenceTable { a, b, norm0 })
}

/// Normalized polynomial values `p_0(x)..p_n(x)` with `phi_k = p_k sqrt(rho)`.
fn poly_values(tab: &RecurrenceTable, x: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0 / tab.norm0.sqrt());
    for k in 0..n {
        let prev = if k > 0 { tab.b[k - 1] * p[k - 1] } else { 0.0 };
        p.push(((x - tab.a[k]) * p[k] - prev) / tab.b[k]);
    }
    p
}

/// `phi_0(x)..phi_n(x)` by forward recurrence.
pub fn eval_basis(tab: &RecurrenceTable, w: &WeightSpec, x: f64, n: usize) -> Result<BasisEval> {
    if n > tab.len() {
        return Err(Error::IndexOutOfRange { requested: n, available: tab.len() });
    }
    if x.is_nan() || x < w.support.lo || x > w.support.hi {
        return Err(Error::OutsideSupport { x });
    }
    let weight_half = w.half_weight(x);
    let values = poly_values(tab, x, n).into_iter().map(|p| p * weight_half).collect();
    Ok(BasisEval { x, values, weight_half })
}

/// Switch between the ratio and the sum forms of the kernel.
pub fn cd_epsilon(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Christoffel–Darboux kernel `K_n(x, y) = sum_{k<n} phi_k(x) phi_k(y)`.
pub fn cd_kernel(tab: &RecurrenceTable, w: &WeightSpec, x: f64, y: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("kernel size must be at least 1".into()));
    }
    let px = eval_basis(tab, w, x, n)?;
    let py = eval_basis(tab, w, y, n)?;
    if (x - y).abs() > cd_epsilon(x) {
        Ok(cd_ratio(tab.b[n - 1], &px.values, &py.values, x, y, n))
    } else {
        Ok(cd_sum(&px.values, &py.values, n))
    }
}

pub(crate) fn cd_ratio(b: f64, px: &[f64], py: &[f64], x: f64, y: f64, n: usize) -> f64 {
    b * (px[n] * py[n - 1] - px[n - 1] * py[n]) / (x - y)
}

pub(crate) fn cd_sum(px: &[f64], py: &[f64], n: usize) -> f64 {
    compensated_sum((0..n).map(|k| px[k] * py[k]))
}

/// A weight together with its full-support recurrence table.
#[derive(Clone, Debug)]
pub struct OrthoSystem {
    pub weight: WeightSpec,
    pub table: RecurrenceTable,
    pub tol: f64,
}

impl OrthoSystem {
    /// Builds the table with `size` coefficients, so `phi_0..phi_size` are
    /// available.
    pub fn new(weight: &WeightSpec, size: usize, tol: f64) -> Result<Self> {
        let table = stieltjes(weight, &[weight.support], size, tol)?;
        Ok(Self { weight: weight.clone(), table, tol })
    }

    pub fn with_default_tol(weight: &WeightSpec, size: usize) -> Result<Self> {
        Self::new(weight, size, DEFAULT_TOL)
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn basis(&self, x: f64, n: usize) -> Result<BasisEval> {
        eval_basis(&self.table, &self.weight, x, n)
    }

    /// `ln tau_n`; zero for `n = 0`.
    pub fn log_tau(&self, n: usize) -> f64 {
        self.table.log_norm_product(n)
    }

    /// Nodes over `region` fine enough for products of basis functions up to
    /// the table size.
    pub fn nodes(&self, region: &[Interval]) -> Result<NodeSet> {
        build_nodes_for_degree(region, &self.weight, self.tol, 2 * self.size() + 2)
    }

    /// `∫_region phi_j phi_k`, `j, k < size`, symmetrized.
    pub fn gram(&self, region: &[Interval], size: usize) -> Result<DMatrix<f64>> {
        if size > self.size() + 1 {
            return Err(Error::IndexOutOfRange { requested: size, available: self.size() + 1 });
        }
        let pieces: Vec<Interval> = region.iter().filter_map(|iv| iv.intersect(&self.weight.support)).collect();
        let mut g = DMatrix::zeros(size, size);
        if pieces.is_empty() || size == 0 {
            return Ok(g);
        }
        let nodes = self.nodes(&pieces)?;
        let vals: Vec<(f64, Vec<f64>)> = nodes
            .weighted(&self.weight)
            .into_iter()
            .map(|(x, om)| (om, poly_values(&self.table, x, size.saturating_sub(1))))
            .collect();
        for j in 0..size {
            for k in 0..=j {
                let v = compensated_sum(vals.iter().map(|(om, p)| om * p[j] * p[k]));
                g[(j, k)] = v;
                g[(k, j)] = v;
            }
        }
        Ok(g)
    }
}
