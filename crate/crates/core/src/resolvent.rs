//! The restricted ensemble: Gram matrices over `J` and `J^c`, the functions
//! `Q_n = (I - K)^{-1} phi_n` and `P_n = (I - K)^{-1} phi_{n-1}`, the inner
//! products `u`, `v`, `w`, the basis `r_k` orthonormal on `J`, and the
//! resolvent kernel `R_n = K (I - K)^{-1}` of `K` acting on `J^c`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde_json::json;

use crate::error::{Error, Result};
use crate::measure::{DomainJ, Endpoint, WeightSpec, DEFAULT_TOL};
use crate::numeric::compensated_sum;
use crate::orthopoly::{cd_epsilon, OrthoSystem};
use crate::tau::{GapLadder, TauLadder};

/// Per-`n` restricted data.
#[derive(Clone, Debug)]
pub struct RestrictedState {
    pub n: usize,
    pub g_j: DMatrix<f64>,
    pub g_jc: DMatrix<f64>,
    /// `I + A = G_J^{-1}`
    pub a: DMatrix<f64>,
    /// `b_{n-1}` of the full measure.
    pub b: f64,
    pub u: f64,
    /// `b (P_n, phi_n)_{J^c}`
    pub v: f64,
    /// `b (Q_n, phi_{n-1})_{J^c}`, equal to `v` by symmetry of the kernel.
    pub v_alt: f64,
    pub w: f64,
    pub ubar: f64,
    pub wbar: f64,
    /// Coefficients of `Q_n` over `phi_0..phi_n`.
    pub qcoef: Vec<f64>,
    /// Coefficients of `P_n` over `phi_0..phi_n`.
    pub pcoef: Vec<f64>,
}

/// `(G_J, G_Jc)` of size `n`.
pub fn gram(w: &WeightSpec, j: &DomainJ, n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n == 0 {
        return Err(Error::Config("Gram matrix needs n >= 1".into()));
    }
    let sys = OrthoSystem::with_default_tol(w, n)?;
    let support = w.support;
    let jc = j.complement(&support);
    let jj = j.clipped(&support);
    let g_j = if jj.is_empty() { DMatrix::zeros(n, n) } else { sys.gram(&jj, n)? };
    let g_jc = if jc.is_empty() { DMatrix::zeros(n, n) } else { sys.gram(&jc, n)? };
    Ok((g_j, g_jc))
}

/// `det G_J = tau_n^J / tau_n`.
pub fn gap_probability(w: &WeightSpec, j: &DomainJ, n: usize) -> Result<f64> {
    Ok(log_gap_probability(w, j, n)?.exp())
}

/// `ln det G_J`.
pub fn log_gap_probability(w: &WeightSpec, j: &DomainJ, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let sys = OrthoSystem::with_default_tol(w, n + 1)?;
    Ok(GapLadder::new(&sys, j, n)?.log_gap(n))
}

fn state_from_gram(g_j_full: &DMatrix<f64>, g_jc_full: &DMatrix<f64>, n: usize, b: f64) -> Result<RestrictedState> {
    let g_j = g_j_full.view((0, 0), (n, n)).into_owned();
    let g_jc = g_jc_full.view((0, 0), (n, n)).into_owned();
    let ch = Cholesky::new(g_j.clone())
        .ok_or_else(|| Error::Singular(format!("G_J of size {n} is not positive definite")))?;
    let col = |k: usize| -> DVector<f64> { g_jc_full.view((0, k), (n, 1)).column(0).into_owned() };
    let c = ch.solve(&col(n));
    let d = ch.solve(&col(n - 1));
    let mut qcoef: Vec<f64> = c.iter().copied().collect();
    qcoef.push(1.0);
    let mut pcoef: Vec<f64> = d.iter().copied().collect();
    pcoef[n - 1] += 1.0;
    pcoef.push(0.0);
    let dot_jc = |coef: &[f64], m: usize| compensated_sum((0..=n).map(|k| coef[k] * g_jc_full[(k, m)]));
    let ubar = dot_jc(&qcoef, n);
    let wbar = dot_jc(&pcoef, n - 1);
    let vbar = dot_jc(&pcoef, n);
    let vbar_alt = dot_jc(&qcoef, n - 1);
    let a = ch.inverse() - DMatrix::identity(n, n);
    Ok(RestrictedState {
        n,
        g_j,
        g_jc,
        a,
        b,
        u: b * ubar,
        v: b * vbar,
        v_alt: b * vbar_alt,
        w: b * wbar,
        ubar,
        wbar,
        qcoef,
        pcoef,
    })
}

/// `(u, v, w)` after checking the two routes to `v`.
pub fn tw_inner_products(state: &RestrictedState) -> Result<(f64, f64, f64)> {
    let scale = state.u.abs() + state.v.abs() + state.w.abs() + 1e-14 * state.b;
    let mismatch = (state.v - state.v_alt).abs() / scale;
    if mismatch > 1e-9 {
        return Err(Error::RouteMismatch { what: format!("v_{}", state.n), mismatch });
    }
    Ok((state.u, state.v, state.w))
}

/// Restricted orthonormal basis `r_0..r_n` and endpoint values of `Q`, `P`.
#[derive(Clone, Debug)]
pub struct RestrictedBasis {
    pub n: usize,
    /// Row `k` holds the coefficients of `r_k` over `phi_0..phi_k`.
    pub r_coef: DMatrix<f64>,
    /// `(endpoint, q, p)` with `q = sqrt(b_{n-1}) Q_n(a)`, `p = sqrt(b_{n-1}) P_n(a)`.
    pub endpoint_values: Vec<(Endpoint, f64, f64)>,
}

/// The three evaluations of `R_n(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventValue {
    /// `(Q(x) P(y) - P(x) Q(y)) / (x - y)`; `None` near the diagonal.
    pub qp_ratio: Option<f64>,
    /// `sum_{k<n} r_k(x) r_k(y)`
    pub r_sum: f64,
    /// `beta_n (r_n(x) r_{n-1}(y) - r_{n-1}(x) r_n(y)) / (x - y)`; `None` near the diagonal.
    pub r_ratio: Option<f64>,
}

impl ResolventValue {
    /// Largest pairwise relative disagreement, scaled by `scale`.
    pub fn mismatch(&self, scale: f64) -> f64 {
        let mut m: f64 = 0.0;
        let vals: Vec<f64> = [self.qp_ratio, Some(self.r_sum), self.r_ratio].into_iter().flatten().collect();
        for i in 0..vals.len() {
            for j in 0..i {
                m = m.max((vals[i] - vals[j]).abs() / scale);
            }
        }
        m
    }
}

/// All restricted data for one `(weight, J)` pair and sizes `1..=max_n`.
#[derive(Clone, Debug)]
pub struct RestrictedFamily {
    pub sys: OrthoSystem,
    pub j: DomainJ,
    pub gaps: GapLadder,
    max_n: usize,
    states: Vec<RestrictedState>,
}

impl RestrictedFamily {
    /// Builds states `1..=max_n`; `sys` needs table size at least `max_n + 1`.
    pub fn new(sys: OrthoSystem, j: &DomainJ, max_n: usize) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::Config("restricted family needs max_n >= 1".into()));
        }
        if sys.size() < max_n + 1 {
            return Err(Error::IndexOutOfRange { requested: max_n + 1, available: sys.size() });
        }
        let gaps = GapLadder::new(&sys, j, max_n)?;
        let states = (1..=max_n)
            .map(|n| state_from_gram(&gaps.g_j, &gaps.g_jc, n, sys.table.b[n - 1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sys, j: j.clone(), gaps, max_n, states })
    }

    pub fn build(w: &WeightSpec, j: &DomainJ, max_n: usize) -> Result<Self> {
        Self::build_with_tol(w, j, max_n, DEFAULT_TOL)
    }

    pub fn build_with_tol(w: &WeightSpec, j: &DomainJ, max_n: usize, tol: f64) -> Result<Self> {
        let sys = OrthoSystem::new(w, max_n + 2, tol)?;
        Self::new(sys, j, max_n)
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.sys.weight
    }

    pub fn state(&self, n: usize) -> Result<&RestrictedState> {
        if n == 0 || n > self.max_n {
            return Err(Error::IndexOutOfRange { requested: n, available: self.max_n });
        }
        Ok(&self.states[n - 1])
    }

    /// `ubar_k` for `k = 0..=max_n`.
    pub fn ubar(&self, k: usize) -> f64 {
        self.gaps.ubar[k]
    }

    /// `ln(tau_m^J / tau_m)` for `m = 0..=max_n + 1`.
    pub fn log_gap(&self, m: usize) -> f64 {
        self.gaps.log_gap(m)
    }

    /// Tau ladder at `n <= max_n`.
    pub fn ladder(&self, n: usize) -> TauLadder {
        TauLadder::from_parts(&self.sys, &self.gaps, n)
    }

    /// Finite endpoints of `J^c` inside the support.
    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.j.endpoints(&self.sys.weight.support)
    }

    /// Coefficients of `Q_k` over `phi_0..phi_k`, including `Q_0 = phi_0`.
    fn q_coefficients(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 {
            Ok(vec![1.0])
        } else {
            Ok(self.state(k)?.qcoef.clone())
        }
    }

    fn expand(&self, coef: &[f64], x: f64) -> Result<f64> {
        let e = self.sys.basis(x, coef.len() - 1)?;
        Ok(compensated_sum(coef.iter().zip(&e.values).map(|(c, v)| c * v)))
    }

    /// `(Q_n(x), P_n(x))`.
    pub fn qp(&self, n: usize, x: f64) -> Result<(f64, f64)> {
        let st = self.state(n)?;
        let e = self.sys.basis(x, n)?;
        let q = compensated_sum(st.qcoef.iter().zip(&e.values).map(|(c, v)| c * v));
        let p = compensated_sum(st.pcoef.iter().zip(&e.values).map(|(c, v)| c * v));
        Ok((q, p))
    }

    /// `Q_k(x)` for `0 <= k <= max_n`.
    pub fn q(&self, k: usize, x: f64) -> Result<f64> {
        self.expand(&self.q_coefficients(k)?, x)
    }

    /// `r_0..r_n` with `r_k = Q_k / sqrt(1 - ubar_k)`.
    pub fn restricted_basis(&self, n: usize) -> Result<RestrictedBasis> {
        if n > self.max_n {
            return Err(Error::IndexOutOfRange { requested: n, available: self.max_n });
        }
        let mut r_coef = DMatrix::zeros(n + 1, n + 1);
        for k in 0..=n {
            let norm = 1.0 - self.ubar(k);
            if !(norm > 0.0) {
                return Err(Error::Singular(format!("1 - ubar_{k} = {norm} is not positive")));
            }
            let s = 1.0 / norm.sqrt();
            for (i, c) in self.q_coefficients(k)?.iter().enumerate() {
                r_coef[(k, i)] = c * s;
            }
        }
        let mut endpoint_values = Vec::new();
        if n >= 1 {
            let sb = self.state(n)?.b.sqrt();
            for e in self.endpoints() {
                let (q, p) = self.qp(n, e.position)?;
                endpoint_values.push((e, sb * q, sb * p));
            }
        }
        Ok(RestrictedBasis { n, r_coef, endpoint_values })
    }

    /// `r_0(x)..r_m(x)` from a restricted basis.
    pub fn r_values(&self, basis: &RestrictedBasis, x: f64) -> Result<Vec<f64>> {
        let m = basis.r_coef.nrows() - 1;
        let e = self.sys.basis(x, m)?;
        Ok((0..=m).map(|k| compensated_sum((0..=k).map(|i| basis.r_coef[(k, i)] * e.values[i]))).collect())
    }

    /// `beta_n = b_{n-1} sqrt((1 - ubar_n)(1 + wbar_n))`.
    pub fn beta(&self, n: usize) -> Result<f64> {
        let st = self.state(n)?;
        Ok(st.b * ((1.0 - st.ubar) * (1.0 + st.wbar)).sqrt())
    }

    /// `R_n(x, y)` three ways; fails if they disagree beyond `1e-8`.
    pub fn resolvent_kernel(&self, n: usize, x: f64, y: f64) -> Result<ResolventValue> {
        let basis = self.restricted_basis(n)?;
        let val = self.resolvent_routes(&basis, n, x, y)?;
        let rx = self.r_values(&basis, x)?;
        let ry = self.r_values(&basis, y)?;
        let dx: f64 = rx[..n].iter().map(|v| v * v).sum();
        let dy: f64 = ry[..n].iter().map(|v| v * v).sum();
        let scale = (dx * dy).sqrt().max(val.r_sum.abs()).max(1e-300);
        let mismatch = val.mismatch(scale);
        if mismatch > 1e-8 {
            return Err(Error::RouteMismatch { what: format!("R_{n}({x}, {y})"), mismatch });
        }
        Ok(val)
    }

    /// The three routes without the agreement check.
    pub fn resolvent_routes(&self, basis: &RestrictedBasis, n: usize, x: f64, y: f64) -> Result<ResolventValue> {
        if n == 0 || n > basis.n {
            return Err(Error::IndexOutOfRange { requested: n, available: basis.n });
        }
        let rx = self.r_values(basis, x)?;
        let ry = self.r_values(basis, y)?;
        let r_sum = compensated_sum((0..n).map(|k| rx[k] * ry[k]));
        if (x - y).abs() <= cd_epsilon(x) {
            return Ok(ResolventValue { qp_ratio: None, r_sum, r_ratio: None });
        }
        let st = self.state(n)?;
        let (qx, px) = self.qp(n, x)?;
        let (qy, py) = self.qp(n, y)?;
        let qp_ratio = st.b * (qx * py - px * qy) / (x - y);
        let r_ratio = self.beta(n)? * (rx[n] * ry[n - 1] - rx[n - 1] * ry[n]) / (x - y);
        Ok(ResolventValue { qp_ratio: Some(qp_ratio), r_sum, r_ratio: Some(r_ratio) })
    }

    /// Diagnostic dump of `G_J`, `A` and `u, v, w` at size `n`.
    pub fn dump_json(&self, n: usize) -> Result<serde_json::Value> {
        let st = self.state(n)?;
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| m[(i, k)]).collect()).collect()
        };
        Ok(json!({
            "weight": self.sys.weight.label(),
            "t": self.sys.weight.t1,
            "J": self.j.to_json(),
            "n": n,
            "G_J": rows(&st.g_j),
            "A": rows(&st.a),
            "u": st.u,
            "v": st.v,
            "w": st.w,
            "ubar": st.ubar,
            "wbar": st.wbar,
            "log_gap": self.log_gap(n),
        }))
    }
}
