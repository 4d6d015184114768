//! Free and restricted tau functions, their ladders in `n`, and `(ξ, t)`
//! grids of `T = ln tau_n^J(t)`.
//!
//! `ln tau_n` is a sum of log norms of monic orthogonal polynomials. The
//! restricted value is `ln tau_n + ln det G_J`, where `det G_J` is the gap
//! probability. The log-determinant is accumulated one degree at a time as
//! `sum_k ln(h_k^J / h_k)`: each factor equals `1 - ubar_k`, which is taken
//! from the Gram matrices when it is close to one and from the restricted
//! recurrence otherwise, so the result keeps full relative accuracy even
//! when the gap probability is tiny.

use std::io::Write;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{DomainJ, WeightKind, WeightSpec, DEFAULT_TOL};
use crate::orthopoly::{stieltjes, OrthoSystem, RecurrenceTable};

/// `ln tau_n` for the full measure; `tau_0 = 1`.
pub fn tau_free(w: &WeightSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(OrthoSystem::with_default_tol(w, n)?.log_tau(n))
}

/// `ln tau_n^J`.
pub fn tau_restricted(w: &WeightSpec, j: &DomainJ, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let sys = OrthoSystem::with_default_tol(w, n + 1)?;
    let ladder = GapLadder::new(&sys, j, n)?;
    Ok(sys.log_tau(n) + ladder.log_gap(n))
}

/// `ln det G` through a Cholesky factorization.
pub fn log_det_cholesky(g: &DMatrix<f64>) -> Result<f64> {
    if g.nrows() == 0 {
        return Ok(0.0);
    }
    let ch = Cholesky::new(g.clone()).ok_or_else(|| Error::Singular("Gram matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Gram data and log gap probabilities `ln det G_J^{(m)}` for `m = 0..=max_n+1`.
#[derive(Clone, Debug)]
pub struct GapLadder {
    /// `∫_J phi_j phi_k`, size `max_n + 1`.
    pub g_j: DMatrix<f64>,
    /// `∫_{J^c} phi_j phi_k`, size `max_n + 1`.
    pub g_jc: DMatrix<f64>,
    /// `ubar_k = (phi_k, Q_k)_{J^c}` for `k = 0..=max_n`; 1 where `G_J^{(k)}`
    /// is numerically singular.
    pub ubar: Vec<f64>,
    /// Cumulative `ln det G_J^{(m)}` for `m = 0..=max_n+1`.
    log_gap: Vec<f64>,
    /// Recurrence of the measure restricted to `J`, when it was needed.
    pub restricted: Option<RecurrenceTable>,
}

impl GapLadder {
    /// Needs `sys` with table size at least `max_n`.
    pub fn new(sys: &OrthoSystem, j: &DomainJ, max_n: usize) -> Result<Self> {
        let support = sys.weight.support;
        let size = max_n + 1;
        if sys.size() < max_n {
            return Err(Error::IndexOutOfRange { requested: max_n, available: sys.size() });
        }
        let jc = j.complement(&support);
        let jj = j.clipped(&support);
        if jj.is_empty() {
            return Err(Error::InvalidDomain(format!("J = {} misses the support", j.label())));
        }
        let g_jc = if jc.is_empty() { DMatrix::zeros(size, size) } else { sys.gram(&jc, size)? };
        let g_j = if jc.is_empty() { DMatrix::identity(size, size) } else { sys.gram(&jj, size)? };
        let ubar = ubar_sequence(&g_j, &g_jc)?;
        let restricted =
            if ubar.iter().any(|u| *u >= 0.5) { Some(stieltjes(&sys.weight, &jj, size, sys.tol)?) } else { None };
        let mut log_gap = Vec::with_capacity(size + 1);
        log_gap.push(0.0);
        for (k, &u) in ubar.iter().enumerate() {
            let term = match &restricted {
                Some(rt) if u >= 0.5 => rt.log_h(k) - sys.table.log_h(k),
                _ => (-u).ln_1p(),
            };
            if !term.is_finite() {
                return Err(Error::Singular(format!("restricted norm ratio at k = {k} is {term}")));
            }
            log_gap.push(log_gap[k] + term);
        }
        Ok(Self { g_j, g_jc, ubar, log_gap, restricted })
    }

    /// Largest `m` with a stored log gap.
    pub fn max_m(&self) -> usize {
        self.log_gap.len() - 1
    }

    /// `ln det G_J^{(m)} = ln(tau_m^J / tau_m)`.
    pub fn log_gap(&self, m: usize) -> f64 {
        self.log_gap[m]
    }

    /// The same quantity through a Cholesky factorization, for cross-checks.
    pub fn log_gap_cholesky(&self, m: usize) -> Result<f64> {
        log_det_cholesky(&self.g_j.view((0, 0), (m, m)).into_owned())
    }
}

/// `ubar_k = (G_Jc)_kk + g^T (G_J^{(k)})^{-1} g` with `g = (G_Jc)_{0..k, k}`.
///
/// Once `G_J^{(k)}` is numerically singular the remaining entries are set
/// to 1, which routes those steps through the restricted recurrence.
fn ubar_sequence(g_j: &DMatrix<f64>, g_jc: &DMatrix<f64>) -> Result<Vec<f64>> {
    let size = g_j.nrows();
    let mut out = Vec::with_capacity(size);
    for k in 0..size {
        let mut u = g_jc[(k, k)];
        if k > 0 {
            let block = g_j.view((0, 0), (k, k)).into_owned();
            let g: DVector<f64> = g_jc.view((0, k), (k, 1)).column(0).into_owned();
            match Cholesky::new(block) {
                Some(ch) => u += g.dot(&ch.solve(&g)),
                None => {
                    out.resize(size, 1.0);
                    break;
                }
            }
        }
        out.push(u);
    }
    Ok(out)
}

/// Free and restricted log tau values at sizes `n-1, n, n+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TauLadder {
    pub n: usize,
    pub logtau_free: [f64; 3],
    pub logtau_j: [f64; 3],
    /// `tau_{n+1}^J / tau_n^J`
    pub u: f64,
    /// `tau_{n-1}^J / tau_n^J`
    pub w: f64,
}

impl TauLadder {
    /// Requires `sys` with table size at least `n + 1`.
    pub fn new(sys: &OrthoSystem, j: &DomainJ, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("tau ladder needs n >= 1".into()));
        }
        let gl = GapLadder::new(sys, j, n)?;
        Ok(Self::from_parts(sys, &gl, n))
    }

    pub fn from_parts(sys: &OrthoSystem, gl: &GapLadder, n: usize) -> Self {
        let logtau_free = [sys.log_tau(n - 1), sys.log_tau(n), sys.log_tau(n + 1)];
        let logtau_j =
            [logtau_free[0] + gl.log_gap(n - 1), logtau_free[1] + gl.log_gap(n), logtau_free[2] + gl.log_gap(n + 1)];
        Self { n, logtau_free, logtau_j, u: (logtau_j[2] - logtau_j[1]).exp(), w: (logtau_j[0] - logtau_j[1]).exp() }
    }

    /// `exp(ln tau_{n+1} + ln tau_{n-1} - 2 ln tau_n) = b_{n-1}^2`.
    pub fn b_squared(&self) -> f64 {
        (self.logtau_free[2] + self.logtau_free[0] - 2.0 * self.logtau_free[1]).exp()
    }

    /// `exp(ln tau^J_{n+1} + ln tau^J_{n-1} - 2 ln tau^J_n)`.
    pub fn restricted_b_squared(&self) -> f64 {
        (self.logtau_j[2] + self.logtau_j[0] - 2.0 * self.logtau_j[1]).exp()
    }

    pub fn log_gap(&self) -> [f64; 3] {
        [
            self.logtau_j[0] - self.logtau_free[0],
            self.logtau_j[1] - self.logtau_free[1],
            self.logtau_j[2] - self.logtau_free[2],
        ]
    }
}

/// Layers stored on a [`TauGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    /// `ln tau_n^J`
    T,
    /// `ln tau_{n+1}^J`
    TPlus,
    /// `ln tau_{n-1}^J`
    TMinus,
    /// `ln(tau_n^J / tau_n)`
    Gap,
    /// `ln(tau_{n+1}^J / tau_{n+1})`
    GapPlus,
    /// `ln(tau_{n-1}^J / tau_{n-1})`
    GapMinus,
}

/// Values of `ln tau_m^J(t)` for `m = n-1, n, n+1` on a uniform `(ξ, t)` grid.
///
/// Arrays are row-major with the ξ index outermost. The gap layers carry the
/// ξ dependence without the additive free part, which keeps their
/// differences free of the rounding of `ln tau_m(t)`.
#[derive(Clone, Debug)]
pub struct TauGrid {
    pub n: usize,
    pub xi_axis: Vec<f64>,
    pub t_axis: Vec<f64>,
    pub t: Vec<f64>,
    pub t_plus: Vec<f64>,
    pub t_minus: Vec<f64>,
    pub gap: Vec<f64>,
    pub gap_plus: Vec<f64>,
    pub gap_minus: Vec<f64>,
    /// `[ln tau_{n-1}(t), ln tau_n(t), ln tau_{n+1}(t)]` per t.
    pub logtau_free_of_t: Vec<[f64; 3]>,
    /// Weight family, when known; classical kinds have closed-form
    /// t-dependence of the free tau functions.
    pub kind: Option<WeightKind>,
    /// Parity of the moving endpoint.
    pub parity: f64,
    /// Number of finite endpoints of `J`.
    pub finite_endpoints: usize,
}

/// `count` points `start, start + step, ...`.
pub fn uniform_axis(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + step * k as f64).collect()
}

/// Axis of `2 * radius + 1` points centred at `center`.
pub fn centered_axis(center: f64, step: f64, radius: usize) -> Vec<f64> {
    (0..=2 * radius).map(|k| center + step * (k as f64 - radius as f64)).collect()
}

fn axis_step(axis: &[f64], name: &str) -> Result<f64> {
    if axis.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} axis is empty")));
    }
    if axis.len() == 1 {
        return Ok(0.0);
    }
    let h = axis[1] - axis[0];
    if !(h > 0.0) {
        return Err(Error::InvalidGrid(format!("{name} axis must be ascending")));
    }
    for pair in axis.windows(2) {
        if ((pair[1] - pair[0]) - h).abs() > 1e-9 * h.max(pair[0].abs() * 1e-6) {
            return Err(Error::InvalidGrid(format!("{name} axis is not uniform")));
        }
    }
    Ok(h)
}

impl TauGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.xi_axis.len(), self.t_axis.len())
    }

    pub fn h_xi(&self) -> f64 {
        axis_step(&self.xi_axis, "xi").unwrap_or(0.0)
    }

    pub fn h_t(&self) -> f64 {
        axis_step(&self.t_axis, "t").unwrap_or(0.0)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.t_axis.len() + j
    }

    pub fn value(&self, layer: Layer, i: usize, j: usize) -> f64 {
        let k = self.idx(i, j);
        match layer {
            Layer::T => self.t[k],
            Layer::TPlus => self.t_plus[k],
            Layer::TMinus => self.t_minus[k],
            Layer::Gap => self.gap[k],
            Layer::GapPlus => self.gap_plus[k],
            Layer::GapMinus => self.gap_minus[k],
        }
    }

    /// Grid from closed-form layers `(T, T_plus, T_minus)`; the free part is
    /// taken as zero, so the gap layers equal the T layers.
    pub fn synthetic<F>(n: usize, xi_axis: Vec<f64>, t_axis: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> (f64, f64, f64),
    {
        axis_step(&xi_axis, "xi")?;
        axis_step(&t_axis, "t")?;
        let mut t = Vec::new();
        let mut tp = Vec::new();
        let mut tm = Vec::new();
        for &x in &xi_axis {
            for &s in &t_axis {
                let (a, b, c) = f(x, s);
                t.push(a);
                tp.push(b);
                tm.push(c);
            }
        }
        let nt = t_axis.len();
        Ok(Self {
            n,
            xi_axis,
            t_axis,
            gap: t.clone(),
            gap_plus: tp.clone(),
            gap_minus: tm.clone(),
            t,
            t_plus: tp,
            t_minus: tm,
            logtau_free_of_t: vec![[0.0; 3]; nt],
            kind: None,
            parity: 1.0,
            finite_endpoints: 1,
        })
    }

    /// Writes the CSV table `xi,t,T,T_plus,T_minus` at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["xi", "t", "T", "T_plus", "T_minus"])?;
        for (i, x) in self.xi_axis.iter().enumerate() {
            for (j, s) in self.t_axis.iter().enumerate() {
                let k = self.idx(i, j);
                wr.write_record([
                    fmt17(*x),
                    fmt17(*s),
                    fmt17(self.t[k]),
                    fmt17(self.t_plus[k]),
                    fmt17(self.t_minus[k]),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Index of `t` on the t axis.
    pub fn t_index(&self, t: f64) -> Result<usize> {
        let h = self.h_t();
        self.t_axis
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * h.max(1e-12))
            .ok_or_else(|| Error::InvalidGrid(format!("t = {t} is not a grid node")))
    }
}

/// 17-significant-digit scientific formatting used for all tables.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Options for grid assembly.
#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    pub tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

/// Fills a grid of `ln tau^J_{n-1,n,n+1}` with the shared endpoint `j_star` of
/// `J` replaced by each ξ and the weight deformed by each t.
pub fn build_grid(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    n: usize,
    xi_axis: &[f64],
    t_axis: &[f64],
) -> Result<TauGrid> {
    build_grid_with(w, j, j_star, n, xi_axis, t_axis, GridOptions::default())
}

pub fn build_grid_with(
    w: &WeightSpec,
    j: &DomainJ,
    j_star: usize,
    n: usize,
    xi_axis: &[f64],
    t_axis: &[f64],
    opts: GridOptions,
) -> Result<TauGrid> {
    if n == 0 {
        return Err(Error::Config("grid needs n >= 1".into()));
    }
    axis_step(xi_axis, "xi")?;
    axis_step(t_axis, "t")?;
    let support = w.support;
    let endpoints = j.endpoints(&support);
    if j_star >= endpoints.len() {
        return Err(Error::InvalidDomain(format!("J = {} has no endpoint {j_star}", j.label())));
    }
    let systems: Vec<OrthoSystem> =
        t_axis.par_iter().map(|&t| OrthoSystem::new(&w.deform(t)?, n + 2, opts.tol)).collect::<Result<_>>()?;
    let nt = t_axis.len();
    let cells: Vec<(usize, usize)> = (0..xi_axis.len()).flat_map(|i| (0..nt).map(move |jj| (i, jj))).collect();
    let gaps: Vec<[f64; 3]> = cells
        .par_iter()
        .map(|&(i, jt)| {
            let dom = j.with_endpoint(&support, j_star, xi_axis[i])?;
            let gl = GapLadder::new(&systems[jt], &dom, n)?;
            Ok([gl.log_gap(n - 1), gl.log_gap(n), gl.log_gap(n + 1)])
        })
        .collect::<Result<_>>()?;
    let logtau_free_of_t: Vec<[f64; 3]> =
        systems.iter().map(|s| [s.log_tau(n - 1), s.log_tau(n), s.log_tau(n + 1)]).collect();
    let mut grid = TauGrid {
        n,
        xi_axis: xi_axis.to_vec(),
        t_axis: t_axis.to_vec(),
        t: Vec::with_capacity(cells.len()),
        t_plus: Vec::with_capacity(cells.len()),
        t_minus: Vec::with_capacity(cells.len()),
        gap: Vec::with_capacity(cells.len()),
        gap_plus: Vec::with_capacity(cells.len()),
        gap_minus: Vec::with_capacity(cells.len()),
        logtau_free_of_t,
        kind: Some(w.kind),
        parity: endpoints[j_star].parity,
        finite_endpoints: endpoints.len(),
    };
    for (&(_, jt), g) in cells.iter().zip(&gaps) {
        let f = grid.logtau_free_of_t[jt];
        grid.gap_minus.push(g[0]);
        grid.gap.push(g[1]);
        grid.gap_plus.push(g[2]);
        grid.t_minus.push(f[0] + g[0]);
        grid.t.push(f[1] + g[1]);
        grid.t_plus.push(f[2] + g[2]);
    }
    if grid.t.iter().chain(&grid.t_plus).chain(&grid.t_minus).any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite tau value on grid".into()));
    }
    Ok(grid)
}

/// Toda coefficients recovered from the free tau ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TodaCoefficients {
    /// `d/dt ln(tau_{n+1} / tau_n)` by central difference.
    pub a_n: f64,
    /// `tau_{n+1} tau_{n-1} / tau_n^2`.
    pub b2: f64,
}

/// `a_n(t)` and `b_{n-1}(t)^2` from the grid's free tau values.
pub fn toda_coeffs_from_tau(grid: &TauGrid, t: f64) -> Result<TodaCoefficients> {
    let k = grid.t_index(t)?;
    if k == 0 || k + 1 >= grid.t_axis.len() {
        return Err(Error::GridMargin { i: 0, j: k, needed: 1, available: k.min(grid.t_axis.len() - 1 - k) });
    }
    let h = grid.h_t();
    let ratio = |s: usize| grid.logtau_free_of_t[s][2] - grid.logtau_free_of_t[s][1];
    let f = grid.logtau_free_of_t[k];
    Ok(TodaCoefficients { a_n: (ratio(k + 1) - ratio(k - 1)) / (2.0 * h), b2: (f[2] + f[0] - 2.0 * f[1]).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_tau_examples() {
        let g = WeightSpec::gaussian();
        assert_eq!(tau_free(&g, 0).unwrap(), 0.0);
        assert!((tau_free(&g, 1).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!((tau_free(&g, 2).unwrap() - (PI / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn restricted_tau_examples() {
        let g = WeightSpec::gaussian();
        let line = DomainJ::whole_line();
        for n in 1..6 {
            assert!((tau_restricted(&g, &line, n).unwrap() - tau_free(&g, n).unwrap()).abs() < 1e-14);
        }
        let left = DomainJ::single(f64::NEG_INFINITY, 0.0).unwrap();
        assert!((tau_restricted(&g, &left, 1).unwrap() - (PI.sqrt() / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn hybrid_matches_cholesky_in_benign_cases() {
        let w = WeightSpec::laguerre(1.0).unwrap();
        let sys = OrthoSystem::new(&w, 8, DEFAULT_TOL).unwrap();
        for j in [
            DomainJ::single(0.0, 6.0).unwrap(),
            DomainJ::single(2.0, f64::INFINITY).unwrap(),
            DomainJ::single(0.5, 12.0).unwrap(),
        ] {
            let gl = GapLadder::new(&sys, &j, 6).unwrap();
            for m in 1..=6 {
                let a = gl.log_gap(m);
                let b = gl.log_gap_cholesky(m).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{} m={m}: {a} vs {b}", j.label());
            }
        }
    }

    #[test]
    fn tiny_gap_probability_keeps_relative_accuracy() {
        // All eight eigenvalues below -1 has probability e^{-65.7}; the
        // restricted route and the product of 1 - ubar factors agree.
        let g = WeightSpec::gaussian();
        let sys = OrthoSystem::new(&g, 10, DEFAULT_TOL).unwrap();
        let j = DomainJ::single(f64::NEG_INFINITY, -1.0).unwrap();
        let gl = GapLadder::new(&sys, &j, 8).unwrap();
        let rt = gl.restricted.as_ref().unwrap();
        let direct: f64 = (0..8).map(|k| rt.log_h(k) - sys.table.log_h(k)).sum();
        assert!((gl.log_gap(8) - direct).abs() < 1e-12 * direct.abs());
        assert!(gl.log_gap(8) < -60.0);
    }

    #[test]
    fn ladder_invariants() {
        let g = WeightSpec::gaussian().deform(0.2).unwrap();
        let sys = OrthoSystem::new(&g, 8, DEFAULT_TOL).unwrap();
        let j = DomainJ::single(-1.0, 1.5).unwrap();
        for n in 1..6 {
            let l = TauLadder::new(&sys, &j, n).unwrap();
            assert!(l.logtau_j[1] <= l.logtau_free[1]);
            let b = sys.table.b[n - 1];
            assert!((l.b_squared() - b * b).abs() < 1e-12 * b * b);
        }
    }

    #[test]
    fn grid_consistency() {
        let g = WeightSpec::gaussian();
        let j = DomainJ::single(f64::NEG_INFINITY, 0.0).unwrap();
        let xi = uniform_axis(-0.5, 0.25, 5);
        let ts = uniform_axis(-0.1, 0.1, 3);
        let grid = build_grid(&g, &j, 0, 3, &xi, &ts).unwrap();
        // The t = 0 column reproduces undeformed values.
        for (i, &x) in xi.iter().enumerate() {
            let dom = DomainJ::single(f64::NEG_INFINITY, x).unwrap();
            let direct = tau_restricted(&g, &dom, 3).unwrap();
            assert!((grid.value(Layer::T, i, 1) - direct).abs() < 1e-12);
        }
        // Enlarging J raises T.
        for jt in 0..3 {
            for i in 1..5 {
                assert!(grid.value(Layer::T, i, jt) > grid.value(Layer::T, i - 1, jt));
            }
        }
        let single = build_grid(&g, &j, 0, 3, &[0.25], &[0.0]).unwrap();
        let dom = DomainJ::single(f64::NEG_INFINITY, 0.25).unwrap();
        assert!((single.t[0] - tau_restricted(&g, &dom, 3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn toda_from_grid() {
        let g = WeightSpec::gaussian();
        let j = DomainJ::single(f64::NEG_INFINITY, 1.0).unwrap();
        let ts = uniform_axis(-1e-3, 1e-3, 3);
        let grid = build_grid(&g, &j, 0, 4, &[1.0], &ts).unwrap();
        let c = toda_coeffs_from_tau(&grid, 0.0).unwrap();
        assert!(c.a_n.abs() < 1e-9);
        assert!((c.b2 - 2.0).abs() < 1e-12);
        assert!(toda_coeffs_from_tau(&grid, -1e-3).is_err());

        let l = WeightSpec::laguerre(1.0).unwrap();
        let jl = DomainJ::single(1.0, f64::INFINITY).unwrap();
        let grid = build_grid(&l, &jl, 0, 2, &[1.0], &ts).unwrap();
        let c = toda_coeffs_from_tau(&grid, 0.0).unwrap();
        assert!((c.a_n - 6.0).abs() < 1e-5);
    }

    #[test]
    fn csv_layout() {
        let grid = TauGrid::synthetic(2, vec![0.0, 0.5], vec![0.0], |x, t| (x + t, x, t)).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("xi,t,T,T_plus,T_minus"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn gap_in_unit_interval() {
        let w = WeightSpec::laguerre(0.0).unwrap();
        let sys = OrthoSystem::new(&w, 6, DEFAULT_TOL).unwrap();
        let full = GapLadder::new(&sys, &DomainJ::single(-1.0, f64::INFINITY).unwrap(), 5).unwrap();
        assert_eq!(full.log_gap(5), 0.0);
        let part = GapLadder::new(&sys, &DomainJ::single(0.0, 3.0).unwrap(), 5).unwrap();
        assert!(part.log_gap(5) < 0.0);
    }
}
