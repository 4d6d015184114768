//! Finite-difference jets on a [`TauGrid`].

use crate::error::{Error, Result};
use crate::measure::WeightKind;
use crate::tau::{Layer, TauGrid};

/// Stencil stride and Richardson depth.
///
/// A stride `s` differentiates with step `s * h`, so a grid built at `h/2`
/// serves both `h` (stride 2) and `h/2` (stride 1) jets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JetOptions {
    pub stride: usize,
    /// 0: plain second-order stencils; 1 and 2: Richardson levels.
    pub richardson: u32,
}

impl Default for JetOptions {
    fn default() -> Self {
        Self { stride: 1, richardson: 1 }
    }
}

impl JetOptions {
    pub fn new(stride: usize, richardson: u32) -> Self {
        Self { stride: stride.max(1), richardson }
    }

    /// Largest stride touched by the extrapolation.
    pub fn reach(&self) -> usize {
        self.stride << self.richardson
    }

    /// Cells needed on each side in ξ for the full jet.
    pub fn margin_xi(&self) -> usize {
        self.reach()
    }

    /// Cells needed on each side in t for the full jet.
    pub fn margin_t(&self) -> usize {
        2 * self.reach()
    }
}

/// Offsets and weights of the centred second-order stencil for a derivative
/// of the given order, before division by `h^order`.
fn stencil(order: usize) -> &'static [(isize, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("stencil order {order} not supported"),
    }
}

fn stencil_radius(order: usize) -> usize {
    if order <= 2 {
        usize::from(order > 0)
    } else {
        2
    }
}

/// Plain tensor-product difference of `f` at stride `s`.
fn plain<F: Fn(isize, isize) -> f64>(f: &F, px: usize, pt: usize, s: usize, hx: f64, ht: f64) -> f64 {
    let si = s as isize;
    let mut acc = 0.0;
    for &(a, ca) in stencil(px) {
        for &(b, cb) in stencil(pt) {
            acc += ca * cb * f(a * si, b * si);
        }
    }
    acc / ((s as f64 * hx).powi(px as i32) * (s as f64 * ht).powi(pt as i32))
}

fn extrapolated<F: Fn(isize, isize) -> f64>(
    f: &F,
    px: usize,
    pt: usize,
    s: usize,
    level: u32,
    hx: f64,
    ht: f64,
) -> f64 {
    if level == 0 {
        return plain(f, px, pt, s, hx, ht);
    }
    let fine = extrapolated(f, px, pt, s, level - 1, hx, ht);
    let coarse = extrapolated(f, px, pt, 2 * s, level - 1, hx, ht);
    let k = 4f64.powi(level as i32);
    (k * fine - coarse) / (k - 1.0)
}

/// Derivative `∂^px_ξ ∂^pt_t` of `f(di, dj)` (offsets from the centre).
pub fn derivative<F: Fn(isize, isize) -> f64>(f: &F, px: usize, pt: usize, opts: JetOptions, hx: f64, ht: f64) -> f64 {
    if px == 0 && pt == 0 {
        return f(0, 0);
    }
    extrapolated(f, px, pt, opts.stride, opts.richardson, hx, ht)
}

/// One-dimensional derivative along a uniform sequence.
pub fn derivative_1d(values: &[f64], k: usize, order: usize, opts: JetOptions, h: f64) -> Result<f64> {
    let need = stencil_radius(order) * opts.reach();
    if k < need || k + need >= values.len() {
        return Err(Error::GridMargin {
            i: k,
            j: 0,
            needed: need,
            available: k.min(values.len().saturating_sub(k + 1)),
        });
    }
    let f = |a: isize, _b: isize| values[(k as isize + a) as usize];
    Ok(derivative(&f, order, 0, opts, h, 1.0))
}

/// Partial derivatives of one scalar field at a grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    pub f: f64,
    pub x: f64,
    pub t: f64,
    pub xx: f64,
    pub xt: f64,
    pub tt: f64,
    pub ttt: f64,
    pub xxt: f64,
    pub xtt: f64,
    pub xxtt: f64,
    pub xttt: f64,
}

impl Partials {
    fn from_field<F: Fn(isize, isize) -> f64>(f: &F, opts: JetOptions, hx: f64, ht: f64) -> Self {
        let d = |px, pt| derivative(f, px, pt, opts, hx, ht);
        Self {
            f: f(0, 0),
            x: d(1, 0),
            t: d(0, 1),
            xx: d(2, 0),
            xt: d(1, 1),
            tt: d(0, 2),
            ttt: d(0, 3),
            xxt: d(2, 1),
            xtt: d(1, 2),
            xxtt: d(2, 2),
            xttt: d(1, 3),
        }
    }

    fn add_time_part(&mut self, g: [f64; 4]) {
        self.f += g[0];
        self.t += g[1];
        self.tt += g[2];
        self.ttt += g[3];
    }
}

/// Derivatives at one `(ξ, t)` grid point.
///
/// `tj` holds the partials of `T = ln tau_n^J`; `plus` and `minus` those of
/// `ln U = T_+ - T` and `ln W = T_- - T`. The U/W partials are assembled
/// from the logarithmic ones by the chain rule.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeJet {
    pub xi: f64,
    pub t: f64,
    pub n: usize,
    pub h_xi: f64,
    pub h_t: f64,
    pub richardson_order: u32,
    pub tj: Partials,
    pub plus: Partials,
    pub minus: Partials,
    pub u: f64,
    pub w: f64,
    pub u_xi: f64,
    pub w_xi: f64,
    pub u_xixi: f64,
    pub w_xixi: f64,
    pub u_t: f64,
    pub w_t: f64,
    pub u_xit: f64,
    pub w_xit: f64,
    /// `v_ξ = -T_ξt`.
    pub v_xi: f64,
}

impl PdeJet {
    /// Product `U W`, formed in log space.
    pub fn uw(&self) -> f64 {
        (self.plus.f + self.minus.f).exp()
    }
}

/// Checks that `(i, j)` has room for the stencils of `opts`.
pub fn check_margin(grid: &TauGrid, i: usize, j: usize, need_xi: usize, need_t: usize) -> Result<()> {
    let (nx, nt) = grid.shape();
    let avail_xi = i.min(nx.saturating_sub(i + 1));
    let avail_t = j.min(nt.saturating_sub(j + 1));
    if i >= nx || j >= nt || avail_xi < need_xi || avail_t < need_t {
        return Err(Error::GridMargin { i, j, needed: need_xi.max(need_t), available: avail_xi.min(avail_t) });
    }
    Ok(())
}

/// Value and first three t-derivatives of `ln tau_{n+k}(t)`, `k = -1, 0, 1`.
///
/// Classical weights use their closed-form t-dependence; other weights fall
/// back to differences of the stored free values.
fn free_part(grid: &TauGrid, k: isize, j: usize, opts: JetOptions) -> [f64; 4] {
    let m = grid.n as isize + k;
    let idx = (k + 1) as usize;
    let value = grid.logtau_free_of_t[j][idx];
    let t = grid.t_axis[j];
    let mf = m as f64;
    match grid.kind {
        Some(WeightKind::Gaussian) => [value, mf * t / 2.0, mf / 2.0, 0.0],
        Some(WeightKind::Laguerre { alpha }) => {
            let c = mf * (mf + alpha);
            let q = 1.0 - t;
            [value, c / q, c / (q * q), 2.0 * c / (q * q * q)]
        }
        _ => {
            let ht = grid.h_t();
            let f = |_a: isize, b: isize| grid.logtau_free_of_t[(j as isize + b) as usize][idx];
            let d = |pt| derivative(&f, 0, pt, opts, 1.0, ht);
            [value, d(1), d(2), d(3)]
        }
    }
}

/// Full jet at grid point `(i, j)`.
pub fn extract_jet(grid: &TauGrid, i: usize, j: usize, opts: JetOptions) -> Result<PdeJet> {
    check_margin(grid, i, j, opts.margin_xi(), opts.margin_t())?;
    let (hx, ht) = (grid.h_xi(), grid.h_t());
    let at = |layer: Layer| {
        move |a: isize, b: isize| grid.value(layer, (i as isize + a) as usize, (j as isize + b) as usize)
    };
    let gap = at(Layer::Gap);
    let gp = at(Layer::GapPlus);
    let gm = at(Layer::GapMinus);
    let mut tj = Partials::from_field(&gap, opts, hx, ht);
    let mut plus = Partials::from_field(&|a, b| gp(a, b) - gap(a, b), opts, hx, ht);
    let mut minus = Partials::from_field(&|a, b| gm(a, b) - gap(a, b), opts, hx, ht);

    let f0 = free_part(grid, 0, j, opts);
    let fp = free_part(grid, 1, j, opts);
    let fm = free_part(grid, -1, j, opts);
    tj.add_time_part(f0);
    plus.add_time_part([fp[0] - f0[0], fp[1] - f0[1], fp[2] - f0[2], fp[3] - f0[3]]);
    minus.add_time_part([fm[0] - f0[0], fm[1] - f0[1], fm[2] - f0[2], fm[3] - f0[3]]);

    let (u, w) = (plus.f.exp(), minus.f.exp());
    Ok(PdeJet {
        xi: grid.xi_axis[i],
        t: grid.t_axis[j],
        n: grid.n,
        h_xi: hx * opts.stride as f64,
        h_t: ht * opts.stride as f64,
        richardson_order: opts.richardson,
        u,
        w,
        u_xi: u * plus.x,
        w_xi: w * minus.x,
        u_xixi: u * (plus.xx + plus.x * plus.x),
        w_xixi: w * (minus.xx + minus.x * minus.x),
        u_t: u * plus.t,
        w_t: w * minus.t,
        u_xit: u * (plus.xt + plus.x * plus.t),
        w_xit: w * (minus.xt + minus.x * minus.t),
        v_xi: -tj.xt,
        tj,
        plus,
        minus,
    })
}

/// `T_ξt` by the tensor-product stencil and by the seven-point stencil
/// built from axis and diagonal neighbours.
pub fn mixed_partial_routes(grid: &TauGrid, i: usize, j: usize, opts: JetOptions) -> Result<(f64, f64)> {
    check_margin(grid, i, j, opts.reach(), opts.reach())?;
    let (hx, ht) = (grid.h_xi(), grid.h_t());
    let f = |a: isize, b: isize| grid.value(Layer::Gap, (i as isize + a) as usize, (j as isize + b) as usize);
    let tensor = derivative(&f, 1, 1, opts, hx, ht);
    let seven = |s: usize| {
        let s = s as isize;
        let num = f(s, s) - f(s, 0) - f(0, s) + 2.0 * f(0, 0) - f(-s, 0) - f(0, -s) + f(-s, -s);
        num / (2.0 * s as f64 * s as f64 * hx * ht)
    };
    let mut levels: Vec<f64> = (0..=opts.richardson).map(|l| seven(opts.stride << l)).collect();
    for l in 1..=opts.richardson as usize {
        let k = 4f64.powi(l as i32);
        for m in 0..levels.len() - l {
            levels[m] = (k * levels[m] - levels[m + 1]) / (k - 1.0);
        }
    }
    Ok((tensor, levels[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tau::centered_axis;

    #[test]
    fn polynomial_grid_is_exact() {
        let xi = centered_axis(0.3, 0.01, 8);
        let t = centered_axis(0.1, 0.01, 8);
        let g = TauGrid::synthetic(2, xi, t, |x, s| (x * s, x * s, x * s)).unwrap();
        let jet = extract_jet(&g, 8, 8, JetOptions::default()).unwrap();
        assert!((jet.tj.xt - 1.0).abs() < 1e-12);
        for v in [jet.tj.xx, jet.tj.tt, jet.tj.ttt, jet.tj.xtt, jet.tj.xxtt, jet.tj.xttt] {
            assert!(v.abs() < 1e-9, "{v}");
        }
        assert!((jet.tj.x - 0.1).abs() < 1e-12 && (jet.tj.t - 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_in_t() {
        let g = TauGrid::synthetic(2, centered_axis(0.0, 0.01, 8), centered_axis(0.0, 0.01, 8), |x, _| {
            (x.sin(), x.cos(), 1.0)
        })
        .unwrap();
        let jet = extract_jet(&g, 8, 8, JetOptions::default()).unwrap();
        for v in [jet.tj.t, jet.tj.tt, jet.tj.ttt, jet.tj.xt, jet.tj.xtt] {
            assert_eq!(v, 0.0);
        }
        assert!((jet.tj.x - 1.0).abs() < 1e-8);
    }

    #[test]
    fn richardson_orders() {
        let xi = centered_axis(0.0, 0.01, 16);
        let g =
            TauGrid::synthetic(2, xi, centered_axis(0.0, 0.01, 16), |x, s| ((x + 2.0 * s).exp(), 0.0, 0.0)).unwrap();
        let exact = 2.0f64;
        let errs: Vec<f64> =
            (0..3).map(|l| (extract_jet(&g, 16, 16, JetOptions::new(1, l)).unwrap().tj.xt - exact).abs()).collect();
        assert!(errs[1] < errs[0] * 1e-3 && errs[2] < 1e-9, "{errs:?}");
    }

    #[test]
    fn margin_is_enforced() {
        let g = TauGrid::synthetic(2, centered_axis(0.0, 0.01, 3), centered_axis(0.0, 0.01, 3), |_, _| (0.0, 0.0, 0.0))
            .unwrap();
        assert!(matches!(extract_jet(&g, 3, 3, JetOptions::default()), Err(Error::GridMargin { .. })));
    }

    #[test]
    fn one_dimensional() {
        let h = 0.01;
        let v: Vec<f64> = (0..41).map(|k| (h * k as f64).sin()).collect();
        let d = derivative_1d(&v, 20, 4, JetOptions::new(1, 1), h).unwrap();
        assert!((d - 0.2f64.sin()).abs() < 1e-5);
        assert!(derivative_1d(&v, 2, 3, JetOptions::new(1, 1), h).is_err());
    }
}
