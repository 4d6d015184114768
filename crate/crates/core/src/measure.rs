//! Weights `e^{-V(x) + t1 x}`, integration domains and the composite
//! Gauss–Legendre backbone that every other module integrates against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, gauss_legendre};

/// Gauss–Legendre order used on every panel.
pub const PANEL_ORDER: usize = 32;
/// Default relative tolerance for node construction.
pub const DEFAULT_TOL: f64 = 1e-14;

const MAX_LEVELS: u32 = 10;
const TAIL_PADDING: f64 = 1.2;
const BASE_PANEL_WIDTH: f64 = 1.0;

/// An open interval of the real line; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// Intersection, or `None` when it has no interior.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval::new(lo, hi))
    }
}

/// Which classical family a weight belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightKind {
    Gaussian,
    Laguerre { alpha: f64 },
    Custom,
}

/// Family selector for [`make_weight`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightFamily {
    Gaussian,
    Laguerre,
    Custom,
}

/// The potential `V(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `V(x) = x^2`
    Quadratic,
    /// `V(x) = x - alpha ln x`
    LinearLog { alpha: f64 },
    /// `V(x) = sum_k c_k x^k`
    Polynomial(Vec<f64>),
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Quadratic => x * x,
            Potential::LinearLog { alpha } => {
                if *alpha == 0.0 {
                    x
                } else {
                    x - alpha * x.ln()
                }
            }
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
        }
    }
}

/// A weight `rho_t(x) = exp(-V(x) + t1 x)` on its support.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub potential: Potential,
    pub support: Interval,
    pub t1: f64,
}

/// Builds an undeformed weight of the given family.
///
/// `params` is empty for Gaussian, `[alpha]` for Laguerre and the
/// polynomial coefficients `[c_0, c_1, ...]` of `V` for Custom.
pub fn make_weight(family: WeightFamily, params: &[f64]) -> Result<WeightSpec> {
    match family {
        WeightFamily::Gaussian => Ok(WeightSpec::gaussian()),
        WeightFamily::Laguerre => {
            let alpha = *params.first().ok_or_else(|| Error::InvalidWeight("Laguerre weight needs alpha".into()))?;
            WeightSpec::laguerre(alpha)
        }
        WeightFamily::Custom => WeightSpec::polynomial(params.to_vec()),
    }
}

impl WeightSpec {
    /// Hermite weight `e^{-x^2}` on the real line.
    pub fn gaussian() -> Self {
        Self { kind: WeightKind::Gaussian, potential: Potential::Quadratic, support: Interval::real_line(), t1: 0.0 }
    }

    /// Laguerre weight `x^alpha e^{-x}` on `(0, inf)`.
    pub fn laguerre(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::InvalidWeight(format!("Laguerre alpha must exceed -1, got {alpha}")));
        }
        Ok(Self {
            kind: WeightKind::Laguerre { alpha },
            potential: Potential::LinearLog { alpha },
            support: Interval::new(0.0, f64::INFINITY),
            t1: 0.0,
        })
    }

    /// Weight `e^{-V(x)}` on the real line for a polynomial potential.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let mut c = coeffs;
        while c.last() == Some(&0.0) {
            c.pop();
        }
        let degree = c.len().saturating_sub(1);
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeight("non-finite potential coefficient".into()));
        }
        if degree < 2 || degree % 2 == 1 || c[degree] <= 0.0 {
            return Err(Error::InvalidWeight(
                "custom potential must be an even-degree polynomial with positive leading coefficient".into(),
            ));
        }
        Ok(Self {
            kind: WeightKind::Custom,
            potential: Potential::Polynomial(c),
            support: Interval::real_line(),
            t1: 0.0,
        })
    }

    /// Laguerre parameter, if any.
    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Laguerre { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Returns the same weight with deformation coefficient `t1`.
    pub fn deform(&self, t1: f64) -> Result<Self> {
        if !t1.is_finite() {
            return Err(Error::NonIntegrable(format!("t1 = {t1}")));
        }
        if matches!(self.kind, WeightKind::Laguerre { .. }) && t1 >= 1.0 {
            return Err(Error::NonIntegrable(format!("Laguerre weight requires t1 < 1, got {t1}")));
        }
        Ok(Self { t1, ..self.clone() })
    }

    /// `ln rho_t(x)`; `-inf` outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return f64::NEG_INFINITY;
        }
        -self.potential.eval(x) + self.t1 * x
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `rho_t(x)^{1/2}`, the factor carried by the quasi-polynomials.
    pub fn half_weight(&self, x: f64) -> f64 {
        (0.5 * self.log_density(x)).exp()
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            WeightKind::Gaussian => "gaussian".to_string(),
            WeightKind::Laguerre { alpha } => format!("laguerre(alpha={alpha})"),
            WeightKind::Custom => "custom".to_string(),
        }
    }

    /// `ln rho + (degree/2) ln(1 + x^2)`: log of the envelope of
    /// polynomial-times-density integrands.
    fn log_envelope(&self, x: f64, degree: usize) -> f64 {
        self.log_density(x) + 0.5 * degree as f64 * (x * x).ln_1p()
    }

    /// Maximizer of the envelope over an interval, by scan plus golden section.
    fn envelope_argmax(&self, iv: &Interval, degree: usize) -> (f64, f64) {
        let mut cands: Vec<f64> = Vec::with_capacity(512);
        for k in 0..160 {
            let r = 2f64.powf(k as f64 / 4.0) - 1.0;
            cands.push(r);
            cands.push(-r);
        }
        if iv.is_bounded() {
            for k in 0..=200 {
                cands.push(iv.lo + iv.length() * k as f64 / 200.0);
            }
        }
        let nudge = |x: f64| -> f64 {
            let eps = 1e-12 * (1.0 + x.abs());
            x.clamp(iv.lo + eps, iv.hi - eps)
        };
        if iv.lo.is_finite() {
            cands.push(nudge(iv.lo));
        }
        if iv.hi.is_finite() {
            cands.push(nudge(iv.hi));
        }
        // A density singular at the origin (Laguerre alpha < 0) would set the
        // reference peak at infinity; measure the tail against x >= 1/2.
        let singular_origin = matches!(self.kind, WeightKind::Laguerre { alpha } if alpha < 0.0);
        let floor = if singular_origin && iv.hi > 1.0 { 0.5 } else { f64::NEG_INFINITY };
        let mut pts: Vec<f64> = cands.into_iter().filter(|x| iv.contains(*x) && *x >= floor).collect();
        if pts.is_empty() {
            pts.push(0.5 * (iv.lo.max(-1e300) + iv.hi.min(1e300)));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let vals: Vec<f64> = pts.iter().map(|&x| self.log_envelope(x, degree)).collect();
        let (mut best, mut best_val) = (0usize, f64::NEG_INFINITY);
        for (k, v) in vals.iter().enumerate() {
            if *v > best_val {
                best = k;
                best_val = *v;
            }
        }
        let mut a = if best > 0 { pts[best - 1] } else { pts[best] };
        let mut b = if best + 1 < pts.len() { pts[best + 1] } else { pts[best] };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut xbest, mut vbest) = (pts[best], best_val);
        for _ in 0..100 {
            if b - a <= 1e-12 * (1.0 + a.abs()) {
                break;
            }
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            let (fc, fd) = (self.log_envelope(c, degree), self.log_envelope(d, degree));
            if fc > vbest {
                xbest = c;
                vbest = fc;
            }
            if fd > vbest {
                xbest = d;
                vbest = fd;
            }
            if fc >= fd {
                b = d;
            } else {
                a = c;
            }
        }
        (xbest, vbest)
    }

    /// Point beyond `from` (towards `dir = ±1`) where the envelope drops to
    /// `threshold`.
    fn envelope_crossing(&self, from: f64, dir: f64, threshold: f64, degree: usize) -> f64 {
        let mut step = 0.5;
        let mut inner = from;
        let mut outer = from + dir * step;
        while self.log_envelope(outer, degree) > threshold {
            inner = outer;
            step *= 2.0;
            outer = from + dir * step;
            if step > 1e12 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if (outer - inner).abs() <= 1e-12 * (1.0 + mid.abs()) {
                break;
            }
            if self.log_envelope(mid, degree) > threshold {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        outer
    }
}

/// Endpoint of the complement `J^c` shared with `J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Endpoint {
    /// Position in the ascending list of finite shared endpoints (0-based).
    pub index: usize,
    pub position: f64,
    /// Sign `s` with `du/da = s Q(a)^2`: `-1` when `J^c` lies to the right of
    /// the endpoint, `+1` when it lies to the left.
    pub parity: f64,
}

/// A finite union of disjoint open intervals `J` where all eigenvalues lie.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainJ {
    intervals: Vec<Interval>,
}

impl DomainJ {
    /// Sorts the intervals, merges touching ones, and rejects overlaps.
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidDomain("J must contain at least one interval".into()));
        }
        for iv in &intervals {
            if iv.lo.is_nan() || iv.hi.is_nan() || !(iv.lo < iv.hi) {
                return Err(Error::InvalidDomain(format!("bad interval ({}, {})", iv.lo, iv.hi)));
            }
        }
        intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo < last.hi => {
                    return Err(Error::InvalidDomain(format!(
                        "intervals ({}, {}) and ({}, {}) overlap",
                        last.lo, last.hi, iv.lo, iv.hi
                    )));
                }
                Some(last) if iv.lo == last.hi => last.hi = iv.hi,
                _ => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![Interval::new(lo, hi)])
    }

    pub fn whole_line() -> Self {
        Self { intervals: vec![Interval::real_line()] }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// `J ∩ support`.
    pub fn clipped(&self, support: &Interval) -> Vec<Interval> {
        self.intervals.iter().filter_map(|iv| iv.intersect(support)).collect()
    }

    /// `support \ J`.
    pub fn complement(&self, support: &Interval) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut cursor = support.lo;
        for iv in self.clipped(support) {
            if iv.lo > cursor {
                out.push(Interval::new(cursor, iv.lo));
            }
            cursor = cursor.max(iv.hi);
        }
        if cursor < support.hi {
            out.push(Interval::new(cursor, support.hi));
        }
        out
    }

    /// True when `J` covers the support.
    pub fn covers(&self, support: &Interval) -> bool {
        self.complement(support).is_empty()
    }

    /// Finite endpoints shared by `J` and `J^c` inside the support, ascending.
    pub fn endpoints(&self, support: &Interval) -> Vec<Endpoint> {
        let mut out = Vec::new();
        for iv in self.clipped(support) {
            if iv.lo > support.lo {
                // J^c lies to the left: right end of a complement component.
                out.push((iv.lo, 1.0));
            }
            if iv.hi < support.hi {
                out.push((iv.hi, -1.0));
            }
        }
        out.into_iter().enumerate().map(|(index, (position, parity))| Endpoint { index, position, parity }).collect()
    }

    /// Returns `J` with the shared endpoint `index` moved to `value`.
    pub fn with_endpoint(&self, support: &Interval, index: usize, value: f64) -> Result<Self> {
        let mut clipped = self.clipped(support);
        let mut k = 0usize;
        for iv in clipped.iter_mut() {
            if iv.lo > support.lo {
                if k == index {
                    iv.lo = value;
                    return Self::new(clipped);
                }
                k += 1;
            }
            if iv.hi < support.hi {
                if k == index {
                    iv.hi = value;
                    return Self::new(clipped);
                }
                k += 1;
            }
        }
        Err(Error::InvalidDomain(format!("J has no shared endpoint with index {index}")))
    }

    /// Compact label such as `(-inf,0.5)u(1,2)`.
    pub fn label(&self) -> String {
        self.intervals
            .iter()
            .map(|iv| format!("({},{})", fmt_bound(iv.lo), fmt_bound(iv.hi)))
            .collect::<Vec<_>>()
            .join("u")
    }

    /// JSON form `[[lo, hi], ...]` with infinite ends as strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.intervals.iter().map(|iv| serde_json::json!([bound_json(iv.lo), bound_json(iv.hi)])).collect(),
        )
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn bound_json(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(fmt_bound(x))
    }
}

/// Quadrature nodes over a region: plain Gauss–Legendre weights for `∫ f dx`.
#[derive(Clone, Debug)]
pub struct NodeSet {
    pub nodes: Vec<(f64, f64)>,
    pub target_tol: f64,
    /// Largest |x| reached by the panels, after tail truncation and padding.
    pub truncation_bound: f64,
    /// Largest |x| where the envelope reaches `tol * peak`, before padding;
    /// `NaN` when no tail was truncated.
    pub density_cutoff: f64,
    /// Number of panel doublings applied to the base layout.
    pub level: u32,
}

impl NodeSet {
    /// `(x, w * rho(x))` pairs for weighted sums.
    pub fn weighted(&self, w: &WeightSpec) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|&(x, wt)| (x, wt * w.density(x))).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Panel boundaries per interval, before refinement.
#[derive(Clone, Debug)]
struct PanelLayout {
    edges: Vec<Vec<f64>>,
    truncation_bound: f64,
    density_cutoff: f64,
}

impl PanelLayout {
    fn nodes(&self, level: u32) -> Vec<(f64, f64)> {
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let split = 1usize << level;
        let mut out = Vec::new();
        for edges in &self.edges {
            for pair in edges.windows(2) {
                let step = (pair[1] - pair[0]) / split as f64;
                for s in 0..split {
                    let a = pair[0] + step * s as f64;
                    let b = if s + 1 == split { pair[1] } else { a + step };
                    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
                    out.extend(gx.iter().zip(&gw).map(|(x, w)| (c + r * x, r * w)));
                }
            }
        }
        out
    }
}

fn layout(region: &[Interval], w: &WeightSpec, tol: f64, degree: usize) -> Result<PanelLayout> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let pieces: Vec<Interval> = region.iter().filter_map(|iv| iv.intersect(&w.support)).collect();
    if pieces.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut edges_all = Vec::with_capacity(pieces.len());
    let mut trunc: f64 = 0.0;
    let mut cutoff = f64::NAN;
    let log_tol = tol.ln();
    for iv in pieces {
        let (xmax, vmax) = w.envelope_argmax(&iv, degree);
        let threshold = vmax + log_tol;
        let mut lo = iv.lo;
        let mut hi = iv.hi;
        if lo.is_infinite() {
            let c = w.envelope_crossing(xmax, -1.0, threshold, degree);
            cutoff = max_nan(cutoff, c.abs());
            lo = xmax - TAIL_PADDING * (xmax - c);
        }
        if hi.is_infinite() {
            let c = w.envelope_crossing(xmax, 1.0, threshold, degree);
            cutoff = max_nan(cutoff, c.abs());
            hi = xmax + TAIL_PADDING * (c - xmax);
        }
        trunc = trunc.max(lo.abs()).max(hi.abs());
        edges_all.push(panel_edges(w, lo, hi));
    }
    Ok(PanelLayout { edges: edges_all, truncation_bound: trunc, density_cutoff: cutoff })
}

fn max_nan(a: f64, b: f64) -> f64 {
    if a.is_nan() {
        b
    } else {
        a.max(b)
    }
}

/// Uniform panels of width about one, graded geometrically towards the origin
/// when a non-integer Laguerre exponent makes the density singular there.
fn panel_edges(w: &WeightSpec, lo: f64, hi: f64) -> Vec<f64> {
    let graded = match w.kind {
        WeightKind::Laguerre { alpha } => lo == 0.0 && alpha.fract() != 0.0,
        _ => false,
    };
    let mut edges = Vec::new();
    let mut start = lo;
    if graded {
        let alpha = w.alpha().unwrap_or(0.0);
        let top = hi.min(1.0);
        // The piece [0, top * 10^-levels] contributes below ~1e-16 relative.
        let levels = (16.0 / (alpha + 1.0)).ceil().clamp(1.0, 300.0) as i32;
        edges.push(0.0);
        for k in (0..=levels).rev() {
            edges.push(top * 10f64.powi(-k));
        }
        start = top;
        if start >= hi {
            return edges;
        }
        edges.pop();
    }
    let count = ((hi - start) / BASE_PANEL_WIDTH).ceil().max(1.0) as usize;
    let step = (hi - start) / count as f64;
    for k in 0..count {
        edges.push(start + step * k as f64);
    }
    edges.push(hi);
    edges
}

/// Nodes for integrands `poly(x) rho(x)` of degree up to 0.
pub fn build_nodes(region: &[Interval], w: &WeightSpec, tol: f64) -> Result<NodeSet> {
    build_nodes_for_degree(region, w, tol, 0)
}

/// Nodes for integrands `poly(x) rho(x)` with polynomial degree up to
/// `degree`, certified by panel doubling on the envelope
/// `rho(x) (1 + x^2)^{degree/2}`.
pub fn build_nodes_for_degree(region: &[Interval], w: &WeightSpec, tol: f64, degree: usize) -> Result<NodeSet> {
    let lay = layout(region, w, tol, degree)?;
    let envelope =
        |nodes: &[(f64, f64)]| compensated_sum(nodes.iter().map(|&(x, wt)| wt * w.log_envelope(x, degree).exp()));
    let mut prev_nodes = lay.nodes(0);
    let mut prev = envelope(&prev_nodes);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVELS {
        let nodes = lay.nodes(level);
        let cur = envelope(&nodes);
        change = (cur - prev).abs();
        if change <= tol * cur.abs() || cur == 0.0 {
            // The coarser level already met the tolerance; keep it.
            return Ok(NodeSet {
                nodes: prev_nodes,
                target_tol: tol,
                truncation_bound: lay.truncation_bound,
                density_cutoff: lay.density_cutoff,
                level: level - 1,
            });
        }
        prev = cur;
        prev_nodes = nodes;
    }
    Err(Error::NoConvergence { levels: MAX_LEVELS, change })
}

/// `∫_region f(x) rho_t(x) dx`, certified by panel-doubling agreement.
pub fn integrate<F: Fn(f64) -> f64>(f: F, region: &[Interval], w: &WeightSpec, tol: f64) -> Result<f64> {
    let lay = layout(region, w, tol, 0)?;
    let eval = |level: u32| {
        let nodes = lay.nodes(level);
        let vals: Vec<f64> = nodes.iter().map(|&(x, wt)| wt * f(x) * w.density(x)).collect();
        (compensated_sum(vals.iter().copied()), compensated_sum(vals.iter().map(|v| v.abs())))
    };
    let (mut prev, _) = eval(0);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVELS {
        let (cur, scale) = eval(level);
        change = (cur - prev).abs();
        if change <= tol * scale.max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence { levels: MAX_LEVELS, change })
}

/// A bound in the JSON configuration: a number or `"inf"` / `"-inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundValue {
    Number(f64),
    Text(String),
}

impl BoundValue {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            BoundValue::Number(x) => Ok(*x),
            BoundValue::Text(s) => match s.trim() {
                "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                other => other.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse bound {other:?}"))),
            },
        }
    }
}

/// The `weight` object of the JSON configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub t1: Option<f64>,
    /// Polynomial coefficients of `V` for the custom kind.
    #[serde(default)]
    pub coeffs: Option<Vec<f64>>,
}

impl WeightConfig {
    pub fn to_spec(&self) -> Result<WeightSpec> {
        let base = match self.kind.to_ascii_lowercase().as_str() {
            "gaussian" | "hermite" => make_weight(WeightFamily::Gaussian, &[])?,
            "laguerre" => make_weight(WeightFamily::Laguerre, &[self.alpha.unwrap_or(0.0)])?,
            "custom" => {
                let c = self.coeffs.as_ref().ok_or_else(|| Error::Config("custom weight needs \"coeffs\"".into()))?;
                make_weight(WeightFamily::Custom, c)?
            }
            other => return Err(Error::Config(format!("unsupported weight kind {other:?}"))),
        };
        base.deform(self.t1.unwrap_or(0.0))
    }
}

/// Parses `[[lo, hi], ...]` into a domain.
pub fn parse_domain(bounds: &[[BoundValue; 2]]) -> Result<DomainJ> {
    let intervals =
        bounds.iter().map(|[lo, hi]| Ok(Interval::new(lo.to_f64()?, hi.to_f64()?))).collect::<Result<Vec<_>>>()?;
    DomainJ::new(intervals)
}

/// The measure part of the JSON configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub weight: WeightConfig,
    #[serde(rename = "J", default)]
    pub j: Option<Vec<[BoundValue; 2]>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl MeasureConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Weight, domain (whole line when absent) and tolerance.
    pub fn resolve(&self) -> Result<(WeightSpec, DomainJ, f64)> {
        let w = self.weight.to_spec()?;
        let j = match &self.j {
            Some(v) => parse_domain(v)?,
            None => DomainJ::whole_line(),
        };
        Ok((w, j, self.tol.unwrap_or(DEFAULT_TOL)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn classical_potentials() {
        let g = make_weight(WeightFamily::Gaussian, &[]).unwrap();
        assert_eq!(g.potential.eval(1.5), 2.25);
        assert_eq!(g.t1, 0.0);
        let l = make_weight(WeightFamily::Laguerre, &[1.0]).unwrap();
        assert!((l.potential.eval(2.0) - (2.0 - 2f64.ln())).abs() < 1e-15);
        assert_eq!(l.support, Interval::new(0.0, f64::INFINITY));
        let q = make_weight(WeightFamily::Custom, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.support, Interval::real_line());
        assert_eq!(q.potential.eval(2.0), 16.0);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(make_weight(WeightFamily::Laguerre, &[-1.0]).is_err());
        assert!(make_weight(WeightFamily::Laguerre, &[]).is_err());
        assert!(make_weight(WeightFamily::Custom, &[0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(make_weight(WeightFamily::Custom, &[0.0, 0.0, -1.0]).is_err());
    }

    #[test]
    fn deformation_rules() {
        let g = WeightSpec::gaussian().deform(0.1).unwrap();
        assert!((g.log_density(0.3) - (-0.09 + 0.03)).abs() < 1e-15);
        let l = WeightSpec::laguerre(0.0).unwrap();
        let l5 = l.deform(0.5).unwrap();
        assert!((l5.log_density(2.0) + 1.0).abs() < 1e-15);
        assert!(matches!(l.deform(1.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn gaussian_truncation_bound() {
        let ns = build_nodes(&[Interval::real_line()], &WeightSpec::gaussian(), 1e-12).unwrap();
        assert!(ns.truncation_bound >= 6.0, "{}", ns.truncation_bound);
        // Independent oracle: e^{-x^2} = tol solved by bisection.
        let (mut a, mut b) = (0.0f64, 20.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (-m * m).exp() > 1e-12 {
                a = m
            } else {
                b = m
            }
        }
        assert!((ns.density_cutoff - a).abs() < 1e-8);
    }

    #[test]
    fn laguerre_density_cutoff() {
        let w = WeightSpec::laguerre(0.0).unwrap();
        let ns = build_nodes(&[Interval::new(0.0, f64::INFINITY)], &w, 1e-12).unwrap();
        assert!((ns.density_cutoff - (-(1e-12f64).ln())).abs() < 1e-8, "{}", ns.density_cutoff);
        assert!(ns.truncation_bound > ns.density_cutoff);
    }

    #[test]
    fn bounded_region_nodes_inside() {
        for w in [WeightSpec::gaussian(), WeightSpec::laguerre(0.5).unwrap()] {
            let ns = build_nodes(&[Interval::new(0.0, 1.0)], &w, 1e-12).unwrap();
            assert!(ns.nodes.iter().all(|&(x, _)| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn weights_reproduce_length() {
        let ns = build_nodes(&[Interval::new(-0.3, 2.2)], &WeightSpec::gaussian(), 1e-12).unwrap();
        let s: f64 = ns.nodes.iter().map(|p| p.1).sum();
        assert!((s - 2.5).abs() < 1e-13);
    }

    #[test]
    fn integrate_examples() {
        let g = WeightSpec::gaussian();
        let r = [Interval::real_line()];
        assert!((integrate(|_| 1.0, &r, &g, 1e-13).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert!(integrate(|x| x, &r, &g, 1e-13).unwrap().abs() < 1e-13);
        let l = WeightSpec::laguerre(0.0).unwrap();
        let half = [Interval::new(0.0, f64::INFINITY)];
        assert!((integrate(|_| 1.0, &half, &l, 1e-13).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_singular_laguerre() {
        // ∫ x^{-1/2} e^{-x} = Γ(1/2) = √π
        let l = WeightSpec::laguerre(-0.5).unwrap();
        let half = [Interval::new(0.0, f64::INFINITY)];
        let v = integrate(|_| 1.0, &half, &l, 1e-13).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-11, "{v}");
    }

    #[test]
    fn empty_region_is_error() {
        let l = WeightSpec::laguerre(0.0).unwrap();
        assert!(matches!(build_nodes(&[Interval::new(-3.0, -1.0)], &l, 1e-12), Err(Error::EmptyRegion)));
    }

    #[test]
    fn domain_complement_and_parity() {
        let line = Interval::real_line();
        let j = DomainJ::single(f64::NEG_INFINITY, 0.5).unwrap();
        assert_eq!(j.complement(&line), vec![Interval::new(0.5, f64::INFINITY)]);
        let e = j.endpoints(&line);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].parity, -1.0);

        let j = DomainJ::single(0.5, f64::INFINITY).unwrap();
        assert_eq!(j.endpoints(&line)[0].parity, 1.0);

        let j = DomainJ::single(-1.0, 2.0).unwrap();
        let e = j.endpoints(&line);
        assert_eq!((e[0].parity, e[1].parity), (1.0, -1.0));
        assert_eq!(j.complement(&line).len(), 2);

        // Support edges are not shared endpoints.
        let half = Interval::new(0.0, f64::INFINITY);
        let j = DomainJ::single(-1.0, 2.0).unwrap();
        let e = j.endpoints(&half);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].position, 2.0);
        assert!(DomainJ::single(-1.0, f64::INFINITY).unwrap().covers(&half));
    }

    #[test]
    fn domain_moves_endpoint() {
        let line = Interval::real_line();
        let j = DomainJ::single(-1.0, 2.0).unwrap();
        let moved = j.with_endpoint(&line, 1, 3.0).unwrap();
        assert_eq!(moved.intervals(), &[Interval::new(-1.0, 3.0)]);
        assert!(j.with_endpoint(&line, 0, 5.0).is_err());
        assert!(j.with_endpoint(&line, 2, 0.0).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(DomainJ::new(vec![]).is_err());
        assert!(DomainJ::new(vec![Interval::new(1.0, 0.0)]).is_err());
        assert!(DomainJ::new(vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)]).is_err());
        let j = DomainJ::new(vec![Interval::new(1.0, 2.0), Interval::new(0.0, 1.0)]).unwrap();
        assert_eq!(j.intervals(), &[Interval::new(0.0, 2.0)]);
    }

    #[test]
    fn json_config_round_trip() {
        let text = r#"{"weight": {"kind": "laguerre", "alpha": 1, "t1": 0.2},
                       "J": [["-inf", 0.5], [1, "inf"]], "tol": 1e-12}"#;
        let cfg = MeasureConfig::from_json(text).unwrap();
        let (w, j, tol) = cfg.resolve().unwrap();
        assert_eq!(w.alpha(), Some(1.0));
        assert_eq!(w.t1, 0.2);
        assert_eq!(tol, 1e-12);
        assert_eq!(j.intervals()[0].lo, f64::NEG_INFINITY);
        assert_eq!(j.intervals()[1].hi, f64::INFINITY);
        assert_eq!(j.to_json(), serde_json::json!([["-inf", 0.5], [1.0, "inf"]]));
        let bad = r#"{"weight": {"kind": "laguerre", "alpha": 0, "t1": 1.0}}"#;
        assert!(MeasureConfig::from_json(bad).unwrap().resolve().is_err());
    }
}
