//! Reference computations for the integration tests. They use composite
//! Simpson rules and monomial Gram–Schmidt, nothing from the library's
//! quadrature or recurrence code.
#![allow(dead_code)]

/// Composite Simpson rule with `m` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Simpson nodes on `[a, b]` with weights already multiplied by `density`.
pub fn weighted_nodes<D: Fn(f64) -> f64>(density: D, a: f64, b: f64, m: usize) -> Vec<(f64, f64)> {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    (0..=m)
        .map(|k| {
            let x = a + k as f64 * h;
            let c = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (x, c * h / 3.0 * density(x))
        })
        .collect()
}

/// Recurrence coefficients `(a_k, b_k)`, `k < count`, from modified
/// Gram–Schmidt (two passes) on the monomials `(x / scale)^j`.
pub fn gram_schmidt(nodes: &[(f64, f64)], count: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let dot =
        |p: &[f64], q: &[f64]| -> f64 { nodes.iter().zip(p.iter().zip(q)).map(|((_, w), (a, b))| w * a * b).sum() };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..=count {
        let mut v: Vec<f64> = nodes.iter().map(|(x, _)| (x / scale).powi(j as i32)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nrm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    let xs: Vec<f64> = nodes.iter().map(|(x, _)| *x).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..count {
        let xp: Vec<f64> = basis[k].iter().zip(&xs).map(|(p, x)| p * x).collect();
        a.push(dot(&xp, &basis[k]));
        b.push(dot(&xp, &basis[k + 1]).abs());
    }
    (a, b)
}

/// `(1/2) ∬_{[a,b]^2} (x - y)^2 ρ(x) ρ(y)` by a tensor Simpson rule.
pub fn two_fold<D: Fn(f64) -> f64>(density: D, a: f64, b: f64, m: usize) -> f64 {
    let nodes = weighted_nodes(density, a, b, m);
    // Expand (x - y)^2 to reduce the double sum to moments.
    let (m0, m1, m2) = nodes.iter().fold((0.0, 0.0, 0.0), |(s0, s1, s2), &(x, w)| (s0 + w, s1 + w * x, s2 + w * x * x));
    0.5 * (2.0 * m0 * m2 - 2.0 * m1 * m1)
}

pub fn gaussian_density(x: f64) -> f64 {
    (-x * x).exp()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-300)
}
