use gapcert::identities::{check_all, IdentityConfig, IdentityOptions};
use gapcert::measure::{DomainJ, WeightKind, WeightSpec};
use gapcert::oracle::{gap_bruteforce, mc_gap};
use gapcert::orthopoly::{cd_kernel, OrthoSystem};
use gapcert::resolvent::{gap_probability, gram, log_gap_probability, RestrictedFamily};
use proptest::prelude::*;

fn weight(kind: u8) -> WeightSpec {
    match kind {
        0 => WeightSpec::gaussian(),
        1 => WeightSpec::laguerre(0.0).unwrap(),
        _ => WeightSpec::laguerre(1.0).unwrap(),
    }
}

/// An interval inside the bulk of the weight's support.
fn interval(kind: u8, a: f64, b: f64) -> DomainJ {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let (lo, hi) = if kind == 0 { (lo, hi + 0.05) } else { (lo.abs(), hi.abs().max(lo.abs()) + 0.05) };
    DomainJ::single(lo, hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gap_lies_in_unit_interval(kind in 0u8..3, a in -3.0..3.0f64, b in -3.0..3.0f64, n in 1usize..7) {
        let w = weight(kind);
        let j = interval(kind, a, b);
        let lg = log_gap_probability(&w, &j, n).unwrap();
        prop_assert!(lg.is_finite() && lg <= 1e-13, "{lg}");
        let p = gap_probability(&w, &j, n).unwrap();
        prop_assert!((0.0..=1.0 + 1e-13).contains(&p), "{p}");
    }

    #[test]
    fn gap_grows_with_j(kind in 0u8..3, a in -2.0..2.0f64, b in -2.0..2.0f64, d in 0.01..1.0f64, n in 1usize..6) {
        let w = weight(kind);
        let inner = interval(kind, a, b);
        let iv = inner.intervals()[0];
        let outer = DomainJ::single(if kind == 0 { iv.lo - d } else { (iv.lo - d).max(0.0) }, iv.hi + d).unwrap();
        let p_in = gap_probability(&w, &inner, n).unwrap();
        let p_out = gap_probability(&w, &outer, n).unwrap();
        prop_assert!(p_in <= p_out * (1.0 + 1e-12), "{p_in} > {p_out}");
    }

    #[test]
    fn gram_blocks_sum_to_identity(kind in 0u8..3, a in -3.0..3.0f64, b in -3.0..3.0f64, n in 1usize..8) {
        let (gj, gjc) = gram(&weight(kind), &interval(kind, a, b), n).unwrap();
        for i in 0..n {
            for k in 0..n {
                let e = if i == k { 1.0 } else { 0.0 };
                prop_assert!((gj[(i, k)] + gjc[(i, k)] - e).abs() < 1e-12);
                prop_assert!((gj[(i, k)] - gj[(k, i)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_is_symmetric(kind in 0u8..3, x in 0.05..6.0f64, y in 0.05..6.0f64, n in 1usize..10) {
        let w = weight(kind);
        let sys = OrthoSystem::new(&w, 10, 1e-14).unwrap();
        let (x, y) = if kind == 0 { (x - 3.0, y - 3.0) } else { (x, y) };
        let kxy = cd_kernel(&sys.table, &w, x, y, n).unwrap();
        let kyx = cd_kernel(&sys.table, &w, y, x, n).unwrap();
        prop_assert!((kxy - kyx).abs() <= 1e-13 * (1.0 + kxy.abs()));
    }

    #[test]
    fn restricted_norms_stay_positive(kind in 0u8..3, scale in 0.6..1.5f64) {
        // J must hold a fair share of the n = 10 spectrum; otherwise G_J is
        // singular to working precision, which is an error by contract.
        let j = if kind == 0 {
            DomainJ::single(f64::NEG_INFINITY, scale * 20f64.sqrt()).unwrap()
        } else {
            DomainJ::single(0.0, scale * 40.0).unwrap()
        };
        let fam = RestrictedFamily::build(&weight(kind), &j, 10).unwrap();
        for n in 1..=10 {
            let st = fam.state(n).unwrap();
            prop_assert!(st.ubar > 0.0 && st.ubar < 1.0, "ubar_{n} = {}", st.ubar);
            prop_assert!(1.0 + st.wbar > 0.0);
        }
    }

    #[test]
    fn reports_are_consistent(kind in 0u8..3, a in -2.0..2.0f64, b in -2.0..2.0f64, n in 2usize..5) {
        let cfg = IdentityConfig::new(weight(kind), interval(kind, a, b), n, 0.0);
        for r in check_all(&cfg, IdentityOptions::default()) {
            prop_assert!(r.residual >= 0.0);
            prop_assert_eq!(r.pass, r.is_skipped() || r.residual <= r.tolerance, "{}", r.identity_id);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_matches_determinant(kind in 0u8..3, a in -2.0..2.0f64, b in -2.0..2.0f64, n in 1usize..4) {
        let w = weight(kind);
        let j = interval(kind, a, b);
        let det = gap_probability(&w, &j, n).unwrap();
        let brute = gap_bruteforce(&w, &j, n, 1e-12).unwrap();
        prop_assert!((det - brute.value).abs() < 1e-9, "{det} vs {}", brute.value);
    }

    #[test]
    fn monte_carlo_within_binomial_error(seed in any::<u64>(), hi in -1.0..2.5f64, n in 2usize..6) {
        let j = DomainJ::single(f64::NEG_INFINITY, hi).unwrap();
        let samples = 20_000;
        let det = gap_probability(&WeightSpec::gaussian(), &j, n).unwrap();
        let mc = mc_gap(WeightKind::Gaussian, n, &j, samples, seed).unwrap();
        let sigma = (det * (1.0 - det) / samples as f64).sqrt().max(1.0 / samples as f64);
        // Wide band: a property test must not fail on ordinary fluctuations.
        prop_assert!((mc.value - det).abs() < 5.0 * sigma, "det {det}, MC {}", mc.value);
    }
}
