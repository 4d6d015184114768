use gapcert::error::Error;
use gapcert::measure::{DomainJ, WeightKind, WeightSpec};
use gapcert::pde::{
    centered_grid, extract_jet, gap_profile, gh_eval, gh_h_flipped_sign_residual, mixed_partial_routes,
    painleve4_residual, painleve5_residual, painleve5_unshifted_residual, phi_representation, recursion_ladder,
    residual_equivalent_forms, residual_system, residual_universal_t, residual_universal_tplus, resolvent_diagonal,
    virasoro_reduce, GapProfile, JetOptions, PainleveOptions, PdeJet, PdeResidual, SECONDARY_TOL,
};
use gapcert::tau::{uniform_axis, TauGrid};

const INF: f64 = f64::INFINITY;
const H: f64 = 1e-2;

fn single(lo: f64, hi: f64) -> DomainJ {
    DomainJ::single(lo, hi).unwrap()
}

/// Grid around `(xi, t)` and the index of its centre.
fn grid_at(w: &WeightSpec, j: &DomainJ, n: usize, xi: f64, t: f64) -> (TauGrid, usize, usize) {
    let opts = JetOptions::default();
    let g = centered_grid(w, j, 0, n, xi, t, H, opts, 0).unwrap();
    let (nx, nt) = g.shape();
    (g, nx / 2, nt / 2)
}

fn jet_at(w: &WeightSpec, j: &DomainJ, n: usize, xi: f64, t: f64) -> PdeJet {
    let (g, i, k) = grid_at(w, j, n, xi, t);
    extract_jet(&g, i, k, JetOptions::default()).unwrap()
}

fn below(rows: &[PdeResidual], tol: f64) {
    for r in rows {
        assert!(!r.is_skipped(), "{} skipped", r.id);
        assert!(r.residual < tol, "{}: {:e} at ({}, {})", r.id, r.residual, r.xi, r.t);
    }
}

#[test]
fn stencils_on_polynomial_grid() {
    let xi = uniform_axis(-0.2, 0.05, 9);
    let t = uniform_axis(-0.4, 0.05, 17);
    let g = TauGrid::synthetic(2, xi, t, |x, s| (x * s, 0.0, 0.0)).unwrap();
    let jet = extract_jet(&g, 4, 8, JetOptions::default()).unwrap();
    let p = jet.tj;
    assert!((p.xt - 1.0).abs() < 1e-12);
    for v in [p.xx, p.tt, p.ttt, p.xxt, p.xtt, p.xxtt, p.xttt] {
        assert!(v.abs() < 1e-12, "{v}");
    }
    assert!(extract_jet(&g, 1, 8, JetOptions::default()).is_err());
}

#[test]
fn mixed_partial_two_routes_agree() {
    let (g, i, k) = grid_at(&WeightSpec::gaussian(), &single(-INF, 0.5), 3, 0.5, 0.0);
    let (a, b) = mixed_partial_routes(&g, i, k, JetOptions::default()).unwrap();
    assert!((a - b).abs() < 1e-7, "{a} vs {b}");
}

#[test]
fn universal_system_and_forms() {
    let cases = [
        (WeightSpec::gaussian(), single(-INF, 0.5), 3, 0.5, 0.0),
        (WeightSpec::laguerre(1.0).unwrap(), single(1.0, INF), 2, 1.0, 0.1),
    ];
    for (w, j, n, xi, t) in cases {
        let jet = jet_at(&w, &j, n, xi, t);
        let r = resolvent_diagonal(&w, &j, 0, n, xi, t).unwrap();
        let mut rows = residual_system(&jet, Some(r));
        assert_eq!(rows.len(), 4);
        rows.extend(residual_equivalent_forms(&jet));
        below(&rows, 1e-5);
    }
}

#[test]
fn whole_line_has_no_moving_endpoint() {
    let opts = JetOptions::default();
    let err = centered_grid(&WeightSpec::gaussian(), &DomainJ::whole_line(), 0, 3, 0.0, 0.0, H, opts, 0);
    assert!(err.is_err());
}

#[test]
fn g_and_h_structure() {
    let cases = [
        (WeightSpec::gaussian(), single(-INF, 0.5), 3, 0.5, 0.0),
        (WeightSpec::laguerre(1.0).unwrap(), single(1.0, INF), 2, 1.0, 0.1),
    ];
    for (w, j, n, xi, t) in cases {
        let jet = jet_at(&w, &j, n, xi, t);
        let (_, rows) = gh_eval(&jet);
        below(&rows, 1e-4);
        // The other sign of the T_tt^2 T_ξt term is far off.
        assert!(gh_h_flipped_sign_residual(&jet) > 1e-2);
    }
}

#[test]
fn g_and_h_flip_sign_under_mirroring() {
    // x -> -x, t -> -t maps the Gaussian family to itself and J = (-inf, ξ)
    // to (-ξ, inf); U and W keep their values while ξ- and t-derivatives flip.
    let g = WeightSpec::gaussian();
    let (xi, t) = (0.4, 0.1);
    let a = gh_eval(&jet_at(&g, &single(-INF, xi), 3, xi, t)).0;
    let b = gh_eval(&jet_at(&g, &single(-xi, INF), 3, -xi, -t)).0;
    assert!((a.g + b.g).abs() < 1e-7 * a.g.abs(), "{} vs {}", a.g, b.g);
    assert!((a.h + b.h).abs() < 1e-6 * a.h.abs(), "{} vs {}", a.h, b.h);
}

#[test]
fn universal_pde_for_t() {
    for n in 2..=4 {
        let jet = jet_at(&WeightSpec::gaussian(), &single(-INF, 0.5), n, 0.5, 0.0);
        below(&[residual_universal_t(&jet), residual_universal_tplus(&jet)], 1e-4);
    }
    let jet = jet_at(&WeightSpec::laguerre(0.0).unwrap(), &single(0.0, 1.5), 2, 1.5, 0.0);
    below(&[residual_universal_t(&jet), residual_universal_tplus(&jet)], 1e-4);

    // T = ξ² t² / 2 is not a solution.
    let xi = uniform_axis(0.8, H, 41);
    let t = uniform_axis(0.8, H, 41);
    let fake = TauGrid::synthetic(3, xi, t, |x, s| {
        let v = 0.5 * x * x * s * s;
        (v, v + x, v - x)
    })
    .unwrap();
    let jet = extract_jet(&fake, 20, 20, JetOptions::default()).unwrap();
    let r = residual_universal_t(&jet);
    assert!(!r.pass && r.residual > 0.1, "{:e}", r.residual);
    let r = residual_universal_tplus(&jet);
    assert!(!r.pass && r.residual > 0.1, "{:e}", r.residual);
}

#[test]
fn recursion_ladder_across_levels() {
    let opts = JetOptions::default();
    let cases = [
        (WeightSpec::gaussian(), single(-INF, 0.5), 3, 0.5, 0.0),
        (WeightSpec::laguerre(1.0).unwrap(), single(1.0, INF), 2, 1.0, 0.1),
    ];
    for (w, j, n, xi, t) in cases {
        let (g0, i, k) = grid_at(&w, &j, n, xi, t);
        let g1 = centered_grid(&w, &j, 0, n + 1, xi, t, H, opts, 0).unwrap();
        let rows = recursion_ladder(&g0, &g1, i, k, opts).unwrap();
        assert_eq!(rows.len(), 4);
        below(&rows, 1e-4);
    }
}

#[test]
fn virasoro_constraints() {
    let g = WeightSpec::gaussian();
    let jet = jet_at(&g, &single(-INF, 0.5), 3, 0.5, 0.0);
    below(&virasoro_reduce(g.kind, &jet).unwrap(), 1e-5);
    let l = WeightSpec::laguerre(1.0).unwrap();
    let jet = jet_at(&l, &single(1.0, INF), 2, 1.0, 0.0);
    below(&virasoro_reduce(l.kind, &jet).unwrap(), 1e-5);

    let quartic = WeightSpec::polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    match virasoro_reduce(quartic.kind, &jet) {
        Err(e @ Error::Unsupported(_)) => assert!(e.to_string().contains("no Virasoro reduction implemented")),
        other => panic!("expected an unsupported error, got {other:?}"),
    }
}

#[test]
fn painleve_four_along_the_edge() {
    let g = WeightSpec::gaussian();
    let j = single(-INF, 3.0);
    let opts = PainleveOptions::default();
    for (n, tol) in [(2, 1e-6), (8, 1e-5)] {
        let p = gap_profile(&g, &j, 0, n, -1.0, 3.0, 5e-3, opts.margin()).unwrap();
        let reports = painleve4_residual(&p, opts, tol).unwrap();
        let main = &reports[0];
        assert_eq!(main.id, "painleve4");
        assert!(main.pass, "n = {n}: {:e} at {}", main.residual, main.at_xi);
        assert_eq!(main.pointwise.len(), 801);
        for r in &reports[1..] {
            assert!(r.residual < SECONDARY_TOL, "{}: {:e}", r.id, r.residual);
        }
    }
    let l = gap_profile(&WeightSpec::laguerre(0.0).unwrap(), &single(0.0, 1.0), 0, 2, 0.5, 1.0, 1e-2, 8).unwrap();
    assert!(painleve4_residual(&l, opts, 1e-6).is_err());
}

#[test]
fn painleve_five_sigma_form() {
    let opts = PainleveOptions { richardson: 2, ..Default::default() };
    for (alpha, n) in [(0.0, 2), (1.0, 3)] {
        let w = WeightSpec::laguerre(alpha).unwrap();
        let p = gap_profile(&w, &single(0.0, 0.5), 0, n, 0.5, 8.0, 5e-3, opts.margin()).unwrap();
        let reports = painleve5_residual(&p, opts, 1e-6).unwrap();
        assert_eq!(reports[0].id, "painleve5_sigma");
        assert!(reports[0].pass, "α = {alpha}, n = {n}: {:e}", reports[0].residual);
        assert!(reports[1].residual < SECONDARY_TOL, "{:e}", reports[1].residual);
        // Without the (2n+α)σ' shift the equation does not hold.
        assert!(painleve5_unshifted_residual(&p, opts).unwrap() > 1e-2);
    }
}

#[test]
fn painleve_five_trivial_profile() {
    let xi = uniform_axis(0.0, 0.1, 81);
    let p = GapProfile {
        n: 2,
        kind: WeightKind::Laguerre { alpha: 0.0 },
        log_gap: vec![0.0; xi.len()],
        xi,
        h: 0.1,
        lo: 2.0,
        hi: 6.0,
    };
    let reports = painleve5_residual(&p, PainleveOptions::default(), 1e-6).unwrap();
    assert!(reports.iter().all(|r| r.pass && r.residual == 0.0));
}

#[test]
fn phi_representation_and_guard() {
    let opts = JetOptions::default();
    let (g, i, k) = grid_at(&WeightSpec::gaussian(), &single(-INF, 0.5), 3, 0.5, 0.0);
    below(&phi_representation(&g, i, k, opts).unwrap(), 1e-4);

    // T = ξ has r_t = 0 everywhere.
    let xi = uniform_axis(0.0, H, 21);
    let t = uniform_axis(0.0, H, 21);
    let flat = TauGrid::synthetic(3, xi, t, |x, _| (x, 0.0, 0.0)).unwrap();
    let rows = phi_representation(&flat, 10, 10, opts).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.is_skipped() && r.pass));
}
