use gapcert::identities::{
    check_all, check_cd_resolvent, check_lemma1, check_restricted_toda, check_tau_relation_u, check_tau_relation_w,
    check_three_term, check_tw_endpoint, check_v_plus_minus, check_v_toda, run_matrix, CheckContext, IdentityConfig,
    IdentityOptions, ResidualReport,
};
use gapcert::measure::{DomainJ, WeightSpec};

const INF: f64 = f64::INFINITY;

fn ctx(w: WeightSpec, lo: f64, hi: f64, n: usize, t: f64) -> CheckContext {
    let j = DomainJ::single(lo, hi).unwrap();
    CheckContext::new(&IdentityConfig::new(w, j, n, t), IdentityOptions::default()).unwrap()
}

fn laguerre(alpha: f64) -> WeightSpec {
    WeightSpec::laguerre(alpha).unwrap()
}

fn assert_all_pass(reports: &[ResidualReport]) {
    for r in reports {
        assert!(r.pass, "{} failed: residual {:e} > {:e} ({:?})", r.identity_id, r.residual, r.tolerance, r.note);
    }
}

#[test]
fn tau_relations_on_sample_configurations() {
    let line = CheckContext::new(
        &IdentityConfig::new(WeightSpec::gaussian(), DomainJ::whole_line(), 4, 0.0),
        IdentityOptions::default(),
    )
    .unwrap();
    for r in [check_tau_relation_u(&line), check_tau_relation_w(&line)] {
        assert_eq!(r.residual, 0.0);
    }
    for c in [ctx(WeightSpec::gaussian(), -INF, 1.0, 4, 0.0), ctx(laguerre(1.0), 0.5, INF, 3, 0.0)] {
        for r in [check_tau_relation_u(&c), check_tau_relation_w(&c), check_restricted_toda(&c)] {
            assert!(r.residual < 1e-8, "{}: {:e}", r.identity_id, r.residual);
        }
    }
}

#[test]
fn v_is_minus_the_t_derivative() {
    let c = ctx(WeightSpec::gaussian(), -INF, 0.0, 3, 0.0);
    let reports = check_v_toda(&c, 1e-3);
    assert_all_pass(&reports);
    let order = reports.iter().find(|r| r.identity_id == "v_toda_order").unwrap();
    let ratio: f64 = order.note.as_deref().unwrap().trim_start_matches("ratio = ").parse().unwrap();
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");

    let c = ctx(laguerre(0.0), 1.0, INF, 2, 0.2);
    let main = &check_v_toda(&c, 1e-3)[0];
    assert!(main.residual < 1e-6, "{:e}", main.residual);

    let c = ctx(WeightSpec::gaussian(), -1.0, 1.5, 4, 0.0);
    let pm = check_v_plus_minus(&c);
    assert_eq!(pm.len(), 2);
    assert_all_pass(&pm);
    assert!(check_v_plus_minus(&ctx(WeightSpec::gaussian(), -1.0, 1.5, 4, 0.2)).is_empty());
}

#[test]
fn function_identities_at_sample_points() {
    let configs = [
        ctx(WeightSpec::gaussian(), -INF, 0.7, 4, 0.0),
        ctx(WeightSpec::gaussian(), -1.0, 2.0, 6, 0.2),
        ctx(laguerre(1.0), 0.5, INF, 3, 0.0),
        ctx(laguerre(0.0), 0.0, 5.0, 5, 0.2),
    ];
    for c in &configs {
        let mut all = check_lemma1(c);
        all.extend(check_three_term(c));
        all.extend(check_cd_resolvent(c));
        assert_all_pass(&all);
        for r in
            all.iter().filter(|r| r.identity_id != "resolvent_endpoint" && r.identity_id != "resolvent_telescoping")
        {
            assert!(r.residual < 1e-9, "{}: {:e}", r.identity_id, r.residual);
        }
    }
}

#[test]
fn endpoint_equations() {
    let line = CheckContext::new(
        &IdentityConfig::new(WeightSpec::gaussian(), DomainJ::whole_line(), 2, 0.0),
        IdentityOptions::default(),
    )
    .unwrap();
    let vacuous = check_tw_endpoint(&line, 1e-3);
    assert!(vacuous.iter().all(|r| r.pass && r.note.as_deref().unwrap().starts_with("vacuous")));

    let c = ctx(WeightSpec::gaussian(), -INF, 0.0, 2, 0.0);
    let reports = check_tw_endpoint(&c, 1e-3);
    assert_all_pass(&reports);
    assert!(reports.iter().all(|r| r.note.is_none()), "parity self-test flagged");
    let trace = reports.iter().find(|r| r.identity_id == "endpoint_trace").unwrap();
    assert_eq!(trace.residual, 0.0);

    // Two finite endpoints with opposite parities.
    assert_all_pass(&check_tw_endpoint(&ctx(laguerre(1.0), 1.0, 6.0, 3, 0.0), 1e-3));
}

#[test]
fn corrupted_coefficient_is_caught() {
    let cfg = IdentityConfig::new(WeightSpec::gaussian(), DomainJ::single(-INF, 1.0).unwrap(), 4, 0.0);
    let opts = IdentityOptions { b_perturbation: 1e-3, ..Default::default() };
    let reports = check_all(&cfg, opts);
    let failing: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.identity_id.as_str()).collect();
    assert_eq!(failing, ["tau_u", "tau_w"]);
}

#[test]
fn matrix_reports_are_grouped_and_serializable() {
    let configs = [
        IdentityConfig::new(WeightSpec::gaussian(), DomainJ::single(-INF, 1.0).unwrap(), 2, 0.0),
        IdentityConfig::new(laguerre(0.0), DomainJ::single(0.5, INF).unwrap(), 3, 0.2),
    ];
    let reports = run_matrix(&configs, IdentityOptions::default());
    assert_all_pass(&reports);
    let ids: Vec<&str> = reports.iter().map(|r| r.identity_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let line = reports[0].to_json_line();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["identity_id"], reports[0].identity_id.as_str());
    assert!(v["config"]["J"].is_array());
}
