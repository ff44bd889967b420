use frontspeed::oracle::{front_profile, minimal_speed, DecayBranch};
use frontspeed::reaction::ReactionTerm;
use frontspeed::verify::{check_phasespace_relation, full_report, CheckStatus, ReportOptions};

fn not_passed(r: &frontspeed::verify::Report) -> Vec<String> {
    r.checks.iter().filter(|c| c.status != CheckStatus::Pass).map(|c| format!("{} {:?}", c.id, c.status)).collect()
}

#[test]
fn hadeler_report_passes_everything() {
    let r = full_report(&ReactionTerm::hadeler_rothe(4.0).unwrap(), ReportOptions::default()).unwrap();
    assert!(r.pass);
    assert!(not_passed(&r).is_empty(), "{:?}", not_passed(&r));
    assert_eq!(r.oracle.branch, DecayBranch::Steep);
    assert!(r.check("identity_down").unwrap().passed());
}

#[test]
fn fisher_report_marks_optimizer_checks_not_applicable() {
    let r = full_report(&ReactionTerm::fisher(), ReportOptions::default()).unwrap();
    assert!(r.pass, "{:?}", not_passed(&r));
    assert_eq!(r.oracle.branch, DecayBranch::Shallow);
    for id in ["identity_down", "identity_up", "phasespace_x_at_c0"] {
        assert_eq!(r.check(id).unwrap().status, CheckStatus::NotApplicable, "{id}");
    }
}

#[test]
fn bistable_report_skips_monostable_chains() {
    let r = full_report(&ReactionTerm::bistable_cubic(0.3).unwrap(), ReportOptions::default()).unwrap();
    assert!(r.pass, "{:?}", not_passed(&r));
    assert!(r.checks.iter().all(|c| !c.id.starts_with("chain_vp2_implies") && !c.id.starts_with("chain_vp1_implies")));
    assert!(r.bounds.iter().all(|b| b.principle == frontspeed::bounds::Principle::VP4));
}

#[test]
fn reports_are_deterministic() {
    let f = ReactionTerm::bistable_cubic(0.3).unwrap();
    let a = serde_json::to_string(&full_report(&f, ReportOptions::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&full_report(&f, ReportOptions::default()).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in ["reaction", "oracle", "checks", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["oracle"].get("c0").is_some() && v["oracle"].get("branch").is_some());
}

#[test]
fn degenerate_term_ratio_below_minimal_speed() {
    let f = ReactionTerm::degenerate_power(2.0).unwrap();
    let sol = minimal_speed(&f, 1e-6).unwrap();
    let prof = front_profile(&sol, 1e-8).unwrap();
    let checks = check_phasespace_relation(&f, &sol, &prof, &[0.5 * sol.c, 0.9 * sol.c]);
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c.passed()), "{checks:?}");
}
