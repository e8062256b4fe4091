use certificate_engine::{check_certificate, parse_certificate, CheckOptions, Status, Verdict};
use certificate_engine::pqe::{build_lower, lift_witness, Factors, Roles};
use eqsys_core::text::parse_system;
use eqsys_core::QueriedEquationSystem;

const ERT_WALK: &str = "
pred X(x:int)
X(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0
query X(1) >= 3
";

const ERT_WALK_CERT: &str = "
direction lower
u X = cases { x >= 1 => 6*x; x <= 0 => 0 }
r X = cases { x >= 1 => 9*x*(x + 3); x <= 0 => 0 }
eta X = cases { x >= 1 => 3*x; x <= 0 => 0 }
";

const RT2_WALK: &str = "
pred X1(x:int)
pred X2(x:int)
X1(x) =mu if x > 0 then 2/3*X1(x - 1) + 1/3*X1(x + 1) + 1 else 0
X2(x) =mu if x > 0 then 2/3*X2(x - 1) + 1/3*X2(x + 1) + 2*(2/3*X1(x - 1) + 1/3*X1(x + 1)) + 1 else 0
query X2(1) >= 33
";

const RT2_WALK_CERT: &str = "
direction lower
u X1 = cases { x >= 1 => 6*x; x <= 0 => 0 }
r X1 = cases { x >= 1 => 9*x*(x + 3); x <= 0 => 0 }
eta X1 = cases { x >= 1 => 3*x; x <= 0 => 0 }
u X2 = cases { x >= 1 => 18*x^2 + 45*x; x <= 0 => 0 }
r X2 = cases { x >= 1 => 36*x^3 + 585/2*x^2 + 1683/2*x; x <= 0 => 0 }
eta X2 = cases { x >= 1 => 9*x^2 + 24*x; x <= 0 => 0 }
";

fn check(sys: &str, cert: &str) -> (QueriedEquationSystem, certificate_engine::CheckReport) {
    let q = parse_system(sys).unwrap();
    let c = parse_certificate(cert, &q.system).unwrap();
    let report = check_certificate(&q, &c, &CheckOptions::default()).unwrap();
    (q, report)
}

#[test]
fn random_walk_runtime_bundle_is_valid() {
    let (_, report) = check(ERT_WALK, ERT_WALK_CERT);
    assert_eq!(report.verdict, Verdict::Valid, "{}", report.table());
    for r in &report.results {
        match &r.status {
            Status::Discharged(w) => {
                let c = certificate_engine::pqe::concrete(&r.pqe.conclusion).unwrap();
                assert!(w.residual(&c).is_zero());
            }
            Status::Failed => panic!("{}", r.pqe),
        }
    }
}

#[test]
fn second_moment_bundle_is_valid() {
    let (_, report) = check(RT2_WALK, RT2_WALK_CERT);
    assert_eq!(report.verdict, Verdict::Valid, "{}", report.table());
}

#[test]
fn tampered_ranking_function_is_rejected() {
    let tampered = ERT_WALK_CERT.replace("9*x*(x + 3)", "9*x*(x + 3) - x");
    let (_, report) = check(ERT_WALK, &tampered);
    match report.verdict {
        Verdict::Unknown(reason) => assert!(reason.contains("ranking") || reason.contains("r"), "{reason}"),
        v => panic!("{v}"),
    }
}

#[test]
fn query_above_the_invariant_is_rejected() {
    let (_, report) = check(&ERT_WALK.replace(">= 3", ">= 301/100"), ERT_WALK_CERT);
    assert!(!report.verdict.is_valid());
}

#[test]
fn missing_prefixed_point_is_reported() {
    let cert = "direction lower\neta X = cases { x >= 1 => 3*x; x <= 0 => 0 }\n";
    let (_, report) = check(ERT_WALK, cert);
    assert_eq!(report.verdict, Verdict::Unknown("missing u for X".into()));
}

#[test]
fn empty_certificate_is_a_schema_error() {
    let q = parse_system(ERT_WALK).unwrap();
    assert!(matches!(
        parse_certificate("", &q.system),
        Err(certificate_engine::EngineError::Schema(_))
    ));
}

#[test]
fn ranking_entailment_for_the_walk_is_emitted() {
    let q = parse_system(ERT_WALK).unwrap();
    let c = parse_certificate(ERT_WALK_CERT, &q.system).unwrap();
    let (u, r, eta) = (lift_witness(&c.u), lift_witness(&c.r), lift_witness(&c.eta));
    let pqes = build_lower(
        &q.system,
        &Factors::new(),
        Roles { u: &u, r: Some(&r), eta: Some(&eta) },
        &q.queries,
    )
    .unwrap();
    // 9x(x+3) - 6x - 2/3*9(x-1)(x+2) - 1/3*9(x+1)(x+4) on x >= 2
    let expected = eqsys_core::text::parse_expr("9*x*(x+3) - 6*x - 6*(x-1)*(x+2) - 3*(x+1)*(x+4)")
        .unwrap()
        .to_poly()
        .unwrap();
    assert!(pqes.iter().any(|p| certificate_engine::pqe::concrete(&p.conclusion) == Some(expected.clone())));
}

#[test]
fn coin_flip_constraint_count() {
    let sys = "
pred X(c:int)
X(c) =mu if c > 0 then 1/2*X(0) + 1/2*X(c) + 1 else 0
query X(1) >= 2
";
    let q = parse_system(sys).unwrap();
    let cert = "direction lower\nu X = 2\nr X = 4\neta X = 2\n";
    let c = parse_certificate(cert, &q.system).unwrap();
    let (u, r, eta) = (lift_witness(&c.u), lift_witness(&c.r), lift_witness(&c.eta));
    let pqes = build_lower(
        &q.system,
        &Factors::new(),
        Roles { u: &u, r: Some(&r), eta: Some(&eta) },
        &q.queries,
    )
    .unwrap();
    assert_eq!(pqes.len(), 2 * 4 + 2 * 3 + 1);
}

#[test]
fn coin_flip_bundle_is_valid() {
    let sys = "
pred X(c:int)
X(c) =mu if c > 0 then 1/2*X(0) + 1/2*X(c) + 1 else 0
query X(1) >= 2
";
    let cert = "
direction lower
u X = cases { c >= 1 => 2; c <= 0 => 0 }
r X = cases { c >= 1 => 4; c <= 0 => 0 }
eta X = cases { c >= 1 => 2; c <= 0 => 0 }
";
    let (_, report) = check(sys, cert);
    assert_eq!(report.verdict, Verdict::Valid, "{}", report.table());
}

#[test]
fn degree_override_too_low_fails() {
    let q = parse_system(ERT_WALK).unwrap();
    let c = parse_certificate(ERT_WALK_CERT, &q.system).unwrap();
    let opts = CheckOptions { degree: Some(1), ..Default::default() };
    let low = check_certificate(&q, &c, &opts).unwrap();
    let opts = CheckOptions { degree: Some(3), ..Default::default() };
    let high = check_certificate(&q, &c, &opts).unwrap();
    assert!(high.verdict.is_valid());
    // the quadratic ranking residual has only a linear premise, so degree 1 cannot discharge it
    assert!(!low.verdict.is_valid());
}
