use eqsys_core::text::parse_system;
use eqsys_core::{rat, Expr, Rat};
use num_traits::{One, Zero};
use oracle::{kleene_iterate, monte_carlo, IterOptions, Policy, Property, Start, TruncationSpec};
use pgcl_frontend::parse_pgcl;

#[test]
fn random_walk_terminates_half_the_time() {
    let prog = parse_pgcl("while(x>0){ {x:=x-1} [1/3] {x:=x+1} }").unwrap();
    let e = monte_carlo(&prog, &[Rat::one()], &Property::Wp(Expr::int(1)), 20_000, 400, 7).unwrap();
    assert!((e.mean - 0.5).abs() <= 0.01, "{e:?}");
    assert!(e.contains(0.5, 0.0), "{e:?}");
    assert!(e.truncated > 0);
}

#[test]
fn straight_line_ticks_are_exact() {
    let prog = parse_pgcl("tick; tick").unwrap();
    let e = monte_carlo(&prog, &[], &Property::Ert, 100, 10, 1).unwrap();
    assert_eq!(e.mean, 2.0);
    assert_eq!(e.std_err, 0.0);
    assert_eq!(e.truncated, 0);
}

#[test]
fn coin_flip_iterations_match_value_iteration() {
    let prog = parse_pgcl("bool b; while (b) { tick; {b := false} [1/2] {b := true} }").unwrap();
    let e = monte_carlo(&prog, &[Rat::one()], &Property::Ert, 20_000, 1_000, 11).unwrap();
    let s = parse_system("pred X(b:int)\nX(b) =mu if b = 1 then 1 + 1/2*X(0) + 1/2*X(1) else 0\n")
        .unwrap()
        .system;
    let spec = TruncationSpec::uniform(&s, 0, 1).with_default(Policy::AbsorbZero);
    let r = kleene_iterate::<f64>(&s, &spec, Start::Bottom, &IterOptions::new(10_000, 1e-12)).unwrap();
    let exact = r.value("X", &[1]).unwrap().to_f64();
    assert!((exact - 2.0).abs() < 1e-9);
    assert!(e.contains(exact, 0.0), "{e:?} vs {exact}");
}

#[test]
fn scores_weight_the_post_expectation() {
    let prog = parse_pgcl("score(1/2); {x := 4} [1/4] {x := 0}").unwrap();
    let e = monte_carlo(&prog, &[Rat::zero()], &Property::Wp(Expr::var("x")), 20_000, 10, 5).unwrap();
    assert!(e.contains(0.5, 0.0), "{e:?}");
    let obs = parse_pgcl("{x := 1} [1/2] {x := 0}; observe(x = 1)").unwrap();
    let e = monte_carlo(&obs, &[Rat::zero()], &Property::Wp(Expr::int(1)), 20_000, 10, 5).unwrap();
    assert!(e.contains(0.5, 0.0), "{e:?}");
}

#[test]
fn seeded_runs_are_reproducible() {
    let prog = parse_pgcl("while(x>0){ tick; {x:=x-1}[2/3]{x:=x+1} }").unwrap();
    let run = |seed| monte_carlo(&prog, &[rat(3, 1)], &Property::Ert, 2_000, 500, seed).unwrap();
    let a = run(42);
    let b = run(42);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
    assert_ne!(a.mean.to_bits(), run(43).mean.to_bits());
    assert!(a.contains(9.0, 0.05), "{a:?}");
}

#[test]
fn wrong_state_length_is_an_error() {
    let prog = parse_pgcl("x := 1").unwrap();
    assert!(monte_carlo(&prog, &[], &Property::Ert, 1, 1, 0).is_err());
}
