use certificate_engine::check::{discharge, Status};
use certificate_engine::pqe::{lift, ConstraintKind, Pqe};
use eqsys_core::text::parse_cond;
use eqsys_core::{rat, Domain, Poly, Polyhedron, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn premise(s: &str) -> Polyhedron {
    parse_cond(s).unwrap().to_bool_expr().unwrap().dnf(&Domain::empty())[0].clone()
}

fn pqe(premise: Polyhedron, conclusion: Poly<Rat>) -> Pqe {
    Pqe {
        kind: ConstraintKind::Prefixed,
        pred: "X".into(),
        branch: 0,
        atom: 0,
        premise,
        conclusion: lift(&conclusion),
    }
}

/// A random non-negative combination of products of the box rows, perturbed by
/// a random polynomial that may break positivity.
fn random_pqe(rng: &mut ChaCha8Rng) -> Pqe {
    let rows: Vec<Poly<Rat>> = ["x", "3 - x", "y", "2 - y"]
        .iter()
        .map(|s| eqsys_core::text::parse_expr(s).unwrap().to_poly().unwrap())
        .collect();
    let mut c = Poly::from_rat(&rat(rng.gen_range(0..3), 1));
    for _ in 0..rng.gen_range(1..5) {
        let k = rng.gen_range(1..4);
        let mut t = Poly::from_rat(&rat(rng.gen_range(1..5), rng.gen_range(1..4)));
        for _ in 0..k {
            t = &t * &rows[rng.gen_range(0..rows.len())];
        }
        c = c + t;
    }
    if rng.gen_bool(0.3) {
        c = c - Poly::from_rat(&rat(rng.gen_range(1..4), 1));
    }
    pqe(premise("x >= 0 && x <= 3 && y >= 0 && y <= 2"), c)
}

#[test]
fn verdicts_are_monotone_in_degree_and_residuals_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut discharged = 0;
    for _ in 0..5 {
        let p = random_pqe(&mut rng);
        let conclusion = certificate_engine::pqe::concrete(&p.conclusion).unwrap();
        let mut seen_valid = false;
        for d in 1..=4 {
            match discharge(&p, d, None).unwrap() {
                Status::Discharged(w) => {
                    assert!(w.residual(&conclusion).is_zero());
                    assert!(w.multipliers.iter().all(|l| *l >= Rat::from_integer(0.into())));
                    seen_valid = true;
                    discharged += 1;
                }
                Status::Failed => assert!(!seen_valid, "valid below degree {d} but not at {d}: {p}"),
            }
        }
    }
    assert!(discharged > 0);
}

#[test]
fn unprovable_entailments_fail_at_every_degree() {
    // x*(1 - x) is negative at x = 2
    let p = pqe(premise("x >= 0 && x <= 2"), eqsys_core::text::parse_expr("x - x^2").unwrap().to_poly().unwrap());
    for d in 1..=5 {
        assert_eq!(discharge(&p, d, None).unwrap(), Status::Failed);
    }
}

#[test]
fn ranking_residual_of_the_walk_is_tight_away_from_the_boundary() {
    // expand by hand: 9x^2+27x - 6x - (6x^2+6x-12) - (3x^2+15x+12) = 0
    let r = eqsys_core::text::parse_expr("9*x*(x+3) - 6*x - 6*(x-1)*(x+2) - 3*(x+1)*(x+4)")
        .unwrap()
        .to_poly()
        .unwrap();
    assert!(r.is_zero());
    // at x = 1 the call X(0) hits the zero piece: 36 - 6 - 0 - 3*2*5 = 0
    let at_one = eqsys_core::text::parse_expr("9*x*(x+3) - 6*x - 3*(x+1)*(x+4)").unwrap().to_poly().unwrap();
    match discharge(&pqe(premise("x >= 1 && x <= 1"), at_one.clone()), 2, None).unwrap() {
        Status::Discharged(w) => assert!(w.residual(&at_one).is_zero()),
        Status::Failed => panic!("not discharged"),
    }
}
