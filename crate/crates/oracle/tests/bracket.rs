use eqsys_core::text::parse_system;
use eqsys_core::{rat, EquationSystem, Ext, Rat, Witness, WitnessAssignment};
use num_traits::{One, Zero};
use oracle::{bracket, OracleError, Policy, TruncationSpec, IDENTITY_DEPTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ERT_WALK: &str = "
pred X(x:int)
X(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0
";

const K1: &str = "
pred X(x:int)
X(x) =mu if x > 0 then 1/3*X(x - 1) + 2/3*X(x + 1) else 1
";

fn sys(src: &str) -> EquationSystem {
    parse_system(src).unwrap().system
}

fn linear(c: i64) -> impl Fn(&str, &[Rat]) -> eqsys_core::Result<Ext<Rat>> {
    move |_, a| Ok(Ext::Fin(if a[0] > Rat::zero() { a[0].clone() * rat(c, 1) } else { Rat::zero() }))
}

#[test]
fn runtime_gap_shrinks_monotonically() {
    let s = sys(ERT_WALK);
    let spec = TruncationSpec::uniform(&s, 0, 40).with_default(Policy::ClampToU);
    let u = linear(6);
    let b = bracket(&s, &spec, &u, 60).unwrap();
    assert!(b.identity_holds(), "{:?}", b.mismatches);
    assert_eq!(b.checked_up_to, IDENTITY_DEPTH);
    let widths: Vec<Rat> = (0..=60).map(|n| b.width(n, "X", &[1]).unwrap()).collect();
    assert_eq!(widths[0], rat(6, 1));
    for w in widths.windows(2) {
        assert!(w[1] < w[0], "{} then {}", w[0], w[1]);
    }
    for n in 0..=60 {
        let lo = b.lower[n].get("X", &[1]).unwrap();
        let hi = b.upper[n].get("X", &[1]).unwrap();
        assert!(*lo <= Ext::Fin(rat(3, 1)) && Ext::Fin(rat(3, 1)) <= *hi);
    }
}

#[test]
fn witness_polynomials_can_serve_as_u() {
    let q = parse_system(ERT_WALK).unwrap();
    let cert = "
pred X(x:int)
X(x) =mu cases { x >= 1 => 3*x; x <= 0 => 0 }
";
    let w = parse_system(cert).unwrap();
    let mut u = Witness::new();
    let f = &w.system.equations[0];
    u.insert(
        "X",
        eqsys_core::PiecewisePoly::new(
            f.branches
                .iter()
                .map(|b| (b.guard.clone(), b.body.atoms[0].constant.clone()))
                .collect(),
        ),
    );
    let a = WitnessAssignment {
        system: &q.system,
        witness: &u,
    };
    let spec = TruncationSpec::uniform(&q.system, 0, 20).with_default(Policy::ClampToU);
    let b = bracket(&q.system, &spec, &a, 5).unwrap();
    assert!(b.identity_holds());
    // A fixed point clamped to itself is never left.
    for n in 0..=5 {
        assert_eq!(b.upper[n], b.upper[0]);
    }
    assert_eq!(b.gap[0], b.upper[0]);
}

#[test]
fn exponential_fixed_point_gap_vanishes() {
    let s = sys(K1);
    let u = |_: &str, a: &[Rat]| -> eqsys_core::Result<Ext<Rat>> {
        let x: i64 = num_traits::ToPrimitive::to_i64(&a[0].to_integer()).unwrap();
        Ok(Ext::Fin(if x > 0 { rat(1, 1 << x) } else { Rat::one() }))
    };
    let spec = TruncationSpec::uniform(&s, 0, 30).with_default(Policy::ClampToU);
    let b = bracket(&s, &spec, &u, 200).unwrap();
    assert!(b.identity_holds());
    let gaps: Vec<Rat> = (0..=200).map(|n| b.gap[n].get("X", &[1]).unwrap().finite().unwrap().clone()).collect();
    for w in gaps.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(gaps[200] < rat(1, 1000), "{}", gaps[200]);
    // u is a fixed point, so Kⁿ(u) = u on the grid.
    assert_eq!(b.upper[200].get("X", &[1]), Some(&Ext::Fin(rat(1, 2))));
}

#[test]
fn non_prefixed_u_is_rejected() {
    let s = sys(ERT_WALK);
    let spec = TruncationSpec::uniform(&s, 0, 10).with_default(Policy::ClampToU);
    let one = |_: &str, _: &[Rat]| -> eqsys_core::Result<Ext<Rat>> { Ok(Ext::Fin(Rat::one())) };
    assert!(matches!(bracket(&s, &spec, &one, 3), Err(OracleError::NotPrefixed(_))));
    assert!(matches!(bracket(&s, &spec, &linear(2), 3), Err(OracleError::NotPrefixed(_))));
}

#[test]
fn min_systems_are_not_bracketed() {
    let s = sys("pred X(x:int)\nX(x) =mu if x > 0 then min(X(x - 1), 1) else 0\n");
    let spec = TruncationSpec::uniform(&s, 0, 3).with_default(Policy::AbsorbZero);
    assert!(matches!(bracket(&s, &spec, &linear(1), 3), Err(OracleError::Unsupported(_))));
}

fn random_term(rng: &mut ChaCha8Rng, budget: i64) -> String {
    let mut parts = Vec::new();
    let mut left = budget;
    for _ in 0..rng.gen_range(1..=3) {
        if left == 0 {
            break;
        }
        let w = rng.gen_range(0..=left);
        left -= w;
        let pred = if rng.gen_bool(0.5) { "X" } else { "Y" };
        let k: i64 = rng.gen_range(-2..=2);
        parts.push(format!("{w}/{}*{pred}(x + {k})", budget * 2));
    }
    parts.push(format!("{}/7", rng.gen_range(0..=7)));
    parts.join(" + ")
}

fn random_system(rng: &mut ChaCha8Rng) -> EquationSystem {
    let mut src = String::from("pred X(x:int)\npred Y(x:int)\n");
    for p in ["X", "Y"] {
        let c = rng.gen_range(-1..=3);
        let then = random_term(rng, 12);
        let els = format!("{}/5", rng.gen_range(0..=5));
        src.push_str(&format!("{p}(x) =mu if x > {c} then {then} else {els}\n"));
    }
    sys(&src)
}

#[test]
fn gap_identity_holds_exactly_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3_5);
    let two = |_: &str, _: &[Rat]| -> eqsys_core::Result<Ext<Rat>> { Ok(Ext::Fin(rat(2, 1))) };
    for i in 0..10 {
        let s = random_system(&mut rng);
        let policy = if i % 2 == 0 { Policy::ClampToU } else { Policy::AbsorbZero };
        let spec = TruncationSpec::uniform(&s, -3, 8).with_default(policy);
        let b = bracket(&s, &spec, &two, IDENTITY_DEPTH).unwrap();
        assert!(b.identity_holds(), "system {i}: {:?}", b.mismatches);
        assert_eq!(b.checked_up_to, IDENTITY_DEPTH);
        for n in 0..IDENTITY_DEPTH {
            assert!(b.lower[n].le(&b.lower[n + 1]));
            assert!(b.upper[n + 1].le(&b.upper[n]));
        }
    }
}
