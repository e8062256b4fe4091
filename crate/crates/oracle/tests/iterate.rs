use eqsys_core::text::parse_system;
use eqsys_core::{rat, EquationSystem, Ext, Rat, Scalar};
use num_traits::{One, Zero};
use oracle::{
    kleene_iterate, write_trace_csv, Direction, IterOptions, OracleError, Policy, Start, TruncationSpec,
};
use pgcl_frontend::{gamma_scale, parse_pgcl, split_negative_costs};

const K1: &str = "
pred X(x:int)
X(x) =mu if x > 0 then 1/3*X(x - 1) + 2/3*X(x + 1) else 1
";

const ERT_WALK: &str = "
pred X(x:int)
X(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0
";

fn sys(src: &str) -> EquationSystem {
    parse_system(src).unwrap().system
}

fn fin(v: &Ext<f64>) -> f64 {
    v.finite().copied().expect("finite value")
}

fn absorb(s: &EquationSystem, lo: i64, hi: i64) -> TruncationSpec {
    TruncationSpec::uniform(s, lo, hi).with_default(Policy::AbsorbZero)
}

/// Exact solution of `v = A v + b` by Gauss–Jordan elimination.
fn solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Vec<Rat> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).expect("non-singular");
        a.swap(c, p);
        b.swap(c, p);
        let inv = Rat::one() / a[c][c].clone();
        for k in 0..n {
            a[c][k] = a[c][k].clone() * inv.clone();
        }
        b[c] = b[c].clone() * inv;
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in 0..n {
                    a[r][k] = a[r][k].clone() - f.clone() * a[c][k].clone();
                }
                b[r] = b[r].clone() - f * b[c].clone();
            }
        }
    }
    b
}

#[test]
fn biased_walk_termination_approaches_one_half_from_below() {
    let s = sys(K1);
    let r = kleene_iterate(&s, &absorb(&s, 0, 60), Start::Bottom, &IterOptions::new(5000, 0.0)).unwrap();
    let v = fin(r.value("X", &[1]).unwrap());
    assert!((0.49..=0.5).contains(&v), "{v}");
    assert_eq!(r.direction, Direction::FromBottom);
}

#[test]
fn truncated_walk_matches_a_direct_linear_solve() {
    // Absorbing chain on 0..=20: v(0) = 1, v(x) = 1/3 v(x-1) + 2/3 v(x+1), v(21) = 0.
    let n = 21;
    let mut a = vec![vec![Rat::zero(); n]; n];
    let mut b = vec![Rat::zero(); n];
    a[0][0] = Rat::one();
    b[0] = Rat::one();
    for x in 1..n {
        a[x][x] = Rat::one();
        a[x][x - 1] = -rat(1, 3);
        if x + 1 < n {
            a[x][x + 1] = -rat(2, 3);
        }
    }
    let exact = solve(a, b);
    let s = sys(K1);
    let r = kleene_iterate(&s, &absorb(&s, 0, 20), Start::Bottom, &IterOptions::new(100_000, 1e-14)).unwrap();
    for (x, want) in exact.iter().enumerate() {
        let got = fin(r.value("X", &[x as i64]).unwrap());
        assert!((got - want.to_f64()).abs() < 1e-9, "x={x}: {got} vs {want}");
    }
}

#[test]
fn constant_system_is_stable_after_one_step() {
    let s = sys("pred X(x:int)\nX(x) =mu 1\n");
    let spec = absorb(&s, -3, 3);
    let one = kleene_iterate::<Rat>(&s, &spec, Start::Bottom, &IterOptions::new(1, Rat::zero())).unwrap();
    assert_eq!(one.iterations, 1);
    assert!(one.values.values[0].iter().all(|v| *v == Ext::Fin(Rat::one())));
    let done = kleene_iterate::<Rat>(&s, &spec, Start::Bottom, &IterOptions::new(100, Rat::zero())).unwrap();
    assert_eq!(done.iterations, 2);
    assert_eq!(done.residual, Ext::Fin(Rat::zero()));
    assert_eq!(done.values, one.values);
}

#[test]
fn random_walk_runtime_approaches_three() {
    let s = sys(ERT_WALK);
    let r = kleene_iterate(&s, &absorb(&s, 0, 200), Start::Bottom, &IterOptions::new(200_000, 1e-3)).unwrap();
    let v = fin(r.value("X", &[1]).unwrap());
    assert!((2.99..=3.0).contains(&v), "{v} after {} iterations", r.iterations);
    for x in [2i64, 5, 10] {
        let v = fin(r.value("X", &[x]).unwrap());
        assert!(v <= 3.0 * x as f64 + 1e-9);
    }
}

#[test]
fn missing_policy_is_reported() {
    let s = sys(K1);
    let spec = TruncationSpec::uniform(&s, 0, 5);
    let err = kleene_iterate::<f64>(&s, &spec, Start::Bottom, &IterOptions::new(3, 0.0)).unwrap_err();
    assert!(matches!(err, OracleError::PolicyRequired(ref c) if c.starts_with("X(6")), "{err}");
    let err = kleene_iterate::<f64>(&s, &TruncationSpec::new(), Start::Bottom, &IterOptions::new(3, 0.0)).unwrap_err();
    assert!(matches!(err, OracleError::MissingBounds { .. }));
}

#[test]
fn non_integer_arguments_are_rejected() {
    let s = sys("pred X(x:real)\nX(x) =mu if x > 0 then 1/2*X(x - 1/2) else 1\n");
    let err = kleene_iterate::<Rat>(&s, &absorb(&s, 0, 3), Start::Bottom, &IterOptions::new(3, Rat::zero())).unwrap_err();
    assert!(matches!(err, OracleError::NonInteger(_)));
}

#[test]
fn iterates_are_monotone_in_exact_arithmetic() {
    let s = sys(K1);
    let mut opts = IterOptions::new(30, Rat::zero());
    opts.trace_every = Some(1);
    let up = kleene_iterate::<Rat>(&s, &absorb(&s, 0, 12), Start::Bottom, &opts).unwrap();
    let one = |_: &str, _: &[Rat]| -> eqsys_core::Result<Ext<Rat>> { Ok(Ext::Fin(Rat::one())) };
    let spec = TruncationSpec::uniform(&s, 0, 12).with_default(Policy::ClampToU);
    let down = kleene_iterate::<Rat>(&s, &spec, Start::From(&one), &opts).unwrap();
    assert_eq!(down.direction, Direction::FromU);
    let per_state = 13;
    for w in up.trace.chunks(per_state).collect::<Vec<_>>().windows(2) {
        for (a, b) in w[0].iter().zip(w[1]) {
            assert_eq!(a.state, b.state);
            assert!(a.value <= b.value, "{:?} {} -> {}", a.state, a.value, b.value);
        }
    }
    for w in down.trace.chunks(per_state).collect::<Vec<_>>().windows(2) {
        for (a, b) in w[0].iter().zip(w[1]) {
            assert!(a.value >= b.value);
        }
    }
    assert!(up.values.le(&down.values));
}

#[test]
fn scaled_system_stays_below_the_original() {
    let s = sys(K1);
    let spec = absorb(&s, 0, 30);
    let opts = IterOptions::new(500, 0.0);
    let full = kleene_iterate::<f64>(&s, &spec, Start::Bottom, &opts).unwrap();
    for g in [rat(1, 10), rat(1, 2), rat(99, 100)] {
        let scaled = gamma_scale(&s, &g).unwrap();
        let r = kleene_iterate::<f64>(&scaled, &spec, Start::Bottom, &opts).unwrap();
        assert!(r.values.le(&full.values), "gamma {g}");
    }
}

#[test]
fn pointwise_min_is_supported() {
    let s = sys("pred X(x:int)\nX(x) =mu if x > 0 then min(1/2*X(x - 1) + 1, X(x - 1)) else 4\n");
    let r = kleene_iterate::<Rat>(&s, &absorb(&s, 0, 4), Start::Bottom, &IterOptions::new(50, Rat::zero())).unwrap();
    // Iterating x ↦ min(x/2 + 1, x) from 4 gives 3, 5/2, 9/4, 17/8.
    let want = [rat(4, 1), rat(3, 1), rat(5, 2), rat(9, 4), rat(17, 8)];
    for (x, w) in want.iter().enumerate() {
        assert_eq!(r.value("X", &[x as i64]), Some(&Ext::Fin(w.clone())));
    }
}

#[test]
fn infinite_boundary_values_propagate() {
    let s = sys(ERT_WALK);
    let spec = TruncationSpec::uniform(&s, 0, 5).with_default(Policy::AbsorbInf);
    let r = kleene_iterate::<Rat>(&s, &spec, Start::Bottom, &IterOptions::new(20, Rat::zero())).unwrap();
    assert_eq!(r.value("X", &[0]), Some(&Ext::Fin(Rat::zero())));
    assert_eq!(r.value("X", &[5]), Some(&Ext::Inf));
    assert_eq!(r.value("X", &[1]), Some(&Ext::Inf));
}

#[test]
fn split_costs_recover_the_two_parts() {
    let prog = parse_pgcl("while (random_bool(1/2)) { {tick(-1)} [1/3] {tick(1)} }").unwrap();
    let (pos, neg) = split_negative_costs(&prog).unwrap();
    for (t, want) in [(&pos, 2.0 / 3.0), (&neg, 1.0 / 3.0)] {
        let spec = TruncationSpec::new().with_default(Policy::AbsorbZero);
        let r = kleene_iterate::<f64>(&t.system, &spec, Start::Bottom, &IterOptions::new(1000, 1e-15)).unwrap();
        let name = &t.system.predicates[0].name;
        let v = fin(r.value(name, &[]).unwrap());
        assert!((v - want).abs() < 1e-6, "{name}: {v}");
    }
}

#[test]
fn traces_export_as_csv() {
    let s = sys(K1);
    let mut opts = IterOptions::new(2, Rat::zero());
    opts.trace_every = Some(1);
    let r = kleene_iterate::<Rat>(&s, &absorb(&s, 0, 1), Start::Bottom, &opts).unwrap();
    let mut out = Vec::new();
    write_trace_csv(&r.trace, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text, "pred,state,n,value\nX,0,0,0\nX,1,0,0\nX,0,1,1\nX,1,1,0\nX,0,2,1\nX,1,2,1/3\n");
}

#[test]
fn parses_truncation_flags() {
    assert_eq!(TruncationSpec::parse_bound("x:-2..10").unwrap(), ("x".to_string(), -2, 10));
    assert!(TruncationSpec::parse_bound("x:3").is_err());
}
