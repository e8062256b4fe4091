use std::collections::BTreeMap;

use eqsys_core::eval::evaluate;
use eqsys_core::text::{parse_cond, parse_expr};
use eqsys_core::{rat, EquationSystem, Expr, Ext, Rat, Result as CoreResult, Var};
use num_traits::{One, Zero};
use pgcl_frontend::*;

/// An arbitrary but fixed interpretation of the predicates.
fn probe(pred: &str, args: &[Rat]) -> CoreResult<Ext<Rat>> {
    let seed = pred.bytes().map(|b| b as i64).sum::<i64>() % 7 + 1;
    let mut v = Rat::from_integer(seed.into());
    for (i, a) in args.iter().enumerate() {
        v += a * a * Rat::from_integer((i as i64 + 2).into()) + a.clone();
    }
    Ok(Ext::Fin(v.clone() * v / Rat::from_integer(97.into()) + Rat::one()))
}

/// Evaluates a hand-written formula with the same interpretation, renaming predicates.
fn reference(src: &str, vars: &[&str], point: &[Rat], names: &BTreeMap<&str, String>) -> Ext<Rat> {
    let e = parse_expr(src).unwrap();
    let env = |v: &Var| -> CoreResult<Rat> {
        let i = vars.iter().position(|w| **w == **v).unwrap();
        Ok(point[i].clone())
    };
    let calls = |n: &str, args: &[Rat]| probe(&names[n], args);
    e.eval(&env, &calls).unwrap()
}

fn assert_equation(sys: &EquationSystem, pred: &str, src: &str, vars: &[&str], names: &BTreeMap<&str, String>, points: &[Vec<Rat>]) {
    let p = sys.predicate(pred).unwrap();
    let params: Vec<String> = p.params().iter().map(|v| v.to_string()).collect();
    assert_eq!(params, vars, "parameters of {pred}");
    for pt in points {
        let got = evaluate(sys, &probe, pred, pt).unwrap();
        let want = reference(src, vars, pt, names);
        assert_eq!(got, want, "{pred} at {pt:?}");
    }
}

fn ints(range: std::ops::RangeInclusive<i64>) -> Vec<Vec<Rat>> {
    range.map(|x| vec![Rat::from_integer(x.into())]).collect()
}

fn names(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
    pairs.iter().map(|(a, b)| (*a, b.to_string())).collect()
}

const C_RW: &str = "while(x>0){ {x:=x-1} [1/3] {x:=x+1} }";
const C_RW_TICK: &str = "while(x>0){ tick; {x:=x-1}[2/3]{x:=x+1} }";

#[test]
fn parses_the_random_walk() {
    let prog = parse_pgcl(C_RW).unwrap();
    let Cmd::While { guard, body, span } = &prog.body else {
        panic!("{:?}", prog.body)
    };
    assert_eq!(*span, Span { line: 1, col: 1 });
    assert_eq!(*guard, LoopGuard::Cond(parse_cond("x > 0").unwrap()));
    let Cmd::Prob { p, left, right, .. } = &**body else {
        panic!("{body:?}")
    };
    assert_eq!(*p, Expr::Const(rat(1, 3)));
    assert_eq!(**left, Cmd::Assign(vec![(eqsys_core::var("x"), parse_expr("x-1").unwrap())]));
    assert_eq!(**right, Cmd::Assign(vec![(eqsys_core::var("x"), parse_expr("x+1").unwrap())]));
    assert_eq!(prog.vars(), vec![eqsys_core::var("x")]);
}

#[test]
fn parses_skip_and_ticks() {
    assert_eq!(parse_pgcl("skip").unwrap().body, Cmd::Skip);
    let prog = parse_pgcl(C_RW_TICK).unwrap();
    let Cmd::While { body, .. } = &prog.body else { panic!() };
    let Cmd::Seq(cs) = &**body else { panic!("{body:?}") };
    assert_eq!(cs[0], Cmd::Tick(Rat::one()));
    assert!(matches!(&cs[1], Cmd::Prob { p, .. } if *p == Expr::Const(rat(2, 3))));
}

#[test]
fn syntax_errors_carry_positions() {
    match parse_pgcl("x := 1;\nwhile(x>0){ x := }") {
        Err(FrontendError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 18)),
        r => panic!("{r:?}"),
    }
    assert!(matches!(parse_pgcl("{skip} [1/2]"), Err(FrontendError::Syntax { .. })));
    assert!(matches!(parse_pgcl("x, x := 1, 2"), Err(FrontendError::Syntax { .. })));
}

#[test]
fn probability_literals_are_typed() {
    match parse_pgcl("{skip} [3/2] {skip}") {
        Err(FrontendError::Type { line, col, .. }) => assert_eq!((line, col), (1, 9)),
        r => panic!("{r:?}"),
    }
    assert!(matches!(parse_pgcl("score(2)"), Err(FrontendError::Type { .. })));
}

#[test]
fn state_dependent_probabilities_need_guards() {
    let ok = "int x; if (x >= 0 && x <= 4) { {x := 1} [x/4] {x := 2} }";
    assert!(parse_pgcl(ok).is_ok());
    let unguarded = "int x; {x := 1} [x/4] {x := 2}";
    assert!(matches!(parse_pgcl(unguarded), Err(FrontendError::Type { .. })));
    let invalidated = "int x; if (x >= 0 && x <= 4) { x := x + 1; {x := 1} [x/4] {x := 2} }";
    assert!(matches!(parse_pgcl(invalidated), Err(FrontendError::Type { .. })));
    let nonlinear = "int x; if (x >= 0 && x <= 1) { {skip} [x*x] {skip} }";
    assert!(matches!(parse_pgcl(nonlinear), Err(FrontendError::Type { .. })));
}

#[test]
fn wp_of_the_random_walk() {
    let prog = parse_pgcl(C_RW).unwrap();
    let t = translate_wp(&prog, &Expr::int(1)).unwrap();
    assert_eq!(t.system.len(), 1);
    let name = &t.system.predicates[0].name;
    assert_eq!(name, "while@1:1");
    assert_equation(
        &t.system,
        name,
        "if x > 0 then 1/3*X(x - 1) + 2/3*X(x + 1) else 1",
        &["x"],
        &names(&[("X", name)]),
        &ints(-3..=8),
    );
    assert_eq!(t.formula, Expr::call(name, vec![Expr::var("x")]));
}

#[test]
fn wp_of_skip_is_the_post() {
    let prog = parse_pgcl("int x; skip").unwrap();
    let f = parse_expr("x + 2").unwrap();
    let t = translate_wp(&prog, &f).unwrap();
    assert!(t.system.is_empty());
    assert_eq!(t.formula, f);
}

#[test]
fn wp_of_the_diverging_swap() {
    let src = "while (x != y) {\n  {x := y} [1/3] { {z := x; x := y; y := z} [1/2] {diverge} }\n}";
    let prog = parse_pgcl(src).unwrap();
    let t = translate_wp(&prog, &Expr::int(1)).unwrap();
    assert_eq!(t.system.len(), 2);
    let x = t.system.predicates[0].name.clone();
    let y = t.system.predicates[1].name.clone();
    assert_eq!((x.as_str(), y.as_str()), ("while@1:1", "while@2:52"));
    let n = names(&[("X", &x), ("Y", &y)]);
    let points: Vec<Vec<Rat>> = (-2..=2)
        .flat_map(|a| (-2..=2).map(move |b| vec![Rat::from_integer(a.into()), Rat::from_integer(b.into())]))
        .collect();
    assert_equation(&t.system, &x, "if x != y then 1/3*X(y, y) + 1/3*X(y, x) + 1/3*Y() else 1", &["x", "y"], &n, &points);
    assert_equation(&t.system, &y, "Y()", &[], &n, &[vec![]]);
}

#[test]
fn ert_of_the_biased_walk() {
    let prog = parse_pgcl(C_RW_TICK).unwrap();
    let t = translate_ert(&prog).unwrap();
    let name = t.system.predicates[0].name.clone();
    assert_equation(
        &t.system,
        &name,
        "if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0",
        &["x"],
        &names(&[("X", &name)]),
        &ints(-3..=8),
    );
}

fn constant_of(t: &Translation) -> Rat {
    let f = t.at(&vec![Rat::zero(); t.domain.vars.len()]).unwrap();
    let v = eqsys_core::eval::eval_formula(&f, &[], &[], &probe).unwrap();
    v.finite().unwrap().clone()
}

#[test]
fn straight_line_ticks_count() {
    for n in 0..=5 {
        let src = if n == 0 { "skip".to_string() } else { vec!["tick"; n].join("; ") };
        let t = translate_ert(&parse_pgcl(&src).unwrap()).unwrap();
        assert!(t.system.is_empty());
        assert_eq!(constant_of(&t), Rat::from_integer((n as i64).into()), "{src}");
    }
}

#[test]
fn second_moment_of_ticks() {
    let one = translate_rt2(&parse_pgcl("tick").unwrap()).unwrap();
    assert_eq!((constant_of(&one.first()), constant_of(&one.second())), (Rat::one(), Rat::one()));
    let two = translate_rt2(&parse_pgcl("tick; tick").unwrap()).unwrap();
    assert_eq!(
        (constant_of(&two.first()), constant_of(&two.second())),
        (Rat::from_integer(2.into()), Rat::from_integer(4.into()))
    );
    let weighted = translate_rt2(&parse_pgcl("tick(3); tick(1/2)").unwrap()).unwrap();
    assert_eq!(constant_of(&weighted.second()), rat(49, 4));
}

#[test]
fn second_moment_of_the_biased_walk() {
    let prog = parse_pgcl(C_RW_TICK).unwrap();
    let t = translate_rt2(&prog).unwrap();
    assert_eq!(t.system.len(), 2);
    let x1 = t.system.predicates[0].name.clone();
    let x2 = t.system.predicates[1].name.clone();
    assert_eq!((x1.as_str(), x2.as_str()), ("while@1:1", "while2@1:1"));
    let n = names(&[("X1", &x1), ("X2", &x2)]);
    assert_equation(&t.system, &x1, "if x > 0 then 2/3*X1(x - 1) + 1/3*X1(x + 1) + 1 else 0", &["x"], &n, &ints(-3..=8));
    assert_equation(
        &t.system,
        &x2,
        "if x > 0 then 2/3*X2(x - 1) + 1/3*X2(x + 1) + 2*(2/3*X1(x - 1) + 1/3*X1(x + 1)) + 1 else 0",
        &["x"],
        &n,
        &ints(-3..=8),
    );
}

#[test]
fn second_moment_first_component_is_ert() {
    for src in [C_RW_TICK, "while(x > 0 && y > 0){ tick(2); {x := x - 1}[1/2]{y := y - 1} }"] {
        let prog = parse_pgcl(src).unwrap();
        let ert = translate_ert(&prog).unwrap();
        let rt2 = translate_rt2(&prog).unwrap();
        for (p, f) in ert.system.predicates.iter().zip(&ert.system.equations) {
            assert_eq!(rt2.system.predicate(&p.name).unwrap(), p);
            assert_eq!(rt2.system.equation(&p.name).unwrap(), f);
        }
        assert_eq!(rt2.first().normal_formula().unwrap(), ert.normal_formula().unwrap());
    }
}

#[test]
fn score_and_observe() {
    let prog = parse_pgcl("int x; observe(x > 2)").unwrap();
    let (c1, c2) = translate_cwp(&prog, &Expr::var("x")).unwrap();
    for x in -2..=6 {
        let s = [Rat::from_integer(x.into())];
        let pass = if x > 2 { Rat::one() } else { Rat::zero() };
        let v1 = eqsys_core::eval::eval_formula(&c1.at(&s).unwrap(), &[], &[], &probe).unwrap();
        let v2 = eqsys_core::eval::eval_formula(&c2.at(&s).unwrap(), &[], &[], &probe).unwrap();
        assert_eq!(v1, Ext::Fin(pass.clone() * s[0].clone()));
        assert_eq!(v2, Ext::Fin(Rat::one() - pass));
    }
    let halves = parse_pgcl("int x; score(1/2); score(1/2)").unwrap();
    let (c1, _) = translate_cwp(&halves, &parse_expr("x + 1").unwrap()).unwrap();
    for x in 0..4 {
        let s = [Rat::from_integer(x.into())];
        let v = eqsys_core::eval::eval_formula(&c1.at(&s).unwrap(), &[], &[], &probe).unwrap();
        assert_eq!(v, Ext::Fin(rat(1, 4) * (s[0].clone() + Rat::one())));
    }
    assert_eq!(translate_wp(&halves, &Expr::int(1)), Err(FrontendError::ScoreNotAllowed));
}

const TAILS: &str = "
int m; bool b1, b2, b3;
m := 0; b1, b2, b3 := true;
while (b1 || b2 || b3) {
  {b1 := true} [1/2] {b1 := false};
  {b2 := true} [1/2] {b2 := false};
  {b3 := true} [1/2] {b3 := false};
  observe(!b1 || !b2 || !b3);
  m := m + 1
}";

fn bool_states() -> Vec<Vec<Rat>> {
    let mut out = Vec::new();
    for m in 0..=4 {
        for bits in 0..8 {
            let mut s = vec![Rat::from_integer(m.into())];
            s.extend((0..3).map(|i| Rat::from_integer(((bits >> i) & 1).into())));
            out.push(s);
        }
    }
    out
}

#[test]
fn tails_translates_to_both_systems() {
    let prog = parse_pgcl(TAILS).unwrap();
    let (c1, c2) = translate_cwp(&prog, &parse_expr("[m = 2]").unwrap()).unwrap();
    let sum = |x: &str, miss: &str, with_m: bool| {
        let mut terms = Vec::new();
        for a in ["1", "0"] {
            for b in ["1", "0"] {
                for c in ["1", "0"] {
                    terms.push(format!(
                        "1/8*(if !{a} || !{b} || !{c} then {x}({}{a}, {b}, {c}) else {miss})",
                        if with_m { "m + 1, " } else { "" }
                    ));
                }
            }
        }
        terms.join(" + ")
    };
    let vars = ["m", "b1", "b2", "b3"];
    let x1 = c1.system.predicates[0].name.clone();
    let f1 = format!("if b1 || b2 || b3 then {} else [m = 2]", sum("X1", "0", true));
    assert_equation(&c1.system, &x1, &f1, &vars, &names(&[("X1", &x1)]), &bool_states());
    let x2 = c2.system.predicates[0].name.clone();
    // The cwp2 system does not depend on the counter, so its predicate drops `m`.
    let f2 = format!("if b1 || b2 || b3 then {} else 0", sum("X2", "1", false));
    let flags: Vec<Vec<Rat>> = bool_states().into_iter().map(|s| s[1..].to_vec()).collect();
    assert_equation(&c2.system, &x2, &f2, &vars[1..], &names(&[("X2", &x2)]), &flags);
    let start = c1.at(&vec![Rat::one(); 4]).unwrap();
    assert_eq!(start.to_string(), format!("{x1}(0, 1, 1, 1)"));
}

#[test]
fn negative_costs_split() {
    let prog = parse_pgcl("while (random_bool(1/2)) { {tick(-1)} [1/3] {tick(1)} }").unwrap();
    assert!(matches!(translate_ert(&prog), Err(FrontendError::NegativeCost(_))));
    let (pos, neg) = split_negative_costs(&prog).unwrap();
    let xp = pos.system.predicates[0].name.clone();
    let xn = neg.system.predicates[0].name.clone();
    assert_equation(&pos.system, &xp, "1/2*(1/3*(0 + X()) + 2/3*(1 + X())) + 1/2*0", &[], &names(&[("X", &xp)]), &[vec![]]);
    assert_equation(&neg.system, &xn, "1/2*(1/3*(1 + X()) + 2/3*(0 + X())) + 1/2*0", &[], &names(&[("X", &xn)]), &[vec![]]);
    for (t, want) in [(&pos, rat(2, 3)), (&neg, rat(1, 3))] {
        let at = |v: Rat| move |_: &str, _: &[Rat]| -> CoreResult<Ext<Rat>> { Ok(Ext::Fin(v.clone())) };
        let name = &t.system.predicates[0].name;
        assert_eq!(evaluate(&t.system, &at(want.clone()), name, &[]).unwrap(), Ext::Fin(want.clone()));
        assert_eq!(evaluate(&t.system, &at(Rat::zero()), name, &[]).unwrap(), Ext::Fin(want / Rat::from_integer(2.into())));
    }
}

#[test]
fn nonnegative_costs_leave_the_negative_part_empty() {
    let prog = parse_pgcl(C_RW_TICK).unwrap();
    let (_, neg) = split_negative_costs(&prog).unwrap();
    for f in &neg.system.equations {
        for b in &f.branches {
            for a in &b.body.atoms {
                assert!(a.constant.is_zero(), "{f}");
            }
        }
    }
}

#[test]
fn nondeterminism_is_demonic_by_default() {
    let prog = parse_pgcl("int x; {x := 1} <> {x := 3}").unwrap();
    let post = Expr::var("x");
    let value = |t: &Translation| {
        let f = t.at(&[Rat::zero()]).unwrap();
        eqsys_core::eval::eval_formula(&f, &[], &[], &probe).unwrap()
    };
    assert_eq!(value(&translate_wp(&prog, &post).unwrap()), Ext::Fin(Rat::one()));
    assert_eq!(value(&translate_wp_with(&prog, &post, Nondet::Angelic).unwrap()), Ext::Fin(Rat::from_integer(3.into())));
    assert!(translate_rt2(&parse_pgcl("{tick} <> {skip}").unwrap()).is_err());
}

#[test]
fn wp_of_bounded_posts_is_one_bounded() {
    let programs = [
        C_RW,
        C_RW_TICK,
        "while (x != y) { {x := y} [1/3] { {z := x; x := y; y := z} [1/2] {diverge} } }",
        "while (x > 0) { if (y > 0) { {x := x - 1}[1/2]{y := y - 1} } else { x := x - 2 } }",
    ];
    for src in programs {
        let prog = parse_pgcl(src).unwrap();
        let t = translate_wp(&prog, &Expr::int(1)).unwrap();
        check_one_bounded(&t.system).unwrap_or_else(|e| panic!("{src}: {e}"));
    }
}

#[test]
fn printed_systems_reparse() {
    let prog = parse_pgcl(TAILS).unwrap();
    let (c1, _) = translate_cwp(&prog, &parse_expr("[m = 2]").unwrap()).unwrap();
    let q = c1.query(&[Rat::zero(), Rat::one(), Rat::one(), Rat::one()], eqsys_core::QueryRelation::Ge, rat(1, 8)).unwrap();
    let text = eqsys_core::text::print_system(&q);
    let again = eqsys_core::text::parse_system(&text).unwrap();
    assert_eq!(eqsys_core::text::print_system(&again), text);
}
