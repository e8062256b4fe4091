use std::collections::BTreeMap;

use eqsys_core::text::{parse_expr, parse_system};
use eqsys_core::{
    evaluate, normalize, rat, Domain, EquationSystem, Ext, NormalFormula, Polyhedron, Rat, Sort, Var,
};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Val = eqsys_core::Result<Ext<Rat>>;

/// Random source text for a two-predicate system; `min` bodies only when asked.
struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    with_min: bool,
}

impl Gen<'_> {
    fn weight(&mut self) -> String {
        format!("{}/{}", self.rng.gen_range(0..5), self.rng.gen_range(1..7))
    }

    fn arg(&mut self, scope: &[&str]) -> String {
        let v = scope[self.rng.gen_range(0..scope.len())];
        match self.rng.gen_range(-2..=2) {
            0 => v.to_string(),
            k if k > 0 => format!("{v} + {k}"),
            k => format!("{v} - {}", -k),
        }
    }

    fn call(&mut self, scope: &[&str]) -> String {
        if self.rng.gen_bool(0.5) {
            format!("X({})", self.arg(scope))
        } else {
            format!("Y({}, {})", self.arg(scope), self.arg(scope))
        }
    }

    fn cond(&mut self, scope: &[&str]) -> String {
        let v = scope[self.rng.gen_range(0..scope.len())];
        let k = self.rng.gen_range(-2..=3);
        match self.rng.gen_range(0..5) {
            0 => format!("{v} > {k}"),
            1 => format!("{v} <= {k}"),
            2 => format!("{v} != {k}"),
            3 => format!("{v} > {k} && {} < {}", scope[scope.len() - 1], k + 2),
            _ => format!("{v} < {k} || {v} > {}", k + 2),
        }
    }

    fn sum(&mut self, scope: &[&str]) -> String {
        let n = self.rng.gen_range(1..=3);
        let mut terms = Vec::new();
        for _ in 0..n {
            if self.rng.gen_bool(0.25) {
                terms.push(self.weight());
            } else {
                let w = self.weight();
                terms.push(format!("{w}*{}", self.call(scope)));
            }
        }
        if self.with_min && self.rng.gen_bool(0.3) {
            let other = self.call(scope);
            terms.push(format!("1/2*min({}, {other})", self.call(scope)));
        }
        terms.join(" + ")
    }

    fn body(&mut self, scope: &[&str], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            self.sum(scope)
        } else {
            let c = self.cond(scope);
            let a = self.body(scope, depth - 1);
            let b = self.body(scope, depth - 1);
            format!("if {c} then {a} else {b}")
        }
    }
}

struct Sample {
    sys: EquationSystem,
    bodies: BTreeMap<String, String>,
}

fn random_system(seed: u64, with_min: bool) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Gen { rng: &mut rng, with_min };
    let x = g.body(&["x"], 3);
    let y = g.body(&["x", "y"], 3);
    let src = format!("pred X(x:int)\npred Y(x:int, y:int)\nX(x) =mu {x}\nY(x, y) =mu {y}\n");
    let q = parse_system(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    Sample {
        sys: q.system,
        bodies: BTreeMap::from([("X".into(), x), ("Y".into(), y)]),
    }
}

/// A non-negative quadratic interpretation with random coefficients.
fn quadratic(rng: &mut ChaCha8Rng) -> impl Fn(&str, &[Rat]) -> Val {
    let mut coeffs: BTreeMap<String, Vec<Rat>> = BTreeMap::new();
    for p in ["X", "Y"] {
        coeffs.insert(p.into(), (0..3).map(|_| rat(rng.gen_range(0..7), rng.gen_range(1..5))).collect());
    }
    move |p, args| {
        let c = &coeffs[p];
        let mut v = c[0].clone();
        for (i, a) in args.iter().enumerate() {
            v += &c[1 + i % 2] * a * a;
        }
        Ok(Ext::Fin(v))
    }
}

fn states(sys: &EquationSystem, rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, Vec<Rat>)> {
    (0..n)
        .map(|i| {
            let p = &sys.predicates[i % sys.len()];
            (p.name.clone(), (0..p.arity()).map(|_| rat(rng.gen_range(-6..=6), 1)).collect())
        })
        .collect()
}

fn fin(v: Ext<Rat>) -> Rat {
    v.finite().cloned().expect("finite value")
}

#[test]
fn operator_is_affine_in_the_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..50 {
        let s = random_system(seed, false);
        let e1 = quadratic(&mut rng);
        let e2 = quadratic(&mut rng);
        let alpha = rat(rng.gen_range(0..=8), 8);
        let mix = |p: &str, a: &[Rat]| -> Val {
            let (v1, v2) = (fin(e1(p, a)?), fin(e2(p, a)?));
            Ok(Ext::Fin(&alpha * v1 + (Rat::one() - &alpha) * v2))
        };
        for (p, x) in states(&s.sys, &mut rng, 6) {
            let lhs = fin(evaluate(&s.sys, &mix, &p, &x).unwrap());
            let a = fin(evaluate(&s.sys, &e1, &p, &x).unwrap());
            let b = fin(evaluate(&s.sys, &e2, &p, &x).unwrap());
            assert_eq!(lhs, &alpha * a + (Rat::one() - &alpha) * b, "seed {seed} at {p}{x:?}");
        }
    }
}

#[test]
fn d_transform_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 100..130 {
        let d = random_system(seed, false).sys.d_transform();
        let e1 = quadratic(&mut rng);
        let e2 = quadratic(&mut rng);
        let a = rat(rng.gen_range(0..20), rng.gen_range(1..7));
        let scaled = |p: &str, x: &[Rat]| -> Val { Ok(Ext::Fin(&a * fin(e1(p, x)?))) };
        let sum = |p: &str, x: &[Rat]| -> Val { Ok(Ext::Fin(fin(e1(p, x)?) + fin(e2(p, x)?))) };
        for (p, x) in states(&d, &mut rng, 6) {
            let v1 = fin(evaluate(&d, &e1, &p, &x).unwrap());
            let v2 = fin(evaluate(&d, &e2, &p, &x).unwrap());
            assert_eq!(fin(evaluate(&d, &scaled, &p, &x).unwrap()), &a * &v1);
            assert_eq!(fin(evaluate(&d, &sum, &p, &x).unwrap()), v1 + v2);
        }
    }
}

#[test]
fn normal_form_agrees_with_direct_interpretation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 200..230 {
        let s = random_system(seed, true);
        let eta = quadratic(&mut rng);
        for (p, x) in states(&s.sys, &mut rng, 100) {
            let expr = parse_expr(&s.bodies[&p]).unwrap();
            let params = s.sys.predicate(&p).unwrap().params();
            let env = |v: &Var| -> eqsys_core::Result<Rat> {
                let i = params.iter().position(|w| w == v).expect("bound variable");
                Ok(x[i].clone())
            };
            let direct = expr.eval(&env, &eta).unwrap();
            let normal = evaluate(&s.sys, &eta, &p, &x).unwrap();
            assert_eq!(direct, normal, "seed {seed}: {} at {x:?}", s.bodies[&p]);
        }
    }
}

#[test]
fn nested_conditional_splits_into_three_branches() {
    let e = parse_expr("if x > 0 then (if x < 5 then X(x) else 0) else 1").unwrap();
    let dom = Domain::new(vec![(eqsys_core::var("x"), Sort::Int)]);
    let f = normalize(&e, &dom).unwrap();
    assert_eq!(f.branches.len(), 3);
    let vars = [eqsys_core::var("x")];
    let eta = |_: &str, a: &[Rat]| -> Val { Ok(Ext::Fin(&a[0] * rat(10, 1))) };
    for (x, want) in [(-1, 1), (1, 10), (7, 0)] {
        let v = eqsys_core::eval::eval_formula(&f, &vars, &[rat(x, 1)], &eta).unwrap();
        assert_eq!(v, Ext::Fin(rat(want, 1)), "x = {x}");
    }
    let zero = normalize(&parse_expr("0").unwrap(), &dom).unwrap();
    assert_eq!(zero.branches.len(), 1);
    assert!(zero.branches[0].guard.is_top());
}

/// Whether some point of `acc` lies outside every polyhedron of `pieces`, by DFS over negated atoms.
fn uncovered(pieces: &[Polyhedron], acc: Polyhedron, dom: &Domain) -> bool {
    if !acc.is_satisfiable() {
        return false;
    }
    let Some((first, rest)) = pieces.split_first() else {
        return true;
    };
    if first.is_top() {
        return false;
    }
    first
        .inequalities
        .iter()
        .any(|a| uncovered(rest, acc.with(a.negate().integerize(dom)), dom))
}

fn assert_disjoint_cover(f: &NormalFormula, dom: &Domain, what: &str) {
    for (i, a) in f.branches.iter().enumerate() {
        for b in &f.branches[i + 1..] {
            assert!(!a.guard.and(&b.guard).is_satisfiable(), "{what}: {} overlaps {}", a.guard, b.guard);
        }
    }
    let guards: Vec<Polyhedron> = f.branches.iter().map(|b| b.guard.clone()).collect();
    assert!(!uncovered(&guards, Polyhedron::top(), dom), "{what}: guards leave a gap");
}

#[test]
fn guards_are_disjoint_and_cover_the_domain() {
    for seed in 300..340 {
        let s = random_system(seed, true);
        for (p, f) in s.sys.predicates.iter().zip(&s.sys.equations) {
            assert_disjoint_cover(f, &p.domain, &format!("seed {seed} {}", p.name));
        }
    }
}

#[test]
fn operator_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for seed in 400..440 {
        let s = random_system(seed, true);
        let lo = quadratic(&mut rng);
        let extra = quadratic(&mut rng);
        let hi = |p: &str, a: &[Rat]| -> Val { Ok(lo(p, a)?.add(&extra(p, a)?)) };
        for (p, x) in states(&s.sys, &mut rng, 10) {
            let a = evaluate(&s.sys, &lo, &p, &x).unwrap();
            let b = evaluate(&s.sys, &hi, &p, &x).unwrap();
            assert!(a <= b, "seed {seed} at {p}{x:?}: {a} > {b}");
        }
    }
}

#[test]
fn infinity_follows_the_zero_times_infinity_convention() {
    let sys = parse_system("pred X(x:int)\npred Z(x:int)\nZ(x) =mu 0*X(x) + 2\nX(x) =mu 1/2*X(x)\n")
        .unwrap()
        .system;
    let inf = |_: &str, _: &[Rat]| -> Val { Ok(Ext::Inf) };
    assert_eq!(evaluate(&sys, &inf, "Z", &[rat(1, 1)]).unwrap(), Ext::Fin(rat(2, 1)));
    assert_eq!(evaluate(&sys, &inf, "X", &[rat(1, 1)]).unwrap(), Ext::Inf);
}

#[test]
fn point_evaluations() {
    let k1 = parse_system("pred X(x:int)\nX(x) =mu if x > 0 then 1/3*X(x - 1) + 2/3*X(x + 1) else 1\n").unwrap();
    let one = |_: &str, _: &[Rat]| -> Val { Ok(Ext::Fin(Rat::one())) };
    assert_eq!(evaluate(&k1.system, &one, "X", &[rat(5, 1)]).unwrap(), Ext::Fin(Rat::one()));
    let walk = parse_system("pred X(x:int)\nX(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0\n").unwrap();
    let eta = |_: &str, a: &[Rat]| -> Val { Ok(Ext::Fin(if a[0] > Rat::zero() { &a[0] * rat(3, 1) } else { Rat::zero() })) };
    assert_eq!(evaluate(&walk.system, &eta, "X", &[rat(1, 1)]).unwrap(), Ext::Fin(rat(3, 1)));
}

#[test]
fn d_transform_drops_constants() {
    let walk = parse_system("pred X(x:int)\nX(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0\n").unwrap();
    let want = parse_system("pred X(x:int)\nX(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) else 0\n").unwrap();
    assert_eq!(walk.system.d_transform().equations, want.system.equations);
    assert_eq!(want.system.d_transform().equations, want.system.equations);
}

#[test]
fn d_transform_subtracts_the_value_at_zero() {
    let coin = parse_system("pred X(c:real)\nX(c) =mu if c > 0 then 1/2*X(0) + 1/2*X(c) + 1 else 0\n").unwrap().system;
    let d = coin.d_transform();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let eta = quadratic(&mut rng);
    let zero = |_: &str, _: &[Rat]| -> Val { Ok(Ext::Fin(Rat::zero())) };
    for _ in 0..10 {
        let c = vec![rat(rng.gen_range(-40..40), rng.gen_range(1..9))];
        let lhs = fin(evaluate(&d, &eta, "X", &c).unwrap());
        let full = fin(evaluate(&coin, &eta, "X", &c).unwrap());
        let base = fin(evaluate(&coin, &zero, "X", &c).unwrap());
        assert_eq!(lhs, full - base, "c = {}", c[0]);
    }
}

#[test]
fn max_transform_dominates() {
    let fair = parse_system("pred X(x:int)\nX(x) =mu if x > 0 then 1/2*X(x - 1) + 1/2*min(X(x + 1), X(x)) else 1\n")
        .unwrap()
        .system;
    let up = fair.max_transform();
    assert!(up.has_max() && !up.has_min());
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let eta = quadratic(&mut rng);
        let x = vec![rat(rng.gen_range(-5..10), 1)];
        assert!(evaluate(&up, &eta, "X", &x).unwrap() >= evaluate(&fair, &eta, "X", &x).unwrap());
    }
    let plain = random_system(7, false).sys;
    assert_eq!(plain.max_transform(), plain);
}
