use eqsys_core::piecewise::substitute_witness;
use eqsys_core::text::{parse_expr, parse_system};
use eqsys_core::{evaluate, rat, var, Ext, Polyhedron, PiecewisePoly, Rat, Witness, WitnessAssignment};

const WALK: &str = "pred X(x:int)\nX(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0\n";

fn poly(s: &str) -> eqsys_core::Polynomial {
    parse_expr(s).unwrap().to_poly().unwrap()
}

fn guard(s: &str) -> Polyhedron {
    let q = parse_system(&format!("pred X(x:int)\nX(x) =mu if {s} then 1 else 0\n")).unwrap();
    q.system.equations[0].branches[0].guard.clone()
}

fn linear_witness() -> Witness<Rat> {
    let mut w = Witness::new();
    w.insert("X", PiecewisePoly::new(vec![(guard("x > 0"), poly("3*x")), (guard("x <= 0"), poly("0"))]));
    w
}

#[test]
fn linear_witness_yields_three_x_away_from_the_boundary() {
    let q = parse_system(WALK).unwrap();
    let sys = &q.system;
    let pred = &sys.predicates[0];
    let branch = &sys.equations[0].branches[0];
    let w = linear_witness();
    let cells = substitute_witness(sys, &branch.guard, &branch.body, &w, &pred.domain).unwrap();
    let vars = [var("x")];
    let interior: Vec<_> = cells
        .iter()
        .filter(|c| c.guard.contains_point(&vars, &[rat(2, 1)]).unwrap())
        .collect();
    assert_eq!(interior.len(), 1);
    assert_eq!(interior[0].values, vec![poly("3*x")]);
    let a = WitnessAssignment { system: sys, witness: &w };
    for x in [2, 3] {
        let direct = evaluate(sys, &a, "X", &[rat(x, 1)]).unwrap();
        let from_cell = interior[0].values[0].eval_at(&vars, &[rat(x, 1)]).unwrap();
        assert_eq!(direct, Ext::Fin(from_cell));
    }
    for c in &cells {
        for x in -3..=6 {
            let pt = [rat(x, 1)];
            if c.guard.contains_point(&vars, &pt).unwrap() {
                let direct = evaluate(sys, &a, "X", &pt).unwrap();
                assert_eq!(direct, Ext::Fin(c.values[0].eval_at(&vars, &pt).unwrap()), "x = {x}");
            }
        }
    }
}

#[test]
fn zero_witness_leaves_the_constants() {
    let q = parse_system(WALK).unwrap();
    let sys = &q.system;
    let mut w = Witness::new();
    w.insert("X", PiecewisePoly::single(eqsys_core::Polynomial::zero()));
    for b in &sys.equations[0].branches {
        let cells = substitute_witness(sys, &b.guard, &b.body, &w, &sys.predicates[0].domain).unwrap();
        for c in cells {
            assert_eq!(c.values, vec![b.body.atoms[0].constant.clone()]);
        }
    }
}

#[test]
fn constant_witness_needs_no_refinement() {
    let q = parse_system("pred X(c:int)\nX(c) =mu if c > 0 then 1/2*X(0) + 1/2*X(c) + 1 else 0\n").unwrap();
    let sys = &q.system;
    let mut w = Witness::new();
    w.insert("X", PiecewisePoly::single(poly("2")));
    let mut total = 0;
    for b in &sys.equations[0].branches {
        total += substitute_witness(sys, &b.guard, &b.body, &w, &sys.predicates[0].domain).unwrap().len();
    }
    assert_eq!(total, sys.equations[0].branches.len());
}
