//! Piecewise polynomials and the cell decomposition induced by substituting them.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{CoreError, Result};
use crate::formula::{AffineAtom, Body};
use crate::linear::{Domain, Polyhedron};
use crate::poly::{Poly, Var};
use crate::scalar::{Coeff, Ext, Rat, Scalar};
use crate::system::EquationSystem;
use crate::eval::Assignment;

/// Polynomials on disjoint polyhedral pieces; undefined outside their union.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly<C> {
    pub branches: Vec<(Polyhedron, Poly<C>)>,
}

impl<C: Coeff> PiecewisePoly<C> {
    pub fn single(p: Poly<C>) -> Self {
        PiecewisePoly {
            branches: vec![(Polyhedron::top(), p)],
        }
    }

    pub fn new(branches: Vec<(Polyhedron, Poly<C>)>) -> Self {
        PiecewisePoly { branches }
    }

    pub fn guards(&self) -> Vec<Polyhedron> {
        self.branches.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn degree(&self) -> u32 {
        self.branches.iter().map(|(_, p)| p.degree()).max().unwrap_or(0)
    }

    pub fn piece_at<S: Scalar>(&self, vars: &[Var], point: &[S]) -> Result<Option<usize>> {
        for (i, (g, _)) in self.branches.iter().enumerate() {
            if g.contains_point(vars, point)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

impl PiecewisePoly<Rat> {
    pub fn eval<S: Scalar>(&self, vars: &[Var], point: &[S]) -> Result<S> {
        match self.piece_at(vars, point)? {
            Some(i) => self.branches[i].1.eval_at(vars, point),
            None => Err(CoreError::Uncovered(format_point(vars, point))),
        }
    }
}

impl fmt::Display for PiecewisePoly<Rat> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [(g, p)] = self.branches.as_slice() {
            if g.is_top() {
                return write!(f, "{p}");
            }
        }
        write!(f, "cases {{ ")?;
        for (i, (g, p)) in self.branches.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{g} => {p}")?;
        }
        write!(f, " }}")
    }
}

pub fn format_point<S: Scalar>(vars: &[Var], point: &[S]) -> String {
    let parts: Vec<String> = vars
        .iter()
        .zip(point)
        .map(|(v, x)| format!("{v}={x}"))
        .collect();
    format!("({})", parts.join(", "))
}

/// A finite-valued assignment given by piecewise polynomials, keyed by predicate name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Witness<C> {
    pub pieces: BTreeMap<String, PiecewisePoly<C>>,
}

impl<C: Coeff> Witness<C> {
    pub fn new() -> Self {
        Witness {
            pieces: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, pred: &str, p: PiecewisePoly<C>) {
        self.pieces.insert(pred.to_string(), p);
    }

    pub fn get(&self, pred: &str) -> Result<&PiecewisePoly<C>> {
        self.pieces
            .get(pred)
            .ok_or_else(|| CoreError::MissingAssignment(pred.to_string()))
    }
}

/// A rational witness viewed as an assignment for a given system.
pub struct WitnessAssignment<'a> {
    pub system: &'a EquationSystem,
    pub witness: &'a Witness<Rat>,
}

impl<S: Scalar> Assignment<S> for WitnessAssignment<'_> {
    fn value(&self, pred: &str, args: &[S]) -> Result<Ext<S>> {
        let params = self.system.predicate(pred)?.params();
        self.witness
            .get(pred)?
            .eval(&params, args)
            .map_err(|e| match e {
                CoreError::Uncovered(p) => CoreError::Uncovered(format!("{pred}{p}")),
                e => e,
            })
            .map(Ext::Fin)
    }
}

/// A cell of a refinement, recording which piece was chosen for each reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub guard: Polyhedron,
    pub choice: Vec<usize>,
}

/// Pulls back a piece guard along `params ↦ args`.
pub fn pullback(guard: &Polyhedron, params: &[Var], args: &[Poly<Rat>]) -> Result<Polyhedron> {
    let map: BTreeMap<Var, Poly<Rat>> = params.iter().cloned().zip(args.iter().cloned()).collect();
    guard.substitute(&map).map_err(|e| match e {
        CoreError::NonLinearPullback(m) => CoreError::NonLinearPullback(format!("{guard} along {m}")),
        e => e,
    })
}

/// Splits `base` into the satisfiable cells on which every reference selects a single piece.
pub fn refine_cells(
    base: &Polyhedron,
    refs: &[(Vec<Polyhedron>, Vec<Var>, Vec<Poly<Rat>>)],
    domain: &Domain,
) -> Result<Vec<Cell>> {
    let mut cells = vec![Cell {
        guard: base.integerize(domain),
        choice: Vec::new(),
    }];
    for (guards, params, args) in refs {
        let pulled = guards
            .iter()
            .map(|g| pullback(g, params, args).map(|p| p.integerize(domain)))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::new();
        for cell in &cells {
            for (i, p) in pulled.iter().enumerate() {
                let g = cell.guard.and(p);
                if g.is_satisfiable() {
                    let mut choice = cell.choice.clone();
                    choice.push(i);
                    next.push(Cell { guard: g, choice });
                }
            }
        }
        cells = next;
    }
    Ok(cells
        .into_iter()
        .map(|c| Cell {
            guard: c.guard.simplify(),
            choice: c.choice,
        })
        .collect())
}

/// `p(params ↦ args)` with coefficients lifted into `C`.
pub fn compose_call<C: Coeff>(p: &Poly<C>, params: &[Var], args: &[Poly<Rat>]) -> Poly<C> {
    let map: BTreeMap<Var, Poly<C>> = params
        .iter()
        .cloned()
        .zip(args.iter().map(|a| a.map_coeffs(C::from_rat)))
        .collect();
    p.compose(&map)
}

/// A formula-branch body instantiated on one cell: one polynomial per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<C> {
    pub guard: Polyhedron,
    pub values: Vec<Poly<C>>,
}

/// Substitutes a piecewise witness into every call of a body, cell by cell.
pub fn substitute_witness<C: Coeff>(
    sys: &EquationSystem,
    guard: &Polyhedron,
    body: &Body,
    witness: &Witness<C>,
    domain: &Domain,
) -> Result<Vec<Instance<C>>> {
    let calls: Vec<_> = body.atoms.iter().flat_map(|a| a.calls.iter()).collect();
    let mut refs = Vec::new();
    for c in &calls {
        let pw = witness.get(&c.pred)?;
        refs.push((pw.guards(), sys.predicate(&c.pred)?.params(), c.args.clone()));
    }
    let cells = refine_cells(guard, &refs, domain)?;
    let mut out = Vec::new();
    for cell in cells {
        let mut k = 0;
        let mut values = Vec::new();
        for atom in &body.atoms {
            values.push(instantiate_atom(sys, atom, witness, &cell.choice[k..k + atom.calls.len()])?);
            k += atom.calls.len();
        }
        out.push(Instance {
            guard: cell.guard,
            values,
        });
    }
    Ok(out)
}

fn instantiate_atom<C: Coeff>(
    sys: &EquationSystem,
    atom: &AffineAtom,
    witness: &Witness<C>,
    choice: &[usize],
) -> Result<Poly<C>> {
    let mut acc: Poly<C> = atom.constant.map_coeffs(C::from_rat);
    for (c, &i) in atom.calls.iter().zip(choice) {
        let piece = &witness.get(&c.pred)?.branches[i].1;
        let params = sys.predicate(&c.pred)?.params();
        let composed = compose_call(piece, &params, &c.args);
        acc = acc + composed * c.weight.map_coeffs(C::from_rat);
    }
    Ok(acc)
}
