//! Ising → QUBO → posiform → conflict graph → weighted MIS, with decoding and
//! exhaustive verification.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{
    brute_force_mis, mis_to_ising, BasisState, Edge, IsingModel, WeightedGraph,
};

/// Largest variable count for the exhaustive verification leg.
pub const MAX_VERIFY: usize = 12;

/// Quadratic pseudo-boolean function to be maximized.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Qubo {
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<Edge, f64>,
    pub constant: f64,
}

impl Qubo {
    pub fn n(&self) -> usize {
        self.linear.len()
    }

    /// Value at the assignment whose bit `i` is `x_i`.
    pub fn evaluate(&self, x: usize) -> f64 {
        let bit = |i: usize| ((x >> i) & 1) as f64;
        let lin: f64 = self
            .linear
            .iter()
            .enumerate()
            .map(|(i, c)| c * bit(i))
            .sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|(&(i, j), c)| c * bit(i) * bit(j))
            .sum();
        self.constant + lin + quad
    }
}

/// `Y = −E/4` with spins `s_i = 2x_i − 1`; maximizing `Y` minimizes `E`.
pub fn ising_to_qubo(m: &IsingModel) -> Qubo {
    let mut linear: Vec<f64> = m.h().iter().map(|h| -h / 2.0).collect();
    let mut quadratic = BTreeMap::new();
    let mut sum_j = 0.0;
    for (&(i, j), &c) in m.couplings() {
        linear[i] += c / 2.0;
        linear[j] += c / 2.0;
        quadratic.insert((i, j), -c);
        sum_j += c;
    }
    let sum_h: f64 = m.h().iter().sum();
    Qubo {
        linear,
        quadratic,
        constant: (sum_h - sum_j - m.offset()) / 4.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self {
            var,
            negated: false,
        }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn complement(self) -> Self {
        Self {
            var: self.var,
            negated: !self.negated,
        }
    }

    fn holds(self, x: usize) -> bool {
        ((x >> self.var) & 1 == 1) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~x{}", self.var + 1)
        } else {
            write!(f, "x{}", self.var + 1)
        }
    }
}

/// Product of one or two literals with a positive coefficient.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Term {
    pub literals: Vec<Literal>,
    pub coeff: f64,
}

impl Term {
    pub fn holds(&self, x: usize) -> bool {
        self.literals.iter().all(|l| l.holds(x))
    }

    pub fn label(&self) -> String {
        self.literals.iter().map(|l| format!("{l}")).collect()
    }

    fn conflicts(&self, other: &Term) -> bool {
        self.literals
            .iter()
            .any(|l| other.literals.contains(&l.complement()))
    }
}

/// `a_∅ + Σ a_T Π_{u∈T} u` with every `a_T > 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Posiform {
    pub n: usize,
    pub a_empty: f64,
    pub terms: Vec<Term>,
}

impl Posiform {
    pub fn evaluate(&self, x: usize) -> f64 {
        self.a_empty
            + self
                .terms
                .iter()
                .filter(|t| t.holds(x))
                .map(|t| t.coeff)
                .sum::<f64>()
    }
}

/// Canonical posiform: a negative `−c·x_i x_j` (i < j) becomes
/// `c·x̄_i x_j − c·x_j`, then a negative `−c·x_i` becomes `c·x̄_i − c`.
/// Like terms merge and zero coefficients drop.
pub fn qubo_to_posiform(q: &Qubo) -> Posiform {
    let mut linear = q.linear.clone();
    let mut a_empty = q.constant;
    let mut raw: Vec<(Vec<Literal>, f64)> = Vec::new();
    for (&(i, j), &c) in &q.quadratic {
        if c > 0.0 {
            raw.push((vec![Literal::pos(i), Literal::pos(j)], c));
        } else if c < 0.0 {
            raw.push((vec![Literal::neg(i), Literal::pos(j)], -c));
            linear[j] += c;
        }
    }
    for (i, &c) in linear.iter().enumerate() {
        if c > 0.0 {
            raw.push((vec![Literal::pos(i)], c));
        } else if c < 0.0 {
            raw.push((vec![Literal::neg(i)], -c));
            a_empty += c;
        }
    }
    let mut terms: Vec<Term> = Vec::new();
    for (literals, coeff) in raw {
        match terms.iter_mut().find(|t| t.literals == literals) {
            Some(t) => t.coeff += coeff,
            None => terms.push(Term { literals, coeff }),
        }
    }
    terms.retain(|t| t.coeff != 0.0);
    Posiform {
        n: q.n(),
        a_empty,
        terms,
    }
}

/// Conflict graph of a posiform: one vertex per term, weighted by its
/// coefficient, with edges between terms holding complementary literals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConflictGraph {
    pub graph: WeightedGraph,
    /// Term behind each vertex.
    pub terms: Vec<Term>,
    pub n_vars: usize,
}

impl ConflictGraph {
    /// Assignment satisfying every literal of the selected terms; other
    /// variables are settled by greedy descent on `model`.
    pub fn decode(&self, selection: &[usize], model: &IsingModel) -> Result<BasisState> {
        let n = self.n_vars;
        let mut fixed: Vec<Option<bool>> = vec![None; n];
        for &v in selection {
            let term = self.terms.get(v).ok_or(Error::VertexOutOfRange {
                vertex: v,
                n: self.terms.len(),
            })?;
            for l in &term.literals {
                let value = !l.negated;
                match fixed[l.var] {
                    Some(prev) if prev != value => {
                        return Err(Error::VerificationFailed(format!(
                            "selected terms disagree on x{}",
                            l.var + 1
                        )))
                    }
                    _ => fixed[l.var] = Some(value),
                }
            }
        }
        let mut x = fixed
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Some(true))
            .fold(0usize, |acc, (i, _)| acc | (1 << i));
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        loop {
            let mut improved = false;
            for &i in &free {
                let flipped = x ^ (1 << i);
                if model.energy(flipped) < model.energy(x) {
                    x = flipped;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        BasisState::new(x, n)
    }

    /// Graphviz rendering with 1-based literal labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph conflict {\n");
        for (v, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("  {v} [label=\"{} ({})\"];\n", t.label(), t.coeff));
        }
        for &(i, j) in self.graph.edges() {
            out.push_str(&format!("  {i} -- {j};\n"));
        }
        out.push_str("}\n");
        out
    }
}

pub fn conflict_graph(p: &Posiform) -> Result<ConflictGraph> {
    if let Some(t) = p.terms.iter().find(|t| t.coeff.is_nan() || t.coeff <= 0.0) {
        return Err(Error::param(
            "posiform",
            format!("term {} has coefficient {}", t.label(), t.coeff),
        ));
    }
    let mut edges = Vec::new();
    for (i, a) in p.terms.iter().enumerate() {
        for (j, b) in p.terms.iter().enumerate().skip(i + 1) {
            if a.conflicts(b) {
                edges.push((i, j));
            }
        }
    }
    let weights = p.terms.iter().map(|t| t.coeff).collect();
    Ok(ConflictGraph {
        graph: WeightedGraph::new(weights, edges)?,
        terms: p.terms.clone(),
        n_vars: p.n,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReductionReport {
    pub n_vars: usize,
    pub n_terms: usize,
    pub n_edges: usize,
    pub a_empty: f64,
    pub mis_weight: f64,
    pub max_posiform: f64,
    pub decoded: BasisState,
    pub decoded_energy: f64,
    pub ground_energy: f64,
}

/// Runs the full pipeline and checks it exhaustively:
/// `max φ = a_∅ + mis(G_φ)`, `E = −4Y = −4φ` on every assignment, and the
/// decoded optimum is a ground state of `m`.
pub fn reduce_and_verify(m: &IsingModel) -> Result<(ConflictGraph, ReductionReport)> {
    let n = m.n();
    if n > MAX_VERIFY {
        return Err(Error::TooLarge { n, max: MAX_VERIFY });
    }
    let q = ising_to_qubo(m);
    let p = qubo_to_posiform(&q);
    let cg = conflict_graph(&p)?;
    let tol = 1e-9 * m.coefficient_mass().max(1.0);

    let mut max_phi = f64::NEG_INFINITY;
    let mut ground = f64::INFINITY;
    for x in 0..1usize << n {
        let (e, y, phi) = (m.energy(x), q.evaluate(x), p.evaluate(x));
        if (e + 4.0 * y).abs() > tol || (y - phi).abs() > tol {
            return Err(Error::VerificationFailed(format!(
                "assignment {x}: E = {e}, Y = {y}, phi = {phi}"
            )));
        }
        max_phi = max_phi.max(phi);
        ground = ground.min(e);
    }
    let mis = brute_force_mis(&cg.graph)?;
    if (max_phi - (p.a_empty + mis.weight)).abs() > tol {
        return Err(Error::VerificationFailed(format!(
            "max phi = {max_phi} but a_empty + mis = {}",
            p.a_empty + mis.weight
        )));
    }
    let decoded = cg.decode(&mis.sets[0], m)?;
    let decoded_energy = m.energy(decoded.index());
    if (decoded_energy - ground).abs() > tol {
        return Err(Error::VerificationFailed(format!(
            "decoded energy {decoded_energy} above ground {ground}"
        )));
    }
    let report = ReductionReport {
        n_vars: n,
        n_terms: cg.terms.len(),
        n_edges: cg.graph.edges().len(),
        a_empty: p.a_empty,
        mis_weight: mis.weight,
        max_posiform: max_phi,
        decoded,
        decoded_energy,
        ground_energy: ground,
    };
    Ok((cg, report))
}

/// How penalties are chosen for a reduced instance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PenaltyRule {
    /// `λ_ij = min(w_i, w_j) + 1`.
    Default,
    /// `λ_ij = min(w_i, w_j) + margin`.
    MinPlus(f64),
    Uniform(f64),
}

/// MIS-Ising model of a conflict graph under a penalty rule.
pub fn reduced_instance_to_mis_ising(cg: &ConflictGraph, rule: PenaltyRule) -> Result<IsingModel> {
    let g = cg.graph.clone();
    let w = g.weights().to_vec();
    let g = match rule {
        PenaltyRule::Default => g.with_default_penalties(),
        PenaltyRule::MinPlus(margin) => {
            let p = g
                .edges()
                .iter()
                .map(|&(i, j)| w[i].min(w[j]) + margin)
                .collect();
            g.with_penalties(p)?
        }
        PenaltyRule::Uniform(l) => g.with_uniform_penalty(l)?,
    };
    mis_to_ising(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{brute_force_ising, gen_loop_gadget};
    use proptest::prelude::*;

    fn lit(s: &str) -> Vec<Literal> {
        // "~1 2" style
        s.split_whitespace()
            .map(|t| match t.strip_prefix('~') {
                Some(v) => Literal::neg(v.parse::<usize>().unwrap() - 1),
                None => Literal::pos(t.parse::<usize>().unwrap() - 1),
            })
            .collect()
    }

    #[test]
    fn loop_gadget_qubo_matches_closed_form() {
        for r in [4.0, 6.0] {
            let q = ising_to_qubo(&gen_loop_gadget(4, r).unwrap());
            assert_eq!(
                q.linear,
                vec![-(3.0 * r - 1.0) / 2.0, -0.75 * r, -0.75 * r, 0.0]
            );
            assert_eq!(q.quadratic[&(0, 1)], r);
            assert_eq!(q.quadratic[&(0, 2)], r);
            assert_eq!(q.quadratic[&(1, 3)], r / 2.0);
            assert_eq!(q.quadratic[&(2, 3)], r / 2.0);
        }
    }

    #[test]
    fn zero_model_gives_constant() {
        let m = IsingModel::new(vec![0.0; 3], []).unwrap();
        let q = ising_to_qubo(&m);
        assert!(q.linear.iter().all(|&c| c == 0.0) && q.quadratic.is_empty());
        assert_eq!(q.constant, 0.0);
        let p = qubo_to_posiform(&q);
        assert!(p.terms.is_empty());
    }

    #[test]
    fn worked_posiform() {
        let q = Qubo {
            linear: vec![-5.5, -3.0, -3.0, 0.0],
            quadratic: [((0, 1), 4.0), ((0, 2), 4.0), ((1, 3), 2.0), ((2, 3), 2.0)]
                .into_iter()
                .collect(),
            constant: 0.0,
        };
        let p = qubo_to_posiform(&q);
        assert_eq!(p.a_empty, -11.5);
        let want = [
            ("1 2", 4.0),
            ("1 3", 4.0),
            ("2 4", 2.0),
            ("3 4", 2.0),
            ("~1", 5.5),
            ("~2", 3.0),
            ("~3", 3.0),
        ];
        assert_eq!(p.terms.len(), want.len());
        for (t, (l, c)) in p.terms.iter().zip(want) {
            assert_eq!(t.literals, lit(l));
            assert_eq!(t.coeff, c);
        }
    }

    #[test]
    fn positive_qubo_is_its_own_posiform() {
        let q = Qubo {
            linear: vec![1.0, 2.0],
            quadratic: [((0, 1), 3.0)].into_iter().collect(),
            constant: 0.25,
        };
        let p = qubo_to_posiform(&q);
        assert_eq!(p.a_empty, 0.25);
        assert_eq!(p.terms.len(), 3);
    }

    #[test]
    fn negative_quadratic_complements_lower_index() {
        let q = Qubo {
            linear: vec![0.0, 0.0],
            quadratic: [((0, 1), -2.0)].into_iter().collect(),
            constant: 0.0,
        };
        let p = qubo_to_posiform(&q);
        assert_eq!(p.terms[0].literals, lit("~1 2"));
        assert_eq!(p.terms[1].literals, lit("~2"));
        assert_eq!(p.a_empty, -2.0);
        for x in 0..4 {
            assert_eq!(p.evaluate(x), q.evaluate(x));
        }
    }

    #[test]
    fn loop_gadget_reduces_to_a_path() {
        let m = gen_loop_gadget(4, 4.0).unwrap();
        let (cg, report) = reduce_and_verify(&m).unwrap();
        assert_eq!(cg.graph.n(), 7);
        assert_eq!(cg.graph.edges().len(), 6);
        let mut degree = vec![0; 7];
        for &(i, j) in cg.graph.edges() {
            degree[i] += 1;
            degree[j] += 1;
        }
        degree.sort();
        assert_eq!(degree, vec![1, 1, 2, 2, 2, 2, 2]);
        assert_eq!(report.mis_weight, 12.0);
        assert_eq!(report.decoded.bits(), "1111");

        let find = |l: &str| cg.terms.iter().position(|t| t.literals == lit(l)).unwrap();
        let local = [find("~1"), find("~2"), find("~3")];
        assert!(cg.graph.is_independent(&local));
        assert_eq!(cg.graph.set_weight(&local), 11.5);
        // no vertex can be added
        for v in 0..7 {
            if !local.contains(&v) {
                let mut bigger = local.to_vec();
                bigger.push(v);
                assert!(!cg.graph.is_independent(&bigger));
            }
        }
        let dot = cg.to_dot();
        assert!(dot.starts_with("graph conflict {") && dot.contains("~x1"));
    }

    #[test]
    fn single_spin_decodes_down() {
        let m = IsingModel::new(vec![1.0], []).unwrap();
        let (cg, report) = reduce_and_verify(&m).unwrap();
        assert_eq!(cg.graph.n(), 1);
        assert_eq!(report.decoded.bits(), "0");
    }

    #[test]
    fn disjoint_terms_give_edgeless_graph() {
        let p = Posiform {
            n: 4,
            a_empty: 0.0,
            terms: vec![
                Term {
                    literals: lit("1 2"),
                    coeff: 1.0,
                },
                Term {
                    literals: lit("3 4"),
                    coeff: 2.0,
                },
            ],
        };
        let cg = conflict_graph(&p).unwrap();
        assert!(cg.graph.edges().is_empty());
        assert_eq!(brute_force_mis(&cg.graph).unwrap().sets, vec![vec![0, 1]]);
    }

    #[test]
    fn reduced_loop_gadget_has_unique_levels() {
        let m = gen_loop_gadget(4, 4.0).unwrap();
        let (cg, _) = reduce_and_verify(&m).unwrap();
        let red = reduced_instance_to_mis_ising(&cg, PenaltyRule::Default).unwrap();
        let levels = brute_force_ising(&red).unwrap();
        assert_eq!(levels[0].states.len(), 1);
        assert_eq!(levels[1].states.len(), 1);
        let chosen = levels[0].states[0].ones();
        assert_eq!(cg.decode(&chosen, &m).unwrap().bits(), "1111");
    }

    fn dyadic() -> impl Strategy<Value = f64> {
        (-16i32..=16).prop_map(|k| k as f64 / 4.0)
    }

    proptest! {
        #[test]
        fn pipeline_is_exact(
            n in 1usize..=6,
            h in prop::collection::vec(dyadic(), 6),
            j in prop::collection::vec(dyadic(), 15),
        ) {
            let mut couplings = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if j[k] != 0.0 {
                        couplings.push((a, b, j[k]));
                    }
                    k += 1;
                }
            }
            let m = IsingModel::new(h[..n].to_vec(), couplings).unwrap();
            let (cg, report) = reduce_and_verify(&m).unwrap();
            prop_assert_eq!(report.max_posiform, report.a_empty + report.mis_weight);
            prop_assert!(cg.graph.n() <= 2 * (n + m.couplings().len()) + 1);
            let q = ising_to_qubo(&m);
            let p = qubo_to_posiform(&q);
            for x in 0..1usize << n {
                prop_assert_eq!(m.energy(x), -4.0 * q.evaluate(x));
                prop_assert_eq!(q.evaluate(x), p.evaluate(x));
            }
        }
    }
}
