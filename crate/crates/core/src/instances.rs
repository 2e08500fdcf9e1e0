//! Problem instances: vertex-weighted graphs, Ising models and basis states,
//! the reference instance generators, and exhaustive oracles.
//!
//! Bit convention used everywhere in this crate: bit `i` of a basis index is
//! vertex `i` (0-based), bit value 1 means `x_i = 1`, which is spin `+1`
//! (`x_i = (1 + s_i) / 2`).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest variable count accepted by the exhaustive oracles.
pub const MAX_EXHAUSTIVE: usize = 24;

/// Relative tolerance used when grouping equal energies into one level.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// Unordered vertex pair, stored with the smaller index first.
pub type Edge = (usize, usize);

pub(crate) fn ordered(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<Edge> {
    if i == j {
        return Err(Error::SelfLoop(i));
    }
    for v in [i, j] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    Ok(ordered(i, j))
}

/// A basis state of the computational basis over `n` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BasisState {
    index: usize,
    n: usize,
}

impl BasisState {
    pub fn new(index: usize, n: usize) -> Result<Self> {
        if n >= usize::BITS as usize || index >> n != 0 {
            return Err(Error::param("index", "basis index does not fit in n bits"));
        }
        Ok(Self { index, n })
    }

    /// Parses a bit string written qubit 1 first, e.g. `"10101"`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let bits = bits.trim_start_matches('|').trim_end_matches('⟩');
        let mut index = 0usize;
        let mut n = 0usize;
        for (i, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => index |= 1 << i,
                _ => return Err(Error::param("bits", "expected only '0' and '1'")),
            }
            n += 1;
        }
        Self::new(index, n)
    }

    pub fn index(self) -> usize {
        self.index
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn bit(self, i: usize) -> bool {
        (self.index >> i) & 1 == 1
    }

    pub fn spin(self, i: usize) -> f64 {
        if self.bit(i) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn flip(self, i: usize) -> Self {
        Self {
            index: self.index ^ (1 << i),
            n: self.n,
        }
    }

    pub fn flip_pair(self, i: usize, j: usize) -> Self {
        Self {
            index: self.index ^ (1 << i) ^ (1 << j),
            n: self.n,
        }
    }

    pub fn hamming(self, other: Self) -> u32 {
        (self.index ^ other.index).count_ones()
    }

    /// Vertices with bit 1, i.e. the encoded vertex subset.
    pub fn ones(self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.bit(i)).collect()
    }

    pub fn bits(self) -> String {
        (0..self.n)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.bits())
    }
}

/// Vertex-weighted undirected graph with optional per-edge penalties.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeightedGraph {
    weights: Vec<f64>,
    edges: Vec<Edge>,
    penalties: Option<Vec<f64>>,
}

impl WeightedGraph {
    pub fn new(weights: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = weights.len();
        for (vertex, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() || weight <= 0.0 {
                return Err(Error::NonPositiveWeight { vertex, weight });
            }
        }
        let mut seen = BTreeMap::new();
        let mut list = Vec::new();
        for (i, j) in edges {
            let e = check_pair(i, j, n)?;
            if seen.insert(e, ()).is_some() {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            list.push(e);
        }
        Ok(Self {
            weights,
            edges: list,
            penalties: None,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn penalties(&self) -> Option<&[f64]> {
        self.penalties.as_deref()
    }

    /// Penalty of edge `(i, j)`, if penalties are set and the edge exists.
    pub fn penalty(&self, i: usize, j: usize) -> Option<f64> {
        let e = ordered(i, j);
        let k = self.edges.iter().position(|&x| x == e)?;
        self.penalties.as_ref().map(|p| p[k])
    }

    fn min_weight(&self, (i, j): Edge) -> f64 {
        self.weights[i].min(self.weights[j])
    }

    /// Installs one penalty per edge, in edge order. Each penalty must exceed
    /// `min(w_i, w_j)`, otherwise optima of the penalized objective can be
    /// dependent sets.
    pub fn with_penalties(mut self, penalties: Vec<f64>) -> Result<Self> {
        if penalties.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                found: penalties.len(),
            });
        }
        for (&e, &lambda) in self.edges.iter().zip(&penalties) {
            let min_weight = self.min_weight(e);
            if !lambda.is_finite() || lambda <= min_weight {
                return Err(Error::PenaltyTooSmall {
                    i: e.0,
                    j: e.1,
                    lambda,
                    min_weight,
                });
            }
        }
        self.penalties = Some(penalties);
        Ok(self)
    }

    pub fn with_uniform_penalty(self, lambda: f64) -> Result<Self> {
        let p = vec![lambda; self.edges.len()];
        self.with_penalties(p)
    }

    /// Default penalty rule `λ_ij = min(w_i, w_j) + 1`.
    pub fn with_default_penalties(self) -> Self {
        let p = self
            .edges
            .iter()
            .map(|&e| self.min_weight(e) + 1.0)
            .collect();
        self.with_penalties(p)
            .expect("default penalties exceed the minimum weight")
    }

    /// Overrides the penalty on a single existing edge.
    pub fn set_penalty(&mut self, i: usize, j: usize, lambda: f64) -> Result<()> {
        let e = check_pair(i, j, self.n())?;
        let k = self
            .edges
            .iter()
            .position(|&x| x == e)
            .ok_or(Error::param("edge", "no such edge"))?;
        let min_weight = self.min_weight(e);
        if !lambda.is_finite() || lambda <= min_weight {
            return Err(Error::PenaltyTooSmall {
                i: e.0,
                j: e.1,
                lambda,
                min_weight,
            });
        }
        let p = self
            .penalties
            .as_mut()
            .ok_or(Error::MissingPenalty { i: e.0, j: e.1 })?;
        p[k] = lambda;
        Ok(())
    }

    pub fn adjacency_masks(&self) -> Vec<u64> {
        let mut adj = vec![0u64; self.n()];
        for &(i, j) in &self.edges {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        adj
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        let mut mask = 0u64;
        for &v in vertices {
            mask |= 1 << v;
        }
        self.edges
            .iter()
            .all(|&(i, j)| mask & (1 << i) == 0 || mask & (1 << j) == 0)
    }

    pub fn set_weight(&self, vertices: &[usize]) -> f64 {
        vertices.iter().map(|&v| self.weights[v]).sum()
    }

    /// Penalized objective `Σ w_i x_i − Σ λ_ij x_i x_j` at the assignment
    /// encoded by `state` (bit `i` is `x_i`).
    pub fn objective(&self, state: usize) -> Result<f64> {
        let p = self.penalties.as_ref().ok_or_else(|| self.missing())?;
        let x = |i: usize| ((state >> i) & 1) as f64;
        let linear: f64 = self.weights.iter().enumerate().map(|(i, w)| w * x(i)).sum();
        let quad: f64 = self
            .edges
            .iter()
            .zip(p)
            .map(|(&(i, j), l)| l * x(i) * x(j))
            .sum();
        Ok(linear - quad)
    }

    fn missing(&self) -> Error {
        let (i, j) = self.edges.first().copied().unwrap_or((0, 0));
        Error::MissingPenalty { i, j }
    }
}

/// Ising model `E(z) = Σ h_i z_i + Σ J_ij z_i z_j + offset` over spins `z_i = ±1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IsingModel {
    h: Vec<f64>,
    couplings: BTreeMap<Edge, f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(
        h: Vec<f64>,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = h.len();
        if let Some(i) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("h", alloc::format!("h[{i}] is not finite")));
        }
        let mut map = BTreeMap::new();
        for (i, j, value) in couplings {
            let e = check_pair(i, j, n)?;
            if !value.is_finite() {
                return Err(Error::param("J", "coupling is not finite"));
            }
            if map.insert(e, value).is_some() {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self {
            h,
            couplings: map,
            offset: 0.0,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &BTreeMap<Edge, f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&ordered(i, j)).copied().unwrap_or(0.0)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.couplings.keys().copied().collect()
    }

    /// Energy of the basis state with index `state`.
    pub fn energy(&self, state: usize) -> f64 {
        let spin = |i: usize| if (state >> i) & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = self.offset;
        for (i, h) in self.h.iter().enumerate() {
            e += h * spin(i);
        }
        for (&(i, j), v) in &self.couplings {
            e += v * spin(i) * spin(j);
        }
        e
    }

    /// Energies of all `2^n` basis states, indexed by basis index.
    pub fn energies(&self) -> Vec<f64> {
        (0..1usize << self.n()).map(|z| self.energy(z)).collect()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.h
            .iter()
            .chain(self.couplings.values())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sum of absolute coefficients, an upper bound on `|E(z)|`.
    pub fn coefficient_mass(&self) -> f64 {
        self.h
            .iter()
            .chain(self.couplings.values())
            .map(|v| v.abs())
            .sum::<f64>()
            + self.offset.abs()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h: self.h.iter().map(|v| v * factor).collect(),
            couplings: self
                .couplings
                .iter()
                .map(|(&e, v)| (e, v * factor))
                .collect(),
            offset: self.offset * factor,
        }
    }

    /// Rescales so that the largest field or coupling magnitude is 1.
    pub fn normalized(&self) -> Self {
        let m = self.max_abs_coefficient();
        if m == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / m)
        }
    }

    pub(crate) fn degeneracy_tolerance(&self) -> f64 {
        DEGENERACY_RTOL * self.coefficient_mass().max(1.0)
    }
}

/// One distinct energy of a diagonal Hamiltonian and the basis states at it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EnergyLevel {
    pub energy: f64,
    pub states: Vec<BasisState>,
}

/// All `2^n` energies grouped into ascending distinct levels.
pub fn brute_force_ising(model: &IsingModel) -> Result<Vec<EnergyLevel>> {
    let n = model.n();
    if n > MAX_EXHAUSTIVE {
        return Err(Error::TooLarge {
            n,
            max: MAX_EXHAUSTIVE,
        });
    }
    let energies = model.energies();
    Ok(group_levels(&energies, n, model.degeneracy_tolerance()))
}

pub(crate) fn group_levels(energies: &[f64], n: usize, tol: f64) -> Vec<EnergyLevel> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut levels: Vec<EnergyLevel> = Vec::new();
    for z in order {
        let e = energies[z];
        let state = BasisState { index: z, n };
        match levels.last_mut() {
            Some(level) if e - level.energy <= tol => level.states.push(state),
            _ => levels.push(EnergyLevel {
                energy: e,
                states: vec![state],
            }),
        }
    }
    levels
}

/// Exact maximum-weight independent sets.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MisSolution {
    pub weight: f64,
    /// Every optimal set (0-based vertices, ascending), in lexicographic order.
    pub sets: Vec<Vec<usize>>,
}

/// Vertex limit for [`brute_force_mis`].
pub const MAX_MIS_VERTICES: usize = 48;

/// Branch and bound over independent sets, keeping every heaviest one.
pub fn brute_force_mis(graph: &WeightedGraph) -> Result<MisSolution> {
    let n = graph.n();
    if n > MAX_MIS_VERTICES {
        return Err(Error::TooLarge {
            n,
            max: MAX_MIS_VERTICES,
        });
    }
    let mut rest = vec![0.0; n + 1];
    for v in (0..n).rev() {
        rest[v] = rest[v + 1] + graph.weights()[v];
    }
    let adj = graph.adjacency_masks();
    let tol = DEGENERACY_RTOL * graph.weights().iter().sum::<f64>().max(1.0);
    let mut best = f64::NEG_INFINITY;
    let mut masks: Vec<u64> = Vec::new();
    // depth-first over vertices; `allowed` excludes neighbours of chosen ones
    let mut stack: Vec<(usize, u64, u64, f64)> = vec![(0, 0, u64::MAX, 0.0)];
    while let Some((v, chosen, allowed, weight)) = stack.pop() {
        if v == n {
            if weight > best + tol {
                best = weight;
                masks.clear();
                masks.push(chosen);
            } else if (weight - best).abs() <= tol {
                masks.push(chosen);
            }
            continue;
        }
        if weight + rest[v] < best - tol {
            continue;
        }
        stack.push((v + 1, chosen, allowed, weight));
        if allowed & (1 << v) != 0 {
            stack.push((
                v + 1,
                chosen | (1 << v),
                allowed & !adj[v],
                weight + graph.weights()[v],
            ));
        }
    }
    let mut sets: Vec<Vec<usize>> = masks
        .into_iter()
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect())
        .collect();
    sets.sort();
    Ok(MisSolution { weight: best, sets })
}

fn path_edges(n: usize) -> Vec<Edge> {
    (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
}

/// Five-vertex weighted path with weights `(1, 1.5, 1, w4, 1)`; penalties unset.
pub fn gen_chain5(w4: f64) -> Result<WeightedGraph> {
    if w4.is_nan() || w4 <= 0.0 {
        return Err(Error::param("w4", "weight must be positive"));
    }
    WeightedGraph::new(vec![1.0, 1.5, 1.0, w4, 1.0], path_edges(5))
}

/// Seven-vertex path, all weights 1 except vertex 4 (1-based) with 1.99.
pub fn gen_chain7() -> WeightedGraph {
    let mut w = vec![1.0; 7];
    w[3] = 1.99;
    WeightedGraph::new(w, path_edges(7)).expect("chain-7 is a valid graph")
}

/// Ferromagnetic loop gadget on `n` spins.
///
/// Two branches of `(n - 2) / 2` interior spins join spin 0 (field `R - 1`)
/// to spin `n - 1` (field `-R`). Couplings are `-R`, except the two that touch
/// spin `n - 1`, which are `-R/2` each. The ground state is all spins `+1`;
/// the first excited level is two-fold: all spins `-1`, and all `-1` except
/// spin `n - 1`.
pub fn gen_loop_gadget(n: usize, r: f64) -> Result<IsingModel> {
    if r.is_nan() || r < 4.0 {
        return Err(Error::param("R", "loop gadget needs R >= 4"));
    }
    if n < 4 || !n.is_multiple_of(2) || n > 60 {
        return Err(Error::param("n", "loop gadget needs an even n >= 4"));
    }
    let mut h = vec![0.0; n];
    h[0] = r - 1.0;
    h[n - 1] = -r;
    let branch = (n - 2) / 2;
    let mut couplings = Vec::new();
    for b in 0..2 {
        let mut prev = 0;
        for k in 0..branch {
            let v = 1 + b * branch + k;
            couplings.push((prev, v, -r));
            prev = v;
        }
        couplings.push((prev, n - 1, -r / 2.0));
    }
    IsingModel::new(h, couplings)
}

/// MIS-Ising Hamiltonian: `h_i = Σ_{j ∈ nbr(i)} λ_ij − 2 w_i`, `J_ij = λ_ij`,
/// zero offset. Its energies satisfy `E(z) = −4·Y(x) + mis_energy_constant(g)`.
pub fn mis_to_ising(graph: &WeightedGraph) -> Result<IsingModel> {
    let p = graph.penalties().ok_or_else(|| graph.missing())?;
    let mut h: Vec<f64> = graph.weights().iter().map(|w| -2.0 * w).collect();
    let mut couplings = Vec::with_capacity(p.len());
    for (&(i, j), &lambda) in graph.edges().iter().zip(p) {
        h[i] += lambda;
        h[j] += lambda;
        couplings.push((i, j, lambda));
    }
    IsingModel::new(h, couplings)
}

/// The constant `C` in `E(z) = −4·Y(x) + C` for [`mis_to_ising`].
pub fn mis_energy_constant(graph: &WeightedGraph) -> Result<f64> {
    let p = graph.penalties().ok_or_else(|| graph.missing())?;
    Ok(2.0 * graph.weights().iter().sum::<f64>() - p.iter().sum::<f64>())
}
