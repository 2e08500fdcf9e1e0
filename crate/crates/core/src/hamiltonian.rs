//! Matrix-free annealing Hamiltonians
//! `H(s) = (1 - s) H_driver + s α H_ising` over the `2^n` computational basis.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ordered, Edge, IsingModel};

/// Largest qubit count accepted by [`SystemHamiltonian`].
pub const MAX_QUBITS: usize = 24;

/// Largest qubit count for which a dense matrix may be assembled.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Driver Hamiltonian.
///
/// `X` is `−Σ σx_i`. `XX` adds `λ Σ_{(i,j)} σx_i σx_j` over the given edges,
/// with signed `λ`; `λ = −1` is the usual stoquastic choice.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum DriverSpec {
    X,
    XX { lambda: f64, edges: Vec<Edge> },
}

impl DriverSpec {
    pub fn xx(lambda: f64, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        DriverSpec::XX {
            lambda,
            edges: edges.into_iter().map(|(i, j)| ordered(i, j)).collect(),
        }
    }

    /// XX driver on the coupling graph of `ising`.
    pub fn xx_on_problem(lambda: f64, ising: &IsingModel) -> Self {
        Self::xx(lambda, ising.edges())
    }

    pub fn pair_edges(&self) -> &[Edge] {
        match self {
            DriverSpec::X => &[],
            DriverSpec::XX { edges, .. } => edges,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            DriverSpec::X => 0.0,
            DriverSpec::XX { lambda, .. } => *lambda,
        }
    }

    /// Non-positive off-diagonal entries, so the driver ground state is uniform.
    pub fn is_stoquastic(&self) -> bool {
        self.lambda() <= 0.0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let DriverSpec::XX { lambda, edges } = self {
            if !lambda.is_finite() {
                return Err(Error::param("lambda", "driver coupling is not finite"));
            }
            let mut seen = alloc::collections::BTreeSet::new();
            for &(i, j) in edges {
                if i == j {
                    return Err(Error::SelfLoop(i));
                }
                if j >= n {
                    return Err(Error::VertexOutOfRange { vertex: j, n });
                }
                if !seen.insert((i, j)) {
                    return Err(Error::DuplicateEdge(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Ground state of the driver at `s = 0`: the uniform vector `2^{-n/2}(1,…,1)`.
///
/// Only available when the uniform vector is provably the ground state,
/// i.e. for `X` and for `XX` with `λ <= 0`.
pub fn driver_ground_state(driver: &DriverSpec, n: usize) -> Result<Vec<f64>> {
    if !driver.is_stoquastic() {
        return Err(Error::NonUniformGroundState(alloc::format!(
            "XX driver with lambda = {} > 0",
            driver.lambda()
        )));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooLarge { n, max: MAX_QUBITS });
    }
    let dim = 1usize << n;
    Ok(vec![1.0 / libm::sqrt(dim as f64); dim])
}

/// `H(s) = (1 − s)·H_driver + s·α·H_ising`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemHamiltonian {
    ising: IsingModel,
    driver: DriverSpec,
    alpha: f64,
    diag: Vec<f64>,
    pair_masks: Vec<usize>,
}

impl SystemHamiltonian {
    pub fn new(ising: IsingModel, driver: DriverSpec) -> Result<Self> {
        let n = ising.n();
        if n == 0 {
            return Err(Error::param("n", "need at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(Error::TooLarge { n, max: MAX_QUBITS });
        }
        driver.validate(n)?;
        let diag = ising.energies();
        let pair_masks = driver
            .pair_edges()
            .iter()
            .map(|&(i, j)| (1 << i) | (1 << j))
            .collect();
        Ok(Self {
            ising,
            driver,
            alpha: 1.0,
            diag,
            pair_masks,
        })
    }

    /// Sets the problem scale `α > 0`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::param("alpha", "must be positive and finite"));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.ising.n()
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn ising(&self) -> &IsingModel {
        &self.ising
    }

    pub fn driver(&self) -> &DriverSpec {
        &self.driver
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Problem energies (without α) indexed by basis state.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Upper bound on the operator norm of `H(s)`, used to scale tolerances.
    pub fn norm_bound(&self, s: f64) -> f64 {
        let d = self.n() as f64 + self.driver.lambda().abs() * self.pair_masks.len() as f64;
        let e = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ((1.0 - s) * d + s * self.alpha * e).max(f64::MIN_POSITIVE)
    }

    fn check_s(s: f64) -> Result<()> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(Error::ScheduleOutOfRange(s))
        }
    }

    /// `H(s)·v`.
    pub fn apply(&self, s: f64, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(s, v, &mut out)?;
        Ok(out)
    }

    /// Writes `H(s)·v` into `out`.
    pub fn apply_into(&self, s: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        Self::check_s(s)?;
        for len in [v.len(), out.len()] {
            if len != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: len,
                });
            }
        }
        self.apply_unchecked(s, v, out);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&self, s: f64, v: &[f64], out: &mut [f64]) {
        let n = self.n();
        let a = 1.0 - s;
        let b = s * self.alpha;
        let al = a * self.driver.lambda();
        for (z, o) in out.iter_mut().enumerate() {
            let mut flips = 0.0;
            for i in 0..n {
                flips += v[z ^ (1 << i)];
            }
            let mut pairs = 0.0;
            for &m in &self.pair_masks {
                pairs += v[z ^ m];
            }
            *o = b * self.diag[z] * v[z] - a * flips + al * pairs;
        }
    }

    /// Dense matrix of `H(s)`; only for `n <= MAX_DENSE_QUBITS`.
    pub fn dense(&self, s: f64) -> Result<DMatrix<f64>> {
        Self::check_s(s)?;
        let n = self.n();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::TooLarge {
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        let dim = self.dim();
        let a = 1.0 - s;
        let mut m = DMatrix::zeros(dim, dim);
        for z in 0..dim {
            m[(z, z)] = s * self.alpha * self.diag[z];
            for i in 0..n {
                m[(z, z ^ (1 << i))] -= a;
            }
            for &mask in &self.pair_masks {
                m[(z, z ^ mask)] += a * self.driver.lambda();
            }
        }
        Ok(m)
    }
}
