//! Eigenpairs along the schedule, gap curves, min-gap location and gap-scaling fits.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{driver_ground_state, SystemHamiltonian};
use crate::linalg::{dense_lowest, dot, lanczos_lowest, LanczosConfig};

/// Runs independent jobs `0..len` and collects their results in order.
pub trait GridExecutor {
    fn map<R, F>(&self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl GridExecutor for Sequential {
    fn map<R, F>(&self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Systems with at most this many qubits are diagonalized densely.
    pub dense_threshold: usize,
    /// Eigenvalues closer than this are one level.
    pub cluster_tol: f64,
    pub lanczos: LanczosConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dense_threshold: 7,
            cluster_tol: 1e-10,
            lanczos: LanczosConfig::default(),
        }
    }
}

/// Lowest `k` eigenpairs of `H(s)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EigenSolution {
    pub s: f64,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenSolution {
    /// Index of the first eigenvalue above the ground level, if resolved.
    pub fn first_excited(&self, cluster_tol: f64) -> Option<usize> {
        let e0 = *self.values.first()?;
        self.values.iter().position(|&e| e - e0 > cluster_tol)
    }

    /// `E_1 − E_0` between distinct levels.
    pub fn gap(&self, cluster_tol: f64) -> Option<f64> {
        self.first_excited(cluster_tol)
            .map(|i| self.values[i] - self.values[0])
    }
}

pub fn lowest_eigenpairs(
    sys: &SystemHamiltonian,
    s: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigenSolution> {
    solve_warm(sys, s, k, cfg, &[])
}

/// As [`lowest_eigenpairs`], seeding the iterative path with `warm` vectors.
pub fn solve_warm(
    sys: &SystemHamiltonian,
    s: f64,
    k: usize,
    cfg: &SolverConfig,
    warm: &[Vec<f64>],
) -> Result<EigenSolution> {
    if k == 0 || k > sys.dim() {
        return Err(Error::param("k", "need 1 <= k <= 2^n"));
    }
    let pairs = if sys.n() <= cfg.dense_threshold {
        dense_lowest(sys, s, k)?
    } else {
        lanczos_lowest(sys, s, k, &cfg.lanczos, warm)?
    };
    Ok(EigenSolution {
        s,
        values: pairs.values,
        vectors: pairs.vectors,
    })
}

/// Grid points per job. Within a job each solve warm-starts from the previous
/// point; the chunking is fixed so results do not depend on the executor.
const CHUNK: usize = 16;

fn solve_grid<E: GridExecutor>(
    sys: &SystemHamiltonian,
    grid: &[f64],
    k: usize,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<Vec<EigenSolution>> {
    let chunks = grid.len().div_ceil(CHUNK);
    let solved = exec.map(chunks, |c| -> Result<Vec<EigenSolution>> {
        let mut out: Vec<EigenSolution> = Vec::with_capacity(CHUNK);
        for &s in grid.iter().skip(c * CHUNK).take(CHUNK) {
            let warm = out.last().map(|x| x.vectors.as_slice()).unwrap_or(&[]);
            let sol = solve_warm(sys, s, k, cfg, warm)?;
            out.push(sol);
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(grid.len());
    for chunk in solved {
        all.extend(chunk?);
    }
    Ok(all)
}

/// Lowest `k` eigenpairs on every grid point, sign-aligned along the grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpectralSweep {
    pub k: usize,
    pub solutions: Vec<EigenSolution>,
}

impl SpectralSweep {
    pub fn grid(&self) -> Vec<f64> {
        self.solutions.iter().map(|x| x.s).collect()
    }

    pub fn gaps(&self, cluster_tol: f64) -> Vec<Option<f64>> {
        self.solutions.iter().map(|x| x.gap(cluster_tol)).collect()
    }
}

/// `0, step, 2·step, …, 1`, with the step rounded so that 1 is hit exactly.
pub fn default_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::param("step", "grid step must lie in (0, 0.5]"));
    }
    let m = libm::round(1.0 / step) as usize;
    Ok((0..=m).map(|i| i as f64 / m as f64).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "empty grid"));
    }
    if let Some(&s) = grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::ScheduleOutOfRange(s));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid", "grid must be strictly ascending"));
    }
    Ok(())
}

fn align_to(v: &mut [f64], reference: &[f64]) {
    if dot(v, reference) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn sweep<E: GridExecutor>(
    sys: &SystemHamiltonian,
    grid: &[f64],
    k: usize,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<SpectralSweep> {
    check_grid(grid)?;
    let mut solutions = solve_grid(sys, grid, k, cfg, exec)?;
    // sign continuity: first point against the uniform state, then point to point
    let uniform = driver_ground_state(&crate::hamiltonian::DriverSpec::X, sys.n())?;
    for v in &mut solutions[0].vectors {
        align_to(v, &uniform);
    }
    for i in 1..solutions.len() {
        let (done, rest) = solutions.split_at_mut(i);
        let prev = &done[i - 1];
        for (v, p) in rest[0].vectors.iter_mut().zip(&prev.vectors) {
            align_to(v, p);
        }
    }
    Ok(SpectralSweep { k, solutions })
}

/// Settings for [`locate_min_gap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinGapConfig {
    pub step: f64,
    /// Width at which golden-section refinement stops.
    pub tol: f64,
    /// Secondary minima within this relative margin of the primary are reported.
    pub report_within: f64,
}

impl Default for MinGapConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tol: 1e-6,
            report_within: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GapPoint {
    pub s: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GapMinimum {
    pub s_star: f64,
    pub min_gap: f64,
    /// Other refined local minima whose gap is within the reporting margin.
    pub others: Vec<GapPoint>,
    /// Number of coarse grid points scanned.
    pub coarse_points: usize,
}

/// Gap between the two lowest distinct levels at `s`.
pub fn gap_at(sys: &SystemHamiltonian, s: f64, cfg: &SolverConfig) -> Result<f64> {
    let k = 2.min(sys.dim());
    let sol = lowest_eigenpairs(sys, s, k, cfg)?;
    Ok(sol.gap(cfg.cluster_tol).unwrap_or(0.0))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden(
    mut a: f64,
    mut b: f64,
    tol: f64,
    f: &mut dyn FnMut(f64) -> Result<f64>,
    best: &mut GapPoint,
) -> Result<()> {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for (x, g) in [(x1, f1), (x2, f2)] {
        if g < best.gap {
            *best = GapPoint { s: x, gap: g };
        }
    }
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
            if f1 < best.gap {
                *best = GapPoint { s: x1, gap: f1 };
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
            if f2 < best.gap {
                *best = GapPoint { s: x2, gap: f2 };
            }
        }
    }
    Ok(())
}

/// Minimum of the gap over `[0, 1)`: coarse scan, then golden-section
/// refinement inside the bracket of every coarse local minimum.
pub fn locate_min_gap<E: GridExecutor>(
    sys: &SystemHamiltonian,
    mg: &MinGapConfig,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<GapMinimum> {
    if mg.tol.is_nan() || mg.tol <= 0.0 {
        return Err(Error::param("tol", "refinement tolerance must be positive"));
    }
    let mut grid = default_grid(mg.step)?;
    grid.pop();
    let k = 2.min(sys.dim());
    let coarse: Vec<f64> = solve_grid(sys, &grid, k, cfg, exec)?
        .iter()
        .map(|x| x.gap(cfg.cluster_tol).unwrap_or(0.0))
        .collect();
    let last = grid.len() - 1;
    let is_local_min = |i: usize| {
        let left = i == 0 || coarse[i] <= coarse[i - 1];
        let right = i == last || coarse[i] <= coarse[i + 1];
        left && right
    };
    let mut candidates: Vec<usize> = (0..=last).filter(|&i| is_local_min(i)).collect();
    // plateaus would flood the list; keep the lowest few coarse minima
    candidates.sort_by(|&a, &b| coarse[a].total_cmp(&coarse[b]));
    candidates.truncate(8);

    let mut warm: Vec<Vec<f64>> = Vec::new();
    let mut f = |s: f64| -> Result<f64> {
        let sol = solve_warm(sys, s, k, cfg, &warm)?;
        let gap = sol.gap(cfg.cluster_tol).unwrap_or(0.0);
        warm = sol.vectors;
        Ok(gap)
    };
    let mut refined = Vec::with_capacity(candidates.len());
    for &i in &candidates {
        let lo = if i == 0 { grid[0] } else { grid[i - 1] };
        let hi = if i == last { 1.0 } else { grid[i + 1] };
        let mut best = GapPoint {
            s: grid[i],
            gap: coarse[i],
        };
        golden(lo, hi, mg.tol, &mut f, &mut best)?;
        refined.push(best);
    }
    refined.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    let primary = refined[0];
    let others = refined[1..]
        .iter()
        .filter(|p| p.gap <= primary.gap * (1.0 + mg.report_within))
        .copied()
        .collect();
    Ok(GapMinimum {
        s_star: primary.s,
        min_gap: primary.gap,
        others,
        coarse_points: grid.len(),
    })
}

/// Fit of `gap ≈ A·e^{c·n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GapFit {
    pub c: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Least-squares line through `(n, ln gap)`.
pub fn fit_gap_exponent(points: &[(f64, f64)]) -> Result<GapFit> {
    if points.len() < 4 {
        return Err(Error::param("points", "need at least 4 points"));
    }
    if points.iter().any(|&(_, g)| g.is_nan() || g <= 0.0) {
        return Err(Error::param("points", "gaps must be positive"));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all n values coincide"));
    }
    let c = sxy / sxx;
    let intercept = my - c * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let d = y - (intercept + c * x);
            d * d
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(GapFit {
        c,
        prefactor: libm::exp(intercept),
        r2,
    })
}
