//! Overlap traces of the instantaneous ground and first excited states with
//! the problem eigenspaces, the (γ, ε) anti-crossing detector, hyperbola fits
//! around the minimum gap, and the Hamming-weight signal.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{brute_force_ising, EnergyLevel, IsingModel};
use crate::spectra::SpectralSweep;

/// Distinct levels of the problem Hamiltonian with their basis-state subspaces.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FinalBasis {
    pub levels: Vec<EnergyLevel>,
    level_of: Vec<usize>,
}

impl FinalBasis {
    pub fn from_ising(model: &IsingModel) -> Result<Self> {
        let levels = brute_force_ising(model)?;
        let mut level_of = vec![0; 1 << model.n()];
        for (l, level) in levels.iter().enumerate() {
            for st in &level.states {
                level_of[st.index()] = l;
            }
        }
        Ok(Self { levels, level_of })
    }

    pub fn dim(&self) -> usize {
        self.level_of.len()
    }

    /// Level index of basis state `z`.
    pub fn level_of(&self, z: usize) -> usize {
        self.level_of[z]
    }

    pub fn m0(&self) -> usize {
        self.levels[0].states.len()
    }

    pub fn m1(&self) -> usize {
        self.levels.get(1).map_or(0, |l| l.states.len())
    }

    /// Smallest Hamming distance between a level-1 and a level-0 state.
    pub fn gs_fs_distance(&self) -> Option<u32> {
        let fs = &self.levels.get(1)?.states;
        self.levels[0]
            .states
            .iter()
            .flat_map(|g| fs.iter().map(move |f| g.hamming(*f)))
            .min()
    }
}

/// `a[k][i] = ‖P_k E_0(s_i)‖²` and `b[k][i] = ‖P_k E_1(s_i)‖²` for the
/// lowest `K` problem levels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OverlapTraces {
    pub grid: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl OverlapTraces {
    pub fn levels(&self) -> usize {
        self.a.len()
    }

    /// `(a0, a1, b0, b1)` at grid point `i`.
    fn pairs(&self, i: usize) -> [f64; 4] {
        [self.a[0][i], self.a[1][i], self.b[0][i], self.b[1][i]]
    }
}

pub fn overlaps(
    sweep: &SpectralSweep,
    basis: &FinalBasis,
    levels: usize,
    cluster_tol: f64,
) -> Result<OverlapTraces> {
    if levels < 2 || levels > basis.levels.len() {
        return Err(Error::param(
            "K",
            format!("need 2 <= K <= {} distinct levels", basis.levels.len()),
        ));
    }
    let mut a = vec![Vec::with_capacity(sweep.solutions.len()); levels];
    let mut b = vec![Vec::with_capacity(sweep.solutions.len()); levels];
    for sol in &sweep.solutions {
        let v0 = sol
            .vectors
            .first()
            .ok_or(Error::param("sweep", "no eigenvectors"))?;
        if v0.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: v0.len(),
            });
        }
        let i1 = sol.first_excited(cluster_tol).ok_or_else(|| {
            Error::param(
                "k",
                format!("first excited level not resolved at s = {}", sol.s),
            )
        })?;
        let v1 = &sol.vectors[i1];
        let mut pa = vec![0.0; levels];
        let mut pb = vec![0.0; levels];
        for z in 0..v0.len() {
            let l = basis.level_of(z);
            if l < levels {
                pa[l] += v0[z] * v0[z];
                pb[l] += v1[z] * v1[z];
            }
        }
        for l in 0..levels {
            a[l].push(pa[l]);
            b[l].push(pb[l]);
        }
    }
    Ok(OverlapTraces {
        grid: sweep.grid(),
        a,
        b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    None,
    Strong,
    Weak,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Verdict::None => "none",
            Verdict::Strong => "strong",
            Verdict::Weak => "weak",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DetectorParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub gamma_prime: f64,
    /// Smallest half-width, in grid steps, that may certify a window.
    pub min_steps: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            gamma: 0.15,
            epsilon: 0.001,
            gamma_prime: 0.5,
            min_steps: 2,
        }
    }
}

impl DetectorParams {
    fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) || !unit(self.gamma_prime) || self.gamma_prime < self.gamma {
            return Err(Error::param("gamma", "need 0 <= gamma <= gamma' <= 1"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::param("epsilon", "must be non-negative"));
        }
        if self.min_steps == 0 {
            return Err(Error::param("min_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Overlaps at one schedule point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Sample {
    pub s: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl Sample {
    fn a0n(&self) -> f64 {
        self.a0 / (self.a0 + self.a1)
    }

    fn b0n(&self) -> f64 {
        self.b0 / (self.b0 + self.b1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Witness {
    pub left: Sample,
    pub crossing: Sample,
    pub right: Sample,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AntiCrossingReport {
    pub verdict: Verdict,
    pub s_star: f64,
    pub min_gap: f64,
    /// Where `a_0 = a_1`, if such a point carries enough weight.
    pub s_cross: Option<f64>,
    /// Where `b_0 = b_1`, nearest to `s_cross`.
    pub s_balance_b: Option<f64>,
    /// Smallest certifying half-width.
    pub delta: Option<f64>,
    /// Largest half-width on which condition 1 holds.
    pub delta_max: Option<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    pub gamma_prime: f64,
    pub witness: Option<Witness>,
}

fn grid_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::param("grid", "need at least 3 grid points"));
    }
    Ok((grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64)
}

/// Linear-interpolated zero crossings of `f` with the total weight `w` at
/// each crossing.
fn crossings(grid: &[f64], f: &[f64], w: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        let (f0, f1) = (f[i], f[i + 1]);
        if f0 * f1 <= 0.0 && f0 != f1 {
            let t = f0 / (f0 - f1);
            let s = grid[i] + t * (grid[i + 1] - grid[i]);
            out.push((s, w[i] + t * (w[i + 1] - w[i])));
        }
    }
    out
}

fn interpolate(traces: &OverlapTraces, s: f64) -> Sample {
    let g = &traces.grid;
    let i = g.partition_point(|&x| x <= s).clamp(1, g.len() - 1) - 1;
    let t = (s - g[i]) / (g[i + 1] - g[i]);
    let p = traces.pairs(i);
    let q = traces.pairs(i + 1);
    let v = |j: usize| p[j] + t * (q[j] - p[j]);
    Sample {
        s,
        a0: v(0),
        a1: v(1),
        b0: v(2),
        b1: v(3),
    }
}

fn sample(traces: &OverlapTraces, i: usize) -> Sample {
    let [a0, a1, b0, b1] = traces.pairs(i);
    Sample {
        s: traces.grid[i],
        a0,
        a1,
        b0,
        b1,
    }
}

fn weights_hold(x: &Sample, gamma: f64) -> bool {
    x.a0 + x.a1 >= 1.0 - gamma && x.b0 + x.b1 >= 1.0 - gamma
}

fn left_end_holds(x: &Sample, gamma: f64) -> bool {
    x.a0n() <= gamma && x.b0n() >= 1.0 - gamma
}

fn right_end_holds(x: &Sample, gamma: f64) -> bool {
    x.a0n() >= 1.0 - gamma && x.b0n() <= gamma
}

/// Smallest symmetric window `[c − m, c + m]` (in grid steps, `m >= min_steps`)
/// where condition 1 holds throughout, the endpoints satisfy condition 3 and
/// `s_b` lies inside. Returns `(m, largest m for which condition 1 held)`.
fn search_window(
    traces: &OverlapTraces,
    c: usize,
    s_b: f64,
    min_steps: usize,
    gamma_left: f64,
    gamma_right: f64,
) -> (Option<usize>, usize) {
    let last = traces.grid.len() - 1;
    if !weights_hold(&sample(traces, c), gamma_left.min(gamma_right)) {
        return (None, 0);
    }
    let mut reach = 0;
    let mut found = None;
    for m in 1..=c.min(last - c) {
        let left = sample(traces, c - m);
        let right = sample(traces, c + m);
        if !weights_hold(&left, gamma_left) || !weights_hold(&right, gamma_right) {
            break;
        }
        reach = m;
        let contains = left.s <= s_b && s_b <= right.s;
        if found.is_none()
            && m >= min_steps
            && contains
            && left_end_holds(&left, gamma_left)
            && right_end_holds(&right, gamma_right)
        {
            found = Some(m);
        }
    }
    (found, reach)
}

/// Anti-crossing verdict from overlap traces around a located minimum gap.
///
/// Condition 2 is checked on each pair separately, normalized by its total
/// weight: `a_0 = a_1` at `s_cross` and `b_0 = b_1` at `s_balance_b`, both
/// within `ε` and inside the window. Condition 1 uses raw sums on every grid
/// point of the window; condition 3 uses normalized values at its endpoints.
pub fn detect(
    traces: &OverlapTraces,
    s_star: f64,
    min_gap: f64,
    params: &DetectorParams,
) -> Result<AntiCrossingReport> {
    params.validate()?;
    if traces.levels() < 2 {
        return Err(Error::param("traces", "need at least two levels"));
    }
    let h = grid_step(&traces.grid)?;
    let (lo, hi) = (traces.grid[0], traces.grid[traces.grid.len() - 1]);
    if s_star - lo < h || hi - s_star < h {
        return Err(Error::WindowUnavailable(s_star));
    }
    let mut report = AntiCrossingReport {
        verdict: Verdict::None,
        s_star,
        min_gap,
        s_cross: None,
        s_balance_b: None,
        delta: None,
        delta_max: None,
        gamma: params.gamma,
        epsilon: params.epsilon,
        gamma_prime: params.gamma_prime,
        witness: None,
    };
    let n = traces.grid.len();
    let diff = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p - q).collect() };
    let total =
        |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + q).collect() };
    let heavy = |c: &(f64, f64)| c.1 >= 1.0 - params.gamma_prime;
    let nearest = |v: Vec<(f64, f64)>, to: f64| {
        v.into_iter()
            .filter(heavy)
            .min_by(|x, y| (x.0 - to).abs().total_cmp(&(y.0 - to).abs()))
    };
    let (a, b) = (&traces.a, &traces.b);
    let Some((s_x, _)) = nearest(
        crossings(&traces.grid, &diff(&a[0], &a[1]), &total(&a[0], &a[1])),
        s_star,
    ) else {
        return Ok(report);
    };
    report.s_cross = Some(s_x);
    let Some((s_b, _)) = nearest(
        crossings(&traces.grid, &diff(&b[0], &b[1]), &total(&b[0], &b[1])),
        s_x,
    ) else {
        return Ok(report);
    };
    report.s_balance_b = Some(s_b);
    let at_x = interpolate(traces, s_x);
    let at_b = interpolate(traces, s_b);
    let balanced =
        (at_x.a0n() - 0.5).abs() <= params.epsilon && (at_b.b0n() - 0.5).abs() <= params.epsilon;
    if !balanced {
        return Ok(report);
    }
    let c = traces
        .grid
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - s_x).abs().total_cmp(&(y.1 - s_x).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
        .clamp(1, n - 2);

    let witness = |m: usize| Witness {
        left: sample(traces, c - m),
        crossing: at_x,
        right: sample(traces, c + m),
    };
    let (strong, reach) =
        search_window(traces, c, s_b, params.min_steps, params.gamma, params.gamma);
    report.delta_max = Some(reach as f64 * h);
    if let Some(m) = strong {
        report.verdict = Verdict::Strong;
        report.delta = Some(m as f64 * h);
        report.witness = Some(witness(m));
        return Ok(report);
    }
    let (weak, _) = search_window(
        traces,
        c,
        s_b,
        params.min_steps,
        params.gamma_prime,
        params.gamma,
    );
    if let Some(m) = weak {
        report.verdict = Verdict::Weak;
        report.delta = Some(m as f64 * h);
        report.witness = Some(witness(m));
    }
    Ok(report)
}

/// Parameters of `E±(s) = E* + B(s − s*) ± ½·sqrt(Δ² + A²(s − s*)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HyperbolaFit {
    pub delta_min: f64,
    pub a: f64,
    pub b: f64,
    pub e_star: f64,
    /// Root-mean-square deviation of the fitted branches from the data.
    pub rms_residual: f64,
    /// Condition number of the normal equations of the gap fit.
    pub condition: f64,
}

/// Least-squares line `y ≈ p + q·x`; returns `(p, q, condition)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = m * sxx - sx * sx;
    let q = (m * sxy - sx * sy) / det;
    let p = (sy - q * sx) / m;
    // eigenvalues of [[m, sx], [sx, sxx]]
    let tr = m + sxx;
    let disc = libm::sqrt(((m - sxx) * (m - sxx) + 4.0 * sx * sx).max(0.0));
    let cond = (tr + disc) / ((tr - disc).max(f64::MIN_POSITIVE));
    (p, q, cond)
}

/// Fits the two lowest distinct levels on `[s* − half_width, s* + half_width]`.
///
/// The sum of the branches is linear in `s − s*` and the squared splitting is
/// linear in `(s − s*)²`, so both reduce to ordinary line fits.
pub fn hyperbola_fit(
    sweep: &SpectralSweep,
    s_star: f64,
    half_width: f64,
    cluster_tol: f64,
) -> Result<HyperbolaFit> {
    let mut xs = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for sol in &sweep.solutions {
        let x = sol.s - s_star;
        if x.abs() > half_width {
            continue;
        }
        if let Some(i) = sol.first_excited(cluster_tol) {
            xs.push(x);
            lower.push(sol.values[0]);
            upper.push(sol.values[i]);
        }
    }
    if xs.len() < 7 {
        return Err(Error::param("window", "need at least 7 points"));
    }
    let sums: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| l + u).collect();
    let (p, q, _) = line_fit(&xs, &sums);
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let split2: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| (u - l) * (u - l))
        .collect();
    let (d2, a2, condition) = line_fit(&x2, &split2);
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::IllConditioned(format!(
            "condition number {condition:e}"
        )));
    }
    if a2 < 0.0 {
        return Err(Error::IllConditioned(format!("negative slope term {a2:e}")));
    }
    let delta_min = libm::sqrt(d2.max(0.0));
    let a = libm::sqrt(a2);
    let (e_star, b) = (p / 2.0, q / 2.0);
    let mut sse = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let mid = e_star + b * x;
        let half = 0.5 * libm::sqrt(delta_min * delta_min + a2 * x * x);
        sse += (mid - half - lower[i]).powi(2) + (mid + half - upper[i]).powi(2);
    }
    Ok(HyperbolaFit {
        delta_min,
        a,
        b,
        e_star,
        rms_residual: libm::sqrt(sse / (2 * xs.len()) as f64),
        condition,
    })
}

/// `a_1(s)·d(FS, GS)`: the excited-subspace weight times the Hamming distance
/// separating the two lowest problem levels.
pub fn hamming_weight_signal(traces: &OverlapTraces, basis: &FinalBasis) -> Vec<(f64, f64)> {
    let d = basis.gs_fs_distance().unwrap_or(0) as f64;
    traces
        .grid
        .iter()
        .zip(&traces.a[1])
        .map(|(&s, &a1)| (s, a1 * d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{DriverSpec, SystemHamiltonian};
    use crate::instances::{gen_chain5, mis_to_ising};
    use crate::spectra::{
        default_grid, locate_min_gap, sweep, EigenSolution, MinGapConfig, Sequential, SolverConfig,
    };

    fn chain5(w4: f64, j: f64) -> SystemHamiltonian {
        let g = gen_chain5(w4).unwrap().with_uniform_penalty(j).unwrap();
        SystemHamiltonian::new(mis_to_ising(&g).unwrap(), DriverSpec::X).unwrap()
    }

    fn traces_for(
        sys: &SystemHamiltonian,
        step: f64,
    ) -> (OverlapTraces, FinalBasis, SpectralSweep) {
        let fb = FinalBasis::from_ising(sys.ising()).unwrap();
        let sw = sweep(
            sys,
            &default_grid(step).unwrap(),
            4,
            &SolverConfig::default(),
            &Sequential,
        )
        .unwrap();
        (overlaps(&sw, &fb, 5, 1e-10).unwrap(), fb, sw)
    }

    #[test]
    fn endpoint_identities() {
        let sys = chain5(1.49, 1.52);
        let (t, fb, _) = traces_for(&sys, 0.05);
        let last = t.grid.len() - 1;
        assert!((t.a[0][last] - 1.0).abs() < 1e-9 && t.a[1][last].abs() < 1e-9);
        assert!((t.b[1][last] - 1.0).abs() < 1e-9 && t.b[0][last].abs() < 1e-9);
        assert!((t.a[0][0] - fb.m0() as f64 / 32.0).abs() < 1e-12);
        assert!((t.a[1][0] - fb.m1() as f64 / 32.0).abs() < 1e-12);
        for i in 0..t.grid.len() {
            let sa: f64 = (0..5).map(|k| t.a[k][i]).sum();
            let sb: f64 = (0..5).map(|k| t.b[k][i]).sum();
            assert!(sa <= 1.0 + 1e-9 && sb <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn hamming_distance_of_chain5() {
        let sys = chain5(1.49, 1.52);
        let (t, fb, _) = traces_for(&sys, 0.1);
        assert_eq!(fb.gs_fs_distance(), Some(5));
        let sig = hamming_weight_signal(&t, &fb);
        assert!(sig.last().unwrap().1.abs() < 1e-9);
    }

    #[test]
    fn strong_crossing_on_first_example() {
        let sys = chain5(1.49, 1.52);
        let gm = locate_min_gap(
            &sys,
            &MinGapConfig::default(),
            &SolverConfig::default(),
            &Sequential,
        )
        .unwrap();
        let (t, _, _) = traces_for(&sys, 1e-3);
        let r = detect(&t, gm.s_star, gm.min_gap, &DetectorParams::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Strong, "{r:?}");
        let d = r.delta.unwrap();
        assert!((d - 0.008).abs() <= 0.004, "{d}");
        let loose = DetectorParams {
            gamma: 0.3,
            epsilon: 0.01,
            ..Default::default()
        };
        assert_eq!(
            detect(&t, gm.s_star, gm.min_gap, &loose).unwrap().verdict,
            Verdict::Strong
        );
    }

    #[test]
    fn window_needs_interior_minimum() {
        let sys = chain5(1.49, 1.52);
        let (t, _, _) = traces_for(&sys, 0.01);
        assert!(matches!(
            detect(&t, 0.995, 0.1, &DetectorParams::default()),
            Err(Error::WindowUnavailable(_))
        ));
    }

    fn synthetic(delta: f64, a: f64, b: f64, s0: f64) -> SpectralSweep {
        let solutions = (0..41)
            .map(|i| {
                let s = s0 - 0.02 + i as f64 * 0.001;
                let x = s - s0;
                let half = 0.5 * libm::sqrt(delta * delta + a * a * x * x);
                EigenSolution {
                    s,
                    values: vec![-1.0 + b * x - half, -1.0 + b * x + half],
                    vectors: vec![],
                }
            })
            .collect();
        SpectralSweep { k: 2, solutions }
    }

    #[test]
    fn hyperbola_recovers_synthetic_parameters() {
        let sw = synthetic(1e-3, 2.0, 0.1, 0.6);
        let f = hyperbola_fit(&sw, 0.6, 0.02, 1e-12).unwrap();
        assert!((f.delta_min - 1e-3).abs() <= 1e-6 * 1e-3 * 10.0, "{f:?}");
        assert!((f.a - 2.0).abs() <= 2e-6 && (f.b - 0.1).abs() <= 1e-7);
        assert!(f.rms_residual < 1e-12);
        let sym = hyperbola_fit(&synthetic(1e-3, 2.0, 0.0, 0.6), 0.6, 0.02, 1e-12).unwrap();
        assert!(sym.b.abs() < 1e-10);
        assert!(hyperbola_fit(&sw, 0.6, 0.002, 1e-12).is_err());
    }

    #[test]
    fn hyperbola_matches_measured_gap() {
        let sys = chain5(1.49, 1.52);
        let gm = locate_min_gap(
            &sys,
            &MinGapConfig::default(),
            &SolverConfig::default(),
            &Sequential,
        )
        .unwrap();
        let grid: Vec<f64> = (-10..=10).map(|i| gm.s_star + i as f64 * 2e-4).collect();
        let sw = sweep(&sys, &grid, 2, &SolverConfig::default(), &Sequential).unwrap();
        let f = hyperbola_fit(&sw, gm.s_star, 0.0025, 1e-10).unwrap();
        assert!(
            (f.delta_min - gm.min_gap).abs() <= 0.1 * gm.min_gap,
            "{f:?} {gm:?}"
        );
    }
}
