//! Run configuration and the work behind each subcommand.

use std::path::PathBuf;

use gapscope_core::anticross::{
    detect, overlaps, AntiCrossingReport, DetectorParams, FinalBasis, OverlapTraces,
};
use gapscope_core::hamiltonian::{DriverSpec, SystemHamiltonian};
use gapscope_core::instances::{gen_chain5, gen_chain7, gen_loop_gadget, Edge, IsingModel};
use gapscope_core::lens::{neighbors, predict, Cutoff};
use gapscope_core::linalg::LanczosConfig;
use gapscope_core::reduction::{reduce_and_verify, reduced_instance_to_mis_ising, PenaltyRule};
use gapscope_core::scaling::{eigen_scaling_check, min_gap_scale_report, ScalingConfig};
use gapscope_core::spectra::{
    default_grid, locate_min_gap, sweep, GapMinimum, GridExecutor, MinGapConfig, SolverConfig,
    SpectralSweep,
};

use crate::error::{CliError, Result};
use crate::io::{read_instance, read_json, DriverEdges, DriverFile, Instance, Table};
use crate::report::{self, *};

/// Built-in instance families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Chain5 { w4: f64 },
    Chain7,
    Loop { n: usize, r: f64 },
}

impl Generator {
    pub fn instance(&self) -> Result<Instance> {
        Ok(match *self {
            Generator::Chain5 { w4 } => Instance::Graph(gen_chain5(w4)?),
            Generator::Chain7 => Instance::Graph(gen_chain7()),
            Generator::Loop { n, r } => Instance::Ising(gen_loop_gadget(n, r)?),
        })
    }

    pub fn label(&self) -> String {
        match *self {
            Generator::Chain5 { w4 } => format!("chain5(w4={w4})"),
            Generator::Chain7 => "chain7".into(),
            Generator::Loop { n, r } => format!("loop(n={n},R={r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Generated(Generator),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriverChoice {
    X,
    /// `edges = None` puts a pair term on every problem coupling.
    XX {
        lambda: f64,
        edges: Option<Vec<Edge>>,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    /// Uniform penalty replacing a graph instance's own.
    pub penalty: Option<f64>,
    /// Divide the problem by its largest coefficient.
    pub normalize: bool,
    /// Multiply the problem by this factor (after normalization).
    pub scale: Option<f64>,
    pub driver: DriverChoice,
    pub grid_step: f64,
    /// Eigenpairs per grid point.
    pub k: usize,
    /// Problem levels tracked by the overlap traces.
    pub levels: usize,
    pub detector: DetectorParams,
    /// Problem scale relative to the base system.
    pub alpha: Option<f64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(source: Source) -> Self {
        Self {
            source,
            penalty: None,
            normalize: false,
            scale: None,
            driver: DriverChoice::X,
            grid_step: 1e-3,
            k: 8,
            levels: 5,
            detector: DetectorParams::default(),
            alpha: None,
            out_dir: PathBuf::from("."),
            workers: 0,
            seed: LanczosConfig::default().seed,
        }
    }

    pub fn generated(g: Generator) -> Self {
        Self::new(Source::Generated(g))
    }

    pub fn with_penalty(mut self, j: f64) -> Self {
        self.penalty = Some(j);
        self
    }

    pub fn with_driver(mut self, d: DriverChoice) -> Self {
        self.driver = d;
        self
    }

    /// Checks every numeric parameter before any work starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::usage(m.to_string()));
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return bad("--grid-step must lie in (0, 0.5]");
        }
        if self.k < 2 {
            return bad("--k must be at least 2");
        }
        if self.levels < 2 {
            return bad("--levels must be at least 2");
        }
        if matches!(self.penalty, Some(j) if !(j > 0.0 && j.is_finite())) {
            return bad("--penalty must be positive");
        }
        if matches!(self.scale, Some(x) if !(x > 0.0 && x.is_finite())) {
            return bad("--scale must be positive");
        }
        if matches!(self.alpha, Some(a) if !(a > 0.0 && a.is_finite())) {
            return bad("--alpha must be positive");
        }
        let d = &self.detector;
        if !(0.0..=1.0).contains(&d.gamma) || !(d.gamma..=1.0).contains(&d.gamma_prime) {
            return bad("detector needs 0 <= gamma <= gamma' <= 1");
        }
        if d.epsilon.is_nan() || d.epsilon < 0.0 {
            return bad("--epsilon must be non-negative");
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            lanczos: LanczosConfig {
                seed: self.seed,
                ..LanczosConfig::default()
            },
            ..SolverConfig::default()
        }
    }

    pub fn min_gap(&self) -> MinGapConfig {
        MinGapConfig {
            step: self.grid_step,
            ..MinGapConfig::default()
        }
    }

    fn instance(&self) -> Result<(String, Instance)> {
        match &self.source {
            Source::File(p) => Ok((p.display().to_string(), read_instance(p)?)),
            Source::Generated(g) => Ok((g.label(), g.instance()?)),
        }
    }

    /// Loads, penalizes, normalizes and scales the problem and resolves the driver.
    pub fn problem(&self) -> Result<Problem> {
        self.validate()?;
        let (mut label, inst) = self.instance()?;
        let mut ising = inst.ising(self.penalty)?;
        if let Some(j) = self.penalty {
            label.push_str(&format!(",J={j}"));
        }
        if self.normalize {
            ising = ising.normalized();
            label.push_str(",normalized");
        }
        if let Some(x) = self.scale {
            ising = ising.scaled(x);
            label.push_str(&format!(",scale={x}"));
        }
        let driver = match &self.driver {
            DriverChoice::X => DriverSpec::X,
            DriverChoice::XX {
                lambda,
                edges: None,
            } => DriverSpec::xx_on_problem(*lambda, &ising),
            DriverChoice::XX {
                lambda,
                edges: Some(e),
            } => DriverSpec::xx(*lambda, e.iter().copied()),
            DriverChoice::File(p) => read_json::<DriverFile>(p)?.resolve(&ising)?,
        };
        let base = SystemHamiltonian::new(ising.clone(), driver.clone())?;
        Ok(Problem {
            label,
            ising,
            driver,
            base,
            alpha: self.alpha.unwrap_or(1.0),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub ising: IsingModel,
    pub driver: DriverSpec,
    /// System at `alpha = 1`.
    pub base: SystemHamiltonian,
    pub alpha: f64,
}

impl Problem {
    pub fn system(&self) -> Result<SystemHamiltonian> {
        Ok(self.base.clone().with_alpha(self.alpha)?)
    }

    pub fn subject(&self) -> Subject {
        Subject {
            instance: self.label.clone(),
            n: self.ising.n(),
            driver: driver_file(&self.driver),
        }
    }
}

pub fn driver_file(d: &DriverSpec) -> DriverFile {
    match d {
        DriverSpec::X => DriverFile::X,
        _ => DriverFile::XX {
            lambda: d.lambda(),
            edges: DriverEdges::List(d.pair_edges().to_vec()),
        },
    }
}

/// Sweep, min-gap location and overlap traces for one system.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub sweep: SpectralSweep,
    pub minimum: GapMinimum,
    pub basis: FinalBasis,
    pub traces: OverlapTraces,
}

impl Analysis {
    pub fn detect(&self, params: &DetectorParams) -> Result<AntiCrossingReport> {
        Ok(detect(
            &self.traces,
            self.minimum.s_star,
            self.minimum.min_gap,
            params,
        )?)
    }

    pub fn energy_table(&self, cluster_tol: f64) -> Table {
        let k = self.sweep.k;
        let mut t = Table::new(
            std::iter::once("s".to_string())
                .chain((0..k).map(|i| format!("E{i}")))
                .chain(std::iter::once("gap".to_string())),
        );
        for sol in &self.sweep.solutions {
            let mut row = vec![sol.s];
            row.extend(&sol.values);
            row.push(sol.gap(cluster_tol).unwrap_or(f64::NAN));
            t.push(row);
        }
        t
    }

    pub fn trace_table(&self) -> Table {
        let k = self.traces.levels();
        let mut t = Table::new(
            std::iter::once("s".to_string())
                .chain((0..k).map(|i| format!("a{i}")))
                .chain((0..k).map(|i| format!("b{i}"))),
        );
        for (i, &s) in self.traces.grid.iter().enumerate() {
            let mut row = vec![s];
            row.extend(self.traces.a.iter().map(|x| x[i]));
            row.extend(self.traces.b.iter().map(|x| x[i]));
            t.push(row);
        }
        t
    }
}

pub fn analyze<E: GridExecutor>(
    cfg: &RunConfig,
    sys: &SystemHamiltonian,
    exec: &E,
) -> Result<Analysis> {
    let solver = cfg.solver();
    let minimum = locate_min_gap(sys, &cfg.min_gap(), &solver, exec)?;
    let k = cfg.k.min(sys.dim());
    let sweep = sweep(sys, &default_grid(cfg.grid_step)?, k, &solver, exec)?;
    let basis = FinalBasis::from_ising(sys.ising())?;
    let levels = cfg.levels.min(basis.levels.len());
    let traces = overlaps(&sweep, &basis, levels, solver.cluster_tol)?;
    Ok(Analysis {
        sweep,
        minimum,
        basis,
        traces,
    })
}

pub struct SweepOutput {
    pub analysis: Analysis,
    pub summary: GapSummary,
}

pub fn run_sweep<E: GridExecutor>(cfg: &RunConfig, exec: &E) -> Result<SweepOutput> {
    let p = cfg.problem()?;
    let sys = p.system()?;
    let analysis = analyze(cfg, &sys, exec)?;
    let scaling = if p.alpha != 1.0 {
        let sc = ScalingConfig {
            min_gap: cfg.min_gap(),
            ..ScalingConfig::default()
        };
        Some(min_gap_scale_report(
            &p.base,
            p.alpha,
            &sc,
            &cfg.solver(),
            exec,
        )?)
    } else {
        None
    };
    let m = &analysis.minimum;
    let summary = GapSummary {
        schema: report::GAP_SUMMARY,
        subject: p.subject(),
        alpha: p.alpha,
        grid_step: cfg.grid_step,
        k: analysis.sweep.k,
        s_star: m.s_star,
        min_gap: m.min_gap,
        others: m.others.clone(),
        coarse_points: m.coarse_points,
        scaling,
    };
    Ok(SweepOutput { analysis, summary })
}

pub fn run_detect<E: GridExecutor>(cfg: &RunConfig, exec: &E) -> Result<(Analysis, DetectReport)> {
    let p = cfg.problem()?;
    let analysis = analyze(cfg, &p.system()?, exec)?;
    let detection = analysis.detect(&cfg.detector)?;
    let report = DetectReport {
        schema: report::DETECT,
        subject: p.subject(),
        alpha: p.alpha,
        grid_step: cfg.grid_step,
        levels: analysis.traces.levels(),
        params: cfg.detector,
        detection,
    };
    Ok((analysis, report))
}

pub fn run_lens(cfg: &RunConfig, cutoff: Cutoff, rows: usize) -> Result<LensReport> {
    let p = cfg.problem()?;
    let lp = predict(&p.ising, &p.driver, cutoff)?;
    let basis = FinalBasis::from_ising(&p.ising)?;
    let touches = |level: usize, st| {
        basis.levels[level]
            .states
            .iter()
            .any(|&a| neighbors(a, &p.driver).contains(&st))
    };
    let spectrum = basis
        .levels
        .iter()
        .enumerate()
        .flat_map(|(l, lev)| lev.states.iter().map(move |&st| (l, lev.energy, st)))
        .take(rows)
        .map(|(level, energy, st)| SpectrumRow {
            level,
            bits: st.bits(),
            energy,
            gs_neighbor: level != 0 && touches(0, st),
            fs_neighbor: level != 1 && touches(1, st),
        })
        .collect();
    Ok(LensReport {
        schema: report::LENS,
        subject: p.subject(),
        cutoff,
        cutoff_note: "the low-energy cutoff is a tool setting, not a derived quantity",
        prediction: lp.prediction,
        rule_trace: lp.rule_trace,
        ground: (&lp.ground).into(),
        excited: (&lp.excited).into(),
        spectrum,
    })
}

/// Fixed-width low-spectrum table with neighbor markers.
pub fn lens_table(r: &LensReport) -> String {
    let mut out = format!(
        "{:>5}  {:<w$}  {:>14}  GS  FS\n",
        "level",
        "state",
        "energy",
        w = r.subject.n
    );
    for row in &r.spectrum {
        out.push_str(&format!(
            "{:>5}  {}  {:>14.6}  {:^2}  {:^2}\n",
            row.level,
            row.bits,
            row.energy,
            if row.gs_neighbor { "*" } else { "" },
            if row.fs_neighbor { "*" } else { "" },
        ));
    }
    out.push_str(&format!("prediction: {}\n{}\n", r.prediction, r.rule_trace));
    out
}

pub struct ReduceOutput {
    pub report: ReduceReport,
    pub dot: String,
}

pub fn run_reduce<E: GridExecutor>(
    cfg: &RunConfig,
    rule: PenaltyRule,
    with_detection: bool,
    exec: &E,
) -> Result<ReduceOutput> {
    let p = cfg.problem()?;
    let (cg, verification) = reduce_and_verify(&p.ising)?;
    let reduced = match rule {
        PenaltyRule::Default => cg.graph.clone().with_default_penalties(),
        PenaltyRule::MinPlus(m) => {
            let w = cg.graph.weights();
            let pen = cg
                .graph
                .edges()
                .iter()
                .map(|&(i, j)| w[i].min(w[j]) + m)
                .collect();
            cg.graph.clone().with_penalties(pen)?
        }
        PenaltyRule::Uniform(l) => cg.graph.clone().with_uniform_penalty(l)?,
    };
    let detection = if with_detection {
        let m = reduced_instance_to_mis_ising(&cg, rule)?;
        let sys = SystemHamiltonian::new(m, DriverSpec::X)?;
        let a = analyze(cfg, &sys, exec)?;
        let d = a.detect(&cfg.detector)?;
        Some(ReducedDetection {
            s_star: a.minimum.s_star,
            min_gap: a.minimum.min_gap,
            verdict: d.verdict,
        })
    } else {
        None
    };
    let terms = cg
        .terms
        .iter()
        .enumerate()
        .map(|(vertex, t)| TermView {
            vertex,
            term: t.label(),
            weight: t.coeff,
        })
        .collect();
    let report = ReduceReport {
        schema: report::REDUCE,
        instance: p.label,
        n: p.ising.n(),
        penalty_rule: rule,
        decoded_bits: verification.decoded.bits(),
        verification,
        terms,
        reduced_instance: (&reduced).into(),
        detection,
    };
    Ok(ReduceOutput {
        report,
        dot: cg.to_dot(),
    })
}

pub const EIGEN_TOLERANCE: f64 = 1e-9;

pub fn run_scalecheck<E: GridExecutor>(
    cfg: &RunConfig,
    alpha: f64,
    ts: &[f64],
    sharp_curvature: Option<f64>,
    exec: &E,
) -> Result<ScaleReport> {
    let p = cfg.problem()?;
    let solver = cfg.solver();
    let mut sc = ScalingConfig {
        min_gap: cfg.min_gap(),
        ..ScalingConfig::default()
    };
    if let Some(c) = sharp_curvature {
        sc.sharp_curvature = c;
    }
    let report = min_gap_scale_report(&p.base, alpha, &sc, &solver, exec)?;
    let k = cfg.k.min(p.base.dim());
    let eigen_checks = ts
        .iter()
        .map(|&t| eigen_scaling_check(&p.base, alpha, t, k, &solver))
        .collect::<gapscope_core::Result<Vec<_>>>()?;
    let eigen_scaling = eigen_checks.iter().all(|c| {
        c.max_residual <= EIGEN_TOLERANCE * (1.0 + alpha) && c.max_misalignment <= EIGEN_TOLERANCE
    });
    let mut violations: Vec<String> = report.violations().into_iter().map(String::from).collect();
    if !eigen_scaling {
        violations.push("eigenvalues or eigenvectors do not rescale".into());
    }
    let claims = ScaleClaims {
        ordering: report.claims.ordering,
        sandwich: report.claims.sandwich,
        sharp_factor: report.claims.sharp_factor,
        eigen_scaling,
    };
    Ok(ScaleReport {
        schema: report::SCALING,
        subject: p.subject(),
        passed: violations.is_empty(),
        report,
        eigen_checks,
        eigen_tolerance: EIGEN_TOLERANCE,
        claims,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gapscope_core::spectra::Sequential;

    #[test]
    fn validation_rejects_bad_numbers() {
        let base = RunConfig::generated(Generator::Chain5 { w4: 1.49 });
        let mut c = base.clone();
        c.grid_step = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.detector.gamma = 0.7;
        assert!(c.validate().is_err());
        assert!(base.clone().with_penalty(-1.0).validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn penalty_override_on_ising_is_usage_error() {
        let c = RunConfig::generated(Generator::Loop { n: 4, r: 4.0 }).with_penalty(2.0);
        assert_eq!(c.problem().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn fig4_summary() {
        let mut c = RunConfig::generated(Generator::Chain5 { w4: 1.49 }).with_penalty(1.52);
        c.grid_step = 0.01;
        let (_, r) = run_detect(&c, &Sequential).unwrap();
        assert!((r.detection.s_star - 0.7479).abs() < 0.01);
        assert_eq!(r.subject.n, 5);
    }

    #[test]
    fn lens_table_marks_neighbors() {
        let c = RunConfig::generated(Generator::Chain5 { w4: 1.49 }).with_penalty(1.52);
        let r = run_lens(&c, Cutoff::default(), 17).unwrap();
        assert_eq!(r.spectrum.len(), 17);
        assert_eq!(r.spectrum[0].bits, "10101");
        assert!(!r.spectrum[0].gs_neighbor);
        let text = lens_table(&r);
        assert!(text.contains("prediction: anti-crossing"));
    }

    #[test]
    fn reduce_loop_gadget() {
        let c = RunConfig::generated(Generator::Loop { n: 4, r: 4.0 });
        let out = run_reduce(&c, PenaltyRule::Default, false, &Sequential).unwrap();
        assert_eq!(out.report.verification.n_terms, 7);
        assert_eq!(out.report.verification.mis_weight, 12.0);
        assert!(out.dot.starts_with("graph conflict"));
    }
}
