//! Argument parsing and subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapscope_core::anticross::DetectorParams;
use gapscope_core::lens::Cutoff;
use gapscope_core::reduction::PenaltyRule;

use crate::error::{CliError, Result};
use crate::io::{to_json, write_json, write_text, InstanceFile};
use crate::parallel::Rayon;
use crate::reproduce::{reproduce, ReproduceOptions};
use crate::run::{
    lens_table, run_detect, run_lens, run_reduce, run_scalecheck, run_sweep, DriverChoice,
    Generator, RunConfig, Source,
};

pub const OUT_ENV: &str = "GAPSCOPE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "gapscope",
    version,
    about = "Spectral gaps and anti-crossings of Ising annealing Hamiltonians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a built-in instance as JSON.
    Generate(GenerateArgs),
    /// Eigenvalues, overlap traces and the min-gap summary.
    Sweep(RunArgs),
    /// Anti-crossing verdict around the minimum gap.
    Detect(RunArgs),
    /// Low-energy driver neighborhoods and the resulting prediction.
    Lens(LensArgs),
    /// Ising to MIS reduction with exhaustive verification.
    Reduce(ReduceArgs),
    /// Check the min-gap scale factor for a problem scaled by alpha.
    Scalecheck(ScaleArgs),
    /// Rerun a figure configuration and compare with reference values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenName {
    Chain5,
    Chain7,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriverKind {
    X,
    Xx,
}

#[derive(Debug, Clone, Args)]
pub struct GenParams {
    /// Weight of vertex 4 of chain5.
    #[arg(long, default_value_t = 1.49)]
    pub w4: f64,
    /// Loop gadget size (even).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Loop gadget coupling scale.
    #[arg(long = "R", default_value_t = 4.0)]
    pub r: f64,
}

impl GenParams {
    fn generator(&self, name: GenName) -> Generator {
        match name {
            GenName::Chain5 => Generator::Chain5 { w4: self.w4 },
            GenName::Chain7 => Generator::Chain7,
            GenName::Loop => Generator::Loop {
                n: self.n,
                r: self.r,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub name: GenName,
    #[command(flatten)]
    pub params: GenParams,
    /// Uniform penalty stored with a graph instance.
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Output file; defaults to `<out>/<name>.json`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, env = OUT_ENV, default_value = "gapscope-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "gen")]
    pub instance: Option<PathBuf>,
    /// Built-in instance.
    #[arg(long = "gen", value_enum)]
    pub gen: Option<GenName>,
    #[command(flatten)]
    pub params: GenParams,
    /// Uniform penalty for every edge of a graph instance.
    #[arg(long, visible_alias = "J")]
    pub penalty: Option<f64>,
    /// Divide the problem by its largest coefficient.
    #[arg(long)]
    pub normalize: bool,
    /// Multiply the problem by this factor.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = DriverKind::X)]
    pub driver: DriverKind,
    /// Pair-term strength of the XX driver; negative is stoquastic.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub xx_lambda: f64,
    /// Driver JSON file, overriding --driver.
    #[arg(long)]
    pub driver_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    /// Eigenpairs per grid point.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Problem levels tracked in the overlap traces.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    #[arg(long, default_value_t = DetectorParams::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = DetectorParams::default().epsilon)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DetectorParams::default().gamma_prime)]
    pub gamma_prime: f64,
    /// Scale of the problem part relative to the instance.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, env = OUT_ENV, default_value = "gapscope-out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Seed of the iterative eigensolver's start block.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let i = &self.instance;
        let source = match (&i.instance, i.gen) {
            (Some(p), None) => Source::File(p.clone()),
            (None, Some(g)) => Source::Generated(i.params.generator(g)),
            _ => return Err(CliError::usage("give exactly one of --instance or --gen")),
        };
        let mut c = RunConfig::new(source);
        c.penalty = i.penalty;
        c.normalize = i.normalize;
        c.scale = i.scale;
        c.driver = match (&i.driver_file, i.driver) {
            (Some(p), _) => DriverChoice::File(p.clone()),
            (None, DriverKind::X) => DriverChoice::X,
            (None, DriverKind::Xx) => DriverChoice::XX {
                lambda: i.xx_lambda,
                edges: None,
            },
        };
        c.grid_step = self.grid_step;
        c.k = self.k;
        c.levels = self.levels;
        c.detector = DetectorParams {
            gamma: self.gamma,
            epsilon: self.epsilon,
            gamma_prime: self.gamma_prime,
            ..DetectorParams::default()
        };
        c.alpha = self.alpha;
        c.out_dir = self.out.clone();
        c.workers = self.workers;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct LensArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Admit neighbors up to this level index.
    #[arg(long, conflicts_with = "window")]
    pub rank: Option<usize>,
    /// Admit neighbors with energy at most E_1 + W.
    #[arg(long)]
    pub window: Option<f64>,
    /// Basis states listed in the spectrum table.
    #[arg(long, default_value_t = 17)]
    pub rows: usize,
}

fn parse_rule(s: &str) -> std::result::Result<PenaltyRule, String> {
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| format!("bad number {v:?}: {e}"))
    };
    match s.split_once(':') {
        None if s == "default" => Ok(PenaltyRule::Default),
        Some(("min-plus", v)) => Ok(PenaltyRule::MinPlus(num(v)?)),
        Some(("uniform", v)) => Ok(PenaltyRule::Uniform(num(v)?)),
        _ => Err("expected default, min-plus:<margin> or uniform:<lambda>".into()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Penalties of the reduced instance: default, min-plus:<m> or uniform:<l>.
    #[arg(long, default_value = "default", value_parser = parse_rule)]
    pub rule: PenaltyRule,
    /// Also sweep the reduced instance and run the detector.
    #[arg(long)]
    pub detect: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Schedule points for the eigenvalue rescaling check.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [0.2, 0.5, 0.75])]
    pub ts: Vec<f64>,
    /// gap''/gap at s* above which the exact factor is asserted.
    #[arg(long)]
    pub sharp_curvature: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// fig4, fig5, fig6, fig7, fig8, fig9, fig10, fig12, fig13 or loopfit.
    pub figure: String,
    #[arg(long, env = OUT_ENV, default_value = "gapscope-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest loop gadget for loopfit.
    #[arg(long, default_value_t = 14)]
    pub max_n: usize,
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(crate::error::io_err("<stdout>"))
}

fn write_report<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_json(&dir.join(name), value)?;
    print(&to_json(value))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let g = a.params.generator(a.name);
            let inst = g.instance()?;
            let file = match (inst, a.penalty) {
                (crate::io::Instance::Graph(gr), Some(j)) => {
                    InstanceFile::from(&gr.with_uniform_penalty(j)?)
                }
                (crate::io::Instance::Ising(_), Some(_)) => {
                    return Err(CliError::usage("--penalty applies to graph instances only"))
                }
                (i, None) => InstanceFile::from(&i),
            };
            let path = a
                .output
                .unwrap_or_else(|| a.out.join(format!("{:?}.json", a.name).to_lowercase()));
            write_json(&path, &file)?;
            print(&format!("{}\n", path.display()))
        }
        Command::Sweep(a) => {
            let c = a.config()?;
            let exec = Rayon::new(c.workers)?;
            let out = run_sweep(&c, &exec)?;
            let tol = c.solver().cluster_tol;
            out.analysis
                .energy_table(tol)
                .write(&c.out_dir.join("sweep.csv"))?;
            out.analysis
                .trace_table()
                .write(&c.out_dir.join("traces.csv"))?;
            write_report(&c.out_dir, "summary.json", &out.summary)
        }
        Command::Detect(a) => {
            let c = a.config()?;
            let (_, report) = run_detect(&c, &Rayon::new(c.workers)?)?;
            write_report(&c.out_dir, "detect.json", &report)
        }
        Command::Lens(a) => {
            let c = a.run.config()?;
            let cutoff = match (a.rank, a.window) {
                (Some(r), _) => Cutoff::Rank(r),
                (None, Some(w)) => Cutoff::Window(w),
                (None, None) => Cutoff::default(),
            };
            let report = run_lens(&c, cutoff, a.rows)?;
            write_json(&c.out_dir.join("lens.json"), &report)?;
            print(&lens_table(&report))
        }
        Command::Reduce(a) => {
            let c = a.run.config()?;
            let out = run_reduce(&c, a.rule, a.detect, &Rayon::new(c.workers)?)?;
            write_json(
                &c.out_dir.join("reduced.json"),
                &out.report.reduced_instance,
            )?;
            write_text(&c.out_dir.join("conflict.dot"), &out.dot)?;
            write_report(&c.out_dir, "reduce.json", &out.report)
        }
        Command::Scalecheck(a) => {
            let c = a.run.config()?;
            let alpha = c
                .alpha
                .ok_or_else(|| CliError::usage("scalecheck needs --alpha"))?;
            let mut base = c.clone();
            base.alpha = None;
            let report = run_scalecheck(
                &base,
                alpha,
                &a.ts,
                a.sharp_curvature,
                &Rayon::new(c.workers)?,
            )?;
            write_report(&c.out_dir, "scaling.json", &report)?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Theorem(report.violations.join("; ")))
            }
        }
        Command::Reproduce(a) => {
            let mut opts = ReproduceOptions {
                loop_max_n: a.max_n,
                ..ReproduceOptions::default()
            };
            if let Some(s) = a.seed {
                opts.seed = s;
            }
            let rep = reproduce(&a.figure, &opts, &Rayon::new(a.workers)?)?;
            let dir = a.out.join(&a.figure);
            rep.write(&dir)?;
            print(&rep.summary())
        }
    }
}
