//! Instance and driver JSON, CSV tables and report files.

use std::fs;
use std::path::Path;

use gapscope_core::hamiltonian::DriverSpec;
use gapscope_core::instances::{mis_to_ising, IsingModel, WeightedGraph};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

/// Penalties of a graph instance. Edges without an override use `default`,
/// or `min(w_i, w_j) + 1` when no default is given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub weights: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalties: Option<PenaltySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingFile {
    pub n: usize,
    pub h: Vec<f64>,
    #[serde(rename = "J")]
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub offset: f64,
}

/// On-disk instance; vertices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceFile {
    Graph(GraphFile),
    Ising(IsingFile),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Graph(WeightedGraph),
    Ising(IsingModel),
}

impl Instance {
    pub fn n(&self) -> usize {
        match self {
            Instance::Graph(g) => g.n(),
            Instance::Ising(m) => m.n(),
        }
    }

    /// Problem Hamiltonian. `penalty` replaces every edge penalty of a graph.
    pub fn ising(&self, penalty: Option<f64>) -> Result<IsingModel> {
        match (self, penalty) {
            (Instance::Graph(g), Some(j)) => Ok(mis_to_ising(&g.clone().with_uniform_penalty(j)?)?),
            (Instance::Graph(g), None) if g.penalties().is_none() => {
                Ok(mis_to_ising(&g.clone().with_default_penalties())?)
            }
            (Instance::Graph(g), None) => Ok(mis_to_ising(g)?),
            (Instance::Ising(_), Some(_)) => {
                Err(CliError::usage("--penalty applies to graph instances only"))
            }
            (Instance::Ising(m), None) => Ok(m.clone()),
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = CliError;

    fn try_from(f: InstanceFile) -> Result<Self> {
        let check_n = |n: usize, len: usize, what: &str| {
            if n == len {
                Ok(())
            } else {
                Err(CliError::usage(format!("n = {n} but {len} {what}")))
            }
        };
        match f {
            InstanceFile::Graph(g) => {
                check_n(g.n, g.weights.len(), "weights")?;
                let mut graph = WeightedGraph::new(g.weights, g.edges)?;
                if let Some(p) = g.penalties {
                    graph = match p.default {
                        Some(j) => graph.with_uniform_penalty(j)?,
                        None => graph.with_default_penalties(),
                    };
                    for (i, j, l) in p.overrides {
                        graph.set_penalty(i, j, l)?;
                    }
                }
                Ok(Instance::Graph(graph))
            }
            InstanceFile::Ising(m) => {
                check_n(m.n, m.h.len(), "fields")?;
                Ok(Instance::Ising(
                    IsingModel::new(m.h, m.couplings)?.with_offset(m.offset),
                ))
            }
        }
    }
}

impl From<&WeightedGraph> for InstanceFile {
    fn from(g: &WeightedGraph) -> Self {
        let penalties = g.penalties().map(|p| match p.split_first() {
            Some((&first, rest)) if rest.iter().all(|&x| x == first) => PenaltySpec {
                default: Some(first),
                overrides: Vec::new(),
            },
            _ => PenaltySpec {
                default: None,
                overrides: g
                    .edges()
                    .iter()
                    .zip(p)
                    .map(|(&(i, j), &l)| (i, j, l))
                    .collect(),
            },
        });
        InstanceFile::Graph(GraphFile {
            n: g.n(),
            weights: g.weights().to_vec(),
            edges: g.edges().to_vec(),
            penalties,
        })
    }
}

impl From<&IsingModel> for InstanceFile {
    fn from(m: &IsingModel) -> Self {
        InstanceFile::Ising(IsingFile {
            n: m.n(),
            h: m.h().to_vec(),
            couplings: m
                .couplings()
                .iter()
                .map(|(&(i, j), &v)| (i, j, v))
                .collect(),
            offset: m.offset(),
        })
    }
}

impl From<&Instance> for InstanceFile {
    fn from(i: &Instance) -> Self {
        match i {
            Instance::Graph(g) => g.into(),
            Instance::Ising(m) => m.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriverEdges {
    Named(SameAsProblem),
    List(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SameAsProblem {
    #[serde(rename = "same-as-problem")]
    SameAsProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "driver", deny_unknown_fields)]
pub enum DriverFile {
    X,
    XX { lambda: f64, edges: DriverEdges },
}

impl DriverFile {
    pub fn resolve(&self, problem: &IsingModel) -> Result<DriverSpec> {
        let d = match self {
            DriverFile::X => DriverSpec::X,
            DriverFile::XX {
                lambda,
                edges: DriverEdges::Named(_),
            } => DriverSpec::xx_on_problem(*lambda, problem),
            DriverFile::XX {
                lambda,
                edges: DriverEdges::List(e),
            } => DriverSpec::xx(*lambda, e.iter().copied()),
        };
        d.validate(problem.n())?;
        Ok(d)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    read_json::<InstanceFile>(path)?.try_into()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, to_json(value)).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(io_err(path))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_err(dir)),
        _ => Ok(()),
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Numeric table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_real(x)))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv()?)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|x| {
                x.parse::<f64>().map_err(|e| {
                    CliError::usage(format!("{}: bad number {x:?}: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}
