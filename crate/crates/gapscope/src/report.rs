//! JSON report types. Every report carries a `schema` id matching a file in
//! `docs/schemas`.

use gapscope_core::anticross::{AntiCrossingReport, DetectorParams, Verdict};
use gapscope_core::lens::{Cutoff, LensSet, Prediction};
use gapscope_core::reduction::{PenaltyRule, ReductionReport};
use gapscope_core::scaling::{EigenScalingCheck, ScalingReport};
use gapscope_core::spectra::GapPoint;
use serde::Serialize;
use serde_json::Value;

use crate::io::{DriverFile, InstanceFile};

pub const GAP_SUMMARY: &str = "gapscope/gap-summary/v1";
pub const DETECT: &str = "gapscope/detect/v1";
pub const LENS: &str = "gapscope/lens/v1";
pub const REDUCE: &str = "gapscope/reduce/v1";
pub const SCALING: &str = "gapscope/scaling/v1";
pub const REPRODUCE: &str = "gapscope/reproduce/v1";
pub const ERROR: &str = "gapscope/error/v1";

/// Instance and driver shared by every report.
#[derive(Debug, Clone, Serialize)]
pub struct Subject {
    pub instance: String,
    pub n: usize,
    pub driver: DriverFile,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub schema: &'static str,
    #[serde(flatten)]
    pub subject: Subject,
    pub alpha: f64,
    pub grid_step: f64,
    pub k: usize,
    pub s_star: f64,
    pub min_gap: f64,
    pub others: Vec<GapPoint>,
    pub coarse_points: usize,
    /// Present for `alpha != 1`: the same system at `alpha = 1` compared
    /// against this one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectReport {
    pub schema: &'static str,
    #[serde(flatten)]
    pub subject: Subject,
    pub alpha: f64,
    pub grid_step: f64,
    pub levels: usize,
    pub params: DetectorParams,
    pub detection: AntiCrossingReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeighborView {
    pub bits: String,
    pub energy: f64,
    pub level: usize,
    pub in_lens: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LensView {
    pub anchor_level: usize,
    pub anchors: Vec<String>,
    pub neighbors: Vec<NeighborView>,
}

impl From<&LensSet> for LensView {
    fn from(l: &LensSet) -> Self {
        let in_lens = |st| l.lens.iter().any(|x| x.state == st);
        Self {
            anchor_level: l.anchor_level,
            anchors: l.anchors.iter().map(|a| a.bits()).collect(),
            neighbors: l
                .neighborhood
                .iter()
                .map(|x| NeighborView {
                    bits: x.state.bits(),
                    energy: x.energy,
                    level: x.level,
                    in_lens: in_lens(x.state),
                })
                .collect(),
        }
    }
}

/// One basis state of the low problem spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub level: usize,
    pub bits: String,
    pub energy: f64,
    pub gs_neighbor: bool,
    pub fs_neighbor: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LensReport {
    pub schema: &'static str,
    #[serde(flatten)]
    pub subject: Subject,
    pub cutoff: Cutoff,
    pub cutoff_note: &'static str,
    pub prediction: Prediction,
    pub rule_trace: String,
    pub ground: LensView,
    pub excited: LensView,
    pub spectrum: Vec<SpectrumRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermView {
    pub vertex: usize,
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducedDetection {
    pub s_star: f64,
    pub min_gap: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub schema: &'static str,
    pub instance: String,
    pub n: usize,
    pub penalty_rule: PenaltyRule,
    pub verification: ReductionReport,
    pub decoded_bits: String,
    pub terms: Vec<TermView>,
    pub reduced_instance: InstanceFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<ReducedDetection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleClaims {
    pub ordering: bool,
    pub sandwich: bool,
    pub sharp_factor: Option<bool>,
    pub eigen_scaling: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleReport {
    pub schema: &'static str,
    #[serde(flatten)]
    pub subject: Subject,
    pub report: ScalingReport,
    pub eigen_checks: Vec<EigenScalingCheck>,
    pub eigen_tolerance: f64,
    pub claims: ScaleClaims,
    pub violations: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "amount", rename_all = "lowercase")]
pub enum Tolerance {
    Abs(f64),
    Rel(f64),
}

impl Tolerance {
    pub fn admits(self, value: f64, reference: f64) -> bool {
        match self {
            Tolerance::Abs(t) => (value - reference).abs() <= t,
            Tolerance::Rel(t) => (value - reference).abs() <= t * reference.abs(),
        }
    }
}

/// One computed quantity next to its reference value.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub case: String,
    pub quantity: String,
    pub value: Value,
    pub reference: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    pub pass: bool,
}

impl Comparison {
    pub fn numeric(case: &str, quantity: &str, value: f64, reference: f64, tol: Tolerance) -> Self {
        Self {
            case: case.into(),
            quantity: quantity.into(),
            value: value.into(),
            reference: reference.into(),
            tolerance: Some(tol),
            pass: tol.admits(value, reference),
        }
    }

    pub fn exact<T: Serialize + PartialEq>(
        case: &str,
        quantity: &str,
        value: T,
        reference: T,
    ) -> Self {
        Self {
            case: case.into(),
            quantity: quantity.into(),
            pass: value == reference,
            value: serde_json::to_value(value).expect("plain value"),
            reference: serde_json::to_value(reference).expect("plain value"),
            tolerance: None,
        }
    }

    /// A property that has no reference number, only a pass flag.
    pub fn holds(case: &str, quantity: &str, pass: bool, detail: impl Serialize) -> Self {
        Self {
            case: case.into(),
            quantity: quantity.into(),
            value: serde_json::to_value(detail).expect("plain value"),
            reference: Value::Bool(true),
            tolerance: None,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub schema: &'static str,
    pub figure: String,
    pub files: Vec<String>,
    pub rows: Vec<Comparison>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport<'a> {
    pub schema: &'static str,
    pub error: &'a str,
    pub message: String,
    pub exit_code: i32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances() {
        assert!(Tolerance::Abs(0.01).admits(0.7479, 0.75));
        assert!(!Tolerance::Rel(0.05).admits(1.0, 1.2));
        assert!(Comparison::exact("c", "verdict", "strong", "strong").pass);
        let c = Comparison::numeric("c", "gap", 0.0019, 0.0018, Tolerance::Rel(0.05));
        assert!(!c.pass);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["tolerance"]["kind"], "rel");
    }
}
