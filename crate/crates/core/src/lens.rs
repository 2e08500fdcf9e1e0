//! Driver neighborhoods of the lowest problem levels and the resulting
//! anti-crossing prediction.
//!
//! A level "has more low-energy neighbors" than another when its lowest
//! neighbor sits on a strictly lower level, with ties broken by how many
//! neighbors pass the cutoff.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::anticross::FinalBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::DriverSpec;
use crate::instances::{BasisState, IsingModel};

/// States reachable from `state` by one driver term.
pub fn neighbors(state: BasisState, driver: &DriverSpec) -> Vec<BasisState> {
    let mut out: Vec<BasisState> = (0..state.n()).map(|i| state.flip(i)).collect();
    out.extend(
        driver
            .pair_edges()
            .iter()
            .map(|&(i, j)| state.flip_pair(i, j)),
    );
    out.sort();
    out.dedup();
    out
}

/// Which neighbors count as low-energy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Cutoff {
    /// Level index at most this value.
    Rank(usize),
    /// Energy at most `E_1 + W`.
    Window(f64),
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Rank(8)
    }
}

impl Cutoff {
    fn admits(&self, level: usize, energy: f64, e1: f64) -> bool {
        match *self {
            Cutoff::Rank(r) => level <= r,
            Cutoff::Window(w) => energy <= e1 + w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Neighbor {
    pub state: BasisState,
    pub energy: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LensSet {
    pub anchor_level: usize,
    pub anchors: Vec<BasisState>,
    /// Every driver neighbor of the anchors outside the anchor level, by energy.
    pub neighborhood: Vec<Neighbor>,
    /// The part of the neighborhood admitted by the cutoff.
    pub lens: Vec<Neighbor>,
    pub cutoff: Cutoff,
}

impl LensSet {
    pub fn lowest_level(&self) -> Option<usize> {
        self.lens.iter().map(|x| x.level).min()
    }

    pub fn levels(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.lens.iter().map(|x| x.level).collect();
        l.dedup();
        l
    }
}

pub fn lens_set(
    anchor_level: usize,
    basis: &FinalBasis,
    driver: &DriverSpec,
    cutoff: Cutoff,
) -> Result<LensSet> {
    let anchor = basis
        .levels
        .get(anchor_level)
        .ok_or(Error::param("anchor", "no such level"))?;
    let e1 = basis.levels.get(1).map_or(anchor.energy, |l| l.energy);
    let mut states: Vec<BasisState> = anchor
        .states
        .iter()
        .flat_map(|&a| neighbors(a, driver))
        .filter(|st| basis.level_of(st.index()) != anchor_level)
        .collect();
    states.sort();
    states.dedup();
    let mut neighborhood: Vec<Neighbor> = states
        .into_iter()
        .map(|state| {
            let level = basis.level_of(state.index());
            Neighbor {
                state,
                energy: basis.levels[level].energy,
                level,
            }
        })
        .collect();
    neighborhood.sort_by(|a, b| a.level.cmp(&b.level).then(a.state.cmp(&b.state)));
    let lens = neighborhood
        .iter()
        .filter(|x| cutoff.admits(x.level, x.energy, e1))
        .copied()
        .collect();
    Ok(LensSet {
        anchor_level,
        anchors: anchor.states.clone(),
        neighborhood,
        lens,
        cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Prediction {
    NoAntiCrossing,
    AntiCrossing,
    Inconclusive,
}

impl core::fmt::Display for Prediction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Prediction::NoAntiCrossing => "no-anti-crossing",
            Prediction::AntiCrossing => "anti-crossing",
            Prediction::Inconclusive => "inconclusive",
        })
    }
}

fn describe(level: Option<usize>) -> String {
    level.map_or_else(|| String::from("none"), |l| format!("{l}"))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LensPrediction {
    pub prediction: Prediction,
    pub ground: LensSet,
    pub excited: LensSet,
    /// Human-readable account of the comparison.
    pub rule_trace: String,
}

/// Compares the low-energy neighborhoods of the two lowest levels.
pub fn predict(ising: &IsingModel, driver: &DriverSpec, cutoff: Cutoff) -> Result<LensPrediction> {
    if !driver.is_stoquastic() {
        return Err(Error::NonUniformGroundState(format!(
            "XX driver with lambda = {} > 0",
            driver.lambda()
        )));
    }
    let basis = FinalBasis::from_ising(ising)?;
    if basis.levels.len() < 2 {
        return Err(Error::param("ising", "problem has a single level"));
    }
    let ground = lens_set(0, &basis, driver, cutoff)?;
    let excited = lens_set(1, &basis, driver, cutoff)?;
    // lower level wins, so compare in reverse; an empty lens loses
    let by_level = match (ground.lowest_level(), excited.lowest_level()) {
        (Some(g), Some(f)) => f.cmp(&g),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    };
    let order = by_level.then(ground.lens.len().cmp(&excited.lens.len()));
    let prediction = match order {
        Ordering::Greater => Prediction::NoAntiCrossing,
        Ordering::Less => Prediction::AntiCrossing,
        Ordering::Equal => Prediction::Inconclusive,
    };
    let rule_trace = format!(
        "GS lowest neighbor level {} ({} in lens), FS lowest neighbor level {} ({} in lens); {}",
        describe(ground.lowest_level()),
        ground.lens.len(),
        describe(excited.lowest_level()),
        excited.lens.len(),
        match prediction {
            Prediction::NoAntiCrossing => "GS dominates",
            Prediction::AntiCrossing => "FS dominates",
            Prediction::Inconclusive => "tie",
        }
    );
    Ok(LensPrediction {
        prediction,
        ground,
        excited,
        rule_trace,
    })
}
