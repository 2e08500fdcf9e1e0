//! Rescaling the problem Hamiltonian by `α`: the schedule map `s ↔ t`,
//! spectrum rescaling, and the min-gap scale factor `1 + (α − 1)·t(s*)`.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SystemHamiltonian;
use crate::linalg::dot;
use crate::spectra::{
    gap_at, locate_min_gap, lowest_eigenpairs, GridExecutor, MinGapConfig, SolverConfig,
};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::param("alpha", "must be positive and finite"))
    }
}

/// `t(s) = s / (α(1 − s) + s)`; `t(1) = 1`.
pub fn t_of_s(alpha: f64, s: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ScheduleOutOfRange(s));
    }
    Ok(if s == 1.0 {
        1.0
    } else {
        s / (alpha * (1.0 - s) + s)
    })
}

/// `s(t) = tα / (1 + (α − 1)t)`, the inverse of [`t_of_s`]; `s(1) = 1`.
pub fn s_of_t(alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ScheduleOutOfRange(t));
    }
    Ok(if t == 1.0 {
        1.0
    } else {
        t * alpha / (1.0 + (alpha - 1.0) * t)
    })
}

/// Same system with the problem part multiplied by `alpha`.
pub fn rescaled(sys: &SystemHamiltonian, alpha: f64) -> Result<SystemHamiltonian> {
    check_alpha(alpha)?;
    sys.clone().with_alpha(sys.alpha() * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EigenScalingCheck {
    pub t: f64,
    /// `max_i |E_i^α(t) − (1 + (α − 1)t)·E_i(s(t))|`.
    pub max_residual: f64,
    /// `max_i 1 − |⟨v_i^α(t), v_i(s(t))⟩|` over non-degenerate levels.
    pub max_misalignment: f64,
}

pub fn eigen_scaling_check(
    sys: &SystemHamiltonian,
    alpha: f64,
    t: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigenScalingCheck> {
    let scaled = rescaled(sys, alpha)?;
    let s = s_of_t(alpha, t)?;
    let ea = lowest_eigenpairs(&scaled, t, k, cfg)?;
    let e1 = lowest_eigenpairs(sys, s, k, cfg)?;
    let f = 1.0 + (alpha - 1.0) * t;
    let max_residual = ea
        .values
        .iter()
        .zip(&e1.values)
        .map(|(a, b)| (a - f * b).abs())
        .fold(0.0, f64::max);
    // isolated levels only: inside a degenerate cluster the basis is arbitrary
    let tol = cfg.cluster_tol * f.max(1.0) * 10.0;
    let isolated = |i: usize| {
        let v = &e1.values;
        (i == 0 || v[i] - v[i - 1] > tol) && (i + 1 >= v.len() || v[i + 1] - v[i] > tol)
    };
    let max_misalignment = (0..k.min(e1.values.len()).saturating_sub(1))
        .filter(|&i| isolated(i))
        .map(|i| 1.0 - dot(&ea.vectors[i], &e1.vectors[i]).abs())
        .fold(0.0, f64::max);
    Ok(EigenScalingCheck {
        t,
        max_residual,
        max_misalignment,
    })
}

/// Settings for [`min_gap_scale_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub min_gap: MinGapConfig,
    /// `gap''/gap` at `s*` above which the minimum counts as sharp.
    pub sharp_curvature: f64,
    /// Relative tolerance on the factor when the minimum is sharp.
    pub sharp_rtol: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            min_gap: MinGapConfig::default(),
            sharp_curvature: 1e3,
            sharp_rtol: 1e-3,
        }
    }
}

/// Outcome of each claim check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScalingClaims {
    /// `t* <= t(s*) < s*`.
    pub ordering: bool,
    /// `1 + (α − 1)t* <= factor <= 1 + (α − 1)t(s*)`.
    pub sandwich: bool,
    /// `factor ≈ 1 + (α − 1)t(s*)`, only checked for sharp minima.
    pub sharp_factor: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScalingReport {
    /// Effective scale, always above 1.
    pub alpha: f64,
    /// True when the request had `α < 1` and the roles were swapped.
    pub inverted: bool,
    pub s_star: f64,
    pub gap1: f64,
    pub t_star: f64,
    pub gap_alpha: f64,
    pub t_of_s_star: f64,
    pub factor: f64,
    pub predicted_factor: f64,
    pub lower_bound: f64,
    pub curvature: f64,
    pub sharp: bool,
    pub claims: ScalingClaims,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.claims.ordering && self.claims.sandwich && self.claims.sharp_factor != Some(false)
    }

    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.claims.ordering {
            v.push("ordering t* <= t(s*) < s* violated");
        }
        if !self.claims.sandwich {
            v.push("factor outside [1 + (a-1)t*, 1 + (a-1)t(s*)]");
        }
        if self.claims.sharp_factor == Some(false) {
            v.push("sharp minimum but factor differs from 1 + (a-1)t(s*)");
        }
        v
    }
}

/// Locates the minimum gap of `sys` and of its `α`-rescaled copy and checks
/// the scaling claims. For `α < 1` the rescaled system becomes the base and
/// `1/α` is analyzed instead.
pub fn min_gap_scale_report<E: GridExecutor>(
    sys: &SystemHamiltonian,
    alpha: f64,
    sc: &ScalingConfig,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<ScalingReport> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Err(Error::param(
            "alpha",
            "alpha = 1 leaves the system unchanged",
        ));
    }
    let (base, a, inverted) = if alpha > 1.0 {
        (sys.clone(), alpha, false)
    } else {
        (rescaled(sys, alpha)?, 1.0 / alpha, true)
    };
    let scaled = rescaled(&base, a)?;
    let g1 = locate_min_gap(&base, &sc.min_gap, cfg, exec)?;
    let ga = locate_min_gap(&scaled, &sc.min_gap, cfg, exec)?;
    let (s_star, t_star) = (g1.s_star, ga.s_star);
    let t_of_s_star = t_of_s(a, s_star)?;
    let factor = ga.min_gap / g1.min_gap;
    let predicted_factor = 1.0 + (a - 1.0) * t_of_s_star;
    let lower_bound = 1.0 + (a - 1.0) * t_star;

    let h = (sc.min_gap.step * 0.1).min(s_star).min(1.0 - s_star);
    let curvature = if h > 0.0 {
        let gm = gap_at(&base, s_star - h, cfg)?;
        let gp = gap_at(&base, s_star + h, cfg)?;
        (gm - 2.0 * g1.min_gap + gp) / (h * h) / g1.min_gap
    } else {
        0.0
    };
    let sharp = curvature >= sc.sharp_curvature;
    let loc = 100.0 * sc.min_gap.tol;
    let rtol = 1e-6;
    let claims = ScalingClaims {
        ordering: t_star <= t_of_s_star + loc && t_of_s_star < s_star,
        // t* is only known to the refinement tolerance
        sandwich: factor >= lower_bound * (1.0 - rtol) - (a - 1.0) * 10.0 * sc.min_gap.tol
            && factor <= predicted_factor * (1.0 + rtol),
        sharp_factor: sharp.then(|| (factor / predicted_factor - 1.0).abs() <= sc.sharp_rtol),
    };
    Ok(ScalingReport {
        alpha: a,
        inverted,
        s_star,
        gap1: g1.min_gap,
        t_star,
        gap_alpha: ga.min_gap,
        t_of_s_star,
        factor,
        predicted_factor,
        lower_bound,
        curvature,
        sharp,
        claims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::DriverSpec;
    use crate::instances::{gen_chain5, mis_to_ising};
    use crate::spectra::Sequential;
    use proptest::prelude::*;

    fn chain5(w4: f64, j: f64) -> SystemHamiltonian {
        let g = gen_chain5(w4).unwrap().with_uniform_penalty(j).unwrap();
        SystemHamiltonian::new(mis_to_ising(&g).unwrap(), DriverSpec::X).unwrap()
    }

    #[test]
    fn schedule_map_values() {
        assert_eq!(t_of_s(10.0, 0.0).unwrap(), 0.0);
        assert_eq!(t_of_s(10.0, 1.0).unwrap(), 1.0);
        assert!((s_of_t(10.0, t_of_s(10.0, 0.7).unwrap()).unwrap() - 0.7).abs() <= 1e-15);
        assert!((t_of_s(10.0, 0.9681).unwrap() - 0.7522).abs() < 1e-4);
        assert!(t_of_s(0.0, 0.5).is_err());
        assert!(s_of_t(2.0, 1.5).is_err());
    }

    #[test]
    fn identity_scale_has_zero_residual() {
        let sys = chain5(1.51, 10.0);
        let c = eigen_scaling_check(&sys, 1.0, 0.4, 4, &SolverConfig::default()).unwrap();
        assert_eq!(c.max_residual, 0.0);
    }

    #[test]
    fn spectrum_rescales() {
        let sys = chain5(1.51, 10.0);
        for t in [0.2, 0.5, 0.7522, 1.0] {
            let c = eigen_scaling_check(&sys, 10.0, t, 4, &SolverConfig::default()).unwrap();
            assert!(c.max_residual <= 1e-9, "{c:?}");
            assert!(c.max_misalignment <= 1e-9, "{c:?}");
        }
    }

    #[test]
    fn rejects_unit_alpha() {
        let sys = chain5(1.51, 10.0);
        assert!(min_gap_scale_report(
            &sys,
            1.0,
            &ScalingConfig::default(),
            &SolverConfig::default(),
            &Sequential
        )
        .is_err());
    }

    #[test]
    fn factor_tends_to_one() {
        let sys = chain5(1.49, 1.52);
        let sc = ScalingConfig {
            min_gap: MinGapConfig {
                step: 0.01,
                ..Default::default()
            },
            ..Default::default()
        };
        let r =
            min_gap_scale_report(&sys, 1.001, &sc, &SolverConfig::default(), &Sequential).unwrap();
        assert!((r.factor - 1.0).abs() < 1e-3, "{r:?}");
        assert!(r.passed(), "{:?}", r.violations());
    }

    #[test]
    fn inverted_alpha_swaps_roles() {
        let sys = chain5(1.51, 10.0).with_alpha(10.0).unwrap();
        let sc = ScalingConfig {
            min_gap: MinGapConfig {
                step: 0.01,
                ..Default::default()
            },
            ..Default::default()
        };
        let r =
            min_gap_scale_report(&sys, 0.1, &sc, &SolverConfig::default(), &Sequential).unwrap();
        assert!(r.inverted);
        assert!((r.alpha - 10.0).abs() < 1e-12);
        assert!(r.passed(), "{:?}", r.violations());
    }

    proptest! {
        #[test]
        fn schedule_maps_are_inverse(alpha in 0.01f64..100.0, s in 0.0f64..1.0) {
            let t = t_of_s(alpha, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!((s_of_t(alpha, t).unwrap() - s).abs() <= 1e-15);
            if alpha > 1.0 && s > 0.0 {
                prop_assert!(t < s);
            }
        }
    }
}
