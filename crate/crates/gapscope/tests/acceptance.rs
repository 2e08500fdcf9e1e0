//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::cell::Cell;
use std::process::ExitCode;
use std::time::Instant;

use gapscope::parallel::Rayon;
use gapscope::report::Comparison;
use gapscope::reproduce::{reproduce, ReproduceOptions, Reproduction};
use gapscope::run::{run_reduce, Generator, RunConfig};
use gapscope_core::anticross::{overlaps, FinalBasis, Verdict};
use gapscope_core::hamiltonian::{DriverSpec, SystemHamiltonian};
use gapscope_core::instances::{gen_loop_gadget, mis_to_ising, IsingModel};
use gapscope_core::reduction::{reduce_and_verify, PenaltyRule};
use gapscope_core::scaling::eigen_scaling_check;
use gapscope_core::spectra::{default_grid, lowest_eigenpairs, sweep, SolverConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: [u8; 32] = *b"gapscope acceptance seed 0000001";

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::from_seed(RngAlgorithm::ChaCha, &SEED),
    )
}

fn exec() -> Rayon {
    Rayon::new(0).expect("global pool")
}

fn figure(id: &str) -> Result<Reproduction, String> {
    reproduce(id, &ReproduceOptions::default(), &exec()).map_err(|e| format!("{id}: {e}"))
}

/// Fails with the first failing row among those selected.
fn check_rows<'a>(rows: impl IntoIterator<Item = &'a Comparison>) -> Result<usize, String> {
    let mut n = 0;
    for r in rows {
        if !r.pass {
            return Err(format!(
                "{} {}: {} vs reference {}",
                r.case, r.quantity, r.value, r.reference
            ));
        }
        n += 1;
    }
    if n == 0 {
        return Err("no rows checked".into());
    }
    Ok(n)
}

fn quantity<'a>(
    rep: &'a Reproduction,
    names: &'a [&str],
) -> impl Iterator<Item = &'a Comparison> + 'a {
    rep.report
        .rows
        .iter()
        .filter(move |r| names.contains(&r.quantity.as_str()))
}

fn ising(max_n: usize, scale: f64) -> impl Strategy<Value = IsingModel> {
    (2usize..=max_n).prop_flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        (
            prop::collection::vec(-8i32..=8, n),
            prop::collection::vec(-8i32..=8, m),
        )
            .prop_map(move |(h, j)| {
                let h = h.into_iter().map(|x| x as f64 * scale).collect();
                let c = pairs
                    .iter()
                    .zip(j)
                    .filter(|(_, v)| *v != 0)
                    .map(|(&(a, b), v)| (a, b, v as f64 * scale));
                IsingModel::new(h, c).unwrap()
            })
    })
}

fn criterion1() -> Outcome {
    let rep = figure("fig7")?;
    let n = check_rows(quantity(&rep, &["s_star", "min_gap"]))?;
    Ok(format!("{n} s*/gap values within 0.01 / 5%"))
}

fn criterion2() -> Outcome {
    let fig4 = figure("fig4")?;
    check_rows(&fig4.report.rows)?;
    let delta = fig4
        .report
        .rows
        .iter()
        .find(|r| r.quantity == "delta")
        .ok_or("no delta row")?;
    let fig7 = figure("fig7")?;
    let n = check_rows(quantity(&fig7, &["verdict", "w4=1.49 vs 1.51 opposite"]))?;
    Ok(format!("delta = {}, {n} verdict rows", delta.value))
}

fn criterion3() -> Outcome {
    let mut n = 0;
    for id in ["fig9", "fig10"] {
        n += check_rows(&figure(id)?.report.rows)?;
    }
    Ok(format!("{n} XX-driver rows"))
}

fn criterion4() -> Outcome {
    let n = check_rows(&figure("fig12")?.report.rows)?;
    Ok(format!("{n} chain-7 rows"))
}

fn criterion5() -> Outcome {
    let rep = figure("loopfit")?;
    check_rows(&rep.report.rows)?;
    Ok(format!("c = {}", rep.report.rows[0].value))
}

fn criterion6() -> Outcome {
    let mut r = runner(200);
    r.run(&ising(6, 0.5), |m| {
        let (_, rep) = reduce_and_verify(&m).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((rep.max_posiform - (rep.a_empty + rep.mis_weight)).abs() < 1e-9);
        Ok(())
    })
    .map_err(|e| e.to_string())?;

    let m = gen_loop_gadget(4, 4.0).map_err(|e| e.to_string())?;
    let (cg, rep) = reduce_and_verify(&m).map_err(|e| e.to_string())?;
    let g = &cg.graph;
    let mut degree = vec![0; g.n()];
    for &(i, j) in g.edges() {
        degree[i] += 1;
        degree[j] += 1;
    }
    degree.sort_unstable();
    if g.n() != 7 || g.edges().len() != 6 || degree != [1, 1, 2, 2, 2, 2, 2] {
        return Err(format!(
            "reduced graph is not a 7-vertex path: {:?}",
            g.edges()
        ));
    }
    if rep.mis_weight != 12.0 {
        return Err(format!("MIS weight {}", rep.mis_weight));
    }
    // a maximal set that cannot grow and is lighter than the maximum
    let local = (0..1usize << 7)
        .map(|mask| (0..7).filter(|v| mask >> v & 1 == 1).collect::<Vec<_>>())
        .filter(|s| g.is_independent(s))
        .filter(|s| {
            (0..7).filter(|v| !s.contains(v)).all(|v| {
                let mut t = s.clone();
                t.push(v);
                !g.is_independent(&t)
            })
        })
        .map(|s| g.set_weight(&s))
        .filter(|&w| w < rep.mis_weight)
        .fold(f64::NEG_INFINITY, f64::max);
    if local != 11.5 {
        return Err(format!("heaviest non-maximum maximal set {local}"));
    }

    let cfg = RunConfig::generated(Generator::Loop { n: 4, r: 4.0 });
    let out = run_reduce(&cfg, PenaltyRule::Default, true, &exec()).map_err(|e| e.to_string())?;
    let verdict = out.report.detection.ok_or("no detection")?.verdict;
    if verdict != Verdict::None {
        return Err(format!("reduced instance verdict {verdict}"));
    }
    Ok("200 random models, loop path MIS 12 / local 11.5, verdict none".into())
}

fn criterion7() -> Outcome {
    let rep = figure("fig13")?;
    check_rows(&rep.report.rows)?;
    let factor = rep
        .report
        .rows
        .iter()
        .find(|r| r.quantity == "factor")
        .ok_or("no factor row")?;

    let cfg = SolverConfig::default();
    let mut r = runner(5);
    let worst = Cell::new(0.0f64);
    let strategy = (
        ising(6, 0.5),
        2.0f64..20.0,
        prop::collection::vec(0.0f64..=1.0, 10),
    );
    r.run(&strategy, |(m, alpha, ts)| {
        let sys = SystemHamiltonian::new(m, DriverSpec::X).unwrap();
        for t in ts {
            let c = eigen_scaling_check(&sys, alpha, t, 4, &cfg)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(
                c.max_residual <= 1e-9,
                "residual {} at t = {t}",
                c.max_residual
            );
            prop_assert!(
                c.max_misalignment <= 1e-9,
                "misalignment {} at t = {t}",
                c.max_misalignment
            );
            worst.set(worst.get().max(c.max_residual));
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(format!(
        "factor = {}, eigen-scaling residual <= {:.1e}",
        factor.value,
        worst.get()
    ))
}

fn residual(sys: &SystemHamiltonian, s: f64, value: f64, v: &[f64]) -> f64 {
    let hv = sys.apply(s, v).unwrap();
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn criterion8() -> Outcome {
    let chain5 = gapscope_core::instances::gen_chain5(1.49)
        .and_then(|g| g.with_uniform_penalty(1.52))
        .and_then(|g| mis_to_ising(&g))
        .map_err(|e| e.to_string())?;
    let loop8 = gen_loop_gadget(8, 4.0)
        .map_err(|e| e.to_string())?
        .normalized();
    let dense = SolverConfig {
        dense_threshold: 8,
        ..SolverConfig::default()
    };
    let iterative = SolverConfig {
        dense_threshold: 0,
        ..SolverConfig::default()
    };

    let mut checks = 0;
    for (m, driver) in [
        (chain5.clone(), DriverSpec::X),
        (chain5.clone(), DriverSpec::xx_on_problem(-1.0, &chain5)),
        (loop8.clone(), DriverSpec::X),
    ] {
        let sys = SystemHamiltonian::new(m, driver).map_err(|e| e.to_string())?;
        for s in [0.0, 0.3, 0.75, 1.0] {
            // symmetric, and the matrix-free product agrees with the matrix
            let h = sys.dense(s).map_err(|e| e.to_string())?;
            let asym = (&h - h.transpose()).abs().max();
            if asym > 0.0 {
                return Err(format!("operator asymmetric by {asym} at s = {s}"));
            }
            for col in [0, sys.dim() / 3, sys.dim() - 1] {
                let mut e = vec![0.0; sys.dim()];
                e[col] = 1.0;
                let hv = sys.apply(s, &e).map_err(|e| e.to_string())?;
                let diff = hv
                    .iter()
                    .enumerate()
                    .map(|(r, x)| (x - h[(r, col)]).abs())
                    .fold(0.0, f64::max);
                if diff > 1e-12 {
                    return Err(format!("apply differs from matrix by {diff}"));
                }
            }
            for cfg in [&dense, &iterative] {
                let sol = lowest_eigenpairs(&sys, s, 4, cfg).map_err(|e| e.to_string())?;
                for (val, v) in sol.values.iter().zip(&sol.vectors) {
                    let r = residual(&sys, s, *val, v);
                    if r > 1e-9 {
                        return Err(format!("residual {r:e} at s = {s}"));
                    }
                }
            }
            checks += 1;
        }
    }

    // dense and iterative solvers agree at n = 8
    let mut r = runner(8);
    r.run(
        &(
            ising(8, 0.5).prop_filter("n = 8", |m| m.n() == 8),
            0.05f64..0.95,
        ),
        |(m, s)| {
            let sys = SystemHamiltonian::new(m, DriverSpec::X).unwrap();
            let a = lowest_eigenpairs(&sys, s, 4, &dense).unwrap();
            let b = lowest_eigenpairs(&sys, s, 4, &iterative).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
            }
            Ok(())
        },
    )
    .map_err(|e| e.to_string())?;

    // overlaps over all levels sum to one, and a0(1) = 1
    let basis = FinalBasis::from_ising(&chain5).map_err(|e| e.to_string())?;
    let sys = SystemHamiltonian::new(chain5, DriverSpec::X).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::default();
    let grid = default_grid(0.01).map_err(|e| e.to_string())?;
    let sw = sweep(&sys, &grid, 8, &cfg, &exec()).map_err(|e| e.to_string())?;
    let tr =
        overlaps(&sw, &basis, basis.levels.len(), cfg.cluster_tol).map_err(|e| e.to_string())?;
    for i in 0..tr.grid.len() {
        let sa: f64 = tr.a.iter().map(|x| x[i]).sum();
        let sb: f64 = tr.b.iter().map(|x| x[i]).sum();
        if (sa - 1.0).abs() > 1e-9 || (sb - 1.0).abs() > 1e-9 {
            return Err(format!("overlaps sum to {sa}, {sb} at s = {}", tr.grid[i]));
        }
    }
    let a0_end = tr.a[0][tr.grid.len() - 1];
    if (a0_end - 1.0).abs() > 1e-9 {
        return Err(format!("a0(1) = {a0_end}"));
    }

    let fig7 = figure("fig7")?;
    let agree = check_rows(quantity(&fig7, &["lens prediction agrees"]))?;
    if agree != 8 {
        return Err(format!("{agree} LENS rows, expected 8"));
    }
    Ok(format!(
        "{checks} operator points, 8 dense/iterative cases, 8 LENS agreements"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("chain-5 min-gap table", criterion1),
        ("anti-crossing verdicts", criterion2),
        ("XX driver", criterion3),
        ("chain-7", criterion4),
        ("loop gadget gap exponent", criterion5),
        ("reduction identity", criterion6),
        ("scaling", criterion7),
        ("numerical invariants", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
