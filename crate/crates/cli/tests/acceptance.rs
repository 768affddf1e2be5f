//! Acceptance gate. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero when any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qew_cli::scan_csv;
use qew_core::networks::{
    entanglement_swap, evaluate_network_batteries, generate_cluster, generate_cluster_from,
    network_state_from_sources, reduce_ghz_to_epr_all, sample_branch, source_states, BellOutcome, CpGate,
    NetworkSpec, Source,
};
use qew_core::oracle::{
    bound_check, maximize_witness, ppt_check, sample_biseparable, sample_separable, werner_ppt_threshold,
    OracleWitness, Partition, SamplerConfig,
};
use qew_core::states::{apply_blind_channel, build_state, werner_mix};
use qew_core::witnesses::{
    battery_epr, battery_ghz, classical_assignment_search, classical_assignment_search_items, critical_visibility,
    svetlichny_value, witness_epr, witness_ghz, witness_qudit, witness_w, BatteryMode, Contract, PrimedAngles,
    Tolerances, VisibilityKind, SVETLICHNY_OPTIMAL_ANGLES,
};
use qew_core::zkp::{run_protocol, verify_transcript, ProverStrategy};
use qew_core::{BlindChannel, ComplexMatrix, DensityMatrix, LocalOp, StateSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Random qubit blind channel with up to four terms.
fn random_channel(rng: &mut ChaCha8Rng, sites: usize) -> BlindChannel {
    let k = rng.random_range(1..=4);
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let terms: Vec<(f64, Vec<(f64, f64)>)> = weights
        .iter()
        .map(|w| {
            let phases = (0..sites)
                .map(|_| (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)))
                .collect();
            (w / total, phases)
        })
        .collect();
    BlindChannel::qubit(&terms).expect("normalized channel")
}

fn ac1() -> Outcome {
    let t = Instant::now();
    let c = ok(bound_check(OracleWitness::Epr, 100_000, 4, 1))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(c.violations == 0 && c.max_lhs <= 1e-9, format!("max lhs {:e}", c.max_lhs))?;
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("1e5 separable samples, max lhs {:.3e}, {secs:.1} s", c.max_lhs))
}

fn ac2() -> Outcome {
    let tol = Tolerances::default();
    let results: Vec<Result<bool, String>> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            rng.set_stream(i);
            loop {
                let theta = rng.random_range(0.0..PI);
                let rho = ok(build_state::<f64>(&StateSpec::epr(theta)))?;
                let img = ok(apply_blind_channel(&rho, &random_channel(&mut rng, 2)))?;
                if img.entry(0, 3).norm() < 0.05 {
                    continue;
                }
                let w = ok(witness_epr(&img, &tol))?;
                let p = ok(ppt_check(&img))?;
                return Ok(w.verdict.is_entangled() == !p.ppt && w.iff_valid);
            }
        })
        .collect();
    let mut agree = 0;
    for r in results {
        agree += usize::from(r?);
    }
    ensure(agree == 10_000, format!("{agree}/10000 agree"))?;
    Ok("10000/10000 blind-channel images agree with PPT".into())
}

fn ac3() -> Outcome {
    let w = ok(critical_visibility(0.5, VisibilityKind::Witness))?;
    let c = ok(critical_visibility(0.5, VisibilityKind::Chsh))?;
    ensure((w - 1.0 / 3.0).abs() <= 1e-12, format!("witness {w}"))?;
    ensure((c - FRAC_1_SQRT_2).abs() <= 1e-12, format!("chsh {c}"))?;
    let csv = ok(scan_csv("0:0.5:0.01", "witness,chsh,svetlichny3"))?;
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    ensure(rows.len() == 51, format!("{} rows", rows.len()))?;
    for pair in rows.windows(2) {
        for col in 1..4 {
            ensure(pair[1][col] <= pair[0][col], format!("column {col} increases at {}", pair[1][0]))?;
        }
    }
    Ok(format!("v_witness {w}, v_chsh {c}, 51-row scan nonincreasing"))
}

fn ac4() -> Outcome {
    let epr = ok(build_state::<f64>(&StateSpec::epr(FRAC_PI_4)))?;
    let v = ok(werner_ppt_threshold(&epr, 1e-13))?;
    ensure((v - 1.0 / 3.0).abs() <= 1e-9, format!("threshold {v}"))?;
    Ok(format!("PPT threshold {v:.12}"))
}

fn ac5() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = f64::NEG_INFINITY;
    let mut cuts = 0;
    for n in [3usize, 4] {
        for mask in 1..(1usize << (n - 1)) {
            let side: Vec<usize> = (1..n).filter(|s| (mask >> (s - 1)) & 1 == 1).collect();
            let cfg = ok(ok(SamplerConfig::new(&vec![2; n], 4, 5))?.with_partition(Partition::Fixed(side.clone())))?;
            let max = (0..10_000u64)
                .into_par_iter()
                .map(|i| {
                    let rho = sample_biseparable(&cfg, i).map_err(|e| e.to_string())?;
                    Ok(witness_ghz(&rho, &tol).map_err(|e| e.to_string())?.lhs)
                })
                .collect::<Result<Vec<f64>, String>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            ensure(max <= 1e-9, format!("n={n} side {side:?}: max lhs {max:e}"))?;
            worst = worst.max(max);
            cuts += 1;
        }
    }
    let mut checked = 0;
    for n in 2..=6 {
        for k in 0..=400 {
            let theta = PI * k as f64 / 400.0;
            if (2.0 * theta).sin() < 0.1 {
                continue;
            }
            let rho = ok(build_state::<f64>(&StateSpec::ghz(n, theta)))?;
            let w = ok(witness_ghz(&rho, &tol))?;
            ensure(w.verdict.is_entangled(), format!("GHZ_{n}({theta}) not witnessed"))?;
            checked += 1;
        }
    }
    Ok(format!("{cuts} bipartitions x 1e4 samples, max lhs {worst:.3e}; {checked} GHZ states witnessed"))
}

fn ac6() -> Outcome {
    let ghz = ok(build_state::<f64>(&StateSpec::ghz(3, FRAC_PI_4)))?;
    let s = ok(svetlichny_value(&ghz, SVETLICHNY_OPTIMAL_ANGLES, PrimedAngles::QuarterTurn))?;
    ensure((s - 4.0 * SQRT_2).abs() <= 1e-9, format!("S = {s}"))?;
    for k in 0..=20 {
        let v = k as f64 / 20.0;
        let noisy = ok(werner_mix(&ghz, v))?;
        let sv = ok(svetlichny_value(&noisy, SVETLICHNY_OPTIMAL_ANGLES, PrimedAngles::QuarterTurn))?;
        ensure((sv - v * 4.0 * SQRT_2).abs() <= 1e-9, format!("v={v}: S = {sv}"))?;
    }
    let vs = ok(critical_visibility(0.5, VisibilityKind::Svetlichny3))?;
    ensure((vs - FRAC_1_SQRT_2).abs() <= 1e-12, format!("visibility {vs}"))?;
    Ok(format!("S = {s:.12}, linear in v, v* = {vs:.12}"))
}

fn ac7() -> Outcome {
    let a = 1.0 / 3f64.sqrt();
    let w = ok(build_state::<f64>(&StateSpec::w([a, a, a, 0.0])))?;
    let r = ok(witness_w(&w, &Tolerances::default()))?;
    ensure((r.lhs - 2.0 / 3.0).abs() <= 1e-12 && r.verdict.is_entangled(), format!("lhs {}", r.lhs))?;
    let c = ok(bound_check(OracleWitness::W, 10_000, 4, 7))?;
    ensure(c.violations == 0 && c.max_lhs <= 0.5 + 1e-9, format!("max lhs {}", c.max_lhs))?;
    let m = ok(maximize_witness(OracleWitness::W, 2000, 7))?;
    ensure(m.value >= 0.5 - 1e-3 && m.value <= 0.5 + 1e-9, format!("maximum {}", m.value))?;
    Ok(format!("W lhs {:.12}, sampled max {:.6}, search max {:.6}", r.lhs, c.max_lhs, m.value))
}

fn ac8() -> Outcome {
    let tol = Tolerances::default();
    let mut notes = Vec::new();
    for d in [3usize, 4] {
        let c = ok(bound_check(OracleWitness::Qudit { n: 2, d }, 10_000, 4, 8))?;
        ensure(c.violations == 0 && c.max_lhs <= 1e-9, format!("d={d}: max lhs {:e}", c.max_lhs))?;
        let alpha = vec![1.0 / (d as f64).sqrt(); d];
        let rho = ok(build_state::<f64>(&StateSpec::qudit_ghz(2, d, alpha)))?;
        let r = ok(witness_qudit(&rho, 2, d, &tol))?;
        ensure((r.lhs - (d - 1) as f64).abs() <= 1e-12, format!("d={d}: lhs {}", r.lhs))?;
        let shift: ComplexMatrix<f64> = ok(LocalOp::Shift.matrix(d))?;
        ensure(ok(shift.pow(d as u32))? == ComplexMatrix::identity(d), format!("d={d}: shift^d != I"))?;
        notes.push(format!("d={d} max {:.2e} lhs {}", c.max_lhs, r.lhs));
    }
    Ok(notes.join(", "))
}

fn mixed_network() -> NetworkSpec {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    NetworkSpec {
        parties: names(&["A", "B", "C", "D"]),
        sources: vec![
            Source {
                state: StateSpec::epr(FRAC_PI_4),
                owners: names(&["A", "B"]),
            },
            Source {
                state: StateSpec::epr(0.6),
                owners: names(&["B", "C"]),
            },
            Source {
                state: StateSpec::ghz(3, 0.5),
                owners: names(&["C", "D", "A"]),
            },
        ],
        cp_gates: vec![
            CpGate {
                party: "B".into(),
                theta: PI,
                qubits: [1, 2],
            },
            CpGate {
                party: "C".into(),
                theta: 1.2,
                qubits: [3, 4],
            },
        ],
    }
}

fn ac9() -> Outcome {
    let tol = Tolerances::default();
    let epr = ok(build_state::<f64>(&StateSpec::epr(FRAC_PI_4)))?;
    for o in BellOutcome::ALL {
        let r = ok(entanglement_swap(&epr, &epr, o, 1e-8))?;
        let dev = r.state.matrix().max_abs_diff(epr.matrix());
        ensure(dev <= 1e-10, format!("branch {}: deviation {dev:e}", o.label()))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut reductions = 0;
    for n in 3..=5 {
        for _ in 0..5 {
            let theta = rng.random_range(0.05..PI / 2.0 - 0.05);
            let ghz = ok(build_state::<f64>(&StateSpec::ghz(n, theta)))?;
            let img = ok(apply_blind_channel(&ghz, &random_channel(&mut rng, n)))?;
            let coh = img.entry(0, (1 << n) - 1).norm();
            for i in 0..n {
                for j in i + 1..n {
                    for b in ok(reduce_ghz_to_epr_all(&img, (i, j), 1e-8))? {
                        let c = b.state.entry(0, 3).norm();
                        ensure((c - coh).abs() <= 1e-10, format!("n={n} keep ({i},{j}): {c} vs {coh}"))?;
                        reductions += 1;
                    }
                }
            }
        }
    }
    let spec = mixed_network();
    let ch = random_channel(&mut rng, spec.num_qubits());
    let cluster = ok(generate_cluster::<f64>(&spec, &ch))?;
    let report = ok(evaluate_network_batteries(&spec, &cluster, BatteryMode::WithCompanions, &tol))?;
    ensure(report.pass, "mixed network battery failed")?;
    let mut states = ok(source_states::<f64>(&spec))?;
    states[2] = states[2].dephased();
    let dephased = ok(generate_cluster_from(&ok(network_state_from_sources(&states))?, &spec, &ch))?;
    let report = ok(evaluate_network_batteries(&spec, &dephased, BatteryMode::WithCompanions, &tol))?;
    ensure(!report.pass, "dephased source passed")?;
    ensure(
        report.sources[0].report.pass && report.sources[1].report.pass && !report.sources[2].report.pass,
        "failure not confined to the dephased source",
    )?;
    Ok(format!(
        "4 swap branches exact, {reductions} reduction branches keep |coherence|, network pass/fail as expected"
    ))
}

fn ac10() -> Outcome {
    let mut notes = Vec::new();
    for b in [battery_epr(BatteryMode::WithCompanions), ok(battery_ghz(3, BatteryMode::WithCompanions))?] {
        let found = ok(classical_assignment_search(&b, 0.25, 1e-6))?;
        ensure(found.is_empty(), format!("{}: {} assignments satisfy the battery", b.name, found.len()))?;
        let relaxed: Vec<_> = b
            .items()
            .iter()
            .filter(|it| it.contract != Contract::NonZero)
            .cloned()
            .collect();
        let found = ok(classical_assignment_search_items(&relaxed, 0.25, 1e-6, b.eps_nz))?;
        ensure(!found.is_empty(), format!("{}: relaxed battery has no assignment", b.name))?;
        notes.push(format!("{}: 0 vs {} relaxed", b.name, found.len()));
    }
    Ok(notes.join(", "))
}

fn ac11() -> Outcome {
    let t = Instant::now();
    let honest = ProverStrategy::honest(StateSpec::epr(FRAC_PI_4));
    let diag = ProverStrategy::SeparableDiag { p00: 0.5 };
    let runs: Vec<Result<(bool, bool), String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let a = ok(verify_transcript(&ok(run_protocol(&honest, 10_000, seed))?, 5.0))?.accepted;
            let b = ok(verify_transcript(&ok(run_protocol(&diag, 10_000, seed))?, 5.0))?.accepted;
            Ok((a, b))
        })
        .collect();
    let (mut accepted, mut rejected) = (0, 0);
    for r in runs {
        let (a, b) = r?;
        accepted += usize::from(a);
        rejected += usize::from(!b);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(accepted >= 99 && rejected >= 99, format!("honest accepted {accepted}, separable rejected {rejected}"))?;
    ensure(secs < 120.0, format!("took {secs:.1} s"))?;
    Ok(format!("honest accepted {accepted}/100, separable rejected {rejected}/100, {secs:.1} s"))
}

#[derive(Debug, PartialEq)]
struct Fingerprint {
    separable: Vec<DensityMatrix<f64>>,
    biseparable: Vec<DensityMatrix<f64>>,
    bound: (u64, u64),
    maximum: (u64, usize),
    transcript: String,
    branches: Vec<Option<usize>>,
    classical: usize,
}

fn fingerprint() -> Result<Fingerprint, String> {
    let cfg = ok(SamplerConfig::new(&[2, 3], 3, 12))?;
    let separable = (0..8).map(|i| ok(sample_separable(&cfg, i))).collect::<Result<_, _>>()?;
    let bcfg = ok(ok(SamplerConfig::new(&[2, 2, 2], 3, 12))?.with_partition(Partition::All))?;
    let biseparable = (0..8).map(|i| ok(sample_biseparable(&bcfg, i))).collect::<Result<_, _>>()?;
    let c = ok(bound_check(OracleWitness::Ghz { n: 3 }, 2000, 4, 12))?;
    let m = ok(maximize_witness(OracleWitness::W, 200, 12))?;
    let t = ok(run_protocol(&ProverStrategy::honest(StateSpec::epr(0.6)), 2000, 12))?;
    let ghz = ok(build_state::<f64>(&StateSpec::ghz(4, 0.4)))?;
    let all = ok(reduce_ghz_to_epr_all(&ghz, (0, 2), 1e-8))?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let branches = (0..16).map(|_| sample_branch(&all, &mut rng)).collect();
    let classical = ok(classical_assignment_search(&ok(battery_ghz(3, BatteryMode::WithCompanions))?, 0.5, 1e-6))?.len();
    Ok(Fingerprint {
        separable,
        biseparable,
        bound: (c.max_lhs.to_bits(), c.violations),
        maximum: (m.value.to_bits(), m.start),
        transcript: t.to_text(),
        branches,
        classical,
    })
}

fn ac12() -> Outcome {
    let mut prints = Vec::new();
    for threads in [1, 4, 4] {
        let pool = ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build())?;
        prints.push(pool.install(fingerprint)?);
    }
    ensure(prints[0] == prints[1], "1 vs 4 workers differ")?;
    ensure(prints[1] == prints[2], "repeated runs differ")?;
    Ok("samplers, oracle, proof game and branch sampling bit-identical across runs and 1/4 workers".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("separable two-qubit bound", ac1),
        ("witness matches PPT on blind-channel EPR images", ac2),
        ("white-noise visibility values", ac3),
        ("Werner PPT threshold", ac4),
        ("biseparable GHZ bound", ac5),
        ("Svetlichny value", ac6),
        ("W-type witness", ac7),
        ("qudit witness", ac8),
        ("network reductions and batteries", ac9),
        ("classical value assignments", ac10),
        ("proof game statistics", ac11),
        ("determinism", ac12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] AC-{} {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] AC-{} {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
