use serde::Serialize;
use std::time::Instant;

use qew_core::networks::{
    connectivity_check, evaluate_network_batteries, generate_cluster, Connectivity, NetworkBatteryReport, NetworkSpec,
};
use qew_core::oracle::{bound_check, maximize_witness, OracleWitness};
use qew_core::states::{apply_blind_channel, build_state, subspace_elements, werner_mix, BlindChannel, Family, StateSpec};
use qew_core::witnesses::{
    battery_epr, battery_ghz, battery_qudit_2, battery_qudit_n, battery_w, evaluate_battery, noise_witness,
    visibility_rows, witness_by_family, BatteryMode, BatteryReport, NoiseCoefficient, NoiseWitnessReport,
    ParadoxBattery, Tolerances, VisibilityKind, WitnessReport,
};
use qew_core::zkp::{run_protocol, verify_transcript, ProofVerdict, ProverStrategy};
use qew_core::DensityMatrix;

use crate::io::{format_sig, json_string, read_json, resolve_out, write_output};
use crate::{
    CliError, FamilyArg, Format, NetworkArgs, OracleArgs, ScanArgs, ToleranceArgs, WitnessArgs, ZkpArgs,
};

fn tolerances(t: &ToleranceArgs) -> Result<Tolerances, CliError> {
    let tol = Tolerances {
        eq: t.tol_eq,
        nz: t.tol_nz,
        leakage: t.leakage_tol,
    };
    tol.validate()?;
    Ok(tol)
}

fn mode(strict: bool) -> BatteryMode {
    if strict {
        BatteryMode::WithoutCompanions
    } else {
        BatteryMode::WithCompanions
    }
}

/// Picks the family from the site shape; three qubits are split between
/// GHZ and W by the smaller leakage.
pub(crate) fn resolve_family(rho: &DensityMatrix<f64>, requested: FamilyArg, tol: &Tolerances) -> Result<Family, CliError> {
    let dims = rho.dims();
    let qubits = dims.iter().all(|&d| d == 2);
    let uniform = dims.windows(2).all(|w| w[0] == w[1]);
    let family = match requested {
        FamilyArg::Epr => Family::Epr,
        FamilyArg::Ghz => Family::Ghz,
        FamilyArg::W => Family::W,
        FamilyArg::Qudit => Family::Qudit,
        FamilyArg::Auto => match dims.len() {
            2 if qubits => Family::Epr,
            3 if qubits => {
                let ghz = subspace_elements(rho, Family::Ghz)?.leakage;
                let w = subspace_elements(rho, Family::W)?.leakage;
                if (ghz - w).abs() <= tol.leakage {
                    return Err(CliError::Input(format!(
                        "cannot tell GHZ from W (leakage {ghz} vs {w}); pass --family"
                    )));
                }
                if ghz < w {
                    Family::Ghz
                } else {
                    Family::W
                }
            }
            n if n >= 4 && qubits => Family::Ghz,
            n if n >= 2 && uniform && dims[0] > 2 => Family::Qudit,
            _ => return Err(CliError::Input(format!("no witness family fits sites {dims:?}"))),
        },
    };
    family.support(dims)?;
    Ok(family)
}

pub(crate) fn family_battery(family: Family, dims: &[usize], mode: BatteryMode) -> Result<ParadoxBattery, CliError> {
    let n = dims.len();
    Ok(match family {
        Family::Epr => battery_epr(mode),
        Family::Ghz => battery_ghz(n, mode)?,
        Family::W => battery_w(mode),
        Family::Qudit if n == 2 => battery_qudit_2(dims[0])?,
        Family::Qudit => battery_qudit_n(n, dims[0])?,
    })
}

#[derive(Debug, Serialize)]
struct WitnessOutput {
    family: Family,
    witness: WitnessReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_witness: Option<NoiseWitnessReport<f64>>,
    battery: BatteryReport<f64>,
    flags: Vec<String>,
}

pub fn witness(a: &WitnessArgs) -> Result<(), CliError> {
    let tol = tolerances(&a.tol)?;
    let spec: StateSpec = read_json(&a.state, "state")?;
    spec.validate()?;
    let mut rho = build_state::<f64>(&spec)?;
    if let Some(ch) = &a.channel {
        let ch: BlindChannel = read_json(ch, "channel")?;
        rho = apply_blind_channel(&rho, &ch)?;
    }
    if let Some(v) = a.noise {
        rho = werner_mix(&rho, v)?;
    }
    let family = resolve_family(&rho, a.family, &tol)?;
    let report = witness_by_family(&rho, family, &tol)?;
    let battery = family_battery(family, rho.dims(), mode(a.no_companions))?.with_tolerances(&tol);
    let battery = evaluate_battery(&rho, &battery)?;
    let noise = match family {
        Family::Epr => Some(noise_witness(&rho, NoiseCoefficient::Two, &tol)?),
        _ => None,
    };
    let f = spec.flags();
    let mut flags = Vec::new();
    if f.boundary {
        flags.push("product state, no coherence".to_string());
    }
    if f.negative_coherence {
        flags.push("negative coherence".to_string());
    }
    if !report.iff_valid {
        flags.push(format!(
            "leakage {} exceeds tolerance; a not-witnessed verdict is inconclusive",
            format_sig(report.leakage, 12)
        ));
    }
    let out = WitnessOutput {
        family,
        witness: report,
        noise_witness: noise,
        battery,
        flags,
    };
    let body = match a.format {
        Format::Json => json_string(&out)?,
        Format::Csv => witness_csv(&out)?,
    };
    write_output(a.output.out.as_deref(), &body)
}

fn witness_csv(out: &WitnessOutput) -> Result<String, CliError> {
    let w = &out.witness;
    let mut rows: Vec<(String, String)> = vec![
        ("family".into(), out.family.name().into()),
        ("witness".into(), w.witness.into()),
        ("lhs".into(), format_sig(w.lhs, 12)),
        ("bound".into(), format_sig(w.bound, 12)),
        ("margin".into(), format_sig(w.margin, 12)),
        ("verdict".into(), if w.verdict.is_entangled() { "entangled" } else { "not_witnessed" }.into()),
        ("leakage".into(), format_sig(w.leakage, 12)),
        ("iff_valid".into(), w.iff_valid.to_string()),
    ];
    if let Some(n) = &out.noise_witness {
        rows.push(("noise_s".into(), format_sig(n.s, 12)));
        rows.push((
            "noise_verdict".into(),
            if n.verdict.is_entangled() { "entangled" } else { "not_witnessed" }.into(),
        ));
    }
    rows.push(("battery".into(), out.battery.battery.clone()));
    rows.push(("battery_pass".into(), out.battery.pass.to_string()));
    for item in &out.battery.items {
        rows.push((format!("item:{}", item.observable), item.pass.to_string()));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["key", "value"])?;
    for (k, v) in rows {
        wtr.write_record([k, v])?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_range(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Input(format!("range `{s}` must be start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let (start, stop, step) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
    if !(0.0..=0.5).contains(&start) || !(0.0..=0.5).contains(&stop) || start > stop {
        return Err(CliError::Input(format!("range `{s}` must lie within [0, 0.5] with start <= stop")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Input(format!("step in `{s}` must be positive")));
    }
    Ok((start, stop, step))
}

fn parse_kinds(s: &str) -> Result<Vec<VisibilityKind>, CliError> {
    let mut kinds = Vec::new();
    for name in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let k = VisibilityKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| CliError::Input(format!("unknown visibility kind `{name}`")))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Input("no visibility kinds given".into()));
    }
    // Columns always follow the canonical order.
    kinds.sort_by_key(|k| VisibilityKind::ALL.iter().position(|a| a == k));
    Ok(kinds)
}

/// CSV of critical visibilities with 12 significant digits.
pub fn scan_csv(range: &str, kinds: &str) -> Result<String, CliError> {
    let (start, stop, step) = parse_range(range)?;
    let kinds = parse_kinds(kinds)?;
    let rows = visibility_rows(start, stop, step)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["offdiag".to_string()];
    header.extend(kinds.iter().map(|k| format!("v_{}", k.name())));
    wtr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format_sig(r.offdiag, 12)];
        for k in &kinds {
            let v = match k {
                VisibilityKind::Witness => r.witness,
                VisibilityKind::Chsh => r.chsh,
                VisibilityKind::Svetlichny3 => r.svetlichny3,
            };
            rec.push(format_sig(v, 12));
        }
        wtr.write_record(&rec)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

pub fn scan_visibility(a: &ScanArgs) -> Result<(), CliError> {
    let body = scan_csv(&a.range, &a.kinds)?;
    write_output(a.output.out.as_deref(), &body)
}

#[derive(Debug, Serialize)]
struct ZkpOutput {
    strategy: ProverStrategy,
    rounds: usize,
    seed: u64,
    verdict: ProofVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<String>,
}

pub fn zkp(a: &ZkpArgs) -> Result<(), CliError> {
    if a.rounds == 0 {
        return Err(CliError::Input("--rounds must be at least 1".into()));
    }
    if !(a.z.is_finite() && a.z > 0.0) {
        return Err(CliError::Input("--z must be positive".into()));
    }
    let strategy: ProverStrategy = read_json(&a.strategy, "strategy")?;
    let transcript = run_protocol(&strategy, a.rounds, a.seed)?;
    let verdict = verify_transcript(&transcript, a.z)?;
    let mut written = None;
    if let Some(path) = &a.transcript {
        let p = resolve_out(path);
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, transcript.to_text())?;
        written = Some(p.display().to_string());
    }
    let out = ZkpOutput {
        strategy,
        rounds: a.rounds,
        seed: a.seed,
        verdict,
        transcript: written,
    };
    write_output(a.output.out.as_deref(), &json_string(&out)?)
}

#[derive(Debug, Serialize)]
struct NetworkOutput {
    connectivity: Connectivity,
    flags: Vec<String>,
    batteries: NetworkBatteryReport<f64>,
    pass: bool,
}

pub fn network(a: &NetworkArgs) -> Result<(), CliError> {
    let tol = tolerances(&a.tol)?;
    let spec: NetworkSpec = read_json(&a.spec, "network")?;
    spec.validate()?;
    let ch = match &a.channel {
        Some(c) => read_json::<BlindChannel>(c, "channel")?,
        None => BlindChannel::identity(&vec![2; spec.num_qubits()]),
    };
    let cluster = generate_cluster::<f64>(&spec, &ch)?;
    let batteries = evaluate_network_batteries(&spec, &cluster, mode(a.no_companions), &tol)?;
    let out = NetworkOutput {
        connectivity: connectivity_check(&spec),
        flags: spec.flags(),
        pass: batteries.pass,
        batteries,
    };
    write_output(a.output.out.as_deref(), &json_string(&out)?)
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    witness: OracleWitness,
    bound: f64,
    samples: u64,
    seed: u64,
    max_lhs: f64,
    violations: u64,
    maximize_value: f64,
    maximize_start: usize,
    runtime_ms: u128,
}

pub fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let started = Instant::now();
    let w = OracleWitness::from_name(&a.witness, a.n, a.d)?;
    let check = bound_check(w, a.samples, a.terms, a.seed)?;
    let max = maximize_witness(w, a.starts, a.seed)?;
    let out = OracleOutput {
        witness: w,
        bound: check.bound,
        samples: check.samples,
        seed: a.seed,
        max_lhs: check.max_lhs,
        violations: check.violations,
        maximize_value: max.value,
        maximize_start: max.start,
        runtime_ms: started.elapsed().as_millis(),
    };
    write_output(a.output.out.as_deref(), &json_string(&out)?)?;
    if out.violations > 0 {
        return Err(CliError::OracleViolation(format!(
            "{} of {} samples exceed the {} bound (max {})",
            out.violations,
            out.samples,
            w.name(),
            out.max_lhs
        )));
    }
    Ok(())
}
