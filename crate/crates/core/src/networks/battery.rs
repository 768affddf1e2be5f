use serde::Serialize;

use crate::error::Result;
use crate::networks::{undo_cp_gates, NetworkSpec};
use crate::qmat::DensityMatrix;
use crate::scalar::Real;
use crate::states::StateSpec;
use crate::witnesses::{battery_epr, battery_ghz, evaluate_battery, BatteryMode, BatteryReport, ParadoxBattery, Tolerances};

/// One battery per source: the pair battery for an EPR source and the
/// ring battery for a GHZ source, relabelled onto global qubit indices.
pub fn source_batteries(spec: &NetworkSpec, mode: BatteryMode) -> Result<Vec<ParadoxBattery>> {
    spec.validate()?;
    spec.sources
        .iter()
        .enumerate()
        .map(|(k, src)| {
            let map: Vec<usize> = spec.source_range(k).collect();
            let (kind, base) = match src.state {
                StateSpec::Ghz { n, .. } => ("ghz", battery_ghz(n, mode)?),
                _ => ("epr", battery_epr(mode)),
            };
            base.remap(format!("source{k}:{kind}"), &map)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceReport<T> {
    pub source: usize,
    pub owners: Vec<String>,
    /// Battery evaluated after the declared CP gates are undone.
    pub report: BatteryReport<T>,
    /// Battery evaluated directly on the cluster state.
    pub raw_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkBatteryReport<T> {
    pub sources: Vec<SourceReport<T>>,
    pub pass: bool,
}

/// Evaluates every source battery on a cluster state. The verifier knows
/// the declared gates; since they are diagonal they commute with any blind
/// channel, so undoing them recovers the channel image of the source state.
pub fn evaluate_network_batteries<T: Real>(
    spec: &NetworkSpec,
    cluster: &DensityMatrix<T>,
    mode: BatteryMode,
    tol: &Tolerances,
) -> Result<NetworkBatteryReport<T>> {
    let batteries = source_batteries(spec, mode)?;
    let undone = undo_cp_gates(cluster, &spec.cp_gates)?;
    let sources = batteries
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let b = b.clone().with_tolerances(tol);
            Ok(SourceReport {
                source: k,
                owners: spec.sources[k].owners.clone(),
                report: evaluate_battery(&undone, &b)?,
                raw_pass: evaluate_battery(cluster, &b)?.pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = sources.iter().all(|s| s.report.pass);
    Ok(NetworkBatteryReport { sources, pass })
}
