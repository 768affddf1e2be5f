use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qmat::DensityMatrix;
use crate::scalar::Real;
use crate::states::{build_state, StateSpec};

/// Dense-simulation limit on the total number of network qubits.
pub const MAX_NETWORK_QUBITS: usize = 12;

/// An entangled source; `owners[k]` names the party holding its qubit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub state: StateSpec,
    pub owners: Vec<String>,
}

/// Controlled-phase gate applied locally by `party` on two of its qubits.
/// Qubits are global indices in source-declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpGate {
    pub party: String,
    pub theta: f64,
    pub qubits: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub parties: Vec<String>,
    pub sources: Vec<Source>,
    #[serde(default)]
    pub cp_gates: Vec<CpGate>,
}

fn source_qubits(state: &StateSpec) -> Result<usize> {
    match state {
        StateSpec::Epr { .. } => Ok(2),
        StateSpec::Ghz { n, .. } => Ok(*n),
        other => Err(Error::InvalidNetwork(format!(
            "network sources must be epr or ghz, got {other:?}"
        ))),
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, p) in self.parties.iter().enumerate() {
            if seen.insert(p.as_str(), i).is_some() {
                return Err(Error::InvalidNetwork(format!("party {p} declared twice")));
            }
        }
        if self.sources.is_empty() {
            return Err(Error::InvalidNetwork("network has no sources".into()));
        }
        let mut total = 0;
        for (k, src) in self.sources.iter().enumerate() {
            src.state.validate()?;
            let m = source_qubits(&src.state)?;
            if src.owners.len() != m {
                return Err(Error::InvalidNetwork(format!(
                    "source {k} has {m} qubits but {} owners",
                    src.owners.len()
                )));
            }
            if let Some(o) = src.owners.iter().find(|o| !seen.contains_key(o.as_str())) {
                return Err(Error::InvalidNetwork(format!("source {k} owner {o} is not a party")));
            }
            total += m;
        }
        if total > MAX_NETWORK_QUBITS {
            return Err(Error::InvalidNetwork(format!(
                "{total} qubits exceed the limit of {MAX_NETWORK_QUBITS}"
            )));
        }
        let owners = self.qubit_owners();
        for (g, gate) in self.cp_gates.iter().enumerate() {
            if !gate.theta.is_finite() {
                return Err(Error::InvalidNetwork(format!("gate {g} has non-finite theta")));
            }
            let [a, b] = gate.qubits;
            if a == b || a >= total || b >= total {
                return Err(Error::InvalidNetwork(format!(
                    "gate {g} acts on qubits {a}, {b} of {total}"
                )));
            }
            if owners[a] != gate.party || owners[b] != gate.party {
                return Err(Error::InvalidNetwork(format!(
                    "gate {g} at {} acts on qubits held by {} and {}",
                    gate.party, owners[a], owners[b]
                )));
            }
        }
        Ok(())
    }

    /// Human-readable warnings for parameters outside the guaranteed region.
    pub fn flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, src) in self.sources.iter().enumerate() {
            let f = src.state.flags();
            if f.boundary {
                out.push(format!("source {k}: product state, no coherence"));
            }
            if f.negative_coherence {
                out.push(format!("source {k}: negative coherence"));
            }
        }
        for (g, gate) in self.cp_gates.iter().enumerate() {
            if !(gate.theta > 0.0 && gate.theta < PI) {
                out.push(format!("gate {g}: theta {} outside (0, pi)", gate.theta));
            }
        }
        out
    }

    pub fn num_qubits(&self) -> usize {
        self.sources.iter().map(|s| source_qubits(&s.state).unwrap_or(0)).sum()
    }

    /// Global index of the first qubit of each source.
    pub fn source_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sources
            .iter()
            .map(|s| {
                let start = acc;
                acc += source_qubits(&s.state).unwrap_or(0);
                start
            })
            .collect()
    }

    /// Global qubit indices of source `k`.
    pub fn source_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = self.source_offsets()[k];
        start..start + self.sources[k].owners.len()
    }

    /// Owning party of every global qubit.
    pub fn qubit_owners(&self) -> Vec<&str> {
        self.sources
            .iter()
            .flat_map(|s| s.owners.iter().map(String::as_str))
            .collect()
    }
}

/// Density matrix of each source, in declaration order.
pub fn source_states<T: Real>(spec: &NetworkSpec) -> Result<Vec<DensityMatrix<T>>> {
    spec.validate()?;
    spec.sources.iter().map(|s| build_state(&s.state)).collect()
}

/// Tensor product of the given per-source states.
pub fn network_state_from_sources<T: Real>(states: &[DensityMatrix<T>]) -> Result<DensityMatrix<T>> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| Error::InvalidNetwork("no source states".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, s| acc.tensor(s)))
}

/// Tensor product of all source states in declared qubit order.
pub fn build_network_state<T: Real>(spec: &NetworkSpec) -> Result<DensityMatrix<T>> {
    network_state_from_sources(&source_states(spec)?)
}
