//! Networks of EPR/GHZ sources joined by local controlled-phase gates,
//! their LOCC reductions and per-source verification batteries.

mod battery;
mod cluster;
mod connectivity;
mod reductions;
mod spec;

pub use battery::{evaluate_network_batteries, source_batteries, NetworkBatteryReport, SourceReport};
pub use cluster::{
    apply_cp_gates, cp_gate, generate_cluster, generate_cluster_channel_first, generate_cluster_from, undo_cp_gates,
};
pub use connectivity::{connectivity_check, Connectivity};
pub use reductions::{
    entanglement_swap, entanglement_swap_all, reduce_ghz_to_epr, reduce_ghz_to_epr_all, sample_branch, BellOutcome,
    PlusMinus, ReductionResult,
};
pub use spec::{
    build_network_state, network_state_from_sources, source_states, CpGate, NetworkSpec, Source, MAX_NETWORK_QUBITS,
};
