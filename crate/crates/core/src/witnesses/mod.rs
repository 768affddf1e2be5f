//! Nonlinear separability inequalities, paradox batteries, noise
//! thresholds and the classical value-assignment check.

mod battery;
mod classical;
mod inequalities;
mod noise;
mod operator;

use serde::{Deserialize, Serialize};

pub use battery::{
    battery_epr, battery_ghz, battery_qudit_2, battery_qudit_n, battery_w, evaluate_battery, BatteryItem,
    BatteryMode, BatteryReport, Contract, ItemReport, ParadoxBattery,
};
pub use classical::{classical_assignment_search, classical_assignment_search_items, ValueAssignment};
pub use inequalities::{
    offdiag_from_pauli, witness_by_family, witness_epr, witness_ghz, witness_qudit, witness_w, Verdict,
    WitnessReport, W_SECONDARY_THRESHOLD,
};
pub use noise::{
    critical_visibility, noise_witness, svetlichny_combination, svetlichny_value, visibility_rows,
    NoiseCoefficient, NoiseWitnessReport, PrimedAngles, VisibilityKind, VisibilityRow, SVETLICHNY_OPTIMAL_ANGLES,
};
pub use operator::{build_witness_operator, ProjectorSign, WitnessOperator};

/// Comparison thresholds shared by witnesses and batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Equality tolerance for `Exact` and `Zero` items and witness bounds.
    pub eq: f64,
    /// Threshold above which a `NonZero` item counts as nonzero.
    pub nz: f64,
    /// Largest population outside the family subspace for which the
    /// witness verdict is also a necessary condition.
    pub leakage: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            nz: 1e-6,
            leakage: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [("eq", self.eq), ("nz", self.nz), ("leakage", self.leakage)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::OutOfRange(format!("tolerance {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}
