use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::DensityMatrix;
use crate::scalar::{c, Real, C};
use crate::states::{subspace_elements, Family, SubspaceElements};
use crate::witnesses::Tolerances;

/// Secondary threshold for the W-family inequality, reported next
/// to the proved biseparable bound of 1/2.
pub const W_SECONDARY_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    NotWitnessed,
}

impl Verdict {
    pub fn is_entangled(self) -> bool {
        self == Verdict::Entangled
    }
}

/// Outcome of a nonlinear witness.
///
/// `verdict` is `Entangled` whenever `lhs > bound + eq`; the inequality
/// holds for every (bi)separable state, so this is always sound. When
/// `iff_valid` is set (leakage within tolerance) the converse holds too and
/// a `NotWitnessed` verdict means the state is separable within its family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport<T> {
    pub witness: &'static str,
    pub lhs: T,
    pub bound: T,
    pub margin: T,
    pub verdict: Verdict,
    pub leakage: T,
    pub iff_valid: bool,
    /// Secondary threshold and the margin against it (W family only).
    pub secondary_bound: Option<T>,
    pub secondary_margin: Option<T>,
    pub elements: SubspaceElements<T>,
}

fn report<T: Real>(
    witness: &'static str,
    lhs: T,
    bound: T,
    elements: SubspaceElements<T>,
    tol: &Tolerances,
) -> WitnessReport<T> {
    let verdict = if lhs > bound + T::lit(tol.eq) {
        Verdict::Entangled
    } else {
        Verdict::NotWitnessed
    };
    WitnessReport {
        witness,
        lhs,
        bound,
        margin: lhs - bound,
        verdict,
        leakage: elements.leakage,
        iff_valid: elements.leakage <= T::lit(tol.leakage),
        secondary_bound: None,
        secondary_margin: None,
        elements,
    }
}

/// `sqrt(|rho_{a;b} rho_{b;a}|)`, which is `|rho_{a;b}|` for Hermitian input.
fn sqrt_pair<T: Real>(e: &SubspaceElements<T>, a: usize, b: usize) -> T {
    (e.coherence(a, b) * e.coherence(b, a)).norm().sqrt()
}

/// Two-branch inequality `2 sqrt(rho_{0;1} rho_{1;0}) + rho_{0;0} + rho_{1;1} - 1 <= 0`.
fn two_branch<T: Real>(e: &SubspaceElements<T>) -> T {
    T::lit(2.0) * sqrt_pair(e, 0, 1) + e.populations[0] + e.populations[1] - T::one()
}

/// Bipartite qubit witness; positive `lhs` certifies entanglement.
pub fn witness_epr<T: Real>(rho: &DensityMatrix<T>, tol: &Tolerances) -> Result<WitnessReport<T>> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "two-qubit witness applied to sites {:?}",
            rho.dims()
        )));
    }
    let e = subspace_elements(rho, Family::Epr)?;
    Ok(report("epr", two_branch(&e), T::zero(), e, tol))
}

/// `n`-qubit GHZ-family witness; positive `lhs` certifies genuine multipartite entanglement.
pub fn witness_ghz<T: Real>(rho: &DensityMatrix<T>, tol: &Tolerances) -> Result<WitnessReport<T>> {
    if rho.num_sites() < 2 || !rho.is_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "GHZ witness needs at least two qubits, got sites {:?}",
            rho.dims()
        )));
    }
    let e = subspace_elements(rho, Family::Ghz)?;
    Ok(report("ghz", two_branch(&e), T::zero(), e, tol))
}

/// Three-qubit W-family witness: sum of four coherence moduli against the
/// biseparable bound 1/2.
pub fn witness_w<T: Real>(rho: &DensityMatrix<T>, tol: &Tolerances) -> Result<WitnessReport<T>> {
    if rho.dims() != [2, 2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "W witness applied to sites {:?}",
            rho.dims()
        )));
    }
    let e = subspace_elements(rho, Family::W)?;
    // Support order: 001, 010, 100, 111.
    let lhs = sqrt_pair(&e, 0, 3) + sqrt_pair(&e, 1, 2) + sqrt_pair(&e, 0, 1) + sqrt_pair(&e, 2, 3);
    let mut r = report("w", lhs, T::lit(0.5), e, tol);
    let second = T::lit(W_SECONDARY_THRESHOLD);
    r.secondary_bound = Some(second);
    r.secondary_margin = Some(lhs - second);
    Ok(r)
}

/// `n`-qudit witness `2 sum_{j<k} |rho_{j;k}| + sum_j rho_{j;j} - 1 <= 0`
/// over the states `|j...j>`.
pub fn witness_qudit<T: Real>(rho: &DensityMatrix<T>, n: usize, d: usize, tol: &Tolerances) -> Result<WitnessReport<T>> {
    if n < 2 || d < 2 {
        return Err(Error::DimensionMismatch(format!("qudit witness needs n, d >= 2 (n={n}, d={d})")));
    }
    if rho.dims() != vec![d; n].as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "qudit witness for {n} sites of dimension {d} applied to sites {:?}",
            rho.dims()
        )));
    }
    let e = subspace_elements(rho, Family::Qudit)?;
    let mut lhs = -T::one();
    for j in 0..d {
        lhs += e.populations[j];
        for k in (j + 1)..d {
            lhs += T::lit(2.0) * sqrt_pair(&e, j, k);
        }
    }
    Ok(report("qudit", lhs, T::zero(), e, tol))
}

/// Dispatches on a family; the qudit witness takes `n` and `d` from the state.
pub fn witness_by_family<T: Real>(rho: &DensityMatrix<T>, family: Family, tol: &Tolerances) -> Result<WitnessReport<T>> {
    match family {
        Family::Epr => witness_epr(rho, tol),
        Family::Ghz => witness_ghz(rho, tol),
        Family::W => witness_w(rho, tol),
        Family::Qudit => witness_qudit(rho, rho.num_sites(), rho.dims()[0], tol),
    }
}

/// Estimate of `rho_{00;11}` from `<X X>` and `<X Y>` for a state inside
/// `span{|00>, |11>}`: `<XX> = 2 Re rho_{00;11}` and `<XY> = -2 Im rho_{00;11}`.
pub fn offdiag_from_pauli<T: Real>(e_xx: T, e_xy: T) -> C<T> {
    let half = T::lit(0.5);
    c(e_xx * half, -e_xy * half)
}
