use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{apply_local_unitaries, bell_basis, measure_sites, plus_minus_basis, DensityMatrix, LocalOp};
use crate::scalar::{Real, C};
use crate::states::{subspace_elements, Family};

/// Outcome of a single-qubit measurement in the `|+>, |->` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlusMinus {
    Plus,
    Minus,
}

impl PlusMinus {
    fn index(self) -> usize {
        match self {
            PlusMinus::Plus => 0,
            PlusMinus::Minus => 1,
        }
    }

    fn symbol(self) -> char {
        match self {
            PlusMinus::Plus => '+',
            PlusMinus::Minus => '-',
        }
    }
}

/// Bell-measurement outcome, in the order of [`bell_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        }
    }

    /// Local corrections on the outer pair (site 0 = A, site 1 = D):
    /// `phi+` none, `phi-` Z on A, `psi+` X on D, `psi-` Z on A then X on D.
    pub fn corrections(self) -> Vec<(usize, LocalOp)> {
        match self {
            BellOutcome::PhiPlus => vec![],
            BellOutcome::PhiMinus => vec![(0, LocalOp::Z)],
            BellOutcome::PsiPlus => vec![(1, LocalOp::X)],
            BellOutcome::PsiMinus => vec![(0, LocalOp::Z), (1, LocalOp::X)],
        }
    }
}

/// Two-qubit state left after a measurement-and-correction step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult<T: Real> {
    /// Original indices of the two kept qubits (for a swap, the outer qubits
    /// of the two links: 0 and 3).
    pub pair: (usize, usize),
    pub outcome: String,
    pub probability: T,
    /// Post-measurement state before any correction.
    pub pre_correction: DensityMatrix<T>,
    /// Applied corrections as `(site in the output pair, operator)`.
    pub corrections: Vec<(usize, LocalOp)>,
    pub state: DensityMatrix<T>,
}

fn check_leakage<T: Real>(rho: &DensityMatrix<T>, family: Family, tol: f64) -> Result<()> {
    let leakage = subspace_elements(rho, family)?.leakage.as_f64();
    if leakage > tol {
        return Err(Error::Leakage {
            leakage,
            tolerance: tol,
        });
    }
    Ok(())
}

fn correct<T: Real>(rho: &DensityMatrix<T>, corrections: &[(usize, LocalOp)]) -> Result<DensityMatrix<T>> {
    if corrections.is_empty() {
        return Ok(rho.clone());
    }
    let us = corrections
        .iter()
        .map(|&(s, op)| Ok((s, op.matrix(2)?)))
        .collect::<Result<Vec<_>>>()?;
    apply_local_unitaries(rho, &us)
}

fn ghz_setup<T: Real>(rho: &DensityMatrix<T>, keep: (usize, usize), leakage_tol: f64) -> Result<Vec<usize>> {
    let n = rho.num_sites();
    if !rho.is_qubits() || n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "GHZ reduction needs at least two qubits, got dims {:?}",
            rho.dims()
        )));
    }
    let (i, j) = keep;
    if i >= n || j >= n {
        return Err(Error::SiteOutOfRange { site: i.max(j), sites: n });
    }
    if i >= j {
        return Err(Error::InvalidState(format!("kept qubits ({i}, {j}) must be increasing")));
    }
    check_leakage(rho, Family::Ghz, leakage_tol)?;
    Ok((0..n).filter(|&s| s != i && s != j).collect())
}

fn plus_minus_product<T: Real>(m: usize) -> Vec<Vec<C<T>>> {
    let pm = plus_minus_basis::<T>();
    let mut basis = vec![vec![C::new(T::one(), T::zero())]];
    for _ in 0..m {
        basis = basis
            .iter()
            .flat_map(|v| {
                pm.iter()
                    .map(|w| v.iter().flat_map(|a| w.iter().map(move |b| *a * *b)).collect())
                    .collect::<Vec<Vec<C<T>>>>()
            })
            .collect();
    }
    basis
}

fn decode_outcomes(index: usize, m: usize) -> Vec<PlusMinus> {
    (0..m)
        .map(|k| {
            if (index >> (m - 1 - k)) & 1 == 0 {
                PlusMinus::Plus
            } else {
                PlusMinus::Minus
            }
        })
        .collect()
}

fn ghz_branch<T: Real>(
    keep: (usize, usize),
    outcomes: &[PlusMinus],
    probability: T,
    post: &DensityMatrix<T>,
) -> Result<ReductionResult<T>> {
    let odd = outcomes.iter().filter(|&&o| o == PlusMinus::Minus).count() % 2 == 1;
    let corrections = if odd { vec![(0, LocalOp::Z)] } else { vec![] };
    Ok(ReductionResult {
        pair: keep,
        outcome: outcomes.iter().map(|o| o.symbol()).collect(),
        probability,
        state: correct(post, &corrections)?,
        pre_correction: post.clone(),
        corrections,
    })
}

/// Measures every qubit except `keep` in the `+/-` basis and applies
/// `Z^(number of minus outcomes)` to the first kept qubit. `outcomes`
/// lists the results for the measured qubits in increasing site order.
pub fn reduce_ghz_to_epr<T: Real>(
    rho: &DensityMatrix<T>,
    keep: (usize, usize),
    outcomes: &[PlusMinus],
    leakage_tol: f64,
) -> Result<ReductionResult<T>> {
    let measured = ghz_setup(rho, keep, leakage_tol)?;
    if outcomes.len() != measured.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes for {} measured qubits",
            outcomes.len(),
            measured.len()
        )));
    }
    if measured.is_empty() {
        return ghz_branch(keep, outcomes, T::one(), rho);
    }
    let index = outcomes.iter().fold(0, |acc, o| 2 * acc + o.index());
    let branches = measure_sites(rho, &measured, &plus_minus_product(measured.len()))?;
    let b = &branches[index];
    ghz_branch(keep, outcomes, b.probability, b.state()?)
}

/// Every nonzero-probability branch of [`reduce_ghz_to_epr`], in outcome order.
pub fn reduce_ghz_to_epr_all<T: Real>(
    rho: &DensityMatrix<T>,
    keep: (usize, usize),
    leakage_tol: f64,
) -> Result<Vec<ReductionResult<T>>> {
    let measured = ghz_setup(rho, keep, leakage_tol)?;
    if measured.is_empty() {
        return Ok(vec![ghz_branch(keep, &[], T::one(), rho)?]);
    }
    let m = measured.len();
    let branches = measure_sites(rho, &measured, &plus_minus_product(m))?;
    branches
        .iter()
        .filter(|b| !b.is_zero_probability())
        .map(|b| ghz_branch(keep, &decode_outcomes(b.outcome, m), b.probability, b.state()?))
        .collect()
}

/// Bell measurement on the inner qubits of `rho_ab (x) rho_cd`, followed by
/// the fixed correction for `outcome`. The result lives on `(A, D)`.
pub fn entanglement_swap<T: Real>(
    rho_ab: &DensityMatrix<T>,
    rho_cd: &DensityMatrix<T>,
    outcome: BellOutcome,
    leakage_tol: f64,
) -> Result<ReductionResult<T>> {
    let branches = swap_branches(rho_ab, rho_cd, leakage_tol)?;
    let b = &branches[outcome as usize];
    swap_result(outcome, b.probability, b.state()?)
}

/// All nonzero-probability branches of [`entanglement_swap`].
pub fn entanglement_swap_all<T: Real>(
    rho_ab: &DensityMatrix<T>,
    rho_cd: &DensityMatrix<T>,
    leakage_tol: f64,
) -> Result<Vec<ReductionResult<T>>> {
    let branches = swap_branches(rho_ab, rho_cd, leakage_tol)?;
    BellOutcome::ALL
        .iter()
        .zip(&branches)
        .filter(|(_, b)| !b.is_zero_probability())
        .map(|(&o, b)| swap_result(o, b.probability, b.state()?))
        .collect()
}

fn swap_branches<T: Real>(
    rho_ab: &DensityMatrix<T>,
    rho_cd: &DensityMatrix<T>,
    leakage_tol: f64,
) -> Result<Vec<crate::qmat::Branch<T>>> {
    check_leakage(rho_ab, Family::Epr, leakage_tol)?;
    check_leakage(rho_cd, Family::Epr, leakage_tol)?;
    let joint = rho_ab.tensor(rho_cd);
    measure_sites(&joint, &[1, 2], &bell_basis())
}

fn swap_result<T: Real>(outcome: BellOutcome, probability: T, post: &DensityMatrix<T>) -> Result<ReductionResult<T>> {
    let corrections = outcome.corrections();
    Ok(ReductionResult {
        pair: (0, 3),
        outcome: outcome.label().to_string(),
        probability,
        state: correct(post, &corrections)?,
        pre_correction: post.clone(),
        corrections,
    })
}

/// Picks one branch with probability proportional to its weight, as in a
/// single experimental run.
pub fn sample_branch<T: Real, R: Rng + ?Sized>(branches: &[ReductionResult<T>], rng: &mut R) -> Option<usize> {
    let total: f64 = branches.iter().map(|b| b.probability.as_f64()).sum();
    if branches.is_empty() || total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, b) in branches.iter().enumerate() {
        u -= b.probability.as_f64();
        if u < 0.0 {
            return Some(i);
        }
    }
    Some(branches.len() - 1)
}
