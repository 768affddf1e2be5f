//! State families, blind local-phase channels, diagonal Kraus channels,
//! white-noise mixing and subspace element extraction.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, Layout};
use crate::scalar::{c_re, cis, Real, C};

/// Amplitude normalisation tolerance for state specifications.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Channel probability-sum tolerance.
pub const PROBABILITY_TOL: f64 = 1e-12;
/// Diagonal Kraus completeness tolerance.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Largest total dimension a dense state may have (12 qubits).
pub const MAX_DIM: usize = 4096;
const BOUNDARY_TOL: f64 = 1e-12;

/// Pure-state family with its parameters. Angles are radians, amplitudes real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// `cos(theta)|00> + sin(theta)|11>`
    Epr { theta: f64 },
    /// `cos(theta)|0...0> + sin(theta)|1...1>` on `n` qubits
    Ghz { n: usize, theta: f64 },
    /// `a0|001> + a1|010> + a2|100> + a3|111>`
    W { a: [f64; 4] },
    /// `sum_j alpha_j |j...j>` on `n` qudits of dimension `d`
    QuditGhz { n: usize, d: usize, alpha: Vec<f64> },
}

/// Warnings attached to a specification that is valid but outside the
/// parameter region where the state is guaranteed entangled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFlags {
    /// The state is a product state (e.g. `theta = 0` or `pi/2`).
    pub boundary: bool,
    /// The coherence between the two branches is negative (`theta` in `(pi/2, pi)`).
    pub negative_coherence: bool,
}

impl StateSpec {
    pub fn epr(theta: f64) -> Self {
        StateSpec::Epr { theta }
    }

    pub fn ghz(n: usize, theta: f64) -> Self {
        StateSpec::Ghz { n, theta }
    }

    pub fn w(a: [f64; 4]) -> Self {
        StateSpec::W { a }
    }

    pub fn qudit_ghz(n: usize, d: usize, alpha: Vec<f64>) -> Self {
        StateSpec::QuditGhz { n, d, alpha }
    }

    /// Site dimensions of the state.
    pub fn dims(&self) -> Vec<usize> {
        match self {
            StateSpec::Epr { .. } => vec![2, 2],
            StateSpec::Ghz { n, .. } => vec![2; *n],
            StateSpec::W { .. } => vec![2, 2, 2],
            StateSpec::QuditGhz { n, d, .. } => vec![*d; *n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_norm = |amps: &[f64]| -> Result<()> {
            if amps.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidState("non-finite amplitude".into()));
            }
            let norm: f64 = amps.iter().map(|a| a * a).sum();
            if (norm - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidState(format!(
                    "squared amplitudes sum to {norm}, expected 1"
                )));
            }
            Ok(())
        };
        match self {
            StateSpec::Epr { theta } | StateSpec::Ghz { theta, .. } if !theta.is_finite() => {
                Err(Error::InvalidState("non-finite angle".into()))
            }
            StateSpec::Epr { .. } => Ok(()),
            StateSpec::Ghz { n, .. } => check_sites(*n, 2),
            StateSpec::W { a } => check_norm(a),
            StateSpec::QuditGhz { n, d, alpha } => {
                check_sites(*n, *d)?;
                if alpha.len() != *d {
                    return Err(Error::InvalidState(format!(
                        "{} amplitudes for local dimension {d}",
                        alpha.len()
                    )));
                }
                check_norm(alpha)
            }
        }
    }

    pub fn flags(&self) -> StateFlags {
        let single = |amps: &[f64]| amps.iter().filter(|a| a.abs() > BOUNDARY_TOL).count() <= 1;
        match self {
            StateSpec::Epr { theta } | StateSpec::Ghz { theta, .. } => StateFlags {
                boundary: (2.0 * theta).sin().abs() <= BOUNDARY_TOL,
                negative_coherence: theta.sin() * theta.cos() < -BOUNDARY_TOL,
            },
            StateSpec::W { a } => StateFlags {
                boundary: single(a),
                negative_coherence: false,
            },
            StateSpec::QuditGhz { alpha, .. } => StateFlags {
                boundary: single(alpha),
                negative_coherence: false,
            },
        }
    }

    /// State vector in the computational basis.
    pub fn amplitudes<T: Real>(&self) -> Result<Vec<C<T>>> {
        self.validate()?;
        let dims = self.dims();
        let layout = Layout::new(&dims);
        let mut psi = vec![C::zero(); layout.total()];
        match self {
            StateSpec::Epr { theta } | StateSpec::Ghz { theta, .. } => {
                let t = T::lit(*theta);
                psi[0] = c_re(t.cos());
                psi[layout.total() - 1] = c_re(t.sin());
            }
            StateSpec::W { a } => {
                for (idx, &amp) in [0b001, 0b010, 0b100, 0b111].iter().zip(a) {
                    psi[*idx] = c_re(T::lit(amp));
                }
            }
            StateSpec::QuditGhz { n, alpha, .. } => {
                for (j, &amp) in alpha.iter().enumerate() {
                    psi[layout.index(&vec![j; *n])] = c_re(T::lit(amp));
                }
            }
        }
        Ok(psi)
    }
}

fn check_sites(n: usize, d: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidState(format!("need at least 2 sites, got {n}")));
    }
    if d < 2 {
        return Err(Error::InvalidState(format!("local dimension {d} < 2")));
    }
    let fits = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&x| x <= MAX_DIM));
    if fits.is_none() {
        return Err(Error::InvalidState(format!(
            "{n} sites of dimension {d} exceed the dense limit of {MAX_DIM}"
        )));
    }
    Ok(())
}

/// `|psi><psi|` for the requested family.
pub fn build_state<T: Real>(spec: &StateSpec) -> Result<DensityMatrix<T>> {
    let psi = spec.amplitudes::<T>()?;
    DensityMatrix::from_pure(&spec.dims(), &psi)
}

/// One term of a blind channel: with probability `p`, every site `k`
/// receives the diagonal unitary `diag(exp(i phases[k][0]), ..., exp(i phases[k][d-1]))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTerm {
    pub p: f64,
    #[serde(rename = "site_phases")]
    pub phases: Vec<Vec<f64>>,
}

/// Probabilistic mixture of local diagonal-phase unitaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlindChannel", into = "RawBlindChannel")]
pub struct BlindChannel {
    terms: Vec<ChannelTerm>,
}

#[derive(Serialize, Deserialize)]
struct RawBlindChannel {
    terms: Vec<ChannelTerm>,
}

impl TryFrom<RawBlindChannel> for BlindChannel {
    type Error = Error;
    fn try_from(raw: RawBlindChannel) -> Result<Self> {
        BlindChannel::new(raw.terms)
    }
}

impl From<BlindChannel> for RawBlindChannel {
    fn from(ch: BlindChannel) -> Self {
        RawBlindChannel { terms: ch.terms }
    }
}

impl BlindChannel {
    pub fn new(terms: Vec<ChannelTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidChannel("no terms".into()))?;
        let shape: Vec<usize> = first.phases.iter().map(Vec::len).collect();
        if shape.is_empty() {
            return Err(Error::InvalidChannel("terms act on no sites".into()));
        }
        let mut total = 0.0;
        for (j, t) in terms.iter().enumerate() {
            if !t.p.is_finite() || t.p < 0.0 {
                return Err(Error::InvalidChannel(format!("term {j} has probability {}", t.p)));
            }
            let this: Vec<usize> = t.phases.iter().map(Vec::len).collect();
            if this != shape {
                return Err(Error::InvalidChannel(format!(
                    "term {j} has site shape {this:?}, term 0 has {shape:?}"
                )));
            }
            if t.phases.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidChannel(format!("term {j} has a non-finite phase")));
            }
            total += t.p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidChannel(format!("probabilities sum to {total}")));
        }
        Ok(Self { terms })
    }

    /// The identity channel on sites of the given dimensions.
    pub fn identity(dims: &[usize]) -> Self {
        Self {
            terms: vec![ChannelTerm {
                p: 1.0,
                phases: dims.iter().map(|&d| vec![0.0; d]).collect(),
            }],
        }
    }

    /// Qubit channel from per-term, per-site `(theta, vartheta)` pairs.
    pub fn qubit(terms: &[(f64, Vec<(f64, f64)>)]) -> Result<Self> {
        Self::new(
            terms
                .iter()
                .map(|(p, pairs)| ChannelTerm {
                    p: *p,
                    phases: pairs.iter().map(|&(a, b)| vec![a, b]).collect(),
                })
                .collect(),
        )
    }

    /// Equal mixture of the identity and a `sigma_z` phase flip on `site`.
    pub fn z_flip_half(dims: &[usize], site: usize) -> Result<Self> {
        if site >= dims.len() || dims[site] != 2 {
            return Err(Error::InvalidChannel(format!("site {site} is not a qubit")));
        }
        let mut flip = Self::identity(dims).terms.remove(0);
        flip.p = 0.5;
        flip.phases[site] = vec![0.0, std::f64::consts::PI];
        let mut id = Self::identity(dims).terms.remove(0);
        id.p = 0.5;
        Self::new(vec![id, flip])
    }

    pub fn terms(&self) -> &[ChannelTerm] {
        &self.terms
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.terms[0].phases.iter().map(Vec::len).collect()
    }

    /// Channel equal to applying `self` and then `after`.
    pub fn compose(&self, after: &Self) -> Result<Self> {
        if self.site_dims() != after.site_dims() {
            return Err(Error::InvalidChannel("composing channels on different sites".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * after.terms.len());
        for a in &self.terms {
            for b in &after.terms {
                terms.push(ChannelTerm {
                    p: a.p * b.p,
                    phases: a
                        .phases
                        .iter()
                        .zip(&b.phases)
                        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect())
                        .collect(),
                });
            }
        }
        let total: f64 = terms.iter().map(|t| t.p).sum();
        for t in &mut terms {
            t.p /= total;
        }
        Self::new(terms)
    }

    /// Per-basis-state factor `sum_j p_j exp(i phi_j(x))` reduced to the
    /// elementwise multiplier `sum_j p_j exp(i (phi_j(x) - phi_j(y)))`.
    fn multiplier<T: Real>(&self, layout: &Layout) -> Vec<(T, Vec<C<T>>)> {
        self.terms
            .iter()
            .map(|t| {
                let u: Vec<C<T>> = (0..layout.total())
                    .map(|x| {
                        let phase: f64 = (0..layout.dims().len())
                            .map(|k| t.phases[k][layout.digit(x, k)])
                            .sum();
                        cis(T::lit(phase))
                    })
                    .collect();
                (T::lit(t.p), u)
            })
            .collect()
    }
}

/// `sum_j p_j (x)U_j rho (x)U_j^dagger`. Diagonal entries are copied unchanged.
pub fn apply_blind_channel<T: Real>(rho: &DensityMatrix<T>, ch: &BlindChannel) -> Result<DensityMatrix<T>> {
    if ch.site_dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "channel acts on sites {:?}, state has {:?}",
            ch.site_dims(),
            rho.dims()
        )));
    }
    let terms = ch.multiplier::<T>(rho.layout());
    let n = rho.dim();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let v = rho.entry(i, j);
        if i == j {
            return v;
        }
        let f: C<T> = terms
            .iter()
            .map(|(p, u)| u[i] * u[j].conj() * *p)
            .sum();
        v * f
    });
    DensityMatrix::from_parts(rho.dims(), m)
}

/// Channel `sum_j (x)_k M_{jk} rho (x)_k M_{jk}^dagger` with diagonal
/// nonnegative Kraus operators. `terms[j][k]` holds the diagonal of `M_{jk}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKrausChannel", into = "RawKrausChannel")]
pub struct KrausChannel {
    terms: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct RawKrausChannel {
    terms: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawKrausChannel> for KrausChannel {
    type Error = Error;
    fn try_from(raw: RawKrausChannel) -> Result<Self> {
        KrausChannel::new(raw.terms)
    }
}

impl From<KrausChannel> for RawKrausChannel {
    fn from(ch: KrausChannel) -> Self {
        RawKrausChannel { terms: ch.terms }
    }
}

impl KrausChannel {
    /// Validates shape, nonnegativity and completeness
    /// `sum_j (x)_k M_{jk}^dagger M_{jk} = I` on every basis state.
    pub fn new(terms: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus terms".into()))?;
        let dims: Vec<usize> = first.iter().map(Vec::len).collect();
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidChannel(format!("bad site shape {dims:?}")));
        }
        for (j, t) in terms.iter().enumerate() {
            let shape: Vec<usize> = t.iter().map(Vec::len).collect();
            if shape != dims {
                return Err(Error::InvalidChannel(format!(
                    "Kraus term {j} has site shape {shape:?}, expected {dims:?}"
                )));
            }
            if t.iter().flatten().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "Kraus term {j} has a negative or non-finite weight"
                )));
            }
        }
        let layout = Layout::new(&dims);
        let ch = Self { terms };
        for x in 0..layout.total() {
            let s: f64 = ch
                .terms
                .iter()
                .map(|t| (0..dims.len()).map(|k| t[k][layout.digit(x, k)].powi(2)).product::<f64>())
                .sum();
            if (s - 1.0).abs() > COMPLETENESS_TOL {
                return Err(Error::InvalidChannel(format!(
                    "Kraus completeness fails on basis state {:?} (sum {s})",
                    layout.digits(x)
                )));
            }
        }
        Ok(ch)
    }

    /// Product of independent single-site diagonal channels; `per_site[k]`
    /// lists the Kraus diagonals acting on site `k`.
    pub fn product(per_site: &[Vec<Vec<f64>>]) -> Result<Self> {
        let mut terms: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
        for ops in per_site {
            let mut next = Vec::with_capacity(terms.len() * ops.len());
            for t in &terms {
                for op in ops {
                    let mut e = t.clone();
                    e.push(op.clone());
                    next.push(e);
                }
            }
            terms = next;
        }
        Self::new(terms)
    }

    /// Complete dephasing of every site: projectors onto each basis state.
    pub fn full_dephasing(dims: &[usize]) -> Result<Self> {
        let per_site: Vec<Vec<Vec<f64>>> = dims
            .iter()
            .map(|&d| {
                (0..d)
                    .map(|s| (0..d).map(|t| if s == t { 1.0 } else { 0.0 }).collect())
                    .collect()
            })
            .collect();
        Self::product(&per_site)
    }

    pub fn terms(&self) -> &[Vec<Vec<f64>>] {
        &self.terms
    }

    pub fn site_dims(&self) -> Vec<usize> {
        self.terms[0].iter().map(Vec::len).collect()
    }
}

pub fn apply_kraus_channel<T: Real>(rho: &DensityMatrix<T>, ch: &KrausChannel) -> Result<DensityMatrix<T>> {
    if ch.site_dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "channel acts on sites {:?}, state has {:?}",
            ch.site_dims(),
            rho.dims()
        )));
    }
    let layout = rho.layout();
    let n = rho.dim();
    // weights[j][x] = prod_k M_{jk}[x_k]
    let weights: Vec<Vec<T>> = ch
        .terms
        .iter()
        .map(|t| {
            (0..n)
                .map(|x| T::lit((0..t.len()).map(|k| t[k][layout.digit(x, k)]).product()))
                .collect()
        })
        .collect();
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        let f: T = weights.iter().map(|w| w[i] * w[j]).sum();
        rho.entry(i, j) * f
    });
    DensityMatrix::from_parts(rho.dims(), m)
}

/// White-noise mixture `v rho + (1 - v) I / D`.
pub fn werner_mix<T: Real>(rho: &DensityMatrix<T>, v: f64) -> Result<DensityMatrix<T>> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("visibility {v} not in [0, 1]")));
    }
    let mixed = DensityMatrix::maximally_mixed(rho.dims())?;
    rho.mix(&mixed, T::lit(v))
}

/// Which subspace a state is expected to live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `span{|00>, |11>}`
    Epr,
    /// `span{|0...0>, |1...1>}` on qubits
    Ghz,
    /// `span{|001>, |010>, |100>, |111>}`
    W,
    /// `span{|j...j>}` on qudits
    Qudit,
}

impl Family {
    /// Computational basis indices spanning the family's subspace.
    pub fn support(self, dims: &[usize]) -> Result<Vec<usize>> {
        let n = dims.len();
        let uniform = dims.windows(2).all(|w| w[0] == w[1]);
        let qubits = dims.iter().all(|&d| d == 2);
        match self {
            Family::Epr if n == 2 && qubits => Ok(vec![0, 3]),
            Family::Ghz if n >= 2 && qubits => Ok(vec![0, (1 << n) - 1]),
            Family::W if n == 3 && qubits => Ok(vec![0b001, 0b010, 0b100, 0b111]),
            Family::Qudit if n >= 2 && uniform => {
                let layout = Layout::new(dims);
                Ok((0..dims[0]).map(|j| layout.index(&vec![j; n])).collect())
            }
            _ => Err(Error::DimensionMismatch(format!(
                "family {self:?} does not apply to sites {dims:?}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Epr => "epr",
            Family::Ghz => "ghz",
            Family::W => "w",
            Family::Qudit => "qudit",
        }
    }
}

/// A coherence `rho_{a;b}` between two support states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coherence<T> {
    pub row: String,
    pub col: String,
    pub value: C<T>,
}

/// Populations and coherences of a state restricted to a family's subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceElements<T> {
    pub family: Family,
    /// Basis labels of the support, e.g. `"00"` or `"2,2,2"` for qudits.
    pub labels: Vec<String>,
    pub indices: Vec<usize>,
    pub populations: Vec<T>,
    /// All pairs `a < b` of support states, in lexicographic order.
    pub coherences: Vec<Coherence<T>>,
    /// Population outside the subspace, `1 - sum(populations)`.
    pub leakage: T,
}

impl<T: Real> SubspaceElements<T> {
    /// `rho_{a;b}` for support positions `a != b`.
    pub fn coherence(&self, a: usize, b: usize) -> C<T> {
        let m = self.labels.len();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let pos = lo * (2 * m - lo - 1) / 2 + (hi - lo - 1);
        let v = self.coherences[pos].value;
        if a < b {
            v
        } else {
            v.conj()
        }
    }

    /// Coherence between two basis labels.
    pub fn coherence_by_label(&self, row: &str, col: &str) -> Option<C<T>> {
        let a = self.labels.iter().position(|l| l == row)?;
        let b = self.labels.iter().position(|l| l == col)?;
        (a != b).then(|| self.coherence(a, b))
    }
}

fn basis_label(digits: &[usize], qubits: bool) -> String {
    if qubits {
        digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Extracts the family's matrix elements and the leaked population.
pub fn subspace_elements<T: Real>(rho: &DensityMatrix<T>, family: Family) -> Result<SubspaceElements<T>> {
    let support = family.support(rho.dims())?;
    let layout = rho.layout();
    let labels: Vec<String> = support
        .iter()
        .map(|&i| basis_label(&layout.digits(i), rho.is_qubits()))
        .collect();
    let populations: Vec<T> = support.iter().map(|&i| rho.population(i)).collect();
    let mut coherences = Vec::new();
    for a in 0..support.len() {
        for b in (a + 1)..support.len() {
            coherences.push(Coherence {
                row: labels[a].clone(),
                col: labels[b].clone(),
                value: rho.entry(support[a], support[b]),
            });
        }
    }
    let inside: T = populations.iter().copied().sum();
    let leakage = (rho.trace().re - inside).max(T::zero());
    Ok(SubspaceElements {
        family,
        labels,
        indices: support,
        populations,
        coherences,
        leakage,
    })
}

/// Mixture of `|j...j><j...j|` with the given weights: the fully dephased member of a family.
pub fn diagonal_mixture<T: Real>(dims: &[usize], support_weights: &[(usize, f64)]) -> Result<DensityMatrix<T>> {
    let n: usize = dims.iter().product();
    let mut m = ComplexMatrix::zeros(n, n);
    for &(i, w) in support_weights {
        if i >= n || w < 0.0 {
            return Err(Error::InvalidState(format!("bad diagonal entry ({i}, {w})")));
        }
        m[(i, i)] += c_re(T::lit(w));
    }
    DensityMatrix::from_matrix(dims, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn close(a: C<f64>, b: C<f64>) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn epr_elements() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        for (i, j) in [(0, 0), (3, 3), (0, 3)] {
            assert!(close(rho.entry(i, j), c_re(0.5)));
        }
        assert!(rho.validate().is_ok());
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_boundary_is_flagged() {
        let spec = StateSpec::ghz(3, FRAC_PI_2);
        let rho = build_state::<f64>(&spec).unwrap();
        assert!(close(rho.entry(7, 7), c_re(1.0)));
        assert!(rho.entry(0, 0).norm() < 1e-30);
        assert!(spec.flags().boundary);
        assert!(!StateSpec::ghz(3, 0.4).flags().boundary);
        assert!(StateSpec::epr(2.0).flags().negative_coherence);
    }

    #[test]
    fn w_coherence() {
        let a = 1.0 / 3f64.sqrt();
        let rho = build_state::<f64>(&StateSpec::w([a, a, a, 0.0])).unwrap();
        assert!((rho.entry(0b001, 0b010).re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spec_errors() {
        assert!(build_state::<f64>(&StateSpec::w([1.0, 1.0, 0.0, 0.0])).is_err());
        assert!(build_state::<f64>(&StateSpec::ghz(1, 0.3)).is_err());
        assert!(build_state::<f64>(&StateSpec::qudit_ghz(2, 1, vec![1.0])).is_err());
        assert!(build_state::<f64>(&StateSpec::qudit_ghz(2, 3, vec![1.0, 0.0])).is_err());
        assert!(build_state::<f64>(&StateSpec::ghz(13, 0.3)).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: StateSpec = serde_json::from_str(r#"{"kind":"qudit_ghz","n":2,"d":3,"alpha":[0.6,0.8,0.0]}"#).unwrap();
        assert_eq!(spec, StateSpec::qudit_ghz(2, 3, vec![0.6, 0.8, 0.0]));
        let back = serde_json::to_string(&StateSpec::epr(0.5)).unwrap();
        assert_eq!(back, r#"{"kind":"epr","theta":0.5}"#);
    }

    #[test]
    fn identity_channel_is_identity() {
        let rho = build_state::<f64>(&StateSpec::ghz(3, 0.3)).unwrap();
        let out = apply_blind_channel(&rho, &BlindChannel::identity(&[2, 2, 2])).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn half_z_flip_dephases_epr() {
        let theta = 0.35_f64;
        let rho = build_state::<f64>(&StateSpec::epr(theta)).unwrap();
        let ch = BlindChannel::z_flip_half(&[2, 2], 0).unwrap();
        let out = apply_blind_channel(&rho, &ch).unwrap();
        let expected = ComplexMatrix::diagonal(&[theta.cos().powi(2), 0.0, 0.0, theta.sin().powi(2)].map(c_re));
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn single_phase_rotates_coherence() {
        let alpha = 0.9_f64;
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let ch = BlindChannel::qubit(&[(1.0, vec![(0.0, alpha), (0.0, 0.0)])]).unwrap();
        let out = apply_blind_channel(&rho, &ch).unwrap();
        assert!(close(out.entry(0, 3), cis(-alpha).scale(0.5)));
    }

    #[test]
    fn channel_validation() {
        assert!(BlindChannel::qubit(&[(0.6, vec![(0.0, 0.0)]), (0.6, vec![(0.0, 1.0)])]).is_err());
        assert!(BlindChannel::qubit(&[(-0.5, vec![(0.0, 0.0)]), (1.5, vec![(0.0, 1.0)])]).is_err());
        assert!(BlindChannel::qubit(&[(1.0, vec![(f64::NAN, 0.0)])]).is_err());
        let rho = build_state::<f64>(&StateSpec::epr(0.3)).unwrap();
        assert!(apply_blind_channel(&rho, &BlindChannel::identity(&[2, 2, 2])).is_err());
        let bad: std::result::Result<BlindChannel, _> =
            serde_json::from_str(r#"{"terms":[{"p":0.4,"site_phases":[[0,0],[0,0]]}]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn kraus_identity_and_dephasing() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let id = KrausChannel::new(vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]]]).unwrap();
        assert!(apply_kraus_channel(&rho, &id).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let deph = KrausChannel::full_dephasing(&[2, 2]).unwrap();
        let out = apply_kraus_channel(&rho, &deph).unwrap();
        let expected = ComplexMatrix::diagonal(&[0.5, 0.0, 0.0, 0.5].map(c_re));
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn kraus_completeness_enforced() {
        assert!(KrausChannel::new(vec![vec![vec![1.0, 0.5], vec![1.0, 1.0]]]).is_err());
        assert!(KrausChannel::new(vec![vec![vec![-1.0, 1.0], vec![1.0, 1.0]]]).is_err());
    }

    #[test]
    fn werner_entries() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let out = werner_mix(&rho, 0.5).unwrap();
        assert!((out.entry(0, 3).re - 0.25).abs() < 1e-15);
        assert!((out.entry(1, 1).re - 0.125).abs() < 1e-15);
        assert!(werner_mix(&rho, 1.0).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-16);
        assert!(werner_mix(&rho, 1.2).is_err());
        assert!(werner_mix(&rho, -0.1).is_err());
        let mixed = werner_mix(&rho, 0.0).unwrap();
        assert!(mixed.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-16);
    }

    #[test]
    fn subspace_examples() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let e = subspace_elements(&rho, Family::Epr).unwrap();
        assert!(close(e.coherence(0, 1), c_re(0.5)));
        assert!(e.leakage.abs() < 1e-15);

        let mixed = DensityMatrix::<f64>::maximally_mixed(&[2, 2]).unwrap();
        let e = subspace_elements(&mixed, Family::Epr).unwrap();
        assert_eq!(e.coherence(0, 1), C::zero());
        assert!((e.leakage - 0.5).abs() < 1e-15);

        let ghz = build_state::<f64>(&StateSpec::ghz(3, FRAC_PI_3)).unwrap();
        let e = subspace_elements(&ghz, Family::Ghz).unwrap();
        assert!((e.coherence_by_label("000", "111").unwrap().re - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn w_support_has_six_coherences() {
        let rho = DensityMatrix::<f64>::maximally_mixed(&[2, 2, 2]).unwrap();
        let e = subspace_elements(&rho, Family::W).unwrap();
        assert_eq!(e.coherences.len(), 6);
        assert_eq!(e.labels, vec!["001", "010", "100", "111"]);
        assert!((e.leakage - 0.5).abs() < 1e-15);
        assert!(subspace_elements(&rho, Family::Epr).is_err());
    }

    #[test]
    fn coherence_lookup_order() {
        let alpha = vec![0.5, 0.5, FRAC_1_SQRT_2];
        let rho = build_state::<f64>(&StateSpec::qudit_ghz(2, 3, alpha)).unwrap();
        let e = subspace_elements(&rho, Family::Qudit).unwrap();
        assert_eq!(e.labels[2], "2,2");
        assert!(close(e.coherence(1, 2), c_re(0.5 * FRAC_1_SQRT_2)));
        assert!(close(e.coherence(2, 0), c_re(0.5 * FRAC_1_SQRT_2)));
    }

    fn arb_channel(sites: usize, terms: usize) -> impl Strategy<Value = BlindChannel> {
        (
            proptest::collection::vec(0.01f64..1.0, terms),
            proptest::collection::vec(-PI..PI, terms * sites * 2),
        )
            .prop_map(move |(w, ph)| {
                let total: f64 = w.iter().sum();
                let mut out = Vec::new();
                for j in 0..terms {
                    out.push(ChannelTerm {
                        p: w[j] / total,
                        phases: (0..sites)
                            .map(|k| vec![ph[(j * sites + k) * 2], ph[(j * sites + k) * 2 + 1]])
                            .collect(),
                    });
                }
                let s: f64 = out.iter().map(|t| t.p).sum();
                out[0].p += 1.0 - s;
                BlindChannel::new(out).unwrap()
            })
    }

    proptest! {
        #[test]
        fn blind_channel_keeps_diagonal_and_shrinks_offdiagonal(
            theta in 0.0f64..PI,
            ch in arb_channel(3, 3),
        ) {
            let rho = build_state::<f64>(&StateSpec::ghz(3, theta)).unwrap();
            let rho = werner_mix(&rho, 0.7).unwrap();
            let out = apply_blind_channel(&rho, &ch).unwrap();
            for i in 0..8 {
                prop_assert_eq!(out.entry(i, i), rho.entry(i, i));
                for j in 0..8 {
                    prop_assert!(out.entry(i, j).norm() <= rho.entry(i, j).norm() + 1e-15);
                }
            }
            prop_assert!(out.invariants().holds());
        }

        #[test]
        fn channel_composition_closure(
            theta in 0.0f64..PI,
            a in arb_channel(2, 2),
            b in arb_channel(2, 3),
        ) {
            let rho = build_state::<f64>(&StateSpec::epr(theta)).unwrap();
            let seq = apply_blind_channel(&apply_blind_channel(&rho, &a).unwrap(), &b).unwrap();
            let once = apply_blind_channel(&rho, &a.compose(&b).unwrap()).unwrap();
            prop_assert!(seq.matrix().max_abs_diff(once.matrix()) < 1e-14);
        }

        #[test]
        fn werner_expectation_is_affine(
            v in 0.0f64..1.0,
            theta in 0.0f64..PI,
            letters in proptest::collection::vec(0usize..4, 3),
        ) {
            use crate::qmat::{expectation, ObservableExpr};
            let rho = build_state::<f64>(&StateSpec::ghz(3, theta)).unwrap();
            let mixed = werner_mix(&rho, v).unwrap();
            let s: String = letters.iter().map(|&k| ['I', 'X', 'Y', 'Z'][k]).collect();
            let obs = ObservableExpr::pauli(&s).unwrap();
            let tr_o = obs.dense::<f64>(&[2, 2, 2]).unwrap().trace();
            let lhs = expectation(&mixed, &obs).unwrap();
            let rhs = expectation(&rho, &obs).unwrap().scale(v) + tr_o.scale((1.0 - v) / 8.0);
            prop_assert!((lhs - rhs).norm() < 1e-13);
        }

        #[test]
        fn built_states_are_rank_one(
            a in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let a: Vec<f64> = a.iter().map(|x| x / norm).collect();
            let spec = StateSpec::w([a[0], a[1], a[2], a[3]]);
            prop_assume!(spec.validate().is_ok());
            let rho = build_state::<f64>(&spec).unwrap();
            prop_assert!(rho.invariants().holds());
            prop_assert!((rho.purity() - 1.0).abs() < 1e-12);
            let ev = crate::qmat::hermitian_eigenvalues(rho.matrix());
            prop_assert!(ev[..7].iter().all(|x| x.abs() < 1e-10));
        }

        #[test]
        fn kraus_output_has_unit_trace(
            q in proptest::collection::vec(0.0f64..1.0, 4),
            theta in 0.0f64..PI,
        ) {
            // Two per-site diagonal channels with two Kraus terms each.
            let site = |x: f64, y: f64| vec![vec![x.sqrt(), y.sqrt()], vec![(1.0 - x).sqrt(), (1.0 - y).sqrt()]];
            let ch = KrausChannel::product(&[site(q[0], q[1]), site(q[2], q[3])]).unwrap();
            let rho = build_state::<f64>(&StateSpec::epr(theta)).unwrap();
            let out = apply_kraus_channel(&rho, &ch).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(out.invariants().holds());
        }
    }
}
