//! Named single-site operators and tensor-product observables.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::ComplexMatrix;
use crate::scalar::{c, c_re, cis, Real, C};

/// Single-site operator. `X`, `Y`, `Z` act on qubits only; `Shift` and
/// `Clock` are the Weyl shift `|j+1 mod d><j|` and clock `diag(w^j)` with
/// `w = exp(2 pi i / d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalOp {
    I,
    X,
    Y,
    Z,
    Shift,
    Clock,
    ClockPow(u32),
}

/// `w^m` with `w = exp(2 pi i / d)`, exact at the quarter turns.
pub(crate) fn root_of_unity<T: Real>(m: usize, d: usize) -> C<T> {
    let r = m % d;
    if r == 0 {
        C::one()
    } else if 2 * r == d {
        c_re(-T::one())
    } else if 4 * r == d {
        c(T::zero(), T::one())
    } else if 4 * r == 3 * d {
        c(T::zero(), -T::one())
    } else {
        cis(T::TAU() * T::from_count(r) / T::from_count(d))
    }
}

impl LocalOp {
    pub fn is_pauli(self) -> bool {
        matches!(self, LocalOp::I | LocalOp::X | LocalOp::Y | LocalOp::Z)
    }

    /// Dense matrix of the operator on a site of dimension `d`.
    pub fn matrix<T: Real>(self, d: usize) -> Result<ComplexMatrix<T>> {
        if d < 2 {
            return Err(Error::InvalidObservable(format!("site dimension {d} < 2")));
        }
        if matches!(self, LocalOp::X | LocalOp::Y | LocalOp::Z) && d != 2 {
            return Err(Error::InvalidObservable(format!(
                "{self} acts on qubits, site has dimension {d}"
            )));
        }
        let o = T::one();
        let z = T::zero();
        Ok(match self {
            LocalOp::I => ComplexMatrix::identity(d),
            LocalOp::X => ComplexMatrix::from_vec(2, 2, vec![c(z, z), c(o, z), c(o, z), c(z, z)])?,
            LocalOp::Y => ComplexMatrix::from_vec(2, 2, vec![c(z, z), c(z, -o), c(z, o), c(z, z)])?,
            LocalOp::Z => ComplexMatrix::from_vec(2, 2, vec![c(o, z), c(z, z), c(z, z), c(-o, z)])?,
            LocalOp::Shift => {
                ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { C::one() } else { C::zero() })
            }
            LocalOp::Clock => {
                let diag: Vec<C<T>> = (0..d).map(|j| root_of_unity(j, d)).collect();
                ComplexMatrix::diagonal(&diag)
            }
            LocalOp::ClockPow(k) => {
                let diag: Vec<C<T>> = (0..d).map(|j| root_of_unity(j * k as usize, d)).collect();
                ComplexMatrix::diagonal(&diag)
            }
        })
    }
}

impl fmt::Display for LocalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalOp::I => f.write_str("I"),
            LocalOp::X => f.write_str("X"),
            LocalOp::Y => f.write_str("Y"),
            LocalOp::Z => f.write_str("Z"),
            LocalOp::Shift => f.write_str("S1"),
            LocalOp::Clock => f.write_str("S3"),
            LocalOp::ClockPow(k) => write!(f, "S3^{k}"),
        }
    }
}

/// Tensor product of named single-site operators; unlisted sites carry the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservableExpr {
    factors: Vec<(usize, LocalOp)>,
}

impl ObservableExpr {
    pub fn new(factors: Vec<(usize, LocalOp)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(site, _) in &factors {
            if !seen.insert(site) {
                return Err(Error::InvalidObservable(format!("site {site} listed twice")));
            }
        }
        Ok(Self { factors })
    }

    /// Pauli string over consecutive sites starting at 0, e.g. `"ZX"`; `I` entries are skipped.
    pub fn pauli(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for (site, ch) in s.chars().enumerate() {
            let op = match ch {
                'I' => continue,
                'X' => LocalOp::X,
                'Y' => LocalOp::Y,
                'Z' => LocalOp::Z,
                other => {
                    return Err(Error::InvalidObservable(format!("unknown Pauli letter {other}")))
                }
            };
            factors.push((site, op));
        }
        Self::new(factors)
    }

    pub fn factors(&self) -> &[(usize, LocalOp)] {
        &self.factors
    }

    /// Relabels site `k` as `map[k]`.
    pub fn remap(&self, map: &[usize]) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|&(site, op)| {
                map.get(site)
                    .map(|&s| (s, op))
                    .ok_or(Error::SiteOutOfRange {
                        site,
                        sites: map.len(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    /// Replaces the operator on `site` (adding the factor if absent).
    pub fn with_factor(&self, site: usize, op: LocalOp) -> Self {
        let mut factors: Vec<_> = self.factors.iter().copied().filter(|&(s, _)| s != site).collect();
        factors.push((site, op));
        factors.sort_by_key(|&(s, _)| s);
        Self { factors }
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.iter().map(|&(s, _)| s).max()
    }

    /// Checks the observable against the site dimensions of a state.
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        for &(site, op) in &self.factors {
            let d = *dims.get(site).ok_or(Error::SiteOutOfRange {
                site,
                sites: dims.len(),
            })?;
            if matches!(op, LocalOp::X | LocalOp::Y | LocalOp::Z) && d != 2 {
                return Err(Error::InvalidObservable(format!(
                    "{op} on site {site} of dimension {d}"
                )));
            }
        }
        Ok(())
    }

    /// Per-site dense factors for the given site dimensions.
    pub fn local_matrices<T: Real>(&self, dims: &[usize]) -> Result<Vec<(usize, ComplexMatrix<T>)>> {
        self.check_dims(dims)?;
        self.factors
            .iter()
            .map(|&(site, op)| Ok((site, op.matrix(dims[site])?)))
            .collect()
    }

    /// Full dense realisation as a `D x D` matrix.
    pub fn dense<T: Real>(&self, dims: &[usize]) -> Result<ComplexMatrix<T>> {
        self.check_dims(dims)?;
        let mut out = ComplexMatrix::identity(1);
        for (site, &d) in dims.iter().enumerate() {
            let op = self
                .factors
                .iter()
                .find(|&&(s, _)| s == site)
                .map_or(LocalOp::I, |&(_, op)| op);
            out = out.kron(&op.matrix(d)?);
        }
        Ok(out)
    }
}

impl fmt::Display for ObservableExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        let mut sorted = self.factors.clone();
        sorted.sort_by_key(|&(s, _)| s);
        for (i, (site, op)) in sorted.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{op}({site})")?;
        }
        Ok(())
    }
}

/// Equatorial qubit observable `cos(phi) X + sin(phi) Y`.
pub fn equatorial<T: Real>(phi: T) -> ComplexMatrix<T> {
    let z = C::zero();
    ComplexMatrix::from_vec(2, 2, vec![z, cis(-phi), cis(phi), z]).expect("2x2 shape")
}
