use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::qmat::eigen::min_hermitian_eigenvalue;
use crate::qmat::ComplexMatrix;
use crate::scalar::{c_re, Real, C};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Mixed-radix index layout over ordered sites. Site 0 is the most
/// significant digit of the computational index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self {
            dims: dims.to_vec(),
            strides,
            total: dims.iter().product(),
        }
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.total
    }

    #[inline]
    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|k| self.digit(index, k)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| d * s)
            .sum()
    }
}

/// Spectral and structural health of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport<T> {
    pub hermiticity_deviation: T,
    pub trace_deviation: T,
    pub min_eigenvalue: T,
}

impl<T: Real> InvariantReport<T> {
    pub fn holds(&self) -> bool {
        self.hermiticity_deviation <= T::tol(HERMITIAN_TOL)
            && self.trace_deviation <= T::tol(TRACE_TOL)
            && self.min_eigenvalue >= -T::tol(PSD_TOL)
    }
}

/// Density matrix over an ordered list of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    layout: Layout,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validating constructor: Hermitian, unit trace and positive semidefinite.
    pub fn from_matrix(dims: &[usize], matrix: ComplexMatrix<T>) -> Result<Self> {
        let rho = Self::from_parts(dims, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked constructor for matrices produced by trace-preserving
    /// completely positive maps of valid states.
    pub(crate) fn from_parts(dims: &[usize], matrix: ComplexMatrix<T>) -> Result<Self> {
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDensity(format!("site dimension {d} < 2")));
        }
        let layout = Layout::new(dims);
        if !matrix.is_square() || matrix.rows() != layout.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for sites {:?}",
                matrix.rows(),
                matrix.cols(),
                dims
            )));
        }
        Ok(Self { layout, matrix })
    }

    /// `|psi><psi|`; the amplitudes must be normalised.
    pub fn from_pure(dims: &[usize], amplitudes: &[C<T>]) -> Result<Self> {
        let norm: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::tol(TRACE_TOL) {
            return Err(Error::InvalidState(format!(
                "amplitudes have squared norm {norm}"
            )));
        }
        Self::from_parts(dims, ComplexMatrix::outer(amplitudes, amplitudes))
    }

    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        let m = ComplexMatrix::identity(total).scale_real(T::one() / T::from_count(total));
        Self::from_parts(dims, m)
    }

    /// Computational basis projector `|digits><digits|`.
    pub fn basis_state(dims: &[usize], digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(dims).any(|(&x, &d)| x >= d) {
            return Err(Error::DimensionMismatch(format!(
                "digits {digits:?} for sites {dims:?}"
            )));
        }
        let layout = Layout::new(dims);
        let mut m = ComplexMatrix::zeros(layout.total(), layout.total());
        let i = layout.index(digits);
        m[(i, i)] = C::one();
        Self::from_parts(dims, m)
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.layout.dims().len()
    }

    /// Total Hilbert-space dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    #[inline]
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C<T> {
        self.matrix[(row, col)]
    }

    /// Matrix element between computational basis states given by per-site digits.
    pub fn element(&self, row_digits: &[usize], col_digits: &[usize]) -> C<T> {
        self.matrix[(self.layout.index(row_digits), self.layout.index(col_digits))]
    }

    /// Population of a basis state.
    pub fn population(&self, index: usize) -> T {
        self.matrix[(index, index)].re
    }

    pub fn is_qubits(&self) -> bool {
        self.dims().iter().all(|&d| d == 2)
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> T {
        let m = &self.matrix;
        let n = m.rows();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += (m[(i, j)] * m[(j, i)]).re;
            }
        }
        acc
    }

    pub fn invariants(&self) -> InvariantReport<T> {
        InvariantReport {
            hermiticity_deviation: self.matrix.hermiticity_deviation(),
            trace_deviation: (self.trace() - C::one()).norm(),
            min_eigenvalue: min_hermitian_eigenvalue(&self.matrix),
        }
    }

    pub fn validate(&self) -> Result<InvariantReport<T>> {
        let report = self.invariants();
        if report.hermiticity_deviation > T::tol(HERMITIAN_TOL) {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {:e})",
                report.hermiticity_deviation
            )));
        }
        if report.trace_deviation > T::tol(TRACE_TOL) {
            return Err(Error::InvalidDensity(format!(
                "trace deviates from 1 by {:e}",
                report.trace_deviation
            )));
        }
        if report.min_eigenvalue < -T::tol(PSD_TOL) {
            return Err(Error::InvalidDensity(format!(
                "not positive semidefinite (min eigenvalue {:e})",
                report.min_eigenvalue
            )));
        }
        Ok(report)
    }

    /// `self (x) other`, with `other`'s sites appended after `self`'s.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims().to_vec();
        dims.extend_from_slice(other.dims());
        Self {
            layout: Layout::new(&dims),
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Self, w: T) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch("mixing states on different sites".into()));
        }
        let mut m = self.matrix.scale_real(w);
        m.add_scaled_assign(c_re(T::one() - w), &other.matrix)?;
        Self::from_parts(self.dims(), m)
    }

    /// Partial transpose with respect to one site.
    pub fn partial_transpose(&self, site: usize) -> Result<ComplexMatrix<T>> {
        self.check_site(site)?;
        let l = &self.layout;
        let d = l.dims()[site];
        let s = l.stride(site);
        let n = self.dim();
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (l.digit(i, site), l.digit(j, site));
            let i2 = i - a * s + b * s;
            let j2 = j - b * s + a * s;
            debug_assert!(a < d && b < d);
            self.matrix[(i2, j2)]
        }))
    }

    /// Zeroes every off-diagonal entry (complete dephasing in the computational basis).
    pub fn dephased(&self) -> Self {
        let n = self.dim();
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.matrix[(i, i)]
            } else {
                C::zero()
            }
        });
        Self {
            layout: self.layout.clone(),
            matrix: m,
        }
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_sites() {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.num_sites(),
            });
        }
        Ok(())
    }

    pub(crate) fn map_matrix(&self, matrix: ComplexMatrix<T>) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix,
        }
    }
}
