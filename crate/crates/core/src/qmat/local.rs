//! Expectations of tensor-product observables and site-local conjugations,
//! computed without materialising the full `D x D` operator.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::qmat::density::Layout;
use crate::qmat::ops::ObservableExpr;
use crate::qmat::{ComplexMatrix, DensityMatrix};
use crate::scalar::{Real, C};

pub const UNITARY_TOL: f64 = 1e-12;

/// `Tr(rho O)` for the named observable; the imaginary part is kept.
pub fn expectation<T: Real>(rho: &DensityMatrix<T>, obs: &ObservableExpr) -> Result<C<T>> {
    let factors = obs.local_matrices(rho.dims())?;
    expectation_of_product(rho, &factors)
}

/// `Tr(rho (x)_k O_k)` where unlisted sites carry the identity.
pub fn expectation_of_product<T: Real>(
    rho: &DensityMatrix<T>,
    factors: &[(usize, ComplexMatrix<T>)],
) -> Result<C<T>> {
    let layout = rho.layout();
    let n = rho.num_sites();
    let mut ops: Vec<Option<&ComplexMatrix<T>>> = vec![None; n];
    for (site, m) in factors {
        rho.check_site(*site)?;
        let d = layout.dims()[*site];
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on site {site} of dimension {d}",
                m.rows(),
                m.cols()
            )));
        }
        if ops[*site].replace(m).is_some() {
            return Err(Error::InvalidObservable(format!("site {site} listed twice")));
        }
    }
    // Per site and per column, the nonzero rows of the local operator.
    let nonzero: Vec<Option<SparseColumns<T>>> = ops
        .iter()
        .map(|op| {
            op.map(|m| {
                (0..m.cols())
                    .map(|col| {
                        (0..m.rows())
                            .filter(|&row| m[(row, col)] != C::zero())
                            .map(|row| (row, m[(row, col)]))
                            .collect()
                    })
                    .collect()
            })
        })
        .collect();

    let mut total = C::zero();
    for i in 0..layout.total() {
        accumulate(rho, layout, &nonzero, i, 0, 0, C::one(), &mut total);
    }
    Ok(total)
}

/// Nonzero `(row, value)` entries of each column of a local operator.
type SparseColumns<T> = Vec<Vec<(usize, C<T>)>>;

#[allow(clippy::too_many_arguments)]
fn accumulate<T: Real>(
    rho: &DensityMatrix<T>,
    layout: &Layout,
    nonzero: &[Option<SparseColumns<T>>],
    col: usize,
    site: usize,
    row: usize,
    weight: C<T>,
    total: &mut C<T>,
) {
    if site == nonzero.len() {
        // Tr(rho O) = sum_{i,j} rho_{i j} O_{j i}
        *total += rho.entry(col, row) * weight;
        return;
    }
    let stride = layout.stride(site);
    let digit = layout.digit(col, site);
    match &nonzero[site] {
        None => accumulate(rho, layout, nonzero, col, site + 1, row + digit * stride, weight, total),
        Some(table) => {
            for &(r, v) in &table[digit] {
                accumulate(rho, layout, nonzero, col, site + 1, row + r * stride, weight * v, total);
            }
        }
    }
}

/// `(x)U rho (x)U^dagger` with each `U` checked for unitarity.
pub fn apply_local_unitaries<T: Real>(
    rho: &DensityMatrix<T>,
    us: &[(usize, ComplexMatrix<T>)],
) -> Result<DensityMatrix<T>> {
    let mut seen = vec![false; rho.num_sites()];
    for (site, u) in us {
        rho.check_site(*site)?;
        let d = rho.dims()[*site];
        if u.rows() != d || u.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} unitary on site {site} of dimension {d}",
                u.rows(),
                u.cols()
            )));
        }
        if std::mem::replace(&mut seen[*site], true) {
            return Err(Error::DimensionMismatch(format!("site {site} listed twice")));
        }
        let dev = u.unitarity_deviation();
        if dev > T::tol(UNITARY_TOL) {
            return Err(Error::NotUnitary {
                deviation: dev.as_f64(),
            });
        }
    }
    let mut m = rho.matrix().clone();
    for (site, u) in us {
        conjugate_site(&mut m, rho.layout(), *site, u);
    }
    Ok(rho.map_matrix(m))
}

/// In place `M <- A M A^dagger` with `A` acting on one site. No checks.
pub(crate) fn conjugate_site<T: Real>(m: &mut ComplexMatrix<T>, layout: &Layout, site: usize, a: &ComplexMatrix<T>) {
    left_multiply_site(m, layout, site, a);
    right_multiply_site_adjoint(m, layout, site, a);
}

/// `M <- A M` with `A` acting on one site.
pub(crate) fn left_multiply_site<T: Real>(m: &mut ComplexMatrix<T>, layout: &Layout, site: usize, a: &ComplexMatrix<T>) {
    let d = layout.dims()[site];
    let s = layout.stride(site);
    let n = layout.total();
    let cols = m.cols();
    let data = m.as_mut_slice();
    let mut rows_buf = vec![C::zero(); d * cols];
    for hi in 0..n / (d * s) {
        for lo in 0..s {
            let base = hi * d * s + lo;
            for b in 0..d {
                let r = base + b * s;
                rows_buf[b * cols..(b + 1) * cols].copy_from_slice(&data[r * cols..(r + 1) * cols]);
            }
            for x in 0..d {
                let r = base + x * s;
                let out = &mut data[r * cols..(r + 1) * cols];
                out.iter_mut().for_each(|v| *v = C::zero());
                for b in 0..d {
                    let coef = a[(x, b)];
                    if coef == C::zero() {
                        continue;
                    }
                    let src = &rows_buf[b * cols..(b + 1) * cols];
                    for (o, &v) in out.iter_mut().zip(src) {
                        *o += coef * v;
                    }
                }
            }
        }
    }
}

/// `M <- M A^dagger` with `A` acting on one site.
pub(crate) fn right_multiply_site_adjoint<T: Real>(
    m: &mut ComplexMatrix<T>,
    layout: &Layout,
    site: usize,
    a: &ComplexMatrix<T>,
) {
    let d = layout.dims()[site];
    let s = layout.stride(site);
    let n = layout.total();
    let rows = m.rows();
    let data = m.as_mut_slice();
    let mut buf = vec![C::zero(); d];
    for r in 0..rows {
        let row = &mut data[r * n..(r + 1) * n];
        for hi in 0..n / (d * s) {
            for lo in 0..s {
                let base = hi * d * s + lo;
                for b in 0..d {
                    buf[b] = row[base + b * s];
                }
                for x in 0..d {
                    let mut acc = C::zero();
                    for b in 0..d {
                        acc += buf[b] * a[(x, b)].conj();
                    }
                    row[base + x * s] = acc;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::ops::LocalOp;
    use crate::scalar::{c_re, cis};
    use proptest::prelude::*;

    fn epr(theta: f64) -> DensityMatrix<f64> {
        let psi = [theta.cos(), 0.0, 0.0, theta.sin()].map(c_re);
        DensityMatrix::from_pure(&[2, 2], &psi).unwrap()
    }

    fn dense_expectation(rho: &DensityMatrix<f64>, obs: &ObservableExpr) -> C<f64> {
        let o = obs.dense::<f64>(rho.dims()).unwrap();
        rho.matrix().matmul(&o).unwrap().trace()
    }

    #[test]
    fn zz_on_basis_state() {
        let rho = DensityMatrix::<f64>::basis_state(&[2, 2], &[0, 0]).unwrap();
        let e = expectation(&rho, &ObservableExpr::pauli("ZZ").unwrap()).unwrap();
        assert_eq!(e, C::one());
    }

    #[test]
    fn xx_on_balanced_epr() {
        let rho = epr(std::f64::consts::FRAC_PI_4);
        let e = expectation(&rho, &ObservableExpr::pauli("XX").unwrap()).unwrap();
        assert!((e - C::one()).norm() < 1e-15);
    }

    #[test]
    fn sigma_z_flips_coherence_sign() {
        let rho = epr(0.4);
        let z = LocalOp::Z.matrix(2).unwrap();
        let out = apply_local_unitaries(&rho, &[(0, z)]).unwrap();
        assert!((out.entry(0, 3) + rho.entry(0, 3)).norm() < 1e-15);
        assert_eq!(out.entry(0, 0), rho.entry(0, 0));
    }

    #[test]
    fn diagonal_phase_keeps_populations() {
        let rho = epr(0.3);
        let u = ComplexMatrix::diagonal(&[cis(0.7), cis(-1.9)]);
        let out = apply_local_unitaries(&rho, &[(1, u)]).unwrap();
        for i in 0..4 {
            assert!((out.entry(i, i) - rho.entry(i, i)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let rho = epr(0.3);
        let m = ComplexMatrix::diagonal(&[c_re(1.0), c_re(0.5)]);
        assert!(matches!(
            apply_local_unitaries(&rho, &[(0, m)]),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn wrong_dimension_rejected() {
        let rho = epr(0.3);
        let m = ComplexMatrix::identity(3);
        assert!(apply_local_unitaries(&rho, &[(0, m)]).is_err());
        let obs = ObservableExpr::new(vec![(2, LocalOp::Z)]).unwrap();
        assert!(expectation(&rho, &obs).is_err());
    }

    fn random_state(seed: &[f64], dims: &[usize]) -> DensityMatrix<f64> {
        let n: usize = dims.iter().product();
        let amps: Vec<C<f64>> = (0..n).map(|k| C::new(seed[2 * k], seed[2 * k + 1])).collect();
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| amps[(i + k) % n] * amps[(j + k) % n].conj()).sum::<C<f64>>()
        });
        let tr = m.trace().re;
        DensityMatrix::from_matrix(dims, m.scale_real(1.0 / tr)).unwrap()
    }

    proptest! {
        #[test]
        fn kernel_agrees_with_dense_trace(
            seed in proptest::collection::vec(-1.0f64..1.0, 24),
            ops in proptest::collection::vec(0usize..3, 2),
        ) {
            prop_assume!(seed.iter().map(|x| x * x).sum::<f64>() > 1e-3);
            let dims = [2, 3, 2];
            let rho = random_state(&seed, &dims);
            let first = [LocalOp::X, LocalOp::Y, LocalOp::Z][ops[0]];
            let middle = [LocalOp::Shift, LocalOp::Clock, LocalOp::ClockPow(2)][ops[1]];
            let obs = ObservableExpr::new(vec![(0, first), (1, middle), (2, LocalOp::X)]).unwrap();
            let fast = expectation(&rho, &obs).unwrap();
            let slow = dense_expectation(&rho, &obs);
            prop_assert!((fast - slow).norm() < 1e-12);
        }

        #[test]
        fn hermitian_expectations_are_real(
            seed in proptest::collection::vec(-1.0f64..1.0, 16),
            letters in proptest::collection::vec(0usize..4, 3),
        ) {
            prop_assume!(seed.iter().map(|x| x * x).sum::<f64>() > 1e-3);
            let rho = random_state(&seed, &[2, 2, 2]);
            let s: String = letters.iter().map(|&k| ['I', 'X', 'Y', 'Z'][k]).collect();
            let e = expectation(&rho, &ObservableExpr::pauli(&s).unwrap()).unwrap();
            prop_assert!(e.im.abs() <= 1e-10);
        }

        #[test]
        fn local_conjugation_matches_dense(
            seed in proptest::collection::vec(-1.0f64..1.0, 24),
            phi in 0.0f64..6.0,
            site in 0usize..3,
        ) {
            prop_assume!(seed.iter().map(|x| x * x).sum::<f64>() > 1e-3);
            let dims = [2, 3, 2];
            let rho = random_state(&seed, &dims);
            let d = dims[site];
            // A generic unitary: Fourier-like matrix times phases.
            let u = ComplexMatrix::from_fn(d, d, |i, j| {
                cis(std::f64::consts::TAU * (i * j) as f64 / d as f64 + phi * j as f64)
                    .scale(1.0 / (d as f64).sqrt())
            });
            let fast = apply_local_unitaries(&rho, &[(site, u.clone())]).unwrap();
            let mut full = ComplexMatrix::identity(1);
            for (k, &dk) in dims.iter().enumerate() {
                full = full.kron(&if k == site { u.clone() } else { ComplexMatrix::identity(dk) });
            }
            let slow = full.matmul(rho.matrix()).unwrap().matmul(&full.adjoint()).unwrap();
            prop_assert!(fast.matrix().max_abs_diff(&slow) < 1e-12);
            prop_assert!(fast.invariants().holds());
        }
    }
}
