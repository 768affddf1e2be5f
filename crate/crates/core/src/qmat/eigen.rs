//! Eigenvalues of Hermitian matrices.
//!
//! A Hermitian `H = A + iB` is embedded as the real symmetric block matrix
//! `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
//! doubled. The real matrix is diagonalised by cyclic Jacobi rotations.

use crate::qmat::ComplexMatrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the Hermitian part `(M + M^dagger)/2`, ascending.
pub fn hermitian_eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let n = m.rows();
    let half = T::lit(0.5);
    let two_n = 2 * n;
    let mut a = vec![T::zero(); two_n * two_n];
    for i in 0..n {
        for j in 0..n {
            let h = (m[(i, j)] + m[(j, i)].conj()) * half;
            a[i * two_n + j] = h.re;
            a[(i + n) * two_n + (j + n)] = h.re;
            a[i * two_n + (j + n)] = -h.im;
            a[(i + n) * two_n + j] = h.im;
        }
    }
    let mut ev = jacobi_symmetric(&mut a, two_n);
    ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    // Each eigenvalue appears twice in the embedding.
    ev.chunks(2).map(|pair| (pair[0] + pair[1]) * half).collect()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue<T: Real>(m: &ComplexMatrix<T>) -> T {
    hermitian_eigenvalues(m)
        .into_iter()
        .next()
        .expect("non-empty matrix")
}

fn jacobi_symmetric<T: Real>(a: &mut [T], n: usize) -> Vec<T> {
    let idx = |i: usize, j: usize| i * n + j;
    let scale: T = a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let threshold = T::epsilon() * scale * T::lit(1e-2);
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[idx(i, j)].abs());
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= threshold {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = cs * akp - sn * akq;
                    a[idx(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = cs * apk - sn * aqk;
                    a[idx(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[idx(i, i)]).collect()
}
