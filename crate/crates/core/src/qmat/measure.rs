//! Projective measurements of one or more sites.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::qmat::density::Layout;
use crate::qmat::{ComplexMatrix, DensityMatrix};
use crate::scalar::{c_re, Real, C};

pub const ORTHONORMAL_TOL: f64 = 1e-12;
/// Branches at or below this probability are flagged instead of normalised.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// One measurement outcome. `state` is the normalised post-measurement state
/// of the unmeasured sites, or `None` when the branch has zero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T: Real> {
    pub outcome: usize,
    pub probability: T,
    pub state: Option<DensityMatrix<T>>,
}

impl<T: Real> Branch<T> {
    pub fn is_zero_probability(&self) -> bool {
        self.state.is_none()
    }

    pub fn state(&self) -> Result<&DensityMatrix<T>> {
        self.state.as_ref().ok_or(Error::ZeroProbability)
    }
}

pub fn computational_basis<T: Real>(d: usize) -> Vec<Vec<C<T>>> {
    (0..d)
        .map(|k| (0..d).map(|j| if j == k { C::one() } else { C::zero() }).collect())
        .collect()
}

/// `{|+>, |->}`.
pub fn plus_minus_basis<T: Real>() -> Vec<Vec<C<T>>> {
    let h = T::FRAC_1_SQRT_2();
    vec![vec![c_re(h), c_re(h)], vec![c_re(h), c_re(-h)]]
}

/// Bell basis `[phi+, phi-, psi+, psi-]` over two qubits.
pub fn bell_basis<T: Real>() -> Vec<Vec<C<T>>> {
    let h = T::FRAC_1_SQRT_2();
    let z = T::zero();
    [[h, z, z, h], [h, z, z, -h], [z, h, h, z], [z, h, -h, z]]
        .iter()
        .map(|v| v.iter().map(|&x| c_re(x)).collect())
        .collect()
}

/// Maximum deviation of the Gram matrix from the identity.
pub fn orthonormality_deviation<T: Real>(basis: &[Vec<C<T>>]) -> T {
    let mut dev = T::zero();
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let ip: C<T> = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let target = if i == j { C::one() } else { C::zero() };
            dev = dev.max((ip - target).norm());
        }
    }
    dev
}

/// Measures `site` in an orthonormal basis spanning its dimension.
pub fn projective_measure<T: Real>(
    rho: &DensityMatrix<T>,
    site: usize,
    basis: &[Vec<C<T>>],
) -> Result<Vec<Branch<T>>> {
    measure_sites(rho, &[site], basis)
}

/// Joint measurement of two qubit sites in a basis of four orthonormal
/// vectors indexed as `2 * a_i + a_j`.
pub fn joint_measure_two_sites<T: Real>(
    rho: &DensityMatrix<T>,
    sites: (usize, usize),
    basis: &[Vec<C<T>>],
) -> Result<Vec<Branch<T>>> {
    for s in [sites.0, sites.1] {
        rho.check_site(s)?;
        if rho.dims()[s] != 2 {
            return Err(Error::DimensionMismatch(format!(
                "site {s} has dimension {}, joint measurement needs qubits",
                rho.dims()[s]
            )));
        }
    }
    measure_sites(rho, &[sites.0, sites.1], basis)
}

/// Measures the listed sites jointly. Basis vectors are indexed with the
/// first listed site as the most significant digit.
pub fn measure_sites<T: Real>(
    rho: &DensityMatrix<T>,
    sites: &[usize],
    basis: &[Vec<C<T>>],
) -> Result<Vec<Branch<T>>> {
    let dims = rho.dims();
    let mut measured = vec![false; dims.len()];
    for &s in sites {
        rho.check_site(s)?;
        if std::mem::replace(&mut measured[s], true) {
            return Err(Error::DimensionMismatch(format!("site {s} listed twice")));
        }
    }
    let sub_dims: Vec<usize> = sites.iter().map(|&s| dims[s]).collect();
    let m: usize = sub_dims.iter().product();
    if basis.len() != m || basis.iter().any(|v| v.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "basis of {} vectors for a subsystem of dimension {m}",
            basis.len()
        )));
    }
    let dev = orthonormality_deviation(basis);
    if dev > T::tol(ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal {
            deviation: dev.as_f64(),
        });
    }

    let rest: Vec<usize> = (0..dims.len()).filter(|&s| !measured[s]).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&s| dims[s]).collect();
    let full = rho.layout();
    let sub = Layout::new(&sub_dims);
    let rest_layout = Layout::new(&rest_dims);
    let r_total = rest_layout.total();

    // index[x][r] = full computational index for subsystem digit x and rest digit r.
    let index: Vec<Vec<usize>> = (0..m)
        .map(|x| {
            (0..r_total)
                .map(|r| {
                    let mut digits = vec![0; dims.len()];
                    for (k, &s) in sites.iter().enumerate() {
                        digits[s] = sub.digit(x, k);
                    }
                    for (k, &s) in rest.iter().enumerate() {
                        digits[s] = rest_layout.digit(r, k);
                    }
                    full.index(&digits)
                })
                .collect()
        })
        .collect();

    let zero_tol = T::lit(ZERO_PROBABILITY);
    basis
        .iter()
        .enumerate()
        .map(|(outcome, v)| {
            // t[x][r][r'] = sum_y rho[(x,r),(y,r')] v_y
            let mut post = ComplexMatrix::zeros(r_total, r_total);
            for x in 0..m {
                let vx = v[x].conj();
                if vx == C::zero() {
                    continue;
                }
                for r in 0..r_total {
                    let row = index[x][r];
                    for rp in 0..r_total {
                        let mut acc = C::zero();
                        for (y, vy) in v.iter().enumerate() {
                            if *vy != C::zero() {
                                acc += rho.entry(row, index[y][rp]) * vy;
                            }
                        }
                        post[(r, rp)] += vx * acc;
                    }
                }
            }
            let p = post.trace().re;
            let state = if p > zero_tol {
                Some(DensityMatrix::from_parts(&rest_dims, post.scale_real(T::one() / p))?)
            } else {
                None
            };
            Ok(Branch {
                outcome,
                probability: p.max(T::zero()),
                state,
            })
        })
        .collect()
}
