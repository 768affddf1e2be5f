use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix};
use crate::scalar::{Real, C};

const PURITY_TOL: f64 = 1e-10;
const INDEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorSign {
    #[default]
    Plus,
    Minus,
}

/// `w = +-|psi><psi| + sum_j q_j |phi_j><phi_j|` with `{phi_j}` completing
/// the target vector to an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessOperator<T: Real> {
    pub matrix: ComplexMatrix<T>,
    pub target: Vec<C<T>>,
    pub complement: Vec<Vec<C<T>>>,
}

impl<T: Real> WitnessOperator<T> {
    /// `Tr(w rho)`, real for Hermitian `w`.
    pub fn expectation(&self, rho: &DensityMatrix<T>) -> Result<T> {
        let prod = self.matrix.matmul(rho.matrix())?;
        Ok(prod.trace().re)
    }
}

fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Builds the witness operator for a pure target. `q` holds one weight per
/// complement vector (`D - 1` entries); the complement is obtained by
/// Gram-Schmidt on the computational basis.
pub fn build_witness_operator<T: Real>(
    target: &DensityMatrix<T>,
    q: &[f64],
    sign: ProjectorSign,
) -> Result<WitnessOperator<T>> {
    let purity = target.purity();
    if (purity - T::one()).abs() > T::tol(PURITY_TOL) {
        return Err(Error::NotPure { purity: purity.as_f64() });
    }
    let dim = target.dim();
    if q.len() + 1 != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {} complement weights, got {}",
            dim - 1,
            q.len()
        )));
    }
    // rho = |psi><psi|, so any column with nonzero diagonal is psi up to phase.
    let m = target.matrix();
    let pivot = (0..dim)
        .max_by(|&a, &b| m[(a, a)].re.partial_cmp(&m[(b, b)].re).expect("finite"))
        .expect("nonempty");
    let scale = T::one() / m[(pivot, pivot)].re.sqrt();
    let psi: Vec<C<T>> = (0..dim).map(|r| m[(r, pivot)] * scale).collect();

    let mut basis = vec![psi.clone()];
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![C::new(T::zero(), T::zero()); dim];
        v[k] = C::new(T::one(), T::zero());
        for b in &basis {
            let overlap = inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= *bi * overlap;
            }
        }
        let norm = inner(&v, &v).re.sqrt();
        if norm > T::lit(INDEPENDENCE_TOL) {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let complement = basis.split_off(1);

    let sign_value = match sign {
        ProjectorSign::Plus => T::one(),
        ProjectorSign::Minus => -T::one(),
    };
    let mut matrix = ComplexMatrix::outer(&psi, &psi).scale_real(sign_value);
    for (phi, &w) in complement.iter().zip(q) {
        if w != 0.0 {
            matrix.add_scaled_assign(C::new(T::lit(w), T::zero()), &ComplexMatrix::outer(phi, phi))?;
        }
    }
    Ok(WitnessOperator {
        matrix,
        target: psi,
        complement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, StateSpec};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn projector_examples() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let w = build_witness_operator(&rho, &[0.0; 3], ProjectorSign::Plus).unwrap();
        assert!(w.matrix.max_abs_diff(rho.matrix()) < 1e-15);
        assert!((w.expectation(&rho).unwrap() - 1.0).abs() < 1e-15);
        let product = DensityMatrix::<f64>::basis_state(&[2, 2], &[0, 1]).unwrap();
        assert!(w.expectation(&product).unwrap().abs() < 1e-15);
    }

    #[test]
    fn trace_with_uniform_complement() {
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        let w = build_witness_operator(&rho, &[1.0 / 3.0; 3], ProjectorSign::Plus).unwrap();
        assert!((w.matrix.trace().re - 2.0).abs() < 1e-14);
        assert!(w.matrix.hermiticity_deviation() < 1e-15);
        let neg = build_witness_operator(&rho, &[0.5; 3], ProjectorSign::Minus).unwrap();
        assert!((neg.expectation(&rho).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthonormal() {
        let rho = build_state::<f64>(&StateSpec::ghz(3, 0.3)).unwrap();
        let w = build_witness_operator(&rho, &[0.1; 7], ProjectorSign::Plus).unwrap();
        let mut all = vec![w.target.clone()];
        all.extend(w.complement.iter().cloned());
        assert_eq!(all.len(), 8);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b) - C::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mixed_target_and_bad_weights() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(&[2, 2]).unwrap();
        assert!(matches!(
            build_witness_operator(&mixed, &[0.0; 3], ProjectorSign::Plus),
            Err(Error::NotPure { .. })
        ));
        let rho = build_state::<f64>(&StateSpec::epr(FRAC_PI_4)).unwrap();
        assert!(build_witness_operator(&rho, &[0.0; 2], ProjectorSign::Plus).is_err());
    }
}
