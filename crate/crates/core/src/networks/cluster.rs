use crate::error::{Error, Result};
use crate::networks::{build_network_state, CpGate, NetworkSpec};
use crate::qmat::{ComplexMatrix, DensityMatrix};
use crate::scalar::{cis, Real, C};
use crate::states::{apply_blind_channel, BlindChannel};

/// `diag(1, 1, 1, exp(i theta))`.
pub fn cp_gate<T: Real>(theta: f64) -> ComplexMatrix<T> {
    let one = C::new(T::one(), T::zero());
    ComplexMatrix::diagonal(&[one, one, one, cis(T::lit(theta))])
}

/// Conjugates `rho` by the product of the given CP gates, each with its
/// angle multiplied by `direction` (`1` applies, `-1` undoes).
fn conjugate_cp<T: Real>(rho: &DensityMatrix<T>, gates: &[CpGate], direction: f64) -> Result<DensityMatrix<T>> {
    let n = rho.num_sites();
    if !rho.is_qubits() {
        return Err(Error::InvalidNetwork("CP gates need qubit sites".into()));
    }
    for g in gates {
        if g.qubits.iter().any(|&q| q >= n) || g.qubits[0] == g.qubits[1] {
            return Err(Error::SiteOutOfRange {
                site: g.qubits[0].max(g.qubits[1]),
                sites: n,
            });
        }
    }
    // Every gate is diagonal, so the product contributes a phase per basis index.
    let dim = rho.dim();
    let phases: Vec<C<T>> = (0..dim)
        .map(|x| {
            let bit = |q: usize| (x >> (n - 1 - q)) & 1 == 1;
            let angle: f64 = gates
                .iter()
                .filter(|g| bit(g.qubits[0]) && bit(g.qubits[1]))
                .map(|g| direction * g.theta)
                .sum();
            cis(T::lit(angle))
        })
        .collect();
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(dim, dim, |r, c| m[(r, c)] * phases[r] * phases[c].conj());
    DensityMatrix::from_matrix(rho.dims(), out)
}

pub fn apply_cp_gates<T: Real>(rho: &DensityMatrix<T>, gates: &[CpGate]) -> Result<DensityMatrix<T>> {
    conjugate_cp(rho, gates, 1.0)
}

/// Inverse of [`apply_cp_gates`].
pub fn undo_cp_gates<T: Real>(rho: &DensityMatrix<T>, gates: &[CpGate]) -> Result<DensityMatrix<T>> {
    conjugate_cp(rho, gates, -1.0)
}

/// Applies the declared CP gates to the source state, then the blind channel.
pub fn generate_cluster<T: Real>(spec: &NetworkSpec, ch: &BlindChannel) -> Result<DensityMatrix<T>> {
    let rho = build_network_state(spec)?;
    generate_cluster_from(&rho, spec, ch)
}

/// As [`generate_cluster`] starting from an explicit source state.
pub fn generate_cluster_from<T: Real>(
    rho: &DensityMatrix<T>,
    spec: &NetworkSpec,
    ch: &BlindChannel,
) -> Result<DensityMatrix<T>> {
    apply_blind_channel(&apply_cp_gates(rho, &spec.cp_gates)?, ch)
}

/// Channel first, then gates. Both are diagonal in the computational basis,
/// so this agrees with [`generate_cluster`].
pub fn generate_cluster_channel_first<T: Real>(spec: &NetworkSpec, ch: &BlindChannel) -> Result<DensityMatrix<T>> {
    let rho = build_network_state(spec)?;
    apply_cp_gates(&apply_blind_channel(&rho, ch)?, &spec.cp_gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::Source;
    use crate::states::StateSpec;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn chain(theta: f64) -> NetworkSpec {
        NetworkSpec {
            parties: vec!["A".into(), "B".into(), "C".into()],
            sources: vec![
                Source {
                    state: StateSpec::epr(FRAC_PI_4),
                    owners: vec!["A".into(), "B".into()],
                },
                Source {
                    state: StateSpec::epr(FRAC_PI_4),
                    owners: vec!["B".into(), "C".into()],
                },
            ],
            cp_gates: vec![CpGate {
                party: "B".into(),
                theta,
                qubits: [1, 2],
            }],
        }
    }

    #[test]
    fn gate_values() {
        let g0 = cp_gate::<f64>(0.0);
        assert!(g0.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-16);
        let cz = cp_gate::<f64>(PI);
        assert!((cz[(3, 3)] - C::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(cz.unitarity_deviation() < 1e-15);
        // Swapping control and target permutes |01> and |10>, which share phase 1.
        let swap = ComplexMatrix::from_fn(4, 4, |r, c| {
            let s = [0, 2, 1, 3];
            if s[r] == c {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let g = cp_gate::<f64>(0.7);
        let swapped = swap.matmul(&g).unwrap().matmul(&swap).unwrap();
        assert!(swapped.max_abs_diff(&g) < 1e-16);
    }

    #[test]
    fn no_gates_identity_channel() {
        let mut spec = chain(PI);
        spec.cp_gates.clear();
        let rho = build_network_state::<f64>(&spec).unwrap();
        let out = generate_cluster::<f64>(&spec, &BlindChannel::identity(&[2; 4])).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-16);
    }

    #[test]
    fn cz_cluster_is_pure() {
        let spec = chain(PI);
        let out = generate_cluster::<f64>(&spec, &BlindChannel::identity(&[2; 4])).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-14);
        // Only |1111> has both gate qubits set, so it alone picks up the sign.
        assert!((out.entry(0b0011, 0) - C::new(0.25, 0.0)).norm() < 1e-15);
        assert!((out.entry(0b1100, 0) - C::new(0.25, 0.0)).norm() < 1e-15);
        assert!((out.entry(0b1111, 0) - C::new(-0.25, 0.0)).norm() < 1e-15);
        assert!((out.entry(0b1111, 0b0011) - C::new(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gate_and_channel_commute() {
        let spec = chain(1.1);
        let ch = BlindChannel::qubit(&[
            (0.3, vec![(0.1, 0.4), (0.0, 1.2), (0.5, -0.3), (0.2, 2.0)]),
            (0.7, vec![(0.0, -0.6), (0.9, 0.1), (0.0, 0.0), (1.4, 0.3)]),
        ])
        .unwrap();
        let a = generate_cluster::<f64>(&spec, &ch).unwrap();
        let b = generate_cluster_channel_first::<f64>(&spec, &ch).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10);
    }

    #[test]
    fn undo_restores() {
        let spec = chain(2.3);
        let rho = build_network_state::<f64>(&spec).unwrap();
        let back = undo_cp_gates(&apply_cp_gates(&rho, &spec.cp_gates).unwrap(), &spec.cp_gates).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }
}
