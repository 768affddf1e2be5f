use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::qmat::{equatorial, expectation, expectation_of_product, DensityMatrix, ObservableExpr};
use crate::scalar::Real;
use crate::witnesses::{Tolerances, Verdict};

/// Coefficient on `<X X>` in the noise-robust witness `s = c <X X> + <Z Z>`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCoefficient {
    /// `c = 2`, which reproduces `v* = 1 / (1 + 4 |rho_00;11|)`.
    #[default]
    Two,
    /// `c = 4`, a stricter variant that needs higher visibility.
    Four,
}

impl NoiseCoefficient {
    pub fn value(self) -> f64 {
        match self {
            NoiseCoefficient::Two => 2.0,
            NoiseCoefficient::Four => 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseWitnessReport<T> {
    pub zx: T,
    pub xz: T,
    pub xx: T,
    pub zz: T,
    pub coefficient: f64,
    pub s: T,
    /// Whether `<Z X>` and `<X Z>` vanish within tolerance.
    pub zero_lines_hold: bool,
    pub verdict: Verdict,
}

/// Evaluates `s = c <X X> + <Z Z>` on a two-qubit state; entangled when
/// the zero lines hold and `s > 1`.
pub fn noise_witness<T: Real>(
    rho: &DensityMatrix<T>,
    coefficient: NoiseCoefficient,
    tol: &Tolerances,
) -> Result<NoiseWitnessReport<T>> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "noise witness needs two qubits, got dims {:?}",
            rho.dims()
        )));
    }
    let e = |s: &str| -> Result<T> { Ok(expectation(rho, &ObservableExpr::pauli(s)?)?.re) };
    let (zx, xz, xx, zz) = (e("ZX")?, e("XZ")?, e("XX")?, e("ZZ")?);
    let eq = T::lit(tol.eq);
    let s = T::lit(coefficient.value()) * xx + zz;
    let zero_lines_hold = zx.abs() <= eq && xz.abs() <= eq;
    let verdict = if zero_lines_hold && s > T::one() + eq {
        Verdict::Entangled
    } else {
        Verdict::NotWitnessed
    };
    Ok(NoiseWitnessReport {
        zx,
        xz,
        xx,
        zz,
        coefficient: coefficient.value(),
        s,
        zero_lines_hold,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityKind {
    Witness,
    Chsh,
    #[serde(rename = "svetlichny3")]
    Svetlichny3,
}

impl VisibilityKind {
    pub const ALL: [VisibilityKind; 3] = [VisibilityKind::Witness, VisibilityKind::Chsh, VisibilityKind::Svetlichny3];

    pub fn name(self) -> &'static str {
        match self {
            VisibilityKind::Witness => "witness",
            VisibilityKind::Chsh => "chsh",
            VisibilityKind::Svetlichny3 => "svetlichny3",
        }
    }
}

/// Smallest white-noise visibility at which each test detects a state with
/// coherence `offdiag` in `[0, 1/2]`. The Svetlichny value is capped at 1.
pub fn critical_visibility(offdiag: f64, kind: VisibilityKind) -> Result<f64> {
    if !(0.0..=0.5).contains(&offdiag) {
        return Err(Error::OutOfRange(format!("off-diagonal {offdiag} not in [0, 1/2]")));
    }
    Ok(match kind {
        VisibilityKind::Witness => 1.0 / (1.0 + 4.0 * offdiag),
        VisibilityKind::Chsh => 1.0 / (1.0 + 4.0 * offdiag * offdiag).sqrt(),
        VisibilityKind::Svetlichny3 => {
            if offdiag == 0.0 {
                1.0
            } else {
                (1.0 / (2.0 * SQRT_2 * offdiag)).min(1.0)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityRow {
    pub offdiag: f64,
    pub witness: f64,
    pub chsh: f64,
    pub svetlichny3: f64,
}

/// Rows at `start + i step` for every value up to `stop` inclusive.
pub fn visibility_rows(start: f64, stop: f64, step: f64) -> Result<Vec<VisibilityRow>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::OutOfRange(format!("bad range {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| {
            let x = start + i as f64 * step;
            Ok(VisibilityRow {
                offdiag: x,
                witness: critical_visibility(x, VisibilityKind::Witness)?,
                chsh: critical_visibility(x, VisibilityKind::Chsh)?,
                svetlichny3: critical_visibility(x, VisibilityKind::Svetlichny3)?,
            })
        })
        .collect()
}

/// Angles maximizing the Svetlichny combination on real GHZ coherences.
pub const SVETLICHNY_OPTIMAL_ANGLES: [f64; 3] = [FRAC_PI_4; 3];

/// How the primed settings relate to the unprimed ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimedAngles {
    /// `phi'_i = phi_i + pi/2`.
    QuarterTurn,
    Explicit([f64; 3]),
}

impl PrimedAngles {
    fn resolve(self, angles: [f64; 3]) -> [f64; 3] {
        match self {
            PrimedAngles::QuarterTurn => angles.map(|a| a + FRAC_PI_2),
            PrimedAngles::Explicit(p) => p,
        }
    }
}

/// Signed Svetlichny combination
/// `AAA + AAA' + AA'A + A'AA - A'A'A' - A'A'A - A'AA' - AA'A'`
/// with equatorial observables `A(phi) = cos(phi) X + sin(phi) Y`.
pub fn svetlichny_combination<T: Real>(rho: &DensityMatrix<T>, angles: [f64; 3], primes: PrimedAngles) -> Result<T> {
    if rho.dims() != [2, 2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "Svetlichny combination needs three qubits, got dims {:?}",
            rho.dims()
        )));
    }
    let primed = primes.resolve(angles);
    let corr = |p: [bool; 3]| -> Result<T> {
        let ops: Vec<_> = (0..3)
            .map(|k| (k, equatorial(T::lit(if p[k] { primed[k] } else { angles[k] }))))
            .collect();
        Ok(expectation_of_product(rho, &ops)?.re)
    };
    const PLUS: [[bool; 3]; 4] = [
        [false, false, false],
        [false, false, true],
        [false, true, false],
        [true, false, false],
    ];
    const MINUS: [[bool; 3]; 4] = [[true, true, true], [true, true, false], [true, false, true], [false, true, true]];
    let mut s = T::zero();
    for p in PLUS {
        s += corr(p)?;
    }
    for p in MINUS {
        s -= corr(p)?;
    }
    Ok(s)
}

/// `|S|` for the Svetlichny combination; values above 4 rule out hybrid
/// local models.
pub fn svetlichny_value<T: Real>(rho: &DensityMatrix<T>, angles: [f64; 3], primes: PrimedAngles) -> Result<T> {
    Ok(svetlichny_combination(rho, angles, primes)?.abs())
}
