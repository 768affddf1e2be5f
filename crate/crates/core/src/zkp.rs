//! Simulation of the interactive entanglement proof: the verifier sends a
//! challenge `k`, the prover reports the outcome `a` of `sigma_k` on its
//! qubit, the verifier measures `sigma_s` on the other qubit and records `b`.
//! Here `sigma_0 = X` and `sigma_1 = Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::qmat::{expectation, ComplexMatrix, DensityMatrix, ObservableExpr};
use crate::scalar::C;
use crate::states::{apply_blind_channel, build_state, werner_mix, BlindChannel, StateSpec};

/// Fewest rounds per `(k, s)` cell for which a verdict is issued.
pub const MIN_CELL_SAMPLES: usize = 30;
pub const DEFAULT_Z: f64 = 5.0;

const TRANSCRIPT_TAG: &str = "# qew-transcript";
const TRANSCRIPT_COLUMNS: &str = "round,k,a,s,b";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProverStrategy {
    /// Shares the given state, optionally passed through a blind channel and
    /// white noise of visibility `noise`.
    Honest {
        state: StateSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<BlindChannel>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<f64>,
    },
    /// Shares `p00 |00><00| + (1 - p00) |11><11|`.
    SeparableDiag { p00: f64 },
    /// Deterministic `(a, b)` for cells `(k, s)` in the order
    /// `(0,0), (0,1), (1,0), (1,1)`.
    FixedOutcomes { table: [[i8; 2]; 4] },
}

impl ProverStrategy {
    pub fn honest(state: StateSpec) -> Self {
        ProverStrategy::Honest {
            state,
            channel: None,
            noise: None,
        }
    }

    /// Two-qubit state the verifier's statistics come from, if any.
    pub fn density(&self) -> Result<Option<DensityMatrix<f64>>> {
        match self {
            ProverStrategy::Honest { state, channel, noise } => {
                let mut rho = build_state::<f64>(state)?;
                if rho.dims() != [2, 2] {
                    return Err(Error::InvalidState("the proof game uses a two-qubit state".into()));
                }
                if let Some(ch) = channel {
                    rho = apply_blind_channel(&rho, ch)?;
                }
                if let Some(v) = noise {
                    rho = werner_mix(&rho, *v)?;
                }
                Ok(Some(rho))
            }
            ProverStrategy::SeparableDiag { p00 } => {
                if !(0.0..=1.0).contains(p00) {
                    return Err(Error::OutOfRange(format!("p00 = {p00} not in [0, 1]")));
                }
                let m = ComplexMatrix::diagonal(&[*p00, 0.0, 0.0, 1.0 - p00].map(|x| C::new(x, 0.0)));
                Ok(Some(DensityMatrix::from_matrix(&[2, 2], m)?))
            }
            ProverStrategy::FixedOutcomes { table } => {
                if table.iter().flatten().any(|&v| v != 1 && v != -1) {
                    return Err(Error::OutOfRange("fixed outcomes must be +1 or -1".into()));
                }
                Ok(None)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub k: u8,
    pub a: i8,
    pub s: u8,
    pub b: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub rounds: Vec<Round>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{TRANSCRIPT_TAG} seed={} n={}\n{TRANSCRIPT_COLUMNS}\n", self.seed, self.len());
        for (j, r) in self.rounds.iter().enumerate() {
            writeln!(out, "{j},{},{},{},{}", r.k, r.a, r.s, r.b).expect("write to string");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Transcript(msg);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty transcript".into()))?;
        let rest = header
            .strip_prefix(TRANSCRIPT_TAG)
            .ok_or_else(|| bad(format!("missing header, got {header:?}")))?;
        let (mut seed, mut n) = (None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("seed", v)) => seed = v.parse::<u64>().ok(),
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                _ => return Err(bad(format!("unknown header field {field:?}"))),
            }
        }
        let (seed, n) = seed.zip(n).ok_or_else(|| bad("header needs seed and n".into()))?;
        if lines.next() != Some(TRANSCRIPT_COLUMNS) {
            return Err(bad(format!("expected column line {TRANSCRIPT_COLUMNS:?}")));
        }
        let mut rounds = Vec::with_capacity(n);
        for (j, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad(format!("line {}: expected 5 columns", j + 3)));
            }
            let num = |i: usize| cols[i].trim().parse::<i64>().map_err(|e| bad(format!("line {}: {e}", j + 3)));
            if num(0)? != j as i64 {
                return Err(bad(format!("line {}: round index out of order", j + 3)));
            }
            let (k, a, s, b) = (num(1)?, num(2)?, num(3)?, num(4)?);
            if !matches!(k, 0 | 1) || !matches!(s, 0 | 1) || !matches!(a, 1 | -1) || !matches!(b, 1 | -1) {
                return Err(bad(format!("line {}: value outside alphabet", j + 3)));
            }
            rounds.push(Round {
                k: k as u8,
                a: a as i8,
                s: s as u8,
                b: b as i8,
            });
        }
        if rounds.len() != n {
            return Err(bad(format!("header says {n} rounds, found {}", rounds.len())));
        }
        Ok(Self { seed, rounds })
    }
}

/// Outcome distribution over `(a, b)` in the order `(+,+), (+,-), (-,+), (-,-)`.
type Cell = [f64; 4];

fn born_cells(rho: &DensityMatrix<f64>) -> Result<[Cell; 4]> {
    let e = |s: &str| -> Result<f64> { Ok(expectation(rho, &ObservableExpr::pauli(s)?)?.re) };
    let ops = ['X', 'Z'];
    let mut cells = [[0.0; 4]; 4];
    for k in 0..2 {
        for s in 0..2 {
            let ea = e(&format!("{}I", ops[k]))?;
            let eb = e(&format!("I{}", ops[s]))?;
            let eab = e(&format!("{}{}", ops[k], ops[s]))?;
            let mut cell = [0.0; 4];
            for (i, (a, b)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate() {
                cell[i] = ((1.0 + a * ea + b * eb + a * b * eab) / 4.0).max(0.0);
            }
            cells[2 * k + s] = cell;
        }
    }
    Ok(cells)
}

fn sample_cell(cell: &Cell, u: f64) -> (i8, i8) {
    const OUT: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
    let total: f64 = cell.iter().sum();
    let mut acc = 0.0;
    for (i, p) in cell.iter().enumerate() {
        acc += p / total;
        if u < acc {
            return OUT[i];
        }
    }
    OUT[cell.iter().rposition(|&p| p > 0.0).unwrap_or(3)]
}

/// Plays `n` rounds. Round `j` draws from a ChaCha stream keyed by
/// `(seed, j)`, so the transcript does not depend on scheduling.
pub fn run_protocol(strategy: &ProverStrategy, n: usize, seed: u64) -> Result<Transcript> {
    if n == 0 {
        return Err(Error::OutOfRange("the protocol needs at least one round".into()));
    }
    let cells = strategy.density()?.map(|rho| born_cells(&rho)).transpose()?;
    let rounds = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let k = u8::from(rng.random::<bool>());
            let s = u8::from(rng.random::<bool>());
            let u = rng.random::<f64>();
            let idx = usize::from(2 * k + s);
            let (a, b) = match (&cells, strategy) {
                (Some(c), _) => sample_cell(&c[idx], u),
                (None, ProverStrategy::FixedOutcomes { table }) => (table[idx][0], table[idx][1]),
                (None, _) => unreachable!("only fixed outcomes lack a state"),
            };
            Round { k, a, s, b }
        })
        .collect();
    Ok(Transcript { seed, rounds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub k: u8,
    pub s: u8,
    /// `"xx"`, `"xz"`, `"zx"` or `"zz"` (prover operator first).
    pub label: String,
    pub count: usize,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub stat: CellStat,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofVerdict {
    pub accepted: bool,
    pub z_threshold: f64,
    pub cells: Vec<CellVerdict>,
}

fn label(k: u8, s: u8) -> String {
    let name = |v: u8| if v == 0 { 'x' } else { 'z' };
    format!("{}{}", name(k), name(s))
}

/// Mean of `a b` and its standard error `sqrt((1 - est^2) / N)` per cell.
pub fn cell_statistics(t: &Transcript) -> Vec<CellStat> {
    let mut sums = [0i64; 4];
    let mut counts = [0usize; 4];
    for r in &t.rounds {
        let i = usize::from(2 * r.k + r.s);
        sums[i] += i64::from(r.a * r.b);
        counts[i] += 1;
    }
    (0..4u8)
        .map(|i| {
            let (k, s) = (i / 2, i % 2);
            let count = counts[usize::from(i)];
            let estimate = if count == 0 {
                0.0
            } else {
                sums[usize::from(i)] as f64 / count as f64
            };
            let std_error = if count == 0 {
                f64::INFINITY
            } else {
                ((1.0 - estimate * estimate).max(0.0) / count as f64).sqrt()
            };
            CellStat {
                k,
                s,
                label: label(k, s),
                count,
                estimate,
                std_error,
            }
        })
        .collect()
}

/// Accepts when `zz` is compatible with 1, `zx` and `xz` with 0, and `xx`
/// differs from 0, each judged at `z` standard errors.
pub fn verify_transcript(t: &Transcript, z: f64) -> Result<ProofVerdict> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::OutOfRange(format!("z threshold {z} must be positive")));
    }
    let stats = cell_statistics(t);
    if let Some(c) = stats.iter().find(|c| c.count < MIN_CELL_SAMPLES) {
        return Err(Error::Undersampled {
            k: c.k,
            s: c.s,
            count: c.count,
            required: MIN_CELL_SAMPLES,
        });
    }
    let cells: Vec<CellVerdict> = stats
        .into_iter()
        .map(|stat| {
            let margin = z * stat.std_error;
            let pass = match (stat.k, stat.s) {
                (1, 1) => (stat.estimate - 1.0).abs() <= margin,
                (0, 0) => stat.estimate.abs() > margin,
                _ => stat.estimate.abs() <= margin,
            };
            CellVerdict { stat, pass }
        })
        .collect();
    Ok(ProofVerdict {
        accepted: cells.iter().all(|c| c.pass),
        z_threshold: z,
        cells,
    })
}

/// Everything the verifier can infer from a transcript. Nothing here refers
/// to the decomposition of the prover's channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageView {
    pub cells: Vec<CellStat>,
    /// Mean of the prover's Z outcomes.
    pub prover_z_mean: f64,
    /// `|<X X>| / 2`, equal to `|Re rho_00;11|` for states in `span{|00>, |11>}`.
    pub re_coherence: f64,
    /// Upper bound on `|Im rho_00;11|` from `|rho_00;11|^2 <= rho_00 rho_11`.
    pub im_coherence_bound: f64,
}

pub fn leakage_view(t: &Transcript) -> LeakageView {
    let cells = cell_statistics(t);
    let z_rounds: Vec<i8> = t.rounds.iter().filter(|r| r.k == 1).map(|r| r.a).collect();
    let prover_z_mean = if z_rounds.is_empty() {
        0.0
    } else {
        z_rounds.iter().map(|&a| f64::from(a)).sum::<f64>() / z_rounds.len() as f64
    };
    let re = (cells[0].estimate / 2.0).abs();
    let pop_product = (1.0 - prover_z_mean * prover_z_mean) / 4.0;
    LeakageView {
        re_coherence: re,
        im_coherence_bound: (pop_product - re * re).max(0.0).sqrt(),
        prover_z_mean,
        cells,
    }
}
