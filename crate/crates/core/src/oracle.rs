//! Independent checks: random separable and biseparable states, a
//! multi-start search for the largest witness value over those sets, and
//! the partial-transpose test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::qmat::{min_hermitian_eigenvalue, ComplexMatrix, DensityMatrix, Layout};
use crate::scalar::{Real, C};
use crate::witnesses::{witness_epr, witness_ghz, witness_qudit, witness_w, Tolerances};

/// Eigenvalue below which the partial transpose counts as negative.
pub const NPT_TOL: f64 = 1e-10;
pub const MAX_MIXTURE_TERMS: usize = 16;
/// Allowed excess of a witness value over its bound.
pub const BOUND_TOL: f64 = 1e-9;

const REFINE_STARTS: usize = 32;
const REFINE_SWEEPS: usize = 3;
const GOLDEN_STEPS: usize = 40;

/// Which bipartitions a biseparable sample may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Sites of one side; the other side is the complement.
    Fixed(Vec<usize>),
    /// A fresh random bipartition for every mixture term.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub dims: Vec<usize>,
    pub terms: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition>,
}

impl SamplerConfig {
    pub fn new(dims: &[usize], terms: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            dims: dims.to_vec(),
            terms,
            seed,
            partition: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_partition(mut self, partition: Partition) -> Result<Self> {
        self.partition = Some(partition);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidState(format!("bad site dimensions {:?}", self.dims)));
        }
        if !(1..=MAX_MIXTURE_TERMS).contains(&self.terms) {
            return Err(Error::OutOfRange(format!(
                "mixture terms {} outside 1..={MAX_MIXTURE_TERMS}",
                self.terms
            )));
        }
        match &self.partition {
            Some(Partition::Fixed(side)) => {
                let n = self.dims.len();
                let mut seen = vec![false; n];
                for &s in side {
                    if s >= n || std::mem::replace(&mut seen[s], true) {
                        return Err(Error::InvalidState(format!("bad partition {side:?} for {n} sites")));
                    }
                }
                if side.is_empty() || side.len() == n {
                    return Err(Error::InvalidState("partition must be a nonempty proper subset".into()));
                }
            }
            Some(Partition::All) if self.dims.len() < 2 => {
                return Err(Error::InvalidState("bipartitions need at least two sites".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Haar-random unit vector: normalized complex Gaussian.
fn haar_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<C<f64>> {
    loop {
        let v: Vec<C<f64>> = (0..d)
            .map(|_| C::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Dirichlet(1, ..., 1) weights.
fn dirichlet<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// Joins a vector on `side` and one on its complement into a vector on all sites.
fn join_blocks(dims: &[usize], blocks: &[(Vec<usize>, Vec<C<f64>>)]) -> Vec<C<f64>> {
    let full = Layout::new(dims);
    let layouts: Vec<Layout> = blocks
        .iter()
        .map(|(sites, _)| Layout::new(&sites.iter().map(|&s| dims[s]).collect::<Vec<_>>()))
        .collect();
    (0..full.total())
        .map(|x| {
            blocks.iter().zip(&layouts).fold(C::new(1.0, 0.0), |acc, ((sites, v), l)| {
                let digits: Vec<usize> = sites.iter().map(|&s| full.digit(x, s)).collect();
                acc * v[l.index(&digits)]
            })
        })
        .collect()
}

fn mixture(dims: &[usize], weights: &[f64], vectors: &[Vec<C<f64>>]) -> Result<DensityMatrix<f64>> {
    let total: usize = dims.iter().product();
    let mut m = ComplexMatrix::zeros(total, total);
    for (w, v) in weights.iter().zip(vectors) {
        m.add_scaled_assign(C::new(*w, 0.0), &ComplexMatrix::outer(v, v))?;
    }
    // Convex combination of unit vectors: valid by construction.
    DensityMatrix::from_parts(dims, m)
}

fn random_side<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    // Nonempty proper subset from a uniform mask in 1..2^n - 1.
    let mask = rng.random_range(1..(1usize << n) - 1);
    (0..n).filter(|s| (mask >> s) & 1 == 1).collect()
}

fn complement(n: usize, side: &[usize]) -> Vec<usize> {
    (0..n).filter(|s| !side.contains(s)).collect()
}

/// `sum_i p_i (x)_k |phi_k^(i)><phi_k^(i)|` with Haar local factors and
/// Dirichlet weights; sample `index` uses its own random stream.
pub fn sample_separable(cfg: &SamplerConfig, index: u64) -> Result<DensityMatrix<f64>> {
    cfg.validate()?;
    let mut rng = sample_rng(cfg.seed, index);
    let weights = dirichlet(cfg.terms, &mut rng);
    let vectors: Vec<Vec<C<f64>>> = (0..cfg.terms)
        .map(|_| {
            let blocks: Vec<(Vec<usize>, Vec<C<f64>>)> = cfg
                .dims
                .iter()
                .enumerate()
                .map(|(s, &d)| (vec![s], haar_vector(d, &mut rng)))
                .collect();
            join_blocks(&cfg.dims, &blocks)
        })
        .collect();
    mixture(&cfg.dims, &weights, &vectors)
}

/// Mixture of `|psi_I> (x) |psi_rest>` terms with Haar states on each side;
/// without a configured partition every term draws its own.
pub fn sample_biseparable(cfg: &SamplerConfig, index: u64) -> Result<DensityMatrix<f64>> {
    cfg.validate()?;
    let n = cfg.dims.len();
    if n < 2 {
        return Err(Error::InvalidState("biseparable sampling needs at least two sites".into()));
    }
    let mut rng = sample_rng(cfg.seed, index);
    let weights = dirichlet(cfg.terms, &mut rng);
    let vectors: Vec<Vec<C<f64>>> = (0..cfg.terms)
        .map(|_| {
            let side = match &cfg.partition {
                Some(Partition::Fixed(side)) => side.clone(),
                _ => random_side(n, &mut rng),
            };
            let rest = complement(n, &side);
            let dim = |sites: &[usize]| sites.iter().map(|&s| cfg.dims[s]).product::<usize>();
            let a = haar_vector(dim(&side), &mut rng);
            let b = haar_vector(dim(&rest), &mut rng);
            join_blocks(&cfg.dims, &[(side, a), (rest, b)])
        })
        .collect();
    mixture(&cfg.dims, &weights, &vectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptReport<T> {
    pub ppt: bool,
    pub min_eigenvalue: T,
    /// PPT is equivalent to separability (two sites, total dimension at most 6).
    pub exact: bool,
}

/// Partial transpose over the last site; NPT when its smallest eigenvalue
/// is below `-1e-10`.
pub fn ppt_check<T: Real>(rho: &DensityMatrix<T>) -> Result<PptReport<T>> {
    let n = rho.num_sites();
    if n < 2 {
        return Err(Error::DimensionMismatch("PPT test needs at least two sites".into()));
    }
    let min_eigenvalue = min_hermitian_eigenvalue(&rho.partial_transpose(n - 1)?);
    Ok(PptReport {
        ppt: min_eigenvalue >= -T::lit(NPT_TOL),
        min_eigenvalue,
        exact: n == 2 && rho.dim() <= 6,
    })
}

/// Smallest white-noise visibility at which `werner_mix(rho, v)` is NPT,
/// located by bisection to `tol`.
pub fn werner_ppt_threshold(rho: &DensityMatrix<f64>, tol: f64) -> Result<f64> {
    let npt = |v: f64| -> Result<bool> { Ok(!ppt_check(&crate::states::werner_mix(rho, v)?)?.ppt) };
    if !npt(1.0)? {
        return Err(Error::InvalidState("state is PPT at full visibility".into()));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if npt(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Witnesses the oracle can probe, with the set each is bounded over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleWitness {
    /// Two qubits, separable states, bound 0.
    Epr,
    /// `n` qubits, biseparable states, bound 0.
    Ghz { n: usize },
    /// Three qubits, biseparable states, bound 1/2.
    W,
    /// `n` qudits: separable for `n = 2`, biseparable otherwise; bound 0.
    Qudit { n: usize, d: usize },
}

impl OracleWitness {
    pub fn from_name(name: &str, n: usize, d: usize) -> Result<Self> {
        let w = match name {
            "epr" => OracleWitness::Epr,
            "ghz" => OracleWitness::Ghz { n },
            "w" => OracleWitness::W,
            "qudit" => OracleWitness::Qudit { n, d },
            other => return Err(Error::UnknownWitness(other.to_string())),
        };
        w.dims()?;
        Ok(w)
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleWitness::Epr => "epr",
            OracleWitness::Ghz { .. } => "ghz",
            OracleWitness::W => "w",
            OracleWitness::Qudit { .. } => "qudit",
        }
    }

    pub fn dims(self) -> Result<Vec<usize>> {
        match self {
            OracleWitness::Epr => Ok(vec![2, 2]),
            OracleWitness::Ghz { n } if (2..=10).contains(&n) => Ok(vec![2; n]),
            OracleWitness::W => Ok(vec![2, 2, 2]),
            OracleWitness::Qudit { n, d } if n >= 2 && d >= 2 && d.checked_pow(n as u32).is_some_and(|t| t <= 1024) => {
                Ok(vec![d; n])
            }
            other => Err(Error::OutOfRange(format!("unsupported witness size {other:?}"))),
        }
    }

    pub fn bound(self) -> f64 {
        match self {
            OracleWitness::W => 0.5,
            _ => 0.0,
        }
    }

    /// Whether the bound is proved over biseparable (rather than fully
    /// separable) states.
    pub fn biseparable(self) -> bool {
        match self {
            OracleWitness::Epr => false,
            OracleWitness::Ghz { .. } | OracleWitness::W => true,
            OracleWitness::Qudit { n, .. } => n > 2,
        }
    }

    pub fn lhs(self, rho: &DensityMatrix<f64>) -> Result<f64> {
        let tol = Tolerances::default();
        Ok(match self {
            OracleWitness::Epr => witness_epr(rho, &tol)?.lhs,
            OracleWitness::Ghz { .. } => witness_ghz(rho, &tol)?.lhs,
            OracleWitness::W => witness_w(rho, &tol)?.lhs,
            OracleWitness::Qudit { n, d } => witness_qudit(rho, n, d, &tol)?.lhs,
        })
    }

    /// Draws sample `index` from the set the bound applies to.
    pub fn sample(self, terms: usize, seed: u64, index: u64) -> Result<DensityMatrix<f64>> {
        let cfg = SamplerConfig::new(&self.dims()?, terms, seed)?;
        if self.biseparable() {
            sample_biseparable(&cfg.with_partition(Partition::All)?, index)
        } else {
            sample_separable(&cfg, index)
        }
    }

    /// Block structures of the pure states spanning the bounded set.
    fn block_layouts(self) -> Result<Vec<Vec<Vec<usize>>>> {
        let n = self.dims()?.len();
        if !self.biseparable() {
            return Ok(vec![(0..n).map(|s| vec![s]).collect()]);
        }
        // Sides containing site 0 enumerate every bipartition once.
        Ok((1..(1usize << (n - 1)))
            .map(|mask| {
                let rest: Vec<usize> = (0..n).filter(|&s| s == 0 || (mask >> (s - 1)) & 1 == 0).collect();
                let side: Vec<usize> = (1..n).filter(|&s| (mask >> (s - 1)) & 1 == 1).collect();
                vec![rest, side]
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub witness: OracleWitness,
    pub bound: f64,
    pub samples: u64,
    pub max_lhs: f64,
    /// Samples whose value exceeds `bound + 1e-9`.
    pub violations: u64,
}

/// Evaluates the witness on `samples` random members of its bounded set.
pub fn bound_check(witness: OracleWitness, samples: u64, terms: usize, seed: u64) -> Result<BoundCheck> {
    let bound = witness.bound();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| witness.lhs(&witness.sample(terms, seed, i)?))
        .collect::<Result<_>>()?;
    Ok(BoundCheck {
        witness,
        bound,
        samples,
        max_lhs: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        violations: values.iter().filter(|&&v| v > bound + BOUND_TOL).count() as u64,
    })
}

/// Pure product of block states, parameterized per block by `D - 1`
/// hyperspherical angles in `[0, pi/2]` followed by `D - 1` phases.
#[derive(Debug, Clone)]
struct Candidate {
    layout: usize,
    params: Vec<f64>,
}

struct SearchSpace {
    dims: Vec<usize>,
    layouts: Vec<Vec<Vec<usize>>>,
}

impl SearchSpace {
    fn block_dims(&self, layout: usize) -> Vec<usize> {
        self.layouts[layout]
            .iter()
            .map(|sites| sites.iter().map(|&s| self.dims[s]).product())
            .collect()
    }

    /// `(lower, upper)` of every parameter of `layout`.
    fn ranges(&self, layout: usize) -> Vec<(f64, f64)> {
        self.block_dims(layout)
            .iter()
            .flat_map(|&d| {
                std::iter::repeat_n((0.0, FRAC_PI_2), d - 1).chain(std::iter::repeat_n((0.0, 2.0 * PI), d - 1))
            })
            .collect()
    }

    fn random<R: Rng>(&self, rng: &mut R) -> Candidate {
        let layout = rng.random_range(0..self.layouts.len());
        let params = self
            .ranges(layout)
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        Candidate { layout, params }
    }

    fn state(&self, c: &Candidate) -> Result<DensityMatrix<f64>> {
        let mut offset = 0;
        let blocks: Vec<(Vec<usize>, Vec<C<f64>>)> = self.layouts[c.layout]
            .iter()
            .zip(self.block_dims(c.layout))
            .map(|(sites, d)| {
                let angles = &c.params[offset..offset + d - 1];
                let phases = &c.params[offset + d - 1..offset + 2 * (d - 1)];
                offset += 2 * (d - 1);
                let mut v = Vec::with_capacity(d);
                let mut carry = 1.0;
                for j in 0..d {
                    let r = if j + 1 < d { carry * angles[j].cos() } else { carry };
                    if j + 1 < d {
                        carry *= angles[j].sin();
                    }
                    let phase = if j == 0 { 0.0 } else { phases[j - 1] };
                    v.push(C::from_polar(r, phase));
                }
                (sites.clone(), v)
            })
            .collect();
        let psi = join_blocks(&self.dims, &blocks);
        DensityMatrix::from_pure(&self.dims, &psi)
    }
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessMaximum {
    pub witness: OracleWitness,
    pub value: f64,
    pub state: DensityMatrix<f64>,
    /// Index of the random start that led to the maximum.
    pub start: usize,
}

/// Largest witness value found over pure (bi)separable states: `iters`
/// random starts, then coordinate-wise golden-section refinement of the
/// best few. The witnesses are convex in the state, so pure states suffice.
pub fn maximize_witness(witness: OracleWitness, iters: usize, seed: u64) -> Result<WitnessMaximum> {
    if iters == 0 {
        return Err(Error::OutOfRange("at least one start is required".into()));
    }
    let space = SearchSpace {
        dims: witness.dims()?,
        layouts: witness.block_layouts()?,
    };
    let eval = |c: &Candidate| -> Result<f64> { witness.lhs(&space.state(c)?) };

    let mut starts: Vec<(usize, Candidate, f64)> = (0..iters)
        .into_par_iter()
        .map(|i| {
            let c = space.random(&mut sample_rng(seed, i as u64));
            let v = eval(&c)?;
            Ok((i, c, v))
        })
        .collect::<Result<_>>()?;
    starts.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    starts.truncate(REFINE_STARTS);

    let refined: Vec<(usize, Candidate, f64)> = starts
        .into_par_iter()
        .map(|(i, mut c, mut best)| {
            let ranges = space.ranges(c.layout);
            for _ in 0..REFINE_SWEEPS {
                for (p, &(lo, hi)) in ranges.iter().enumerate() {
                    let mut trial = c.clone();
                    let (x, fx) = golden_max(
                        |x| {
                            trial.params[p] = x;
                            eval(&trial).unwrap_or(f64::NEG_INFINITY)
                        },
                        lo,
                        hi,
                    );
                    if fx > best {
                        c.params[p] = x;
                        best = fx;
                    }
                }
            }
            (i, c, best)
        })
        .collect();
    let (start, c, value) = refined
        .into_iter()
        .reduce(|a, b| if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) { b } else { a })
        .expect("at least one start");
    Ok(WitnessMaximum {
        witness,
        value,
        state: space.state(&c)?,
        start,
    })
}
