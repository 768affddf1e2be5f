use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{expectation, DensityMatrix, LocalOp, ObservableExpr};
use crate::scalar::{Real, C};
use crate::witnesses::Tolerances;

/// Expected behaviour of one expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum Contract {
    /// `|<O> - c| <= eq`, compared as complex numbers.
    Exact(f64),
    /// `|<O>| <= eq`.
    Zero,
    /// `|<O>| > nz`; with a companion observable the modulus is
    /// `sqrt(|<O>|^2 + |<O'>|^2)`.
    NonZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryItem {
    pub observable: ObservableExpr,
    pub contract: Contract,
    /// Extra observable folded into a `NonZero` test so that a purely
    /// imaginary coherence is still detected (`X...XY` next to `X...XX`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<ObservableExpr>,
}

impl BatteryItem {
    pub fn new(observable: ObservableExpr, contract: Contract) -> Self {
        Self {
            observable,
            contract,
            companion: None,
        }
    }

    pub fn with_companion(mut self, companion: ObservableExpr) -> Self {
        self.companion = Some(companion);
        self
    }

    /// Relabels sites through `map` (site `k` becomes `map[k]`).
    pub fn remap(&self, map: &[usize]) -> Result<Self> {
        Ok(Self {
            observable: self.observable.remap(map)?,
            contract: self.contract,
            companion: self.companion.as_ref().map(|c| c.remap(map)).transpose()?,
        })
    }
}

/// Whether `NonZero` lines get their `X...XY` companion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryMode {
    #[default]
    WithCompanions,
    /// Only the paradox observables themselves.
    WithoutCompanions,
}

/// Ordered list of expectation constraints; at least one is `NonZero`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxBattery {
    pub name: String,
    items: Vec<BatteryItem>,
    pub eps_eq: f64,
    pub eps_nz: f64,
}

impl ParadoxBattery {
    pub fn new(name: impl Into<String>, items: Vec<BatteryItem>) -> Result<Self> {
        let t = Tolerances::default();
        let b = Self {
            name: name.into(),
            items,
            eps_eq: t.eq,
            eps_nz: t.nz,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_eq > 0.0 && self.eps_nz > 0.0) {
            return Err(Error::OutOfRange("battery tolerances must be positive".into()));
        }
        if !self.items.iter().any(|i| i.contract == Contract::NonZero) {
            return Err(Error::InvalidObservable(format!(
                "battery {} has no NonZero item",
                self.name
            )));
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, tol: &Tolerances) -> Self {
        self.eps_eq = tol.eq;
        self.eps_nz = tol.nz;
        self
    }

    pub fn items(&self) -> &[BatteryItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Same battery with companions removed.
    pub fn strict(&self) -> Self {
        let mut b = self.clone();
        for item in &mut b.items {
            item.companion = None;
        }
        b
    }

    pub fn remap(&self, name: impl Into<String>, map: &[usize]) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            items: self.items.iter().map(|i| i.remap(map)).collect::<Result<_>>()?,
            eps_eq: self.eps_eq,
            eps_nz: self.eps_nz,
        })
    }

    fn from_items(name: &str, mut items: Vec<BatteryItem>, mode: BatteryMode) -> Self {
        // Ring constructions repeat the (first, last) pair when n = 2.
        let mut seen: Vec<ObservableExpr> = Vec::new();
        items.retain(|i| {
            if seen.contains(&i.observable) {
                false
            } else {
                seen.push(i.observable.clone());
                true
            }
        });
        if mode == BatteryMode::WithoutCompanions {
            items.iter_mut().for_each(|i| i.companion = None);
        }
        Self::new(name, items).expect("built-in batteries contain a NonZero item")
    }
}

fn pair(a: (usize, LocalOp), b: (usize, LocalOp)) -> ObservableExpr {
    ObservableExpr::new(vec![a, b]).expect("distinct sites")
}

fn all_x_with_last(n: usize, last: LocalOp) -> ObservableExpr {
    ObservableExpr::new((0..n).map(|k| (k, if k + 1 == n { last } else { LocalOp::X })).collect())
        .expect("distinct sites")
}

/// Bipartite qubit battery: `ZZ = 1`, `ZX = 0`, `XZ = 0`, `XX != 0`.
pub fn battery_epr(mode: BatteryMode) -> ParadoxBattery {
    battery_ghz_named("epr", 2, mode)
}

/// `n`-qubit GHZ battery: ring `Z Z = 1` lines, the `Z X` and `X Z` zero
/// lines on the same pairs, and `X...X != 0`. For `n = 2` it equals [`battery_epr`].
pub fn battery_ghz(n: usize, mode: BatteryMode) -> Result<ParadoxBattery> {
    if n < 2 {
        return Err(Error::InvalidState(format!("GHZ battery needs n >= 2, got {n}")));
    }
    Ok(battery_ghz_named(&format!("ghz{n}"), n, mode))
}

fn ring_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = vec![(0, n - 1)];
    pairs.extend((0..n - 1).map(|j| (j, j + 1)));
    pairs
}

fn battery_ghz_named(name: &str, n: usize, mode: BatteryMode) -> ParadoxBattery {
    use LocalOp::{X, Z};
    let pairs = ring_pairs(n);
    let mut items = Vec::new();
    for &(a, b) in &pairs {
        items.push(BatteryItem::new(pair((a, Z), (b, Z)), Contract::Exact(1.0)));
    }
    for &(a, b) in &pairs {
        items.push(BatteryItem::new(pair((a, Z), (b, X)), Contract::Zero));
    }
    for &(a, b) in &pairs {
        items.push(BatteryItem::new(pair((a, X), (b, Z)), Contract::Zero));
    }
    items.push(
        BatteryItem::new(all_x_with_last(n, X), Contract::NonZero).with_companion(all_x_with_last(n, LocalOp::Y)),
    );
    ParadoxBattery::from_items(name, items, mode)
}

/// Three-qubit W battery: `ZZZ = -1`, `XZZ = ZXZ = ZZX = 0`,
/// `X(0)X(1) != 0`, `X(0)X(2) != 0`.
pub fn battery_w(mode: BatteryMode) -> ParadoxBattery {
    use LocalOp::{X, Y, Z};
    let triple = |ops: [LocalOp; 3]| ObservableExpr::new(ops.iter().copied().enumerate().collect()).expect("distinct");
    let items = vec![
        BatteryItem::new(triple([Z, Z, Z]), Contract::Exact(-1.0)),
        BatteryItem::new(triple([X, Z, Z]), Contract::Zero),
        BatteryItem::new(triple([Z, X, Z]), Contract::Zero),
        BatteryItem::new(triple([Z, Z, X]), Contract::Zero),
        BatteryItem::new(pair((0, X), (1, X)), Contract::NonZero).with_companion(pair((0, X), (1, Y))),
        BatteryItem::new(pair((0, X), (2, X)), Contract::NonZero).with_companion(pair((0, X), (2, Y))),
    ];
    ParadoxBattery::from_items("w", items, mode)
}

fn clock_pow(k: usize) -> LocalOp {
    if k == 1 {
        LocalOp::Clock
    } else {
        LocalOp::ClockPow(k as u32)
    }
}

/// Two-qudit battery: `S3^k (x) S3^(d-k) = 1` for `k = 1..d-2`,
/// `S3 (x) S1 = 0`, `S1 (x) S3 = 0`, `S1 (x) S1 != 0`.
pub fn battery_qudit_2(d: usize) -> Result<ParadoxBattery> {
    use LocalOp::{Clock, Shift};
    if d < 2 {
        return Err(Error::InvalidState(format!("qudit battery needs d >= 2, got {d}")));
    }
    let mut items: Vec<BatteryItem> = (1..d.saturating_sub(1))
        .map(|k| BatteryItem::new(pair((0, clock_pow(k)), (1, clock_pow(d - k))), Contract::Exact(1.0)))
        .collect();
    items.push(BatteryItem::new(pair((0, Clock), (1, Shift)), Contract::Zero));
    items.push(BatteryItem::new(pair((0, Shift), (1, Clock)), Contract::Zero));
    items.push(BatteryItem::new(pair((0, Shift), (1, Shift)), Contract::NonZero));
    Ok(ParadoxBattery::from_items(&format!("qudit2_d{d}"), items, BatteryMode::WithoutCompanions))
}

/// `n`-qudit battery: ring clock-power lines for `k = 1..d-1`, the
/// clock/shift zero lines on ring pairs, and `S1 (x) ... (x) S1 != 0`.
pub fn battery_qudit_n(n: usize, d: usize) -> Result<ParadoxBattery> {
    use LocalOp::{Clock, Shift};
    if n < 2 || d < 2 {
        return Err(Error::InvalidState(format!("qudit battery needs n, d >= 2 (n={n}, d={d})")));
    }
    let pairs = ring_pairs(n);
    let mut items = Vec::new();
    for &(a, b) in &pairs {
        for k in 1..d {
            items.push(BatteryItem::new(pair((a, clock_pow(k)), (b, clock_pow(d - k))), Contract::Exact(1.0)));
        }
    }
    for &(a, b) in &pairs {
        items.push(BatteryItem::new(pair((a, Clock), (b, Shift)), Contract::Zero));
    }
    for &(a, b) in &pairs {
        items.push(BatteryItem::new(pair((a, Shift), (b, Clock)), Contract::Zero));
    }
    items.push(BatteryItem::new(
        ObservableExpr::new((0..n).map(|k| (k, Shift)).collect()).expect("distinct"),
        Contract::NonZero,
    ));
    Ok(ParadoxBattery::from_items(&format!("qudit{n}_d{d}"), items, BatteryMode::WithoutCompanions))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemReport<T> {
    pub observable: String,
    pub contract: Contract,
    pub value: C<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_value: Option<C<T>>,
    /// Quantity compared against the contract: `|value - c|`, `|value|`, or
    /// the combined modulus for `NonZero`.
    pub statistic: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport<T> {
    pub battery: String,
    pub items: Vec<ItemReport<T>>,
    pub pass: bool,
}

impl<T: Real> BatteryReport<T> {
    /// Indices of failing items.
    pub fn failures(&self) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.pass)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Evaluates every item against `rho`; the battery passes when all items do.
pub fn evaluate_battery<T: Real>(rho: &DensityMatrix<T>, b: &ParadoxBattery) -> Result<BatteryReport<T>> {
    b.validate()?;
    let eq = T::lit(b.eps_eq);
    let nz = T::lit(b.eps_nz);
    let items = b
        .items
        .iter()
        .map(|item| {
            let value = expectation(rho, &item.observable)?;
            let companion_value = item.companion.as_ref().map(|c| expectation(rho, c)).transpose()?;
            let (statistic, pass) = match item.contract {
                Contract::Exact(c) => {
                    let s = (value - C::new(T::lit(c), T::zero())).norm();
                    (s, s <= eq)
                }
                Contract::Zero => {
                    let s = value.norm();
                    (s, s <= eq)
                }
                Contract::NonZero => {
                    let extra = companion_value.map_or(T::zero(), |v| v.norm_sqr());
                    let s = (value.norm_sqr() + extra).sqrt();
                    (s, s > nz)
                }
            };
            Ok(ItemReport {
                observable: item.observable.to_string(),
                contract: item.contract,
                value,
                companion: item.companion.as_ref().map(|c| c.to_string()),
                companion_value,
                statistic,
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = items.iter().all(|i| i.pass);
    Ok(BatteryReport {
        battery: b.name.clone(),
        items,
        pass,
    })
}
