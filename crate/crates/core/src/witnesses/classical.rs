use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::LocalOp;
use crate::witnesses::{BatteryItem, Contract, ParadoxBattery};

/// Deterministic local values: party `j` answers `z[j]` to a Z query and
/// `x[j]` to an X query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueAssignment {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
}

/// Factor of a product of local values: `(party, is_x)`.
type Term = Vec<(usize, bool)>;

fn as_terms(items: &[BatteryItem]) -> Result<(usize, Vec<(Term, Contract)>)> {
    let mut parties = 0;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let mut term = Vec::new();
        for &(site, op) in item.observable.factors() {
            match op {
                LocalOp::I => {}
                LocalOp::Z => term.push((site, false)),
                LocalOp::X => term.push((site, true)),
                other => {
                    return Err(Error::NotValueAssignable(format!(
                        "factor {other} on site {site} in {}",
                        item.observable
                    )))
                }
            }
            parties = parties.max(site + 1);
        }
        out.push((term, item.contract));
    }
    Ok((parties, out))
}

fn grid(step: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut k = 0usize;
    loop {
        let v = -1.0 + k as f64 * step;
        if v > 1.0 + 1e-12 {
            break;
        }
        values.push(v.min(1.0));
        k += 1;
    }
    if (values[values.len() - 1] - 1.0).abs() > 1e-12 {
        values.push(1.0);
    }
    values
}

/// Scans every assignment of `v_{j,z}, v_{j,x}` on the grid `-1 + k step`
/// (plus the endpoint 1) and returns those meeting all battery items.
/// Companion observables are ignored: only the paradox observables enter.
pub fn classical_assignment_search(b: &ParadoxBattery, grid_step: f64, tol: f64) -> Result<Vec<ValueAssignment>> {
    classical_assignment_search_items(b.items(), grid_step, tol, b.eps_nz)
}

/// As [`classical_assignment_search`] on an arbitrary item list (which may
/// lack a `NonZero` line).
pub fn classical_assignment_search_items(
    items: &[BatteryItem],
    grid_step: f64,
    tol: f64,
    eps_nz: f64,
) -> Result<Vec<ValueAssignment>> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::OutOfRange(format!("grid step {grid_step} outside (0, 1]")));
    }
    if !(tol >= 0.0 && eps_nz >= 0.0) {
        return Err(Error::OutOfRange("tolerances must be non-negative".into()));
    }
    let (parties, terms) = as_terms(items)?;
    if parties == 0 {
        return Ok(Vec::new());
    }
    let values = grid(grid_step);
    let g = values.len();
    let vars = 2 * parties;
    let per_first = g
        .checked_pow((vars - 1) as u32)
        .filter(|&n| n.checked_mul(g).is_some())
        .ok_or_else(|| Error::OutOfRange("assignment grid too large".into()))?;

    // Variable layout: [z_0, x_0, z_1, x_1, ...]; the first variable is
    // split across workers and results are concatenated in grid order.
    let found: Vec<Vec<ValueAssignment>> = (0..g)
        .into_par_iter()
        .map(|first| {
            let mut hits = Vec::new();
            let mut digits = vec![0usize; vars];
            digits[0] = first;
            let mut v = vec![0.0; vars];
            for rest in 0..per_first {
                let mut r = rest;
                for slot in (1..vars).rev() {
                    digits[slot] = r % g;
                    r /= g;
                }
                for (slot, &dgt) in digits.iter().enumerate() {
                    v[slot] = values[dgt];
                }
                let ok = terms.iter().all(|(term, contract)| {
                    let prod: f64 = term.iter().map(|&(p, is_x)| v[2 * p + usize::from(is_x)]).product();
                    match *contract {
                        Contract::Exact(c) => (prod - c).abs() <= tol,
                        Contract::Zero => prod.abs() <= tol,
                        Contract::NonZero => prod.abs() > eps_nz,
                    }
                });
                if ok {
                    hits.push(ValueAssignment {
                        z: (0..parties).map(|p| v[2 * p]).collect(),
                        x: (0..parties).map(|p| v[2 * p + 1]).collect(),
                    });
                }
            }
            hits
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}
