use petgraph::unionfind::UnionFind;
use serde::Serialize;
use std::collections::HashMap;

use crate::networks::NetworkSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Parties grouped by component, each in declaration order; components
    /// are ordered by their first party.
    pub components: Vec<Vec<String>>,
}

/// Parties are linked when they hold qubits of a common source.
pub fn connectivity_check(spec: &NetworkSpec) -> Connectivity {
    let index: HashMap<&str, usize> = spec
        .parties
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut uf = UnionFind::<usize>::new(spec.parties.len());
    for src in &spec.sources {
        let members: Vec<usize> = src.owners.iter().filter_map(|o| index.get(o.as_str()).copied()).collect();
        for pair in members.windows(2) {
            uf.union(pair[0], pair[1]);
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
    for (i, p) in spec.parties.iter().enumerate() {
        let root = uf.find(i);
        groups
            .entry(root)
            .or_insert_with(|| {
                order.push(root);
                Vec::new()
            })
            .push(p.clone());
    }
    let components: Vec<Vec<String>> = order.into_iter().map(|r| groups.remove(&r).unwrap_or_default()).collect();
    Connectivity {
        connected: components.len() <= 1,
        components,
    }
}
