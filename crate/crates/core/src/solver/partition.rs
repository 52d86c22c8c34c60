//! Grouping constraints by strongly connected components of symbol
//! dependencies.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use petgraph::algo::condensation;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::Direction;

use crate::constraint::ConstraintSet;

/// Symbols solved together, with the constraints that become decidable once
/// they (and every earlier group) are fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub symbols: Vec<String>,
    /// Indices into the constraint set.
    pub constraints: Vec<usize>,
}

/// Orders the symbol SCCs so that every group comes after the groups it
/// depends on; among independent groups, those whose symbols are defined in
/// earlier call-graph components come first. Constraints without unknown
/// symbols form a leading group with no symbols.
pub fn partition(cs: &ConstraintSet) -> Vec<Group> {
    let arities = cs.symbols();
    let names: Vec<&String> = arities.keys().collect();
    let mut g = DiGraph::<String, ()>::new();
    let idx: BTreeMap<&str, NodeIndex> = names.iter().map(|n| (n.as_str(), g.add_node((*n).clone()))).collect();
    for (a, b) in cs.symbol_deps() {
        if a != b {
            g.add_edge(idx[a.as_str()], idx[b.as_str()], ());
        }
    }
    // rank of a symbol: call-graph component of the earliest constraint
    // that has it on the right
    let mut rank: BTreeMap<String, usize> = BTreeMap::new();
    for c in cs.iter() {
        let r = c.scc.unwrap_or(usize::MAX);
        for s in c.rhs.symbols().into_keys() {
            let e = rank.entry(s).or_insert(r);
            *e = (*e).min(r);
        }
    }
    let dag = condensation(g, true);
    let key = |n: NodeIndex| {
        let mut syms = dag[n].clone();
        syms.sort();
        let r = syms.iter().map(|s| rank.get(s).copied().unwrap_or(usize::MAX)).min().unwrap_or(usize::MAX);
        (r, syms)
    };
    // dependencies first: a node is ready once all its successors are placed
    let mut pending: BTreeMap<NodeIndex, usize> =
        dag.node_indices().map(|n| (n, dag.neighbors_directed(n, Direction::Outgoing).count())).collect();
    let mut ready: BinaryHeap<Reverse<((usize, Vec<String>), NodeIndex)>> = BinaryHeap::new();
    for (&n, &k) in &pending {
        if k == 0 {
            ready.push(Reverse((key(n), n)));
        }
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    while let Some(Reverse(((_, syms), n))) = ready.pop() {
        order.push(syms);
        for p in dag.neighbors_directed(n, Direction::Incoming) {
            let k = pending.get_mut(&p).expect("node of the condensation");
            *k -= 1;
            if *k == 0 {
                ready.push(Reverse((key(p), p)));
            }
        }
    }
    let position: BTreeMap<&str, usize> =
        order.iter().enumerate().flat_map(|(k, syms)| syms.iter().map(move |s| (s.as_str(), k))).collect();
    let mut groups: Vec<Group> = order.iter().map(|s| Group { symbols: s.clone(), constraints: vec![] }).collect();
    let mut ground = Vec::new();
    for (k, c) in cs.iter().enumerate() {
        let at = c.symbols().keys().map(|s| position[s.as_str()]).max();
        match at {
            Some(p) => groups[p].constraints.push(k),
            None => ground.push(k),
        }
    }
    if !ground.is_empty() {
        groups.insert(0, Group { symbols: vec![], constraints: ground });
    }
    groups
}

/// All constraints as a single group.
pub fn single_group(cs: &ConstraintSet) -> Vec<Group> {
    if cs.is_empty() {
        return vec![];
    }
    let symbols: BTreeSet<String> = cs.symbols().into_keys().collect();
    vec![Group { symbols: symbols.into_iter().collect(), constraints: (0..cs.len()).collect() }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_constraints;

    fn groups(src: &str) -> Vec<Vec<String>> {
        partition(&parse_constraints(src).unwrap()).into_iter().map(|g| g.symbols).collect()
    }

    #[test]
    fn callees_first() {
        let src = "R(i, 0) <= Q(i)\nj <= R(0, j)\nR(i, j + 1) <= R(i + 1, j)\n";
        assert_eq!(groups(src), vec![vec!["R".to_string()], vec!["Q".to_string()]]);
    }

    #[test]
    fn empty_and_self_recursive() {
        assert!(groups("").is_empty());
        assert_eq!(groups("F(i) + 1 <= F(i + 1)\n"), vec![vec!["F".to_string()]]);
    }

    #[test]
    fn ground_constraints_lead() {
        let p = partition(&parse_constraints("F(i) <= F(i)\n1 <= 2\n").unwrap());
        assert_eq!(p[0], Group { symbols: vec![], constraints: vec![1] });
        assert_eq!(p[1].constraints, vec![0]);
    }

    #[test]
    fn mutual_right_hand_symbols_share_a_group() {
        assert_eq!(groups("i <= F(i, J())\n"), vec![vec!["F".to_string(), "J".to_string()]]);
    }
}
