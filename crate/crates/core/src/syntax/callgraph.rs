//! Call graph and its strongly connected components.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::ast::Program;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Functions in program order.
    pub nodes: Vec<String>,
    /// `f -> g` when `g` occurs in a right-hand side of `f`.
    pub edges: BTreeMap<String, BTreeSet<String>>,
}

impl CallGraph {
    pub fn new(prog: &Program) -> Self {
        let nodes: Vec<String> = prog.functions.keys().cloned().collect();
        let mut edges = BTreeMap::new();
        for f in prog.functions.values() {
            let mut callees = Vec::new();
            for eq in &f.equations {
                eq.rhs.functions(&mut callees);
            }
            edges.insert(f.name.clone(), callees.into_iter().collect());
        }
        CallGraph { nodes, edges }
    }

    pub fn callees(&self, f: &str) -> impl Iterator<Item = &String> {
        self.edges.get(f).into_iter().flatten()
    }

    /// Components with callees before callers; members in program order.
    pub fn sccs(&self) -> Vec<Vec<String>> {
        let mut g = DiGraph::<usize, ()>::new();
        let idx: Vec<_> = (0..self.nodes.len()).map(|k| g.add_node(k)).collect();
        let pos: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
        for (k, n) in self.nodes.iter().enumerate() {
            for c in self.callees(n) {
                if let Some(&j) = pos.get(c.as_str()) {
                    g.add_edge(idx[k], idx[j], ());
                }
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|comp| {
                let mut ks: Vec<usize> = comp.into_iter().map(|n| g[n]).collect();
                ks.sort_unstable();
                ks.into_iter().map(|k| self.nodes[k].clone()).collect()
            })
            .collect()
    }

    pub fn scc_index(&self) -> BTreeMap<String, usize> {
        self.sccs()
            .into_iter()
            .enumerate()
            .flat_map(|(k, comp)| comp.into_iter().map(move |f| (f, k)))
            .collect()
    }

    /// Every function reachable from `roots`, roots included.
    pub fn reachable(&self, roots: &[String]) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<String> = roots.to_vec();
        while let Some(f) = todo.pop() {
            if seen.insert(f.clone()) {
                todo.extend(self.callees(&f).cloned());
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn even_odd_share_a_component() {
        let p = parse_program(
            "even 0 = True\neven (Succ n) = odd n\nodd 0 = False\nodd (Succ n) = even n\nmain n = even n\ndata Bool = True | False",
        )
        .unwrap();
        let g = CallGraph::new(&p);
        let sccs = g.sccs();
        assert_eq!(sccs, vec![vec!["even".to_string(), "odd".to_string()], vec!["main".to_string()]]);
        let idx = g.scc_index();
        assert!(idx["even"] < idx["main"]);
    }
}
