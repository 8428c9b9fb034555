//! Directed-graph algebra used by every identifiability check: ancestral
//! closure, descendants, moralization and the moral-ancestral separation
//! test.
//!
//! Node sets are passed as slices of [`NodeId`] and always returned sorted
//! by declaration order.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("cycle detected among nodes {0}")]
    Cycle(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("node sets overlap at `{0}`")]
    Overlap(String),
}

/// Immutable directed acyclic graph over named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    order: Vec<NodeId>,
}

/// Undirected graph over a subset of the nodes of the graph it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    names: Vec<String>,
    nodes: Vec<NodeId>,
    adj: Vec<BTreeSet<NodeId>>,
}

/// Kahn's algorithm; among ready nodes the earliest declared is emitted first.
pub fn topological_order(names: &[String], edges: &[(NodeId, NodeId)]) -> Result<Vec<NodeId>, GraphError> {
    let n = names.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(p, c) in edges {
        check_id(names, p)?;
        check_id(names, c)?;
        indegree[c] += 1;
        children[p].push(c);
    }
    let mut ready: BTreeSet<NodeId> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<&str> = (0..n).filter(|&v| indegree[v] > 0).map(|v| names[v].as_str()).collect();
        return Err(GraphError::Cycle(stuck.join(",")));
    }
    Ok(order)
}

fn check_id(names: &[String], id: NodeId) -> Result<(), GraphError> {
    if id < names.len() {
        Ok(())
    } else {
        Err(GraphError::UnknownNode(format!("#{id}")))
    }
}

impl Dag {
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, GraphError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            check_id(&names, p)?;
            check_id(&names, c)?;
            if p == c {
                return Err(GraphError::SelfLoop(names[p].clone()));
            }
            if parents[c].contains(&p) {
                return Err(GraphError::DuplicateEdge(names[p].clone(), names[c].clone()));
            }
            parents[c].push(p);
            children[p].push(c);
        }
        let order = topological_order(&names, edges)?;
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Dag { names, parents, children, order })
    }

    /// Convenience constructor from node names and named edges.
    pub fn from_named(names: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let lookup = |s: &str| {
            names
                .iter()
                .position(|n| *n == s)
                .ok_or_else(|| GraphError::UnknownNode(s.to_string()))
        };
        let ids = edges
            .iter()
            .map(|&(p, c)| Ok((lookup(p)?, lookup(c)?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Dag::new(names.iter().copied(), &ids)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn node(&self, name: &str) -> Result<NodeId, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn nodes(&self, names: &[&str]) -> Result<Vec<NodeId>, GraphError> {
        names.iter().map(|n| self.node(n)).collect()
    }

    pub fn names_of(&self, ids: &[NodeId]) -> Vec<&str> {
        ids.iter().map(|&v| self.names[v].as_str()).collect()
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn has_edge(&self, parent: NodeId, child: NodeId) -> bool {
        self.parents[child].binary_search(&parent).is_ok()
    }

    /// All edges, grouped by child in declaration order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        (0..self.len())
            .flat_map(|c| self.parents[c].iter().map(move |&p| (p, c)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Deterministic topological order, ties broken by declaration order.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    fn validate(&self, set: &[NodeId]) -> Result<(), GraphError> {
        set.iter().try_for_each(|&v| check_id(&self.names, v))
    }

    fn closure<'a>(&'a self, seed: &[NodeId], step: impl Fn(NodeId) -> &'a [NodeId]) -> Result<Vec<NodeId>, GraphError> {
        self.validate(seed)?;
        let mut mark = vec![false; self.len()];
        let mut stack: Vec<NodeId> = seed.to_vec();
        while let Some(v) = stack.pop() {
            if mark[v] {
                continue;
            }
            mark[v] = true;
            stack.extend(step(v).iter().copied().filter(|&w| !mark[w]));
        }
        Ok((0..self.len()).filter(|&v| mark[v]).collect())
    }

    /// Smallest ancestral set containing `seed`.
    pub fn ancestral_closure(&self, seed: &[NodeId]) -> Result<Vec<NodeId>, GraphError> {
        self.closure(seed, |v| &self.parents[v])
    }

    /// `seed` together with every node reachable from it along directed edges.
    pub fn descendants(&self, seed: &[NodeId]) -> Result<Vec<NodeId>, GraphError> {
        self.closure(seed, |v| &self.children[v])
    }

    pub fn nondescendants(&self, seed: &[NodeId]) -> Result<Vec<NodeId>, GraphError> {
        let desc = self.descendants(seed)?;
        Ok((0..self.len()).filter(|v| desc.binary_search(v).is_err()).collect())
    }

    pub fn moralize(&self) -> UndirectedGraph {
        let all: Vec<NodeId> = (0..self.len()).collect();
        self.moralize_within(&all)
    }

    /// Moral graph of the subgraph induced by `keep`. When `keep` is
    /// ancestral this is the moralization of that ancestral subgraph.
    pub fn moralize_within(&self, keep: &[NodeId]) -> UndirectedGraph {
        let mut inside = vec![false; self.len()];
        for &v in keep {
            inside[v] = true;
        }
        let mut adj = vec![BTreeSet::new(); self.len()];
        for &c in keep {
            let pa: Vec<NodeId> = self.parents[c].iter().copied().filter(|&p| inside[p]).collect();
            for (i, &p) in pa.iter().enumerate() {
                adj[p].insert(c);
                adj[c].insert(p);
                for &q in &pa[i + 1..] {
                    adj[p].insert(q);
                    adj[q].insert(p);
                }
            }
        }
        let mut nodes = keep.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        UndirectedGraph { names: self.names.clone(), nodes, adj }
    }

    /// `c` separates `a` from `b`: in the moralized smallest ancestral
    /// subgraph containing `a ∪ b ∪ c`, every path from `a` to `b` meets `c`.
    pub fn separated(&self, a: &[NodeId], b: &[NodeId], c: &[NodeId]) -> Result<bool, GraphError> {
        Ok(self.connecting_path(a, b, c)?.is_none())
    }

    /// A shortest path from `a` to `b` avoiding `c` in the moral ancestral
    /// graph, if one exists. `None` means `c` separates `a` from `b`.
    pub fn connecting_path(
        &self,
        a: &[NodeId],
        b: &[NodeId],
        c: &[NodeId],
    ) -> Result<Option<Vec<NodeId>>, GraphError> {
        self.validate(a)?;
        self.validate(b)?;
        self.validate(c)?;
        let mut role = vec![0u8; self.len()];
        for (tag, set) in [(1u8, a), (2, b), (3, c)] {
            for &v in set {
                if role[v] != 0 && role[v] != tag {
                    return Err(GraphError::Overlap(self.names[v].clone()));
                }
                role[v] = tag;
            }
        }
        if a.is_empty() || b.is_empty() {
            return Ok(None);
        }
        let seed: Vec<NodeId> = a.iter().chain(b).chain(c).copied().collect();
        let anc = self.ancestral_closure(&seed)?;
        let moral = self.moralize_within(&anc);
        Ok(moral.path_avoiding(a, b, c))
    }
}

impl UndirectedGraph {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn neighbours(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].contains(&v)
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .flat_map(|&u| self.adj[u].iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Breadth-first search from `from` to `to` that never enters `blocked`.
    pub fn path_avoiding(&self, from: &[NodeId], to: &[NodeId], blocked: &[NodeId]) -> Option<Vec<NodeId>> {
        let n = self.adj.len();
        let mut is_target = vec![false; n];
        let mut is_blocked = vec![false; n];
        to.iter().for_each(|&v| is_target[v] = true);
        blocked.iter().for_each(|&v| is_blocked[v] = true);
        let mut prev: Vec<Option<NodeId>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &s in from {
            if !is_blocked[s] && !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            if is_target[v] {
                let mut path = vec![v];
                let mut cur = v;
                while let Some(p) = prev[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.adj[v] {
                if !seen[w] && !is_blocked[w] {
                    seen[w] = true;
                    prev[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Dag {
        Dag::from_named(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap()
    }

    fn collider() -> Dag {
        Dag::from_named(&["a", "b", "c"], &[("a", "c"), ("b", "c")]).unwrap()
    }

    /// The Example-1 diagram D_1: sigma points into A1 only and A2 keeps
    /// just its interventional parent A1.
    fn example_one_d1() -> Dag {
        Dag::from_named(
            &["U1", "A1", "U2", "L2", "A2", "Y", "sigma"],
            &[
                ("U1", "A1"),
                ("sigma", "A1"),
                ("U1", "L2"),
                ("U2", "L2"),
                ("A1", "L2"),
                ("A1", "A2"),
                ("A2", "Y"),
                ("U2", "Y"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_closure() {
        let d = chain();
        assert_eq!(d.ancestral_closure(&[2]).unwrap(), vec![0, 1, 2]);
        assert!(d.ancestral_closure(&[]).unwrap().is_empty());
        assert_eq!(d.descendants(&[0]).unwrap(), vec![0, 1, 2]);
        assert_eq!(d.descendants(&[2]).unwrap(), vec![2]);
    }

    #[test]
    fn example_one_closure_and_moral_edges() {
        let d = example_one_d1();
        let seed = d.nodes(&["Y", "A1", "sigma"]).unwrap();
        let anc = d.ancestral_closure(&seed).unwrap();
        let mut got = d.names_of(&anc);
        got.sort_unstable();
        assert_eq!(got, vec!["A1", "A2", "U1", "U2", "Y", "sigma"]);

        let moral = d.moralize_within(&anc);
        let id = |s| d.node(s).unwrap();
        assert!(moral.has_edge(id("U1"), id("sigma")));
        assert!(moral.has_edge(id("A2"), id("U2")));
        assert!(!moral.has_edge(id("U1"), id("U2")));
    }

    #[test]
    fn moralize_collider_and_edgeless() {
        let m = collider().moralize();
        assert_eq!(m.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        let empty = Dag::from_named(&["x", "y"], &[]).unwrap();
        assert!(empty.moralize().edges().is_empty());
    }

    #[test]
    fn separation_basics() {
        assert!(chain().separated(&[0], &[2], &[1]).unwrap());
        assert!(!collider().separated(&[0], &[1], &[2]).unwrap());
        assert!(collider().separated(&[0], &[1], &[]).unwrap());
        assert_eq!(
            chain().separated(&[0], &[1], &[1]),
            Err(GraphError::Overlap("b".into()))
        );
    }

    #[test]
    fn example_one_separation_and_its_failure_with_l2_arrow() {
        let d = example_one_d1();
        let q = |s: &[&str]| d.nodes(s).unwrap();
        assert!(d.separated(&q(&["Y"]), &q(&["sigma"]), &q(&["A1"])).unwrap());

        let names: Vec<&str> = d.names().iter().map(String::as_str).collect();
        let mut edges: Vec<(&str, &str)> = d
            .edges()
            .into_iter()
            .map(|(p, c)| (names[p], names[c]))
            .collect();
        edges.push(("L2", "A2"));
        let with_l2 = Dag::from_named(&names, &edges).unwrap();
        let path = with_l2
            .connecting_path(&q(&["Y"]), &q(&["sigma"]), &q(&["A1"]))
            .unwrap()
            .expect("path through U2 and U1");
        assert_eq!(with_l2.names_of(&path), vec!["Y", "U2", "U1", "sigma"]);
    }

    #[test]
    fn topological_order_ties_and_cycles() {
        let d = Dag::from_named(&["b", "a"], &[("a", "b")]).unwrap();
        assert_eq!(d.names_of(d.topological_order()), vec!["a", "b"]);
        let e = Dag::from_named(&["x", "y", "z"], &[]).unwrap();
        assert_eq!(e.topological_order(), &[0, 1, 2]);
        let cyc = Dag::from_named(&["a", "b"], &[("a", "b"), ("b", "a")]);
        assert!(matches!(cyc, Err(GraphError::Cycle(_))));
    }

    #[test]
    fn invalid_edges_rejected() {
        assert!(matches!(
            Dag::from_named(&["a"], &[("a", "a")]),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            Dag::from_named(&["a", "b"], &[("a", "b"), ("a", "b")]),
            Err(GraphError::DuplicateEdge(..))
        ));
        assert!(matches!(
            Dag::from_named(&["a"], &[("a", "q")]),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(chain().ancestral_closure(&[7]).is_err());
    }
}
