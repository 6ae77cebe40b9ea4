//! Directed acyclic graphs with sensitive-node annotations.
//!
//! A [`CausalDag`] is immutable once built. Node values are dense `0..card`
//! indices; labels are carried only for display and serialization. Parents
//! of every node are kept in canonical order (position in the topological
//! order), which fixes the row layout of every CPT in the crate.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a node inside its [`CausalDag`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A discrete node: a name plus one label per value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub labels: Vec<String>,
}

impl NodeSpec {
    pub fn new<S: Into<String>>(name: impl Into<String>, labels: impl IntoIterator<Item = S>) -> Self {
        NodeSpec {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// Node whose labels are just `0..cardinality`.
    pub fn with_cardinality(name: impl Into<String>, cardinality: usize) -> Self {
        NodeSpec::new(name, (0..cardinality).map(|v| v.to_string()))
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
}

impl Edge {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Edge { from, to }
    }
}

/// A directed path, listed head to tail.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedPath(pub Vec<NodeId>);

impl DirectedPath {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    pub fn target(&self) -> NodeId {
        *self.0.last().expect("paths are non-empty")
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.0.windows(2).map(|w| Edge::new(w[0], w[1]))
    }

    pub fn first_edge(&self) -> Option<Edge> {
        self.edges().next()
    }

    /// True when `other` appears as a contiguous run inside `self`.
    pub fn contains_segment(&self, other: &[NodeId]) -> bool {
        if other.is_empty() || other.len() > self.0.len() {
            return other.is_empty();
        }
        self.0.windows(other.len()).any(|w| w == other)
    }

    pub fn contains_edge(&self, edge: Edge) -> bool {
        self.contains_segment(&[edge.from, edge.to])
    }
}

/// Result of a recanting-witness check for a set of selected paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    /// First node, in topological order, where a selected and an unselected
    /// path split after sharing their whole prefix from a source.
    pub witness: Option<NodeId>,
    /// First edges `X -> S` of the selected paths.
    pub on_edges: BTreeSet<Edge>,
    /// First edges `X -> S` of the unselected paths.
    pub off_edges: BTreeSet<Edge>,
}

impl WitnessReport {
    /// Children of the sources reached along selected paths.
    pub fn on_children(&self) -> BTreeSet<NodeId> {
        self.on_edges.iter().map(|e| e.to).collect()
    }

    /// Children of the sources reached along unselected paths.
    pub fn off_children(&self) -> BTreeSet<NodeId> {
        self.off_edges.iter().map(|e| e.to).collect()
    }

    /// Whether some child of a source starts both a selected and an
    /// unselected path. Equivalent to witness existence for a single source.
    pub fn children_overlap(&self) -> bool {
        !self.on_children().is_disjoint(&self.off_children())
    }

    /// An edge that would have to carry both the active and the baseline value.
    pub fn ambiguous_edge(&self) -> Option<Edge> {
        self.on_edges.intersection(&self.off_edges).next().copied()
    }
}

#[derive(Debug, Clone, Default)]
pub struct DagBuilder {
    nodes: Vec<NodeSpec>,
    edges: Vec<(String, String)>,
    sensitive: Vec<String>,
}

impl DagBuilder {
    pub fn node<S: Into<String>>(mut self, name: &str, labels: impl IntoIterator<Item = S>) -> Self {
        self.nodes.push(NodeSpec::new(name, labels));
        self
    }

    pub fn binary(self, name: &str) -> Self {
        self.node(name, ["0", "1"])
    }

    pub fn node_spec(mut self, spec: NodeSpec) -> Self {
        self.nodes.push(spec);
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn sensitive(mut self, name: &str) -> Self {
        self.sensitive.push(name.to_string());
        self
    }

    pub fn build(self) -> Result<CausalDag> {
        CausalDag::new(self.nodes, &self.edges, &self.sensitive)
    }
}

/// Node set, directed edge set and sensitive-node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    nodes: Vec<NodeSpec>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    order: Vec<NodeId>,
    position: Vec<usize>,
    sensitive: Vec<bool>,
}

impl CausalDag {
    pub fn builder() -> DagBuilder {
        DagBuilder::default()
    }

    /// Validates the node specs, resolves edge endpoints and rejects cycles.
    pub fn new<A: AsRef<str>, B: AsRef<str>, C: AsRef<str>>(
        nodes: Vec<NodeSpec>,
        edges: &[(A, B)],
        sensitive: &[C],
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, spec) in nodes.iter().enumerate() {
            if spec.cardinality() < 2 {
                return Err(Error::Cardinality {
                    node: spec.name.clone(),
                    cardinality: spec.cardinality(),
                });
            }
            let mut seen = BTreeSet::new();
            for label in &spec.labels {
                if !seen.insert(label.as_str()) {
                    return Err(Error::DuplicateLabel {
                        node: spec.name.clone(),
                        label: label.clone(),
                    });
                }
            }
            if index.insert(spec.name.clone(), NodeId(i)).is_some() {
                return Err(Error::DuplicateNode(spec.name.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownNode(name.to_string()))
        };

        let n = nodes.len();
        let mut parent_sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
        for (from, to) in edges {
            let (from, to) = (lookup(from.as_ref())?, lookup(to.as_ref())?);
            if from == to {
                return Err(Error::Cycle(nodes[from.0].name.clone()));
            }
            parent_sets[to.0].insert(from);
        }
        let mut is_sensitive = vec![false; n];
        for name in sensitive {
            is_sensitive[lookup(name.as_ref())?.0] = true;
        }

        // Kahn's algorithm; ties go to the earliest declared node.
        let mut indegree: Vec<usize> = parent_sets.iter().map(BTreeSet::len).collect();
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (child, ps) in parent_sets.iter().enumerate() {
            for p in ps {
                children[p.0].push(NodeId(child));
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(NodeId(i));
            for c in &children[i] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.push(Reverse(c.0));
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("cycle leaves a node with indegree");
            return Err(Error::Cycle(nodes[stuck].name.clone()));
        }
        let mut position = vec![0; n];
        for (pos, id) in order.iter().enumerate() {
            position[id.0] = pos;
        }
        let canonical = |set: &BTreeSet<NodeId>| {
            let mut v: Vec<NodeId> = set.iter().copied().collect();
            v.sort_by_key(|id| position[id.0]);
            v
        };
        let parents: Vec<Vec<NodeId>> = parent_sets.iter().map(canonical).collect();
        for c in children.iter_mut() {
            c.sort_by_key(|id| position[id.0]);
        }

        Ok(CausalDag {
            nodes,
            index,
            parents,
            children,
            order,
            position,
            sensitive: is_sensitive,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn cardinality(&self, id: NodeId) -> usize {
        self.nodes[id.0].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeSpec::cardinality).collect()
    }

    /// Index of `label` among the values of `id`.
    pub fn value_index(&self, id: NodeId, label: &str) -> Result<usize> {
        self.nodes[id.0]
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidInput(format!("node `{}` has no value `{label}`", self.name(id))))
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.parents[to.0].contains(&from)
    }

    /// All edges, ordered by child position then canonical parent order.
    pub fn edges(&self) -> Vec<Edge> {
        self.order
            .iter()
            .flat_map(|&to| self.parents[to.0].iter().map(move |&from| Edge::new(from, to)))
            .collect()
    }

    pub fn is_sensitive(&self, id: NodeId) -> bool {
        self.sensitive[id.0]
    }

    pub fn sensitive_nodes(&self) -> Vec<NodeId> {
        self.order.iter().copied().filter(|id| self.sensitive[id.0]).collect()
    }

    /// Edges whose source is a sensitive node.
    pub fn unfair_edges(&self) -> Vec<Edge> {
        self.edges().into_iter().filter(|e| self.sensitive[e.from.0]).collect()
    }

    pub fn is_unfair(&self, edge: Edge) -> bool {
        self.sensitive[edge.from.0] && self.has_edge(edge.from, edge.to)
    }

    pub fn edge_name(&self, edge: Edge) -> String {
        format!("{}->{}", self.name(edge.from), self.name(edge.to))
    }

    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Position of `id` in [`Self::topological_order`].
    pub fn position(&self, id: NodeId) -> usize {
        self.position[id.0]
    }

    pub fn descendants(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.reach(id, |n| self.children(n))
    }

    pub fn ancestors(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.reach(id, |n| self.parents(n))
    }

    fn reach<'a>(&'a self, start: NodeId, next: impl Fn(NodeId) -> &'a [NodeId]) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            for &m in next(n) {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen
    }

    /// Every directed path from `src` to `dst`, each listed once, in
    /// lexicographic order of topological positions.
    pub fn directed_paths(&self, src: NodeId, dst: NodeId) -> Vec<DirectedPath> {
        self.paths_avoiding(src, dst, &BTreeSet::new())
    }

    /// Directed paths from any node of `sources` to `dst` that do not pass
    /// through a second source. Under `do(sources)` these are the only paths
    /// along which the intervention propagates.
    pub fn source_paths(&self, sources: &[NodeId], dst: NodeId) -> Vec<DirectedPath> {
        let all: BTreeSet<NodeId> = sources.iter().copied().collect();
        let mut out = Vec::new();
        for &s in sources {
            let mut avoid = all.clone();
            avoid.remove(&s);
            out.extend(self.paths_avoiding(s, dst, &avoid));
        }
        out
    }

    fn paths_avoiding(&self, src: NodeId, dst: NodeId, avoid: &BTreeSet<NodeId>) -> Vec<DirectedPath> {
        let mut out = Vec::new();
        if avoid.contains(&src) {
            return out;
        }
        let mut stack = vec![src];
        self.dfs_paths(dst, avoid, &mut stack, &mut out);
        out
    }

    fn dfs_paths(&self, dst: NodeId, avoid: &BTreeSet<NodeId>, stack: &mut Vec<NodeId>, out: &mut Vec<DirectedPath>) {
        let head = *stack.last().expect("non-empty");
        if head == dst {
            out.push(DirectedPath(stack.clone()));
            return;
        }
        for &c in self.children(head) {
            // Acyclicity already rules out revisits; `avoid` prunes cut nodes.
            if avoid.contains(&c) {
                continue;
            }
            stack.push(c);
            self.dfs_paths(dst, avoid, stack, out);
            stack.pop();
        }
    }

    /// d-separation of `a` and `b` given `c`, by Bayes-ball reachability.
    pub fn d_separated(&self, a: &[NodeId], b: &[NodeId], c: &[NodeId]) -> Result<bool> {
        let (sa, sb, sc): (BTreeSet<_>, BTreeSet<_>, BTreeSet<_>) = (
            a.iter().copied().collect(),
            b.iter().copied().collect(),
            c.iter().copied().collect(),
        );
        if !sa.is_disjoint(&sb) || !sa.is_disjoint(&sc) || !sb.is_disjoint(&sc) {
            return Err(Error::InvalidInput("d-separation node sets must be disjoint".into()));
        }
        let reachable = self.active_reachable(&sa, &sc);
        Ok(sb.is_disjoint(&reachable))
    }

    /// Nodes connected to `sources` by an active trail given `observed`.
    pub fn active_reachable(&self, sources: &BTreeSet<NodeId>, observed: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        // Observed nodes and their ancestors open colliders.
        let mut opens_collider = vec![false; self.len()];
        for &o in observed {
            opens_collider[o.0] = true;
            for anc in self.ancestors(o) {
                opens_collider[anc.0] = true;
            }
        }
        const UP: usize = 0; // arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; self.len()];
        let mut queue: VecDeque<(NodeId, usize)> = sources.iter().map(|&s| (s, UP)).collect();
        let mut reachable = BTreeSet::new();
        while let Some((node, dir)) = queue.pop_front() {
            if visited[node.0][dir] {
                continue;
            }
            visited[node.0][dir] = true;
            let is_observed = observed.contains(&node);
            if !is_observed {
                reachable.insert(node);
            }
            if dir == UP && !is_observed {
                queue.extend(self.parents(node).iter().map(|&p| (p, UP)));
                queue.extend(self.children(node).iter().map(|&c| (c, DOWN)));
            } else if dir == DOWN {
                if !is_observed {
                    queue.extend(self.children(node).iter().map(|&c| (c, DOWN)));
                }
                if opens_collider[node.0] {
                    queue.extend(self.parents(node).iter().map(|&p| (p, UP)));
                }
            }
        }
        for s in sources {
            reachable.remove(s);
        }
        reachable
    }

    /// Checks the recanting-witness criterion for `pi`, a set of paths from
    /// `sources` to `target`.
    ///
    /// Paths are compared against [`Self::source_paths`]; a path that is not
    /// one of them is rejected.
    pub fn recanting_witness(&self, sources: &[NodeId], target: NodeId, pi: &[DirectedPath]) -> Result<WitnessReport> {
        let all = self.source_paths(sources, target);
        for p in pi {
            if !all.contains(p) {
                let names: Vec<&str> = p.nodes().iter().map(|&n| self.name(n)).collect();
                return Err(Error::InvalidInput(format!(
                    "path {} does not run from the sources to `{}`",
                    names.join("->"),
                    self.name(target)
                )));
            }
        }
        let selected: BTreeSet<&DirectedPath> = pi.iter().collect();
        let on_edges: BTreeSet<Edge> = pi.iter().filter_map(DirectedPath::first_edge).collect();
        let off_edges: BTreeSet<Edge> = all
            .iter()
            .filter(|p| !selected.contains(p))
            .filter_map(DirectedPath::first_edge)
            .collect();

        // A node recants when two source paths reach it along the same prefix
        // and then split into a selected and an unselected continuation.
        let mut split: BTreeMap<&[NodeId], [bool; 2]> = BTreeMap::new();
        for p in &all {
            let n = p.nodes();
            let on = selected.contains(p) as usize;
            for i in 1..n.len().saturating_sub(1) {
                split.entry(&n[..=i]).or_default()[on] = true;
            }
        }
        let recanting: BTreeSet<NodeId> = split
            .iter()
            .filter(|(_, seen)| seen[0] && seen[1])
            .map(|(prefix, _)| *prefix.last().expect("non-empty prefix"))
            .collect();
        let witness = self.order.iter().copied().find(|w| recanting.contains(w));
        Ok(WitnessReport {
            witness,
            on_edges,
            off_edges,
        })
    }
}

impl fmt::Display for CausalDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().into_iter().map(|e| self.edge_name(e)).collect();
        write!(f, "dag[{} nodes; {}]", self.len(), edges.join(", "))
    }
}
