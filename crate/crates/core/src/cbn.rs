//! Conditional probability tables and the causal Bayesian network that owns them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{CausalDag, NodeId};

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// `P(child | parents)` stored densely.
///
/// Row `r` is the mixed-radix index of the parent values, first parent most
/// significant; entry `r * card + x` is `P(child = x | row r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: NodeId,
    parents: Vec<NodeId>,
    parent_cards: Vec<usize>,
    card: usize,
    table: Vec<f64>,
}

impl Cpt {
    /// Builds a table for `child` of `dag`, validating shape and row sums.
    pub fn new(dag: &CausalDag, child: NodeId, table: Vec<f64>) -> Result<Self> {
        let parents = dag.parents(child).to_vec();
        let parent_cards: Vec<usize> = parents.iter().map(|&p| dag.cardinality(p)).collect();
        let card = dag.cardinality(child);
        let rows: usize = parent_cards.iter().product();
        let invalid = |reason: String| Error::InvalidCpt {
            node: dag.name(child).to_string(),
            reason,
        };
        if table.len() != rows * card {
            return Err(invalid(format!("expected {} entries, got {}", rows * card, table.len())));
        }
        for (r, row) in table.chunks(card).enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(invalid(format!("row {r} has entry {p} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(invalid(format!("row {r} sums to {sum}")));
            }
        }
        Ok(Cpt {
            child,
            parents,
            parent_cards,
            card,
            table,
        })
    }

    /// Table for `child` built from one closure call per `(parent values, x)`.
    pub fn from_fn(dag: &CausalDag, child: NodeId, mut f: impl FnMut(&[usize], usize) -> f64) -> Result<Self> {
        let parent_cards: Vec<usize> = dag.parents(child).iter().map(|&p| dag.cardinality(p)).collect();
        let card = dag.cardinality(child);
        let mut table = Vec::with_capacity(parent_cards.iter().product::<usize>() * card);
        for values in MixedRadix::new(&parent_cards) {
            for x in 0..card {
                table.push(f(&values, x));
            }
        }
        Cpt::new(dag, child, table)
    }

    /// Uniform table for `child`.
    pub fn uniform(dag: &CausalDag, child: NodeId) -> Self {
        let card = dag.cardinality(child) as f64;
        Cpt::from_fn(dag, child, |_, _| 1.0 / card).expect("uniform rows are valid")
    }

    pub fn child(&self) -> NodeId {
        self.child
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn rows(&self) -> usize {
        self.table.len() / self.card
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.table[r * self.card..(r + 1) * self.card]
    }

    /// Row index for explicit parent values (canonical parent order).
    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parents.len());
        parent_values
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&v, &c)| acc * c + v)
    }

    /// Parent values of row `r`.
    pub fn row_values(&self, mut r: usize) -> Vec<usize> {
        let mut values = vec![0; self.parents.len()];
        for i in (0..values.len()).rev() {
            values[i] = r % self.parent_cards[i];
            r /= self.parent_cards[i];
        }
        values
    }

    fn state_row(&self, state: &[usize]) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (p, &c)| acc * c + state[p.0])
    }

    /// `P(state[child] | state[parents])` read from a full joint state.
    pub fn prob(&self, state: &[usize]) -> f64 {
        self.table[self.state_row(state) * self.card + state[self.child.0]]
    }

    /// Entry lookup with explicit parent values.
    pub fn get(&self, parent_values: &[usize], x: usize) -> f64 {
        self.table[self.row_index(parent_values) * self.card + x]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.table.iter().all(|&p| p > 0.0)
    }

    /// First row holding a zero entry, if any.
    pub fn first_zero_row(&self) -> Option<usize> {
        self.table.chunks(self.card).position(|row| row.iter().any(|&p| p <= 0.0))
    }
}

/// Causal graph plus one CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbn {
    dag: CausalDag,
    cpts: Vec<Cpt>,
}

impl Cbn {
    /// `cpts` may be given in any order but must cover every node exactly once.
    pub fn new(dag: CausalDag, cpts: Vec<Cpt>) -> Result<Self> {
        let mut slots: Vec<Option<Cpt>> = vec![None; dag.len()];
        for cpt in cpts {
            let child = cpt.child();
            if child.0 >= dag.len() || cpt.parents() != dag.parents(child) || cpt.card() != dag.cardinality(child) {
                return Err(Error::InvalidCpt {
                    node: dag.nodes().get(child.0).map(|n| n.name.clone()).unwrap_or_default(),
                    reason: "parents or cardinality do not match the graph".into(),
                });
            }
            if slots[child.0].replace(cpt).is_some() {
                return Err(Error::InvalidCpt {
                    node: dag.name(child).to_string(),
                    reason: "more than one table supplied".into(),
                });
            }
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| Error::InvalidCpt {
                    node: dag.name(NodeId(i)).to_string(),
                    reason: "missing table".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Cbn { dag, cpts })
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn cpt(&self, id: NodeId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Same network with the table of `cpt.child()` swapped out.
    pub fn with_cpt(&self, cpt: Cpt) -> Result<Self> {
        let mut cpts = self.cpts.clone();
        let child = cpt.child();
        if cpt.parents() != self.dag.parents(child) {
            return Err(Error::InvalidCpt {
                node: self.dag.name(child).to_string(),
                reason: "parents do not match the graph".into(),
            });
        }
        cpts[child.0] = cpt;
        Ok(Cbn {
            dag: self.dag.clone(),
            cpts,
        })
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.cpts.iter().all(Cpt::is_strictly_positive)
    }

    /// Number of full joint states.
    pub fn state_count(&self) -> usize {
        self.dag.cardinalities().iter().product()
    }

    /// Iterates every full joint state in mixed-radix order (node 0 most significant).
    pub fn states(&self) -> MixedRadix {
        MixedRadix::new(&self.dag.cardinalities())
    }

    /// Chain-rule probability of a full assignment given as a state vector.
    pub fn joint_state(&self, state: &[usize]) -> f64 {
        self.cpts.iter().map(|c| c.prob(state)).product()
    }

    pub fn joint_prob(&self, a: &Assignment) -> Result<f64> {
        let state = a.to_state(&self.dag)?;
        Ok(self.joint_state(&state))
    }

    /// Full joint table in [`Self::states`] order.
    pub fn joint_table(&self) -> Vec<f64> {
        self.states().map(|s| self.joint_state(&s)).collect()
    }
}

/// Partial map from node to value index.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(BTreeMap<NodeId, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn with(mut self, node: NodeId, value: usize) -> Self {
        self.0.insert(node, value);
        self
    }

    /// Builds an assignment from `(name, value index)` pairs.
    pub fn named(dag: &CausalDag, pairs: &[(&str, usize)]) -> Result<Self> {
        let mut a = Assignment::new();
        for &(name, v) in pairs {
            a.insert(dag.id(name)?, v);
        }
        a.validate(dag)?;
        Ok(a)
    }

    /// Full assignment from a state vector.
    pub fn from_state(state: &[usize]) -> Self {
        Assignment(state.iter().enumerate().map(|(i, &v)| (NodeId(i), v)).collect())
    }

    pub fn insert(&mut self, node: NodeId, value: usize) -> Option<usize> {
        self.0.insert(node, value)
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.0.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.0.contains_key(&node)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.0.iter().map(|(&n, &v)| (n, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_disjoint(&self, other: &Assignment) -> bool {
        self.0.keys().all(|k| !other.0.contains_key(k))
    }

    pub fn same_nodes(&self, other: &Assignment) -> bool {
        self.0.keys().eq(other.0.keys())
    }

    pub fn validate(&self, dag: &CausalDag) -> Result<()> {
        for (n, v) in self.iter() {
            if n.0 >= dag.len() {
                return Err(Error::InvalidInput(format!("node index {} out of range", n.0)));
            }
            if v >= dag.cardinality(n) {
                return Err(Error::ValueOutOfRange {
                    node: dag.name(n).to_string(),
                    value: v,
                    cardinality: dag.cardinality(n),
                });
            }
        }
        Ok(())
    }

    /// Dense state vector; fails unless every node is assigned.
    pub fn to_state(&self, dag: &CausalDag) -> Result<Vec<usize>> {
        self.validate(dag)?;
        dag.ids()
            .map(|n| self.get(n).ok_or_else(|| Error::IncompleteAssignment(dag.name(n).to_string())))
            .collect()
    }

    /// Dense vector with `None` for unassigned nodes.
    pub fn to_partial(&self, dag: &CausalDag) -> Vec<Option<usize>> {
        dag.ids().map(|n| self.get(n)).collect()
    }

    /// Every joint assignment of `nodes`, first node most significant.
    pub fn enumerate(dag: &CausalDag, nodes: &[NodeId]) -> Vec<Assignment> {
        let cards: Vec<usize> = nodes.iter().map(|&n| dag.cardinality(n)).collect();
        MixedRadix::new(&cards)
            .map(|vals| Assignment(nodes.iter().copied().zip(vals).collect()))
            .collect()
    }

    pub fn display(&self, dag: &CausalDag) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|(n, v)| format!("{}={}", dag.name(n), dag.node(n).labels[v]))
            .collect();
        parts.join(",")
    }
}

/// Odometer over a mixed-radix space; the last digit varies fastest.
#[derive(Debug, Clone)]
pub struct MixedRadix {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MixedRadix {
    pub fn new(cards: &[usize]) -> Self {
        let next = if cards.contains(&0) { None } else { Some(vec![0; cards.len()]) };
        MixedRadix {
            cards: cards.to_vec(),
            next,
        }
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.cards[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// Calls `f` on every full state that agrees with `fixed`.
///
/// Nodes holding `Some(v)` in `fixed` are pinned; the rest are enumerated.
pub(crate) fn for_each_state(cards: &[usize], fixed: &[Option<usize>], mut f: impl FnMut(&[usize])) {
    let free: Vec<usize> = (0..cards.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut state: Vec<usize> = fixed.iter().map(|v| v.unwrap_or(0)).collect();
    loop {
        f(&state);
        let mut k = free.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            let i = free[k];
            state[i] += 1;
            if state[i] < cards[i] {
                break;
            }
            state[i] = 0;
        }
    }
}
