//! Exact inference by enumeration: conditional queries, interventions,
//! path-specific interventions and the effect measures built on them.

use std::collections::BTreeSet;

use crate::cbn::{for_each_state, Assignment, Cbn};
use crate::error::{Error, Result};
use crate::graph::{CausalDag, DirectedPath, Edge, NodeId};

/// A path-specific intervention: the sources take `on` along the selected
/// paths and `off` along every other path to `outcome`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIntervention {
    pub paths: Vec<DirectedPath>,
    pub outcome: NodeId,
    pub on: Assignment,
    pub off: Assignment,
}

impl PathIntervention {
    pub fn new(paths: Vec<DirectedPath>, outcome: NodeId, on: Assignment, off: Assignment) -> Self {
        PathIntervention { paths, outcome, on, off }
    }
}

/// Factor tables in CPT layout over a graph. Rows need not be normalized,
/// which lets callers differentiate sums of products with respect to a
/// table.
#[derive(Debug, Clone)]
pub struct Factors<'a> {
    dag: &'a CausalDag,
    tables: Vec<&'a [f64]>,
}

impl<'a> Factors<'a> {
    pub fn of(cbn: &'a Cbn) -> Self {
        Factors {
            dag: cbn.dag(),
            tables: cbn.cpts().iter().map(|c| c.table()).collect(),
        }
    }

    /// One table per node, each sized `card * prod(parent cards)`.
    pub fn new(dag: &'a CausalDag, tables: Vec<&'a [f64]>) -> Result<Self> {
        if tables.len() != dag.len() {
            return Err(Error::InvalidInput(format!("{} tables for {} nodes", tables.len(), dag.len())));
        }
        for v in dag.ids() {
            let want: usize = dag.cardinality(v) * dag.parents(v).iter().map(|&p| dag.cardinality(p)).product::<usize>();
            if tables[v.0].len() != want {
                return Err(Error::InvalidCpt {
                    node: dag.name(v).to_string(),
                    reason: format!("expected {want} entries, got {}", tables[v.0].len()),
                });
            }
        }
        Ok(Factors { dag, tables })
    }

    pub fn dag(&self) -> &CausalDag {
        self.dag
    }

    /// Same factors with one node's table swapped.
    pub fn with_table(&self, node: NodeId, table: &'a [f64]) -> Self {
        let mut f = self.clone();
        f.tables[node.0] = table;
        f
    }

    /// Nodes whose factors can influence `targets` once `cut` nodes are
    /// intervened on: the targets plus their ancestors reached without
    /// passing through a cut node. Every other factor sums out to 1 for
    /// normalized tables and is dropped.
    fn relevant(&self, targets: &[NodeId], cut: &[bool]) -> Vec<bool> {
        let mut keep = vec![false; self.dag.len()];
        let mut stack: Vec<NodeId> = targets.to_vec();
        while let Some(v) = stack.pop() {
            if keep[v.0] {
                continue;
            }
            keep[v.0] = true;
            if !cut[v.0] {
                stack.extend(self.dag.parents(v).iter().copied());
            }
        }
        keep
    }

    /// Calls `sink(state, weight)` for every assignment of the relevant
    /// nodes agreeing with `fixed`, where `weight` is the product of the
    /// factors of relevant, non-cut nodes. Irrelevant nodes sit at value 0.
    /// Parent reads go through `parent_value(child, parent index, state)`.
    pub(crate) fn accumulate(
        &self,
        fixed: &[Option<usize>],
        cut: &[bool],
        targets: &[NodeId],
        parent_value: impl Fn(NodeId, usize, &[usize]) -> usize,
        mut sink: impl FnMut(&[usize], f64),
    ) {
        let dag = self.dag;
        let keep = self.relevant(targets, cut);
        let cards = dag.cardinalities();
        let pinned: Vec<Option<usize>> = (0..dag.len())
            .map(|i| if keep[i] { fixed[i] } else { Some(0) })
            .collect();
        let active: Vec<NodeId> = dag.ids().filter(|v| keep[v.0] && !cut[v.0]).collect();
        for_each_state(&cards, &pinned, |state| {
            let mut p = 1.0;
            for &v in &active {
                let row = dag
                    .parents(v)
                    .iter()
                    .fold(0, |acc, &par| acc * cards[par.0] + parent_value(v, par.0, state));
                p *= self.tables[v.0][row * cards[v.0] + state[v.0]];
                if p == 0.0 {
                    break;
                }
            }
            sink(state, p);
        });
    }

    fn sum_product(&self, fixed: &[Option<usize>], cut: &[bool], targets: &[NodeId]) -> f64 {
        let mut total = 0.0;
        self.accumulate(fixed, cut, targets, |_, p, s| s[p], |_, p| total += p);
        total
    }

    /// `P(y | do(x))` by truncated factorization over these factors.
    pub fn interventional(&self, do_x: &Assignment, y: &Assignment) -> Result<f64> {
        do_x.validate(self.dag)?;
        y.validate(self.dag)?;
        let Some(fixed) = merge(self.dag.len(), &[do_x, y]) else {
            return Ok(0.0);
        };
        let mut cut = vec![false; self.dag.len()];
        for n in do_x.nodes() {
            cut[n.0] = true;
        }
        Ok(self.sum_product(&fixed, &cut, &y.nodes()))
    }
}

fn merge(dag_len: usize, parts: &[&Assignment]) -> Option<Vec<Option<usize>>> {
    let mut fixed = vec![None; dag_len];
    for a in parts {
        for (n, v) in a.iter() {
            match fixed[n.0] {
                Some(old) if old != v => return None,
                _ => fixed[n.0] = Some(v),
            }
        }
    }
    Some(fixed)
}

/// `P(target | given)` by marginalizing the joint.
pub fn query(cbn: &Cbn, target: &Assignment, given: &Assignment) -> Result<f64> {
    let dag = cbn.dag();
    target.validate(dag)?;
    given.validate(dag)?;
    if target.is_empty() {
        return Err(Error::InvalidInput("query target is empty".into()));
    }
    if !target.is_disjoint(given) {
        return Err(Error::InvalidInput("query target and evidence overlap".into()));
    }
    let f = Factors::of(cbn);
    let cut = vec![false; dag.len()];
    let den = f.sum_product(&given.to_partial(dag), &cut, &given.nodes());
    if den <= 0.0 {
        return Err(Error::ZeroProbabilityCondition);
    }
    let both = merge(dag.len(), &[target, given]).expect("disjoint");
    let mut nodes = target.nodes();
    nodes.extend(given.nodes());
    Ok(f.sum_product(&both, &cut, &nodes) / den)
}

/// `P(y | do(x))` by truncated factorization.
///
/// Intervened nodes drop their own factor; `y` entries on intervened nodes
/// act as consistency checks.
pub fn interventional(cbn: &Cbn, do_x: &Assignment, y: &Assignment) -> Result<f64> {
    Factors::of(cbn).interventional(do_x, y)
}

/// Distribution of `node` under `do(x)`, in one enumeration pass.
pub fn interventional_dist(cbn: &Cbn, do_x: &Assignment, node: NodeId) -> Result<Vec<f64>> {
    let dag = cbn.dag();
    do_x.validate(dag)?;
    let mut dist = vec![0.0; dag.cardinality(node)];
    if let Some(v) = do_x.get(node) {
        dist[v] = 1.0;
        return Ok(dist);
    }
    let mut cut = vec![false; dag.len()];
    for n in do_x.nodes() {
        cut[n.0] = true;
    }
    Factors::of(cbn).accumulate(&do_x.to_partial(dag), &cut, &[node], |_, p, s| s[p], |s, p| {
        dist[s[node.0]] += p
    });
    Ok(dist)
}

/// Edge g-formula distribution of the free node `node`, with the edge
/// assignment already decided: a parent in `on` feeding `child` reads its
/// `on` value when `(parent, child)` is in `on_edges`, its `off` value
/// otherwise. No identifiability checks.
pub(crate) fn edge_g_dist(
    cbn: &Cbn,
    on: &Assignment,
    off: &Assignment,
    on_edges: &BTreeSet<Edge>,
    node: NodeId,
) -> Vec<f64> {
    let mut dist = vec![0.0; cbn.dag().cardinality(node)];
    edge_g_accumulate(cbn, on, off, on_edges, &Assignment::new(), node, |s, p| dist[s[node.0]] += p);
    dist
}

fn edge_g_accumulate(
    cbn: &Cbn,
    on: &Assignment,
    off: &Assignment,
    on_edges: &BTreeSet<Edge>,
    y: &Assignment,
    node: NodeId,
    sink: impl FnMut(&[usize], f64),
) {
    let dag = cbn.dag();
    let mut cut = vec![false; dag.len()];
    for n in on.nodes() {
        cut[n.0] = true;
    }
    // Sources are pinned so their (cut) factor is not summed over.
    let mut fixed = y.to_partial(dag);
    for (n, v) in on.iter() {
        fixed[n.0] = Some(v);
    }
    let mut targets = y.nodes();
    targets.push(node);
    Factors::of(cbn).accumulate(
        &fixed,
        &cut,
        &targets,
        |child, p, s| {
            let par = NodeId(p);
            match on.get(par) {
                Some(v) if on_edges.contains(&Edge::new(par, child)) => v,
                Some(_) => off.get(par).expect("same nodes"),
                None => s[p],
            }
        },
        sink,
    );
}

/// Path-specific probability `P(y | do(on|paths, off|rest))` by the edge
/// g-formula.
///
/// Each edge leaving a source is assigned the `on` value if it starts a
/// selected path and the `off` value otherwise. Fails when the selection is
/// not identifiable.
pub fn path_specific(cbn: &Cbn, iv: &PathIntervention, y: &Assignment) -> Result<f64> {
    let dag = cbn.dag();
    iv.on.validate(dag)?;
    iv.off.validate(dag)?;
    y.validate(dag)?;
    if iv.on.is_empty() || !iv.on.same_nodes(&iv.off) {
        return Err(Error::InvalidInput("on and off values must cover the same non-empty node set".into()));
    }
    if !y.is_disjoint(&iv.on) {
        return Err(Error::InvalidInput("outcome assignment overlaps the intervened nodes".into()));
    }
    let sources = iv.on.nodes();
    if sources.contains(&iv.outcome) {
        return Err(Error::InvalidInput("outcome is an intervened node".into()));
    }
    let report = dag.recanting_witness(&sources, iv.outcome, &iv.paths)?;
    if let Some(w) = report.witness {
        return Err(Error::RecantingWitness {
            witness: dag.name(w).to_string(),
        });
    }
    if let Some(e) = report.ambiguous_edge() {
        return Err(Error::AmbiguousEdge {
            from: dag.name(e.from).to_string(),
            to: dag.name(e.to).to_string(),
        });
    }
    let mut total = 0.0;
    edge_g_accumulate(cbn, &iv.on, &iv.off, &report.on_edges, y, iv.outcome, |_, p| total += p);
    Ok(total)
}

fn check_single(y: &Assignment) -> Result<()> {
    if y.len() != 1 {
        return Err(Error::InvalidInput("outcome must assign exactly one node".into()));
    }
    Ok(())
}

/// `P(y | do(s2)) - P(y | do(s1))`.
pub fn total_effect(cbn: &Cbn, y: &Assignment, s2: &Assignment, s1: &Assignment) -> Result<f64> {
    check_single(y)?;
    if !s1.same_nodes(s2) {
        return Err(Error::InvalidInput("both settings must assign the same nodes".into()));
    }
    Ok(interventional(cbn, s2, y)? - interventional(cbn, s1, y)?)
}

/// Multiplicative effect of switching from `s1` to `s2` along `paths` only.
pub fn path_specific_effect(
    cbn: &Cbn,
    paths: &[DirectedPath],
    y: &Assignment,
    s2: &Assignment,
    s1: &Assignment,
) -> Result<f64> {
    check_single(y)?;
    let (outcome, _) = y.iter().next().expect("one entry");
    let den = interventional(cbn, s1, y)?;
    let iv = PathIntervention::new(paths.to_vec(), outcome, s2.clone(), s1.clone());
    let num = path_specific(cbn, &iv, y)?;
    if den <= 0.0 {
        return Err(Error::Positivity(format!(
            "P({} | do({})) is zero",
            y.display(cbn.dag()),
            s1.display(cbn.dag())
        )));
    }
    Ok(num / den)
}
