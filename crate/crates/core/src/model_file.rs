//! JSON model format: nodes with value labels, edges, sensitive nodes, and
//! one table per node with rows keyed by parent assignment.
//!
//! ```json
//! {
//!   "nodes": [{"name": "S", "labels": ["a", "b"]}, {"name": "Y", "labels": ["no", "yes"]}],
//!   "edges": [["S", "Y"]],
//!   "sensitive": ["S"],
//!   "cpts": [
//!     {"node": "S", "rows": [{"given": {}, "probs": [0.6, 0.4]}]},
//!     {"node": "Y", "rows": [
//!       {"given": {"S": "a"}, "probs": [0.8, 0.2]},
//!       {"given": {"S": "b"}, "probs": [0.4, 0.6]}
//!     ]}
//!   ]
//! }
//! ```
//!
//! Probabilities are written in shortest round-trip form, so parsing a
//! written file reproduces every table bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cbn::{Cbn, Cpt};
use crate::error::{Error, Result};
use crate::graph::{CausalDag, NodeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub sensitive: Vec<String>,
    pub cpts: Vec<CptEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptEntry {
    pub node: String,
    pub rows: Vec<RowEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowEntry {
    /// Parent name to value label.
    pub given: BTreeMap<String, String>,
    /// One probability per child label, in label order.
    pub probs: Vec<f64>,
}

impl ModelFile {
    pub fn from_cbn(cbn: &Cbn) -> Self {
        let dag = cbn.dag();
        let nodes = dag
            .nodes()
            .iter()
            .map(|n| NodeEntry {
                name: n.name.clone(),
                labels: n.labels.clone(),
            })
            .collect();
        let edges = dag
            .edges()
            .into_iter()
            .map(|e| (dag.name(e.from).to_string(), dag.name(e.to).to_string()))
            .collect();
        let sensitive = dag.sensitive_nodes().into_iter().map(|s| dag.name(s).to_string()).collect();
        let cpts = cbn
            .cpts()
            .iter()
            .map(|cpt| CptEntry {
                node: dag.name(cpt.child()).to_string(),
                rows: (0..cpt.rows())
                    .map(|r| RowEntry {
                        given: cpt
                            .parents()
                            .iter()
                            .zip(cpt.row_values(r))
                            .map(|(&p, v)| (dag.name(p).to_string(), dag.node(p).labels[v].clone()))
                            .collect(),
                        probs: cpt.row(r).to_vec(),
                    })
                    .collect(),
            })
            .collect();
        ModelFile {
            nodes,
            edges,
            sensitive,
            cpts,
        }
    }

    pub fn to_dag(&self) -> Result<CausalDag> {
        let mut b = CausalDag::builder();
        for n in &self.nodes {
            b = b.node_spec(NodeSpec::new(n.name.clone(), n.labels.iter().cloned()));
        }
        for (from, to) in &self.edges {
            b = b.edge(from, to);
        }
        for s in &self.sensitive {
            b = b.sensitive(s);
        }
        b.build()
    }

    /// Builds the network; every parent assignment must appear exactly once.
    pub fn to_cbn(&self) -> Result<Cbn> {
        let dag = self.to_dag()?;
        let mut by_node: BTreeMap<&str, &CptEntry> = BTreeMap::new();
        for c in &self.cpts {
            dag.id(&c.node)?;
            if by_node.insert(&c.node, c).is_some() {
                return Err(Error::ModelFile(format!("two tables for `{}`", c.node)));
            }
        }
        let cpts = dag
            .ids()
            .map(|v| {
                let entry = by_node
                    .get(dag.name(v))
                    .ok_or_else(|| Error::ModelFile(format!("no table for `{}`", dag.name(v))))?;
                table_from_rows(&dag, v, entry)
            })
            .collect::<Result<Vec<_>>>()?;
        Cbn::new(dag, cpts)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes") + "\n"
    }
}

fn table_from_rows(dag: &CausalDag, v: crate::graph::NodeId, entry: &CptEntry) -> Result<Cpt> {
    let shape = Cpt::uniform(dag, v);
    let card = shape.card();
    let mut table = vec![f64::NAN; shape.table().len()];
    let mut seen = vec![false; shape.rows()];
    for row in &entry.rows {
        if row.given.len() != shape.parents().len() {
            return Err(Error::ModelFile(format!(
                "row of `{}` names {} parents, expected {}",
                entry.node,
                row.given.len(),
                shape.parents().len()
            )));
        }
        let values = shape
            .parents()
            .iter()
            .map(|&p| {
                let label = row.given.get(dag.name(p)).ok_or_else(|| {
                    Error::ModelFile(format!("row of `{}` does not give parent `{}`", entry.node, dag.name(p)))
                })?;
                dag.value_index(p, label)
            })
            .collect::<Result<Vec<_>>>()?;
        if row.probs.len() != card {
            return Err(Error::ModelFile(format!(
                "row of `{}` has {} probabilities, expected {card}",
                entry.node,
                row.probs.len()
            )));
        }
        let r = shape.row_index(&values);
        if std::mem::replace(&mut seen[r], true) {
            return Err(Error::ModelFile(format!("row {:?} of `{}` appears twice", row.given, entry.node)));
        }
        table[r * card..(r + 1) * card].copy_from_slice(&row.probs);
    }
    if let Some(r) = seen.iter().position(|s| !s) {
        let missing: Vec<String> = shape
            .parents()
            .iter()
            .zip(shape.row_values(r))
            .map(|(&p, x)| format!("{}={}", dag.name(p), dag.node(p).labels[x]))
            .collect();
        return Err(Error::ModelFile(format!("`{}` has no row for {}", entry.node, missing.join(", "))));
    }
    Cpt::new(dag, v, table)
}
