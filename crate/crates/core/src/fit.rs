//! Linear edge-flow model of each CPT and its least-squares fit.
//!
//! A child's table is approximated by a convex combination of its input
//! flows: one grouped flow for the non-sensitive parents and one flow per
//! sensitive parent.

use crate::cbn::{Cbn, Cpt};
use crate::clsp::{solve_clsp, Design, FitConfig};
use crate::error::{Error, Result};
use crate::flow::{node_flows, NetworkFlows, NodeFlows};
use crate::graph::{CausalDag, NodeId};

/// Fitted weights of one child. Weight order is fair group first, then the
/// unfair parents in parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCptModel {
    pub child: NodeId,
    pub fair_weight: Option<f64>,
    pub unfair_weights: Vec<(NodeId, f64)>,
    pub mse: f64,
    pub used_scaling: bool,
    pub converged: bool,
    pub kkt_residual: f64,
}

impl LinearCptModel {
    pub fn weights(&self) -> Vec<f64> {
        self.fair_weight
            .into_iter()
            .chain(self.unfair_weights.iter().map(|&(_, w)| w))
            .collect()
    }

    /// Same model with weights replaced (same order as [`Self::weights`]).
    pub fn with_weights(&self, w: &[f64]) -> Self {
        let mut m = self.clone();
        let offset = self.fair_weight.is_some() as usize;
        if let Some(f) = m.fair_weight.as_mut() {
            *f = w[0];
        }
        for (i, (_, uw)) in m.unfair_weights.iter_mut().enumerate() {
            *uw = w[offset + i];
        }
        m
    }

    pub fn unfair_weight(&self, parent: NodeId) -> Option<f64> {
        self.unfair_weights.iter().find(|(p, _)| *p == parent).map(|&(_, w)| w)
    }

    /// True when the child has no sensitive parent.
    pub fn is_trivial(&self) -> bool {
        self.unfair_weights.is_empty()
    }

    /// Predicted table in CPT layout (row-major over parent rows, then `x`).
    pub fn predict(&self, dag: &CausalDag, flows: &NodeFlows) -> Vec<f64> {
        predict_with(dag, flows, &self.weights())
    }

    /// Predicted table as a validated CPT.
    pub fn approx_cpt(&self, dag: &CausalDag, flows: &NodeFlows) -> Result<Cpt> {
        Cpt::new(dag, self.child, self.predict(dag, flows))
    }
}

/// `sum_k w_k * input_k` in CPT layout.
pub fn predict_with(dag: &CausalDag, flows: &NodeFlows, w: &[f64]) -> Vec<f64> {
    let columns = input_columns(dag, flows);
    let n = columns.first().map_or(0, Vec::len);
    (0..n).map(|i| columns.iter().zip(w).map(|(c, wk)| wk * c[i]).sum()).collect()
}

/// Input flows laid out like the child's CPT, one vector per weight.
pub fn input_columns(dag: &CausalDag, flows: &NodeFlows) -> Vec<Vec<f64>> {
    let shape = Cpt::uniform(dag, flows.child);
    let card = shape.card();
    flows
        .inputs()
        .map(|t| {
            let mut col = Vec::with_capacity(shape.table().len());
            for r in 0..shape.rows() {
                let m = t.group_row(&shape.row_values(r));
                col.extend((0..card).map(|x| t.flow(m, x)));
            }
            col
        })
        .collect()
}

/// Targets (the CPT entries) and input columns for one child.
pub fn assemble_regression(cbn: &Cbn, child: NodeId, use_scaling: bool) -> Result<(Design, NodeFlows)> {
    let flows = node_flows(cbn, child, use_scaling)?;
    let design = design_for(cbn.cpt(child), cbn.dag(), &flows)?;
    Ok((design, flows))
}

fn design_for(target: &Cpt, dag: &CausalDag, flows: &NodeFlows) -> Result<Design> {
    if target.child() != flows.child {
        return Err(Error::InvalidInput("flows belong to a different child".into()));
    }
    Design::new(target.table().to_vec(), input_columns(dag, flows))
}

/// Fits `child`'s table in `cbn`, computing its input flows from `cbn`.
pub fn fit_cpt(cbn: &Cbn, child: NodeId, config: &FitConfig) -> Result<LinearCptModel> {
    let flows = node_flows(cbn, child, config.use_scaling)?;
    fit_cpt_with_flows(cbn.dag(), cbn.cpt(child), &flows, config)
}

/// Fits `target` against already computed input flows.
pub fn fit_cpt_with_flows(
    dag: &CausalDag,
    target: &Cpt,
    flows: &NodeFlows,
    config: &FitConfig,
) -> Result<LinearCptModel> {
    let design = design_for(target, dag, flows)?;
    let sol = solve_clsp(&design, config)?;
    let offset = flows.fair.is_some() as usize;
    Ok(LinearCptModel {
        child: flows.child,
        fair_weight: flows.fair.as_ref().map(|_| sol.weights[0]),
        unfair_weights: flows
            .unfair_parents()
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, sol.weights[offset + i]))
            .collect(),
        mse: sol.mse,
        used_scaling: flows.scaled,
        converged: sol.converged,
        kkt_residual: sol.kkt_residual,
    })
}

/// Flows and models of every non-root node.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedNetwork {
    pub cbn: Cbn,
    pub flows: NetworkFlows,
    models: Vec<Option<LinearCptModel>>,
}

impl FittedNetwork {
    pub fn from_parts(cbn: Cbn, flows: NetworkFlows, models: Vec<Option<LinearCptModel>>) -> Result<Self> {
        if models.len() != cbn.dag().len() {
            return Err(Error::InvalidInput("one model slot per node is required".into()));
        }
        for v in cbn.dag().ids() {
            let has_parents = !cbn.dag().parents(v).is_empty();
            if has_parents != models[v.0].is_some() || has_parents != flows.get(v).is_some() {
                return Err(Error::InvalidInput(format!(
                    "model/flow coverage of `{}` does not match its parents",
                    cbn.dag().name(v)
                )));
            }
        }
        Ok(FittedNetwork { cbn, flows, models })
    }

    pub fn model(&self, child: NodeId) -> Option<&LinearCptModel> {
        self.models.get(child.0).and_then(Option::as_ref)
    }

    pub fn models(&self) -> impl Iterator<Item = &LinearCptModel> {
        self.models.iter().flatten()
    }

    /// Same flows with different models.
    pub fn with_models(&self, models: Vec<Option<LinearCptModel>>) -> Result<Self> {
        FittedNetwork::from_parts(self.cbn.clone(), self.flows.clone(), models)
    }

    /// Approximated tables: model predictions for non-roots, original
    /// marginals for roots.
    pub fn approx_cpts(&self) -> Result<Vec<Cpt>> {
        let dag = self.cbn.dag();
        dag.ids()
            .map(|v| match (self.model(v), self.flows.get(v)) {
                (Some(m), Some(f)) => m.approx_cpt(dag, f),
                _ => Ok(self.cbn.cpt(v).clone()),
            })
            .collect()
    }

    /// Network whose tables are the approximated ones.
    pub fn approx_cbn(&self) -> Result<Cbn> {
        Cbn::new(self.cbn.dag().clone(), self.approx_cpts()?)
    }

    /// Fitted weight of each unfair edge, in graph edge order.
    pub fn unfair_edge_weights(&self) -> Vec<(crate::graph::Edge, f64)> {
        self.cbn
            .dag()
            .unfair_edges()
            .into_iter()
            .filter_map(|e| self.model(e.to).and_then(|m| m.unfair_weight(e.from)).map(|w| (e, w)))
            .collect()
    }
}

/// Fits every non-root node of `cbn` against flows of `cbn` itself.
pub fn fit_network(cbn: &Cbn, config: &FitConfig) -> Result<FittedNetwork> {
    let flows = NetworkFlows::compute(cbn, config.use_scaling)?;
    fit_network_with_flows(cbn, flows, config)
}

/// Fits every non-root node of `cbn` against the supplied flows.
pub fn fit_network_with_flows(cbn: &Cbn, flows: NetworkFlows, config: &FitConfig) -> Result<FittedNetwork> {
    let dag = cbn.dag();
    let models = dag
        .ids()
        .map(|v| match flows.get(v) {
            Some(f) => fit_cpt_with_flows(dag, cbn.cpt(v), f, config).map(Some),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    FittedNetwork::from_parts(cbn.clone(), flows, models)
}
