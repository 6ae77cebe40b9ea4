//! Edge unfairness, cumulative unfairness, sensitivity, potential and the
//! edge priority list.

use std::cmp::Ordering;

use crate::cbn::{Assignment, Cbn};
use crate::clsp::FitConfig;
use crate::error::{Error, Result};
use crate::fit::{fit_network, input_columns, predict_with, FittedNetwork, LinearCptModel};
use crate::flow::NodeFlows;
use crate::graph::{CausalDag, Edge, NodeId};
use crate::inference::Factors;

/// Tolerance under which a cumulative unfairness counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Average unit contribution of the flow of `parent` to `f`, over every
/// `(parent row, x)` cell of the child's table:
/// `mean |f(inputs) - f(inputs with parent's flow zeroed)| / flow_parent`.
///
/// `f` receives the inputs in weight order (fair group first).
pub fn edge_unfairness_with(
    dag: &CausalDag,
    flows: &NodeFlows,
    parent: NodeId,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let k = flows
        .unfair_parents()
        .iter()
        .position(|&p| p == parent)
        .map(|i| i + flows.fair.is_some() as usize)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "`{}` is not a sensitive parent of `{}`",
                dag.name(parent),
                dag.name(flows.child)
            ))
        })?;
    let columns = input_columns(dag, flows);
    let n = columns[k].len();
    let mut inputs = vec![0.0; columns.len()];
    let mut total = 0.0;
    for i in 0..n {
        inputs.iter_mut().zip(&columns).for_each(|(v, c)| *v = c[i]);
        let denom = inputs[k];
        if denom <= 0.0 {
            return Err(Error::Positivity(format!(
                "flow of `{}` into `{}` is zero in cell {i}",
                dag.name(parent),
                dag.name(flows.child)
            )));
        }
        let full = f(&inputs);
        inputs[k] = 0.0;
        total += (full - f(&inputs)).abs() / denom;
    }
    Ok(total / n as f64)
}

/// Edge unfairness of `edge` under a linear model.
pub fn edge_unfairness(dag: &CausalDag, model: &LinearCptModel, flows: &NodeFlows, edge: Edge) -> Result<f64> {
    if edge.to != model.child || edge.to != flows.child {
        return Err(Error::InvalidInput(format!("edge {} does not end at the model's child", dag.edge_name(edge))));
    }
    let w = model.weights();
    edge_unfairness_with(dag, flows, edge.from, |x| x.iter().zip(&w).map(|(a, b)| a * b).sum())
}

/// How an edge-unfairness report was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnfairnessMethod {
    /// Averaged unit contribution over every table cell.
    General,
    /// Read off the fitted weight.
    Weight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeUnfairnessReport {
    pub entries: Vec<(Edge, f64)>,
    pub method: UnfairnessMethod,
}

impl EdgeUnfairnessReport {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, u)| u).sum()
    }

    pub fn get(&self, edge: Edge) -> Option<f64> {
        self.entries.iter().find(|(e, _)| *e == edge).map(|&(_, u)| u)
    }
}

/// Unfairness of every unfair edge of a fitted network.
pub fn edge_unfairness_report(fitted: &FittedNetwork, method: UnfairnessMethod) -> Result<EdgeUnfairnessReport> {
    let dag = fitted.cbn.dag();
    let entries = dag
        .unfair_edges()
        .into_iter()
        .map(|e| {
            let model = fitted.model(e.to).expect("children of edges are fitted");
            let u = match method {
                UnfairnessMethod::General => {
                    edge_unfairness(dag, model, fitted.flows.get(e.to).expect("flows exist"), e)?
                }
                UnfairnessMethod::Weight => model.unfair_weight(e.from).expect("sensitive parent"),
            };
            Ok((e, u))
        })
        .collect::<Result<_>>()?;
    Ok(EdgeUnfairnessReport { entries, method })
}

/// Average total effect of `s` on `y` against every other value of the
/// sensitive group.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeUnfairness {
    pub s: Assignment,
    pub y: Assignment,
    pub value: f64,
    /// True when computed from the network's own tables, false when from the
    /// approximated ones.
    pub exact: bool,
}

fn check_outcome(dag: &CausalDag, s: &Assignment, y: &Assignment) -> Result<()> {
    s.validate(dag)?;
    y.validate(dag)?;
    if s.is_empty() {
        return Err(Error::InvalidInput("sensitive assignment is empty".into()));
    }
    if y.len() != 1 {
        return Err(Error::InvalidInput("outcome must assign exactly one node".into()));
    }
    if !s.is_disjoint(y) {
        return Err(Error::InvalidInput("outcome node is in the sensitive group".into()));
    }
    Ok(())
}

/// `(1 / |alternatives|) * sum_{s'} [P(y | do(s)) - P(y | do(s'))]` over `factors`.
pub fn cumulative_over(factors: &Factors, s: &Assignment, y: &Assignment) -> Result<f64> {
    let dag = factors.dag();
    check_outcome(dag, s, y)?;
    let others: Vec<Assignment> = Assignment::enumerate(dag, &s.nodes())
        .into_iter()
        .filter(|a| a != s)
        .collect();
    if others.is_empty() {
        return Err(Error::DegenerateDomain(s.nodes().iter().map(|&n| dag.name(n).to_string()).collect()));
    }
    let base = factors.interventional(s, y)?;
    let mut sum = 0.0;
    for alt in &others {
        sum += base - factors.interventional(alt, y)?;
    }
    Ok(sum / others.len() as f64)
}

/// Cumulative unfairness from the network's own tables.
pub fn cumulative_unfairness(cbn: &Cbn, s: &Assignment, y: &Assignment) -> Result<CumulativeUnfairness> {
    Ok(CumulativeUnfairness {
        value: cumulative_over(&Factors::of(cbn), s, y)?,
        s: s.clone(),
        y: y.clone(),
        exact: true,
    })
}

/// Cumulative unfairness with every non-root table replaced by its model
/// prediction. Roots keep their original marginals.
pub fn approx_cumulative_unfairness(fitted: &FittedNetwork, s: &Assignment, y: &Assignment) -> Result<CumulativeUnfairness> {
    let approx = fitted.approx_cbn()?;
    Ok(CumulativeUnfairness {
        value: cumulative_over(&Factors::of(&approx), s, y)?,
        s: s.clone(),
        y: y.clone(),
        exact: false,
    })
}

fn edge_model(fitted: &FittedNetwork, edge: Edge) -> Result<(&LinearCptModel, &NodeFlows, usize)> {
    let dag = fitted.cbn.dag();
    let model = fitted.model(edge.to).ok_or_else(|| Error::Parentless(dag.name(edge.to).to_string()))?;
    let flows = fitted.flows.get(edge.to).expect("fitted nodes have flows");
    let idx = flows
        .unfair_parents()
        .iter()
        .position(|&p| p == edge.from)
        .map(|i| i + flows.fair.is_some() as usize)
        .ok_or_else(|| Error::InvalidInput(format!("{} is not an unfair edge", dag.edge_name(edge))))?;
    Ok((model, flows, idx))
}

/// Approximated cumulative unfairness with the weight of `edge` set to
/// `w_edge` and every other weight held at its fitted value. The child's
/// rows then no longer need to sum to 1.
pub fn approx_cumulative_at(
    fitted: &FittedNetwork,
    edge: Edge,
    w_edge: f64,
    s: &Assignment,
    y: &Assignment,
) -> Result<f64> {
    let (model, flows, idx) = edge_model(fitted, edge)?;
    let dag = fitted.cbn.dag();
    let mut w = model.weights();
    w[idx] = w_edge;
    let table = predict_with(dag, flows, &w);
    let approx = fitted.approx_cbn()?;
    let base = Factors::of(&approx);
    cumulative_over(&base.with_table(edge.to, &table), s, y)
}

/// Derivative of the approximated cumulative unfairness with respect to the
/// weight of `edge`, other weights fixed.
///
/// Every product term of an interventional sum holds exactly one factor from
/// the child's table, and that table is affine in the weight, so the
/// derivative is the same sum with the child's table replaced by the edge's
/// flow table.
pub fn sensitivity(fitted: &FittedNetwork, edge: Edge, s: &Assignment, y: &Assignment) -> Result<f64> {
    let (_, flows, idx) = edge_model(fitted, edge)?;
    let dag = fitted.cbn.dag();
    check_outcome(dag, s, y)?;
    let (outcome, _) = y.iter().next().expect("one entry");
    if !influences(dag, edge.to, outcome, s) {
        return Ok(0.0);
    }
    let column = input_columns(dag, flows).swap_remove(idx);
    let approx = fitted.approx_cbn()?;
    let base = Factors::of(&approx);
    cumulative_over(&base.with_table(edge.to, &column), s, y)
}

/// Whether `node`'s table enters `P(outcome | do(s))`: the node is the
/// outcome or reaches it along a directed path that avoids the intervened
/// nodes.
fn influences(dag: &CausalDag, node: NodeId, outcome: NodeId, s: &Assignment) -> bool {
    if s.contains(node) {
        return false;
    }
    let mut seen = vec![false; dag.len()];
    let mut stack = vec![outcome];
    while let Some(v) = stack.pop() {
        if v == node {
            return true;
        }
        if seen[v.0] || s.contains(v) {
            continue;
        }
        seen[v.0] = true;
        stack.extend(dag.parents(v).iter().copied());
    }
    false
}

/// Capacity of an edge to move the cumulative unfairness towards zero.
pub fn potential(sens: f64, c_approx: f64) -> f64 {
    if c_approx.abs() <= ZERO_TOL {
        sens.abs()
    } else if c_approx > 0.0 {
        sens
    } else {
        -sens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityEntry {
    pub edge: String,
    pub unfairness: f64,
    pub potential: f64,
    pub priority: f64,
    pub wu: f64,
    pub wp: f64,
}

/// Scores `(edge, unfairness, potential)` triples and sorts them by
/// descending priority, ties broken by edge name.
pub fn rank(items: Vec<(String, f64, f64)>, wu: f64, wp: f64) -> Result<Vec<PriorityEntry>> {
    if !(wu >= 0.0 && wp >= 0.0) {
        return Err(Error::InvalidInput(format!("priority weights must be non-negative, got {wu} and {wp}")));
    }
    let mut entries: Vec<PriorityEntry> = items
        .into_iter()
        .map(|(edge, u, p)| PriorityEntry {
            edge,
            unfairness: u,
            potential: p,
            priority: wu * u + wp * p,
            wu,
            wp,
        })
        .collect();
    entries.sort_by(|a, b| match b.priority.total_cmp(&a.priority) {
        Ordering::Equal => a.edge.cmp(&b.edge),
        o => o,
    });
    Ok(entries)
}

/// Priority list plus the fit and cumulative unfairness it was built from.
#[derive(Debug, Clone)]
pub struct Prioritization {
    pub entries: Vec<PriorityEntry>,
    pub fitted: FittedNetwork,
    pub c_approx: f64,
}

/// Fits every table, then ranks the unfair edges.
pub fn prioritize(
    cbn: &Cbn,
    s: &Assignment,
    y: &Assignment,
    wu: f64,
    wp: f64,
    config: &FitConfig,
) -> Result<Prioritization> {
    let fitted = fit_network(cbn, config)?;
    prioritize_fitted(fitted, s, y, wu, wp)
}

/// Ranks the unfair edges of an already fitted network.
pub fn prioritize_fitted(fitted: FittedNetwork, s: &Assignment, y: &Assignment, wu: f64, wp: f64) -> Result<Prioritization> {
    let c_approx = approx_cumulative_unfairness(&fitted, s, y)?.value;
    let report = edge_unfairness_report(&fitted, UnfairnessMethod::General)?;
    let dag = fitted.cbn.dag();
    let items = report
        .entries
        .iter()
        .map(|&(e, u)| Ok((dag.edge_name(e), u, potential(sensitivity(&fitted, e, s, y)?, c_approx))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prioritization {
        entries: rank(items, wu, wp)?,
        fitted,
        c_approx,
    })
}
