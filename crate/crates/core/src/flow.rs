//! Scaling factors and edge flows for a group of parents feeding a child.
//!
//! The scaling factor of `M = m -> X = x` is the multiplicative effect of
//! switching `M` from each alternative value `m'` to `m` along the direct
//! edges `M -> X` only, averaged over all `m' != m`. The edge flow is the
//! interventional distribution `P(X | do(m))` reweighted by those factors and
//! renormalized.

use std::collections::BTreeSet;

use crate::cbn::{Assignment, Cbn, MixedRadix};
use crate::error::{Error, Result};
use crate::graph::{Edge, NodeId};
use crate::inference::{edge_g_dist, interventional_dist};

/// Flow of a parent group into a child, indexed by `(group row, x)`.
///
/// Group rows use the same mixed-radix layout as CPT rows, over the group
/// members in the child's parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlowTable {
    child: NodeId,
    group: Vec<NodeId>,
    group_cards: Vec<usize>,
    /// Positions of the group members inside the child's parent list.
    positions: Vec<usize>,
    card: usize,
    scaling: Vec<f64>,
    interventional: Vec<f64>,
    flow: Vec<f64>,
    norm: Vec<f64>,
}

impl EdgeFlowTable {
    pub fn child(&self) -> NodeId {
        self.child
    }

    pub fn group(&self) -> &[NodeId] {
        &self.group
    }

    pub fn card(&self) -> usize {
        self.card
    }

    /// Number of joint group values.
    pub fn rows(&self) -> usize {
        self.group_cards.iter().product()
    }

    /// Group row for a full row of the child's parent values.
    pub fn group_row(&self, parent_values: &[usize]) -> usize {
        self.positions
            .iter()
            .zip(&self.group_cards)
            .fold(0, |acc, (&i, &c)| acc * c + parent_values[i])
    }

    pub fn scaling(&self, m: usize, x: usize) -> f64 {
        self.scaling[m * self.card + x]
    }

    /// `P(X = x | do(group = m))`.
    pub fn interventional(&self, m: usize, x: usize) -> f64 {
        self.interventional[m * self.card + x]
    }

    pub fn flow(&self, m: usize, x: usize) -> f64 {
        self.flow[m * self.card + x]
    }

    pub fn flow_row(&self, m: usize) -> &[f64] {
        &self.flow[m * self.card..(m + 1) * self.card]
    }

    /// `sum_x scaling(m, x) * P(x | do(m))`.
    pub fn norm(&self, m: usize) -> f64 {
        self.norm[m]
    }

    /// Flow at the group row selected by a full row of parent values.
    pub fn flow_for(&self, parent_values: &[usize], x: usize) -> f64 {
        self.flow(self.group_row(parent_values), x)
    }

    /// Same table with the child's values permuted: new value `i` is old value `perm[i]`.
    pub fn permute_child(&self, perm: &[usize]) -> Self {
        let mut t = self.clone();
        for m in 0..self.rows() {
            for (i, &old) in perm.iter().enumerate() {
                t.scaling[m * self.card + i] = self.scaling(m, old);
                t.interventional[m * self.card + i] = self.interventional(m, old);
                t.flow[m * self.card + i] = self.flow(m, old);
            }
        }
        t
    }
}

struct GroupShape {
    group: Vec<NodeId>,
    group_cards: Vec<usize>,
    positions: Vec<usize>,
    values: Vec<Assignment>,
}

fn group_shape(cbn: &Cbn, group: &[NodeId], child: NodeId) -> Result<GroupShape> {
    let dag = cbn.dag();
    if child.0 >= dag.len() {
        return Err(Error::InvalidInput(format!("node index {} out of range", child.0)));
    }
    if group.is_empty() {
        return Err(Error::InvalidInput("parent group is empty".into()));
    }
    let parents = dag.parents(child);
    let mut positions = Vec::with_capacity(group.len());
    for &g in group {
        match parents.iter().position(|&p| p == g) {
            Some(i) if !positions.contains(&i) => positions.push(i),
            Some(_) => return Err(Error::InvalidInput(format!("`{}` listed twice in the group", dag.name(g)))),
            None => {
                return Err(Error::InvalidInput(format!(
                    "`{}` is not a parent of `{}`",
                    dag.name(g),
                    dag.name(child)
                )))
            }
        }
    }
    positions.sort_unstable();
    let group: Vec<NodeId> = positions.iter().map(|&i| parents[i]).collect();
    let group_cards: Vec<usize> = group.iter().map(|&g| dag.cardinality(g)).collect();
    if group_cards.iter().product::<usize>() < 2 {
        return Err(Error::DegenerateDomain(group.iter().map(|&g| dag.name(g).to_string()).collect()));
    }
    let values = MixedRadix::new(&group_cards)
        .map(|vals| group.iter().zip(vals).fold(Assignment::new(), |a, (&g, v)| a.with(g, v)))
        .collect();
    Ok(GroupShape {
        group,
        group_cards,
        positions,
        values,
    })
}

fn direct_edges(group: &[NodeId], child: NodeId) -> BTreeSet<Edge> {
    group.iter().map(|&g| Edge::new(g, child)).collect()
}

/// Per-`x` path-specific effects of switching `m_off -> m_on` along the
/// direct edges into `child` only.
fn direct_effects(
    cbn: &Cbn,
    direct: &BTreeSet<Edge>,
    child: NodeId,
    m_on: &Assignment,
    m_off: &Assignment,
    baseline: &[f64],
) -> Result<Vec<f64>> {
    let num = edge_g_dist(cbn, m_on, m_off, direct, child);
    num.iter()
        .zip(baseline)
        .enumerate()
        .map(|(x, (&n, &d))| {
            if d <= 0.0 {
                Err(Error::Positivity(format!(
                    "P({} = {} | do({})) is zero",
                    cbn.dag().name(child),
                    cbn.dag().node(child).labels[x],
                    m_off.display(cbn.dag())
                )))
            } else {
                Ok(n / d)
            }
        })
        .collect()
}

/// Scaling factor of `group = m -> child = x`.
pub fn scaling_factor(cbn: &Cbn, group: &[NodeId], m: &Assignment, child: NodeId, x: usize) -> Result<f64> {
    let shape = group_shape(cbn, group, child)?;
    m.validate(cbn.dag())?;
    if m.len() != shape.group.len() || !shape.group.iter().all(|&g| m.contains(g)) {
        return Err(Error::InvalidInput("group value must assign exactly the group".into()));
    }
    if x >= cbn.dag().cardinality(child) {
        return Err(Error::ValueOutOfRange {
            node: cbn.dag().name(child).to_string(),
            value: x,
            cardinality: cbn.dag().cardinality(child),
        });
    }
    let direct = direct_edges(&shape.group, child);
    let mut sum = 0.0;
    for alt in shape.values.iter().filter(|a| *a != m) {
        let baseline = interventional_dist(cbn, alt, child)?;
        sum += direct_effects(cbn, &direct, child, m, alt, &baseline)?[x];
    }
    Ok(sum / (shape.values.len() - 1) as f64)
}

/// Full scaling and flow table of `group -> child`.
pub fn edge_flow(cbn: &Cbn, group: &[NodeId], child: NodeId) -> Result<EdgeFlowTable> {
    build_table(cbn, group, child, true)
}

/// Flow table with every scaling factor fixed at 1, so the flow is the plain
/// interventional distribution `P(X | do(m))`.
pub fn unscaled_flow(cbn: &Cbn, group: &[NodeId], child: NodeId) -> Result<EdgeFlowTable> {
    build_table(cbn, group, child, false)
}

fn build_table(cbn: &Cbn, group: &[NodeId], child: NodeId, use_scaling: bool) -> Result<EdgeFlowTable> {
    let shape = group_shape(cbn, group, child)?;
    let card = cbn.dag().cardinality(child);
    let rows = shape.values.len();
    let baselines: Vec<Vec<f64>> = shape
        .values
        .iter()
        .map(|m| interventional_dist(cbn, m, child))
        .collect::<Result<_>>()?;
    let mut scaling = vec![1.0; rows * card];
    if use_scaling {
        let direct = direct_edges(&shape.group, child);
        for (i, m) in shape.values.iter().enumerate() {
            let mut acc = vec![0.0; card];
            for (j, alt) in shape.values.iter().enumerate() {
                if i == j {
                    continue;
                }
                let se = direct_effects(cbn, &direct, child, m, alt, &baselines[j])?;
                acc.iter_mut().zip(se).for_each(|(a, s)| *a += s);
            }
            for x in 0..card {
                scaling[i * card + x] = acc[x] / (rows - 1) as f64;
            }
        }
    }
    let mut flow = vec![0.0; rows * card];
    let mut norm = vec![0.0; rows];
    for i in 0..rows {
        let z: f64 = (0..card).map(|x| scaling[i * card + x] * baselines[i][x]).sum();
        if z <= 0.0 {
            return Err(Error::Positivity(format!(
                "flow normalizer is zero for {} -> {}",
                shape.values[i].display(cbn.dag()),
                cbn.dag().name(child)
            )));
        }
        norm[i] = z;
        for x in 0..card {
            flow[i * card + x] = scaling[i * card + x] * baselines[i][x] / z;
        }
    }
    Ok(EdgeFlowTable {
        child,
        group: shape.group,
        group_cards: shape.group_cards,
        positions: shape.positions,
        card,
        scaling,
        interventional: baselines.concat(),
        flow,
        norm,
    })
}

/// Model inputs of one child: the grouped flow of its non-sensitive parents
/// (if any) followed by one singleton flow per sensitive parent.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFlows {
    pub child: NodeId,
    pub fair: Option<EdgeFlowTable>,
    pub unfair: Vec<EdgeFlowTable>,
    /// Whether the inputs carry scaling factors.
    pub scaled: bool,
}

impl NodeFlows {
    /// Tables in weight order: fair group first, then unfair parents.
    pub fn inputs(&self) -> impl Iterator<Item = &EdgeFlowTable> {
        self.fair.iter().chain(self.unfair.iter())
    }

    pub fn input_count(&self) -> usize {
        self.fair.is_some() as usize + self.unfair.len()
    }

    /// Unfair parents in weight order.
    pub fn unfair_parents(&self) -> Vec<NodeId> {
        self.unfair.iter().map(|t| t.group()[0]).collect()
    }
}

/// Inputs of `child`; `use_scaling = false` gives the unscaled variant.
pub fn node_flows(cbn: &Cbn, child: NodeId, use_scaling: bool) -> Result<NodeFlows> {
    let dag = cbn.dag();
    let parents = dag.parents(child);
    if parents.is_empty() {
        return Err(Error::Parentless(dag.name(child).to_string()));
    }
    let fair_group: Vec<NodeId> = parents.iter().copied().filter(|&p| !dag.is_sensitive(p)).collect();
    let fair = if fair_group.is_empty() {
        None
    } else {
        Some(build_table(cbn, &fair_group, child, use_scaling)?)
    };
    let unfair = parents
        .iter()
        .filter(|&&p| dag.is_sensitive(p))
        .map(|&p| build_table(cbn, &[p], child, use_scaling))
        .collect::<Result<_>>()?;
    Ok(NodeFlows {
        child,
        fair,
        unfair,
        scaled: use_scaling,
    })
}

/// Flows of every non-root node, computed once from the observational network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFlows {
    nodes: Vec<Option<NodeFlows>>,
}

impl NetworkFlows {
    pub fn compute(cbn: &Cbn, use_scaling: bool) -> Result<Self> {
        let nodes = cbn
            .dag()
            .ids()
            .map(|v| {
                if cbn.dag().parents(v).is_empty() {
                    Ok(None)
                } else {
                    node_flows(cbn, v, use_scaling).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(NetworkFlows { nodes })
    }

    pub fn get(&self, child: NodeId) -> Option<&NodeFlows> {
        self.nodes.get(child.0).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeFlows> {
        self.nodes.iter().flatten()
    }
}
