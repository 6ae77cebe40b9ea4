//! Discrimination removal: re-weight every model to trade total edge
//! unfairness against fidelity to the observed joint distribution.

use crate::cbn::Cbn;
use crate::clsp::{project_simplex, FitConfig};
use crate::error::Result;
use crate::fit::{fit_network, input_columns, FittedNetwork, LinearCptModel};

/// Tolerance on the joint's total mass before it is renormalized.
pub const JOINT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasConfig {
    /// Multiplier on the squared joint-distribution error.
    pub utility_weight: f64,
    /// Stop once one iteration lowers the objective by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Settings for the initial per-table fit.
    pub fit: FitConfig,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        DebiasConfig {
            utility_weight: 1.0,
            tolerance: 1e-14,
            max_iterations: 10_000,
            fit: FitConfig::default(),
        }
    }
}

/// The two terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// Sum of the unfair-edge weights.
    pub unfairness: f64,
    /// `sum_v (P(v) - prod_Z Yhat_Z(v))^2`, unweighted.
    pub joint_error: f64,
}

impl ObjectiveTerms {
    pub fn total(&self, utility_weight: f64) -> f64 {
        self.unfairness + utility_weight * self.joint_error
    }
}

#[derive(Debug, Clone)]
pub struct DebiasResult {
    pub initial: FittedNetwork,
    pub fitted: FittedNetwork,
    /// Product of the approximated tables in joint-state order.
    pub new_joint: Vec<f64>,
    /// Total mass of the product before renormalization, minus 1.
    pub renormalization_delta: f64,
    pub objective_trace: Vec<f64>,
    pub terms_before: ObjectiveTerms,
    pub terms_after: ObjectiveTerms,
    pub converged: bool,
}

impl DebiasResult {
    pub fn unfairness_before(&self) -> f64 {
        self.terms_before.unfairness
    }

    pub fn unfairness_after(&self) -> f64 {
        self.terms_after.unfairness
    }
}

/// Cached per-state factor lookups for a fitted network.
struct Problem {
    target: Vec<f64>,
    /// Per node: `None` for roots (factor per state), `Some` for modelled
    /// nodes (input columns and unfair mask).
    blocks: Vec<Block>,
    /// `cell[v][state]` is the index into node `v`'s table for that state.
    cell: Vec<Vec<usize>>,
}

enum Block {
    Root(Vec<f64>),
    Model { columns: Vec<Vec<f64>>, unfair: Vec<bool> },
}

impl Problem {
    fn new(fitted: &FittedNetwork) -> Self {
        let cbn = &fitted.cbn;
        let dag = cbn.dag();
        let states: Vec<Vec<usize>> = cbn.states().collect();
        let cell = dag
            .ids()
            .map(|v| {
                let cpt = cbn.cpt(v);
                states
                    .iter()
                    .map(|s| {
                        let row = cpt.row_index(&cpt.parents().iter().map(|p| s[p.0]).collect::<Vec<_>>());
                        row * cpt.card() + s[v.0]
                    })
                    .collect()
            })
            .collect();
        let blocks = dag
            .ids()
            .map(|v| match (fitted.model(v), fitted.flows.get(v)) {
                (Some(m), Some(f)) => {
                    let mut unfair = vec![false; m.weights().len()];
                    let offset = m.fair_weight.is_some() as usize;
                    for i in 0..m.unfair_weights.len() {
                        unfair[offset + i] = true;
                    }
                    Block::Model {
                        columns: input_columns(dag, f),
                        unfair,
                    }
                }
                _ => Block::Root(cbn.cpt(v).table().to_vec()),
            })
            .collect();
        Problem {
            target: cbn.joint_table(),
            blocks,
            cell,
        }
    }

    /// Factor of node `v` at each state.
    fn factors(&self, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(v, b)| match b {
                Block::Root(t) => self.cell[v].iter().map(|&c| t[c]).collect(),
                Block::Model { columns, .. } => self.cell[v]
                    .iter()
                    .map(|&c| columns.iter().zip(&w[v]).map(|(col, wk)| wk * col[c]).sum())
                    .collect(),
            })
            .collect()
    }

    fn product(factors: &[Vec<f64>], n: usize) -> Vec<f64> {
        (0..n).map(|i| factors.iter().map(|f| f[i]).product()).collect()
    }

    fn terms(&self, w: &[Vec<f64>]) -> ObjectiveTerms {
        let q = Self::product(&self.factors(w), self.target.len());
        let joint_error = q.iter().zip(&self.target).map(|(a, b)| (b - a) * (b - a)).sum();
        let unfairness = self
            .blocks
            .iter()
            .zip(w)
            .map(|(b, wv)| match b {
                Block::Model { unfair, .. } => unfair.iter().zip(wv).filter(|(u, _)| **u).map(|(_, x)| x).sum(),
                Block::Root(_) => 0.0,
            })
            .sum();
        ObjectiveTerms { unfairness, joint_error }
    }

    fn gradient(&self, w: &[Vec<f64>], utility_weight: f64) -> Vec<Vec<f64>> {
        let n = self.target.len();
        let factors = self.factors(w);
        let q = Self::product(&factors, n);
        let resid: Vec<f64> = q.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        self.blocks
            .iter()
            .enumerate()
            .map(|(v, b)| match b {
                Block::Root(_) => Vec::new(),
                Block::Model { columns, unfair } => {
                    let mut g: Vec<f64> = unfair.iter().map(|&u| if u { 1.0 } else { 0.0 }).collect();
                    for i in 0..n {
                        // Product of the other factors at state i.
                        let others: f64 = factors
                            .iter()
                            .enumerate()
                            .filter(|(z, _)| *z != v)
                            .map(|(_, f)| f[i])
                            .product();
                        let coef = 2.0 * utility_weight * resid[i] * others;
                        if coef == 0.0 {
                            continue;
                        }
                        let c = self.cell[v][i];
                        for (gk, col) in g.iter_mut().zip(columns) {
                            *gk += coef * col[c];
                        }
                    }
                    g
                }
            })
            .collect()
    }
}

fn current_weights(fitted: &FittedNetwork) -> Vec<Vec<f64>> {
    fitted
        .cbn
        .dag()
        .ids()
        .map(|v| fitted.model(v).map(LinearCptModel::weights).unwrap_or_default())
        .collect()
}

/// Objective terms at the weights currently held by `fitted`.
pub fn debias_objective(fitted: &FittedNetwork) -> ObjectiveTerms {
    Problem::new(fitted).terms(&current_weights(fitted))
}

/// Product of the approximated tables over every joint state, renormalized
/// when its mass drifts from 1 by more than [`JOINT_SUM_TOL`]. Returns the
/// table and the mass minus 1 before renormalization.
pub fn joint_from_models(fitted: &FittedNetwork) -> Result<(Vec<f64>, f64)> {
    let approx = fitted.approx_cbn()?;
    let mut joint = approx.joint_table();
    let total: f64 = joint.iter().sum();
    let delta = total - 1.0;
    if delta.abs() > JOINT_SUM_TOL {
        joint.iter_mut().for_each(|p| *p /= total);
    }
    Ok((joint, delta))
}

fn with_weights(fitted: &FittedNetwork, w: &[Vec<f64>]) -> Result<FittedNetwork> {
    let dag = fitted.cbn.dag();
    let models = dag
        .ids()
        .map(|v| {
            fitted.model(v).map(|m| {
                let mut nm = m.with_weights(&w[v.0]);
                let pred = nm.predict(dag, fitted.flows.get(v).expect("flows"));
                let t = fitted.cbn.cpt(v).table();
                nm.mse = pred.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64;
                nm
            })
        })
        .collect();
    fitted.with_models(models)
}

/// Fits `cbn`, then minimizes `sum unfair weights + utility_weight * joint
/// error` over all weights, starting from the fit, with flows held fixed.
pub fn remove_discrimination(cbn: &Cbn, config: &DebiasConfig) -> Result<DebiasResult> {
    let initial = fit_network(cbn, &config.fit)?;
    remove_discrimination_from(initial, config)
}

/// As [`remove_discrimination`], from an existing fit.
pub fn remove_discrimination_from(initial: FittedNetwork, config: &DebiasConfig) -> Result<DebiasResult> {
    if config.utility_weight.is_nan() || config.utility_weight < 0.0 {
        return Err(crate::error::Error::InvalidInput(format!(
            "utility weight must be non-negative, got {}",
            config.utility_weight
        )));
    }
    let problem = Problem::new(&initial);
    let lambda = config.utility_weight;
    let mut w = current_weights(&initial);
    let terms_before = problem.terms(&w);
    let mut f = terms_before.total(lambda);
    let mut trace = vec![f];
    let mut converged = false;
    let mut t = 1.0;
    for _ in 0..config.max_iterations {
        let g = problem.gradient(&w, lambda);
        let mut accepted = None;
        t *= 2.0;
        for _ in 0..80 {
            let cand: Vec<Vec<f64>> = w
                .iter()
                .zip(&g)
                .map(|(wv, gv)| {
                    if wv.is_empty() {
                        Vec::new()
                    } else {
                        project_simplex(&wv.iter().zip(gv).map(|(a, b)| a - t * b).collect::<Vec<_>>())
                    }
                })
                .collect();
            let mut lin = 0.0;
            let mut sq = 0.0;
            let mut moved: f64 = 0.0;
            for ((cv, wv), gv) in cand.iter().zip(&w).zip(&g) {
                for ((c, x), gk) in cv.iter().zip(wv).zip(gv) {
                    lin += gk * (c - x);
                    sq += (c - x) * (c - x);
                    moved = moved.max((c - x).abs());
                }
            }
            let fc = problem.terms(&cand).total(lambda);
            if fc <= f + lin + sq / (2.0 * t) && fc <= f {
                accepted = Some((cand, fc, moved));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc, moved)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        w = cand;
        f = fc;
        trace.push(f);
        if decrease <= config.tolerance || moved <= 1e-15 {
            converged = true;
            break;
        }
    }
    let fitted = with_weights(&initial, &w)?;
    let (new_joint, renormalization_delta) = joint_from_models(&fitted)?;
    Ok(DebiasResult {
        terms_after: problem.terms(&w),
        initial,
        fitted,
        new_joint,
        renormalization_delta,
        objective_trace: trace,
        terms_before,
        converged,
    })
}
