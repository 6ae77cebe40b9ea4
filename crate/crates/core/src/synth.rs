//! Synthetic tables for the bail-decision graph and the experiment harnesses
//! built on them.
//!
//! A non-root table is a weighted sum of per-parent scores:
//! `P(v | pa) = sum_A theta[A -> V] * score[A = a -> V = v]`, where each
//! child's `theta` lies on the simplex and each score row is a PMF.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::cbn::{Assignment, Cbn, Cpt};
use crate::clsp::FitConfig;
use crate::error::{Error, Result};
use crate::fit::{fit_cpt, fit_network, LinearCptModel};
use crate::flow::edge_flow;
use crate::graph::{CausalDag, NodeId, NodeSpec};
use crate::inference::interventional;
use crate::sampling::{mle_estimate, sample};

const SIMPLEX_TOL: f64 = 1e-9;

/// The bail-decision graph: race `R`, age `A`, gender `G`, case history `C`
/// are roots; education `E` and training `T` depend on `R, A, G`; the
/// decision `J` depends on `R, G, C, E, T`. `R` and `G` are sensitive.
pub fn bail_graph() -> CausalDag {
    CausalDag::builder()
        .node_spec(NodeSpec::new("R", ["African American", "Hispanic", "White"]))
        .node_spec(NodeSpec::new("A", ["Old", "Young"]))
        .node_spec(NodeSpec::new("G", ["Male", "Female", "Others"]))
        .node_spec(NodeSpec::new("C", ["Strong", "Weak"]))
        .node_spec(NodeSpec::new("E", ["Literate", "Illiterate"]))
        .node_spec(NodeSpec::new("T", ["Not Employed", "Employed"]))
        .node_spec(NodeSpec::new("J", ["Bail granted", "Bail rejected"]))
        .edge("R", "E")
        .edge("A", "E")
        .edge("G", "E")
        .edge("R", "T")
        .edge("A", "T")
        .edge("G", "T")
        .edge("R", "J")
        .edge("G", "J")
        .edge("C", "J")
        .edge("E", "J")
        .edge("T", "J")
        .sensitive("R")
        .sensitive("G")
        .build()
        .expect("bail graph is a valid DAG")
}

/// Fixed root marginals of the bail graph, by node name.
pub const BAIL_ROOTS: [(&str, &[f64]); 4] = [
    ("R", &[0.35, 0.25, 0.40]),
    ("A", &[0.45, 0.55]),
    ("G", &[0.48, 0.42, 0.10]),
    ("C", &[0.60, 0.40]),
];

/// Frozen scores of the bail graph as `(parent, child, rows)`, one row per
/// parent value. Drawn once from a flat Dirichlet with ChaCha8 seed 0
/// (see [`ScoreTable::random`]) and frozen.
pub const BAIL_SCORES: [(&str, &str, &[f64]); 11] = [
    ("R", "E", &[0.504238223090987, 0.495761776909013, 0.778937035171185, 0.221062964828815, 0.741375440979028, 0.258624559020972]),
    ("A", "E", &[0.708238425820113, 0.291761574179887, 0.673923505965094, 0.326076494034906]),
    ("G", "E", &[0.600850285601113, 0.399149714398887, 0.760086633399795, 0.239913366600205, 0.622689158684217, 0.377310841315783]),
    ("R", "T", &[0.073571974404060, 0.926428025595940, 0.159710865569026, 0.840289134430974, 0.282595775089550, 0.717404224910450]),
    ("A", "T", &[0.400194668723815, 0.599805331276185, 0.253603404053143, 0.746396595946857]),
    ("G", "T", &[0.875041237790986, 0.124958762209014, 0.459610351372092, 0.540389648627908, 0.437527188497307, 0.562472811502693]),
    ("R", "J", &[0.800359592024649, 0.199640407975351, 0.774593757143436, 0.225406242856564, 0.129773260873501, 0.870226739126499]),
    ("G", "J", &[0.000441996441325, 0.999558003558675, 0.150503602869689, 0.849496397130311, 0.343644054951285, 0.656355945048715]),
    ("C", "J", &[0.702494110021090, 0.297505889978910, 0.791871500353122, 0.208128499646878]),
    ("E", "J", &[0.227478255758686, 0.772521744241314, 0.498986641302776, 0.501013358697224]),
    ("T", "J", &[0.445742859945114, 0.554257140054886, 0.615198163145373, 0.384801836854626]),
];

/// Per-child influence weights, aligned with the child's parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    weights: BTreeMap<NodeId, Vec<f64>>,
}

impl ThetaParams {
    pub fn new(dag: &CausalDag, weights: BTreeMap<NodeId, Vec<f64>>) -> Result<Self> {
        for v in dag.ids() {
            let parents = dag.parents(v);
            match weights.get(&v) {
                None if parents.is_empty() => {}
                None => {
                    return Err(Error::Constraint(format!("no influence weights for `{}`", dag.name(v))));
                }
                Some(w) => {
                    if w.len() != parents.len() {
                        return Err(Error::Constraint(format!(
                            "`{}` has {} parents but {} influence weights",
                            dag.name(v),
                            parents.len(),
                            w.len()
                        )));
                    }
                    if w.iter().any(|x| !(0.0..=1.0).contains(x)) || (w.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
                        return Err(Error::Constraint(format!(
                            "influence weights of `{}` are not on the simplex: {w:?}",
                            dag.name(v)
                        )));
                    }
                }
            }
        }
        Ok(ThetaParams { weights })
    }

    /// `1 / |parents|` for every edge.
    pub fn equal(dag: &CausalDag) -> Self {
        let weights = dag
            .ids()
            .filter(|&v| !dag.parents(v).is_empty())
            .map(|v| {
                let k = dag.parents(v).len();
                (v, vec![1.0 / k as f64; k])
            })
            .collect();
        ThetaParams { weights }
    }

    pub fn get(&self, child: NodeId) -> Option<&[f64]> {
        self.weights.get(&child).map(Vec::as_slice)
    }

    /// Weight of `parent -> child`.
    pub fn edge(&self, dag: &CausalDag, parent: NodeId, child: NodeId) -> Option<f64> {
        let i = dag.parents(child).iter().position(|&p| p == parent)?;
        self.weights.get(&child).map(|w| w[i])
    }

    /// Same parameters with the weights of `child` replaced.
    pub fn with(&self, dag: &CausalDag, child: NodeId, w: Vec<f64>) -> Result<Self> {
        let mut weights = self.weights.clone();
        weights.insert(child, w);
        ThetaParams::new(dag, weights)
    }
}

/// Per-edge score rows: `rows[a * card(child) + v]` for edge `parent -> child`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    rows: BTreeMap<(NodeId, NodeId), Vec<f64>>,
}

impl ScoreTable {
    pub fn new(dag: &CausalDag, rows: BTreeMap<(NodeId, NodeId), Vec<f64>>) -> Result<Self> {
        for e in dag.edges() {
            let r = rows
                .get(&(e.from, e.to))
                .ok_or_else(|| Error::Constraint(format!("no scores for {}", dag.edge_name(e))))?;
            let card = dag.cardinality(e.to);
            if r.len() != dag.cardinality(e.from) * card {
                return Err(Error::Constraint(format!("scores of {} have the wrong length", dag.edge_name(e))));
            }
            for row in r.chunks(card) {
                if row.iter().any(|x| !(0.0..=1.0).contains(x)) || (row.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::Constraint(format!("a score row of {} is not a PMF", dag.edge_name(e))));
                }
            }
        }
        Ok(ScoreTable { rows })
    }

    /// Independent flat-Dirichlet rows for every edge.
    pub fn random(dag: &CausalDag, rng: &mut ChaCha8Rng) -> Self {
        let rows = dag
            .edges()
            .into_iter()
            .map(|e| {
                let card = dag.cardinality(e.to);
                let r = (0..dag.cardinality(e.from)).flat_map(|_| dirichlet_flat(rng, card)).collect();
                ((e.from, e.to), r)
            })
            .collect();
        ScoreTable { rows }
    }

    /// Score of `parent = a -> child = v`.
    pub fn get(&self, dag: &CausalDag, parent: NodeId, child: NodeId, a: usize, v: usize) -> f64 {
        self.rows[&(parent, child)][a * dag.cardinality(child) + v]
    }

    /// Score row of `parent = a -> child`.
    pub fn row(&self, dag: &CausalDag, parent: NodeId, child: NodeId, a: usize) -> &[f64] {
        let card = dag.cardinality(child);
        &self.rows[&(parent, child)][a * card..(a + 1) * card]
    }

    /// Same table with one row replaced.
    pub fn with_row(&self, dag: &CausalDag, parent: NodeId, child: NodeId, a: usize, row: &[f64]) -> Result<Self> {
        let mut rows = self.rows.clone();
        let card = dag.cardinality(child);
        let r = rows
            .get_mut(&(parent, child))
            .ok_or_else(|| Error::Constraint(format!("no edge {} -> {}", dag.name(parent), dag.name(child))))?;
        r[a * card..(a + 1) * card].copy_from_slice(row);
        ScoreTable::new(dag, rows)
    }
}

fn dirichlet_flat(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / s).collect()
}

/// Builds every table: roots from `roots`, other nodes from `theta` and `scores`.
pub fn generate_cpts(dag: &CausalDag, theta: &ThetaParams, scores: &ScoreTable, roots: &[Cpt]) -> Result<Cbn> {
    let mut cpts = Vec::with_capacity(dag.len());
    for v in dag.ids() {
        let parents = dag.parents(v);
        if parents.is_empty() {
            let root = roots
                .iter()
                .find(|c| c.child() == v)
                .ok_or_else(|| Error::Constraint(format!("no marginal for root `{}`", dag.name(v))))?;
            cpts.push(root.clone());
            continue;
        }
        let w = theta
            .get(v)
            .ok_or_else(|| Error::Constraint(format!("no influence weights for `{}`", dag.name(v))))?;
        cpts.push(Cpt::from_fn(dag, v, |pa, x| {
            parents
                .iter()
                .zip(pa)
                .zip(w)
                .map(|((&p, &a), &wk)| wk * scores.get(dag, p, v, a, x))
                .sum()
        })?);
    }
    Cbn::new(dag.clone(), cpts)
}

/// Bail graph with its frozen root marginals and scores.
#[derive(Debug, Clone)]
pub struct BailSetup {
    pub dag: CausalDag,
    pub roots: Vec<Cpt>,
    pub scores: ScoreTable,
}

impl BailSetup {
    pub fn new() -> Self {
        let dag = bail_graph();
        let roots = BAIL_ROOTS
            .iter()
            .map(|(name, p)| Cpt::new(&dag, dag.id(name).expect("root exists"), p.to_vec()).expect("valid marginal"))
            .collect();
        let rows = BAIL_SCORES
            .iter()
            .map(|(a, v, r)| ((dag.id(a).expect("node"), dag.id(v).expect("node")), r.to_vec()))
            .collect();
        let scores = ScoreTable::new(&dag, rows).expect("frozen scores are valid");
        BailSetup { dag, roots, scores }
    }

    pub fn cbn(&self, theta: &ThetaParams) -> Result<Cbn> {
        generate_cpts(&self.dag, theta, &self.scores, &self.roots)
    }

    pub fn id(&self, name: &str) -> NodeId {
        self.dag.id(name).expect("bail node")
    }
}

impl Default for BailSetup {
    fn default() -> Self {
        BailSetup::new()
    }
}

/// Compositions of `units` into `parts` non-negative integers, in
/// lexicographic order.
pub fn compositions(units: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![units]];
    }
    let mut out = Vec::new();
    for first in 0..=units {
        for mut rest in compositions(units - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid resolution: weights are multiples of `1 / GRID_UNITS`.
pub const GRID_UNITS: usize = 6;
/// Points per node in the grid.
pub const GRID_POINTS: usize = 25;

/// Influence weights of `J` over `(R, G, C, E, T)`: the equal point plus 24
/// compositions taken at evenly spaced positions of the lexicographic list.
pub fn decision_grid() -> Vec<Vec<f64>> {
    let all = compositions(GRID_UNITS, 5);
    let picks = GRID_POINTS - 1;
    let mut grid = vec![vec![0.2; 5]];
    for i in 0..picks {
        let idx = ((i as f64 + 0.5) * all.len() as f64 / picks as f64) as usize;
        grid.push(all[idx].iter().map(|&u| u as f64 / GRID_UNITS as f64).collect());
    }
    grid
}

/// Influence weights of `T` over `(R, A, G)`: every composition except the
/// three single-parent vertices.
pub fn training_grid() -> Vec<Vec<f64>> {
    compositions(GRID_UNITS, 3)
        .into_iter()
        .filter(|c| !c.contains(&GRID_UNITS))
        .map(|c| c.iter().map(|&u| u as f64 / GRID_UNITS as f64).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub id: usize,
    pub theta_j: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub theta: ThetaParams,
}

/// The 625 combinations of [`decision_grid`] and [`training_grid`]; `E`
/// keeps equal weights.
pub fn theta_grid(setup: &BailSetup) -> Vec<GridPoint> {
    let base = ThetaParams::equal(&setup.dag);
    let (j, t) = (setup.id("J"), setup.id("T"));
    let mut out = Vec::with_capacity(GRID_POINTS * GRID_POINTS);
    for theta_j in decision_grid() {
        for theta_t in training_grid() {
            let theta = base
                .with(&setup.dag, j, theta_j.clone())
                .and_then(|th| th.with(&setup.dag, t, theta_t.clone()))
                .expect("grid points lie on the simplex");
            out.push(GridPoint {
                id: out.len(),
                theta_j: theta_j.clone(),
                theta_t,
                theta,
            });
        }
    }
    out
}

/// One grid combination fitted with and without scaling factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub combo: usize,
    pub theta_j: Vec<f64>,
    pub theta_t: Vec<f64>,
    /// Fit error of `J` with scaled flows.
    pub e_j: f64,
    /// Fit error of `J` with unscaled flows.
    pub e_j_unscaled: f64,
    /// `(e_j_unscaled - e_j) / e_j_unscaled`; `None` when the denominator is 0.
    pub delta_j: Option<f64>,
    /// `(fair, R, G)` weights with scaled flows.
    pub weights: Vec<f64>,
    pub weights_unscaled: Vec<f64>,
}

impl ExperimentRecord {
    /// Fitted weight of `R -> J` (scaled flows).
    pub fn w_race(&self) -> f64 {
        self.weights[1]
    }

    /// `theta[R -> J]`.
    pub fn theta_race(&self) -> f64 {
        self.theta_j[0]
    }
}

fn job_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64)
}

fn fit_j(setup: &BailSetup, cbn: &Cbn, seed: u64, use_scaling: bool) -> Result<LinearCptModel> {
    let config = FitConfig {
        seed,
        use_scaling,
        ..FitConfig::default()
    };
    fit_cpt(cbn, setup.id("J"), &config)
}

/// Fits `J` for one grid point with and without scaling.
pub fn mse_record(setup: &BailSetup, point: &GridPoint, seed: u64) -> Result<ExperimentRecord> {
    let cbn = setup.cbn(&point.theta)?;
    let s = job_seed(seed, point.id);
    let scaled = fit_j(setup, &cbn, s, true)?;
    let plain = fit_j(setup, &cbn, s, false)?;
    let delta_j = (plain.mse > 0.0).then(|| (plain.mse - scaled.mse) / plain.mse);
    Ok(ExperimentRecord {
        combo: point.id,
        theta_j: point.theta_j.clone(),
        theta_t: point.theta_t.clone(),
        e_j: scaled.mse,
        e_j_unscaled: plain.mse,
        delta_j,
        weights: scaled.weights(),
        weights_unscaled: plain.weights(),
    })
}

/// Runs [`mse_record`] over the whole grid, in parallel, in grid order.
pub fn run_mse_study(seed: u64) -> Result<Vec<ExperimentRecord>> {
    let setup = BailSetup::new();
    theta_grid(&setup)
        .par_iter()
        .map(|p| mse_record(&setup, p, seed))
        .collect()
}

/// Distance between fitted weights on the true tables and on tables
/// estimated from `m` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDataCurve {
    pub dist: usize,
    pub seed: u64,
    /// `(m, E)` with `m` increasing.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDataConfig {
    pub dists: usize,
    pub sample_sizes: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
    /// Pseudo-count added to every cell of the estimated tables; keeps them
    /// strictly positive at small `m`.
    pub smoothing: f64,
}

impl Default for FiniteDataConfig {
    fn default() -> Self {
        FiniteDataConfig {
            dists: 5,
            sample_sizes: vec![100, 1_000, 10_000],
            seeds: 3,
            seed: 0,
            smoothing: 1.0,
        }
    }
}

/// A bail network with random influence weights and scores; roots keep the
/// fixed marginals.
pub fn random_bail_cbn(setup: &BailSetup, seed: u64) -> Result<Cbn> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = &setup.dag;
    let weights = dag
        .ids()
        .filter(|&v| !dag.parents(v).is_empty())
        .map(|v| (v, dirichlet_flat(&mut rng, dag.parents(v).len())))
        .collect();
    let theta = ThetaParams::new(dag, weights)?;
    let scores = ScoreTable::random(dag, &mut rng);
    generate_cpts(dag, &theta, &scores, &setup.roots)
}

fn unfair_weight_vector(cbn: &Cbn, config: &FitConfig) -> Result<Vec<f64>> {
    Ok(fit_network(cbn, config)?.unfair_edge_weights().into_iter().map(|(_, w)| w).collect())
}

/// Fits the unfair-edge weights on a true network and on its estimate from
/// `m` samples, recording their Euclidean distance.
pub fn run_finite_data_study(config: &FiniteDataConfig) -> Result<Vec<FiniteDataCurve>> {
    if config.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("sample sizes must be strictly increasing".into()));
    }
    let setup = BailSetup::new();
    let jobs: Vec<(usize, u64)> = (0..config.dists)
        .flat_map(|d| (0..config.seeds as u64).map(move |s| (d, s)))
        .collect();
    jobs.par_iter()
        .map(|&(dist, s)| {
            let truth = random_bail_cbn(&setup, job_seed(config.seed, dist))?;
            let fit = FitConfig {
                seed: config.seed,
                ..FitConfig::default()
            };
            let w_true = unfair_weight_vector(&truth, &fit)?;
            let points = config
                .sample_sizes
                .iter()
                .map(|&m| {
                    let draws = sample(&truth, m, job_seed(config.seed ^ s.wrapping_add(1), dist * 1_000_003 + m))?;
                    let est = mle_estimate(&setup.dag, &draws, config.smoothing)?;
                    let w_est = unfair_weight_vector(&est.cbn, &fit)?;
                    Ok((m, euclidean(&w_true, &w_est)))
                })
                .collect::<Result<_>>()?;
            Ok(FiniteDataCurve { dist, seed: s, points })
        })
        .collect()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    /// `score[R = 0 -> J = 1]`.
    pub lambda: f64,
    /// `P(J = 1 | do(R = 0))`.
    pub interventional: f64,
    /// Flow of `R = 0` into `J = 1`.
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub points: Vec<ProbePoint>,
    pub slope_interventional: f64,
    pub slope_flow: f64,
}

/// Evenly spaced values in `[0, 1]`.
pub fn unit_sweep(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect()
}

/// Sweeps `score[R = 0 -> J = 1]` (the other entry of that row takes the
/// remaining mass) on the equal-weight bail network and records the
/// interventional probability and the flow of `R = 0` into `J = 1`.
pub fn input_correlation_probe(lambdas: &[f64]) -> Result<ProbeResult> {
    let setup = BailSetup::new();
    let (r, j) = (setup.id("R"), setup.id("J"));
    let theta = ThetaParams::equal(&setup.dag);
    let points = lambdas
        .iter()
        .map(|&lambda| {
            let scores = setup.scores.with_row(&setup.dag, r, j, 0, &[1.0 - lambda, lambda])?;
            let cbn = generate_cpts(&setup.dag, &theta, &scores, &setup.roots)?;
            let r0 = Assignment::new().with(r, 0);
            let p = interventional(&cbn, &r0, &Assignment::new().with(j, 1))?;
            let flow = edge_flow(&cbn, &[r], j)?.flow(0, 1);
            Ok(ProbePoint {
                lambda,
                interventional: p,
                flow,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let slope_interventional = slope(&xs, &points.iter().map(|p| p.interventional).collect::<Vec<_>>());
    let slope_flow = slope(&xs, &points.iter().map(|p| p.flow).collect::<Vec<_>>());
    Ok(ProbeResult {
        points,
        slope_interventional,
        slope_flow,
    })
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bail_shape() {
        let setup = BailSetup::new();
        let dag = &setup.dag;
        assert_eq!(dag.cardinalities().iter().product::<usize>(), 288);
        assert_eq!(*dag.topological_order().last().unwrap(), setup.id("J"));
        let names: Vec<String> = dag.unfair_edges().iter().map(|&e| dag.edge_name(e)).collect();
        for e in ["R->J", "G->J", "R->T", "G->T", "R->E", "G->E"] {
            assert!(names.contains(&e.to_string()), "{e}");
        }
    }

    #[test]
    fn generated_rows_are_pmfs() {
        let setup = BailSetup::new();
        let cbn = setup.cbn(&ThetaParams::equal(&setup.dag)).unwrap();
        for cpt in cbn.cpts() {
            for r in 0..cpt.rows() {
                assert!((cpt.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_parent_theta_copies_scores() {
        let setup = BailSetup::new();
        let (r, t) = (setup.id("R"), setup.id("T"));
        let theta = ThetaParams::equal(&setup.dag).with(&setup.dag, t, vec![1.0, 0.0, 0.0]).unwrap();
        let cbn = setup.cbn(&theta).unwrap();
        let cpt = cbn.cpt(t);
        for row in 0..cpt.rows() {
            let pa = cpt.row_values(row);
            assert_eq!(cpt.row(row), setup.scores.row(&setup.dag, r, t, pa[0]));
        }
    }

    #[test]
    fn frozen_scores_match_seed_zero_draw() {
        let setup = BailSetup::new();
        let drawn = ScoreTable::random(&setup.dag, &mut ChaCha8Rng::seed_from_u64(0));
        for e in setup.dag.edges() {
            for a in 0..setup.dag.cardinality(e.from) {
                let (f, d) = (setup.scores.row(&setup.dag, e.from, e.to, a), drawn.row(&setup.dag, e.from, e.to, a));
                assert!(f.iter().zip(d).all(|(x, y)| (x - y).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(compositions(6, 5).len(), 210);
        assert_eq!(decision_grid().len(), 25);
        assert_eq!(training_grid().len(), 25);
        assert!(training_grid().contains(&vec![2.0 / 6.0; 3]));
        let setup = BailSetup::new();
        assert_eq!(theta_grid(&setup).len(), 625);
    }

    #[test]
    fn runs_are_deterministic() {
        let setup = BailSetup::new();
        let grid = theta_grid(&setup);
        for p in [&grid[0], &grid[312], &grid[624]] {
            assert_eq!(mse_record(&setup, p, 7).unwrap(), mse_record(&setup, p, 7).unwrap());
        }
        let config = FiniteDataConfig {
            dists: 2,
            sample_sizes: vec![200, 400],
            seeds: 2,
            ..FiniteDataConfig::default()
        };
        let a = run_finite_data_study(&config).unwrap();
        assert_eq!(a, run_finite_data_study(&config).unwrap());
        assert!(a.iter().all(|c| c.points.iter().all(|&(_, e)| e >= 0.0)));
    }

    #[test]
    fn exact_tables_give_zero_distance() {
        let setup = BailSetup::new();
        let cbn = random_bail_cbn(&setup, 11).unwrap();
        let config = FitConfig::default();
        let w = unfair_weight_vector(&cbn, &config).unwrap();
        assert!(euclidean(&w, &unfair_weight_vector(&cbn.clone(), &config).unwrap()) <= 1e-8);
    }

    #[test]
    fn decreasing_sample_sizes_are_rejected() {
        let config = FiniteDataConfig {
            sample_sizes: vec![1_000, 100],
            ..FiniteDataConfig::default()
        };
        assert!(run_finite_data_study(&config).is_err());
    }

    #[test]
    fn bad_theta_is_rejected() {
        let setup = BailSetup::new();
        let t = setup.id("T");
        assert!(ThetaParams::equal(&setup.dag).with(&setup.dag, t, vec![0.5, 0.6, 0.0]).is_err());
    }
}
