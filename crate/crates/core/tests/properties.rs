mod common;

use std::collections::BTreeSet;

use cea::clsp::{project_simplex, solve_clsp, Design, FitConfig};
use cea::debias::{remove_discrimination_from, DebiasConfig};
use cea::fit::fit_network;
use cea::flow::{edge_flow, scaling_factor};
use cea::inference::{interventional, path_specific, path_specific_effect, PathIntervention};
use cea::synth::{generate_cpts, BailSetup, ScoreTable, ThetaParams};
use cea::unfairness::{
    approx_cumulative_at, edge_unfairness_report, rank, sensitivity, UnfairnessMethod,
};
use cea::{Assignment, Cpt, DirectedPath, NodeId};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

/// Random disjoint (A, B, C) with A and B non-empty.
fn split(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Option<(Vec<NodeId>, Vec<NodeId>, Vec<NodeId>)> {
    let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
    for i in 0..n {
        match r.random_range(0..4) {
            0 => a.push(NodeId(i)),
            1 => b.push(NodeId(i)),
            2 => c.push(NodeId(i)),
            _ => {}
        }
    }
    (!a.is_empty() && !b.is_empty()).then_some((a, b, c))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn d_separation_matches_trail_enumeration(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 2, 0.4);
        for _ in 0..40 {
            if let Some((a, b, c)) = split(&mut r, n) {
                prop_assert_eq!(dag.d_separated(&a, &b, &c).unwrap(), brute_d_separated(&dag, &a, &b, &c));
            }
        }
    }

    #[test]
    fn directed_paths_match_sequence_search(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 2, 0.5);
        for s in dag.ids() {
            for t in dag.ids().filter(|&t| t != s) {
                let paths = dag.directed_paths(s, t);
                let set: BTreeSet<Vec<NodeId>> = paths.iter().map(|p| p.nodes().to_vec()).collect();
                prop_assert_eq!(set.len(), paths.len());
                for p in &paths {
                    prop_assert!(p.nodes().windows(2).all(|w| dag.has_edge(w[0], w[1])));
                }
                prop_assert_eq!(set, brute_paths(&dag, s, t));
            }
        }
    }

    #[test]
    fn witness_iff_children_overlap(seed in any::<u64>(), n in 3usize..=6) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 2, 0.6);
        let (s, y) = (NodeId(0), NodeId(n - 1));
        let all = dag.directed_paths(s, y);
        for _ in 0..8 {
            let pi = random_subset(&mut r, &all);
            let report = dag.recanting_witness(&[s], y, &pi).unwrap();
            prop_assert_eq!(report.witness.is_some(), children_overlap(&dag, s, y, &pi));
            prop_assert_eq!(report.children_overlap(), children_overlap(&dag, s, y, &pi));
        }
    }

    #[test]
    fn joint_sums_to_one(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 3, 0.5);
        let cbn = random_cbn(&mut r, &dag);
        prop_assert!((cbn.joint_table().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn path_specific_extremes(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 3, 0.6);
        let cbn = random_cbn(&mut r, &dag);
        let (s, y) = (NodeId(0), NodeId(n - 1));
        let all = dag.directed_paths(s, y);
        let card = dag.cardinality(s);
        let (on, off) = (r.random_range(0..card), r.random_range(0..card));
        let (a_on, a_off) = (Assignment::new().with(s, on), Assignment::new().with(s, off));
        for v in 0..dag.cardinality(y) {
            let yv = Assignment::new().with(y, v);
            let every = PathIntervention::new(all.clone(), y, a_on.clone(), a_off.clone());
            let none = PathIntervention::new(vec![], y, a_on.clone(), a_off.clone());
            let p_all = path_specific(&cbn, &every, &yv).unwrap();
            let p_none = path_specific(&cbn, &none, &yv).unwrap();
            prop_assert!((p_all - interventional(&cbn, &a_on, &yv).unwrap()).abs() <= 1e-14);
            prop_assert!((p_none - interventional(&cbn, &a_off, &yv).unwrap()).abs() <= 1e-14);
        }
    }

    #[test]
    fn intervening_on_a_non_ancestor_keeps_the_marginal(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 3, 0.5);
        let cbn = random_cbn(&mut r, &dag);
        for y in dag.ids() {
            let anc = dag.ancestors(y);
            for x in dag.ids().filter(|x| *x != y && !anc.contains(x)) {
                let do_x = Assignment::new().with(x, r.random_range(0..dag.cardinality(x)));
                for v in 0..dag.cardinality(y) {
                    let yv = Assignment::new().with(y, v);
                    let a = interventional(&cbn, &do_x, &yv).unwrap();
                    let b = interventional(&cbn, &Assignment::new(), &yv).unwrap();
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn scaling_factor_is_the_mean_of_single_baseline_effects(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, 4, 3, 0.7);
        let cbn = random_cbn(&mut r, &dag);
        let x = NodeId(3);
        for &p in dag.parents(x) {
            let direct = vec![DirectedPath(vec![p, x])];
            for m in 0..dag.cardinality(p) {
                let am = Assignment::new().with(p, m);
                for v in 0..dag.cardinality(x) {
                    let yv = Assignment::new().with(x, v);
                    let others: Vec<f64> = (0..dag.cardinality(p))
                        .filter(|&m2| m2 != m)
                        .map(|m2| path_specific_effect(&cbn, &direct, &yv, &am, &Assignment::new().with(p, m2)).unwrap())
                        .collect();
                    let manual = others.iter().sum::<f64>() / others.len() as f64;
                    let s = scaling_factor(&cbn, &[p], &am, x, v).unwrap();
                    prop_assert!((s - manual).abs() <= 1e-12 * manual.max(1.0));
                }
            }
        }
    }

    #[test]
    fn relabeling_the_child_permutes_flow_rows(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, 3, 3, 1.0);
        let cbn = random_cbn(&mut r, &dag);
        let x = NodeId(2);
        let card = dag.cardinality(x);
        let perm: Vec<usize> = (0..card).rev().collect();
        let old = cbn.cpt(x);
        let permuted = Cpt::from_fn(&dag, x, |pa, v| old.get(pa, perm[v])).unwrap();
        let relabeled = cbn.with_cpt(permuted).unwrap();
        let a = edge_flow(&cbn, &[NodeId(0)], x).unwrap().permute_child(&perm);
        let b = edge_flow(&relabeled, &[NodeId(0)], x).unwrap();
        for m in 0..a.rows() {
            for (u, v) in a.flow_row(m).iter().zip(b.flow_row(m)) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn solver_output_is_on_the_simplex_and_descends(seed in any::<u64>(), k in 2usize..=5, rows in 3usize..=12, iters in 1usize..=50) {
        let mut r = rng(seed);
        let columns: Vec<Vec<f64>> = (0..k).map(|_| (0..rows).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let targets: Vec<f64> = (0..rows).map(|_| r.random_range(0.0..1.0)).collect();
        let design = Design::new(targets, columns).unwrap();
        let sol = solve_clsp(&design, &FitConfig { max_iterations: iters, seed, ..FitConfig::default() }).unwrap();
        prop_assert!(sol.weights.iter().all(|&w| (0.0..=1.0).contains(&w)));
        prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() <= k as f64 * f64::EPSILON);
        prop_assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fit_ignores_row_order(seed in any::<u64>(), k in 2usize..=4, rows in 4usize..=10) {
        let mut r = rng(seed);
        let columns: Vec<Vec<f64>> = (0..k).map(|_| (0..rows).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let targets: Vec<f64> = (0..rows).map(|_| r.random_range(0.0..1.0)).collect();
        let mut order: Vec<usize> = (0..rows).collect();
        order.reverse();
        order.swap(0, rows / 2);
        let shuffle = |v: &Vec<f64>| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let a = solve_clsp(&Design::new(targets.clone(), columns.clone()).unwrap(), &FitConfig::default()).unwrap();
        let b = solve_clsp(&Design::new(shuffle(&targets), columns.iter().map(shuffle).collect()).unwrap(), &FitConfig::default()).unwrap();
        prop_assert!((a.mse - b.mse).abs() <= 1e-12);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-6, "{:?} vs {:?}", a.weights, b.weights);
        }
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        let q = project_simplex(&p);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn edge_unfairness_equals_weight(seed in any::<u64>(), n in 3usize..=5) {
        let mut r = rng(seed);
        let dag = random_dag(&mut r, n, 3, 0.6);
        let cbn = random_cbn(&mut r, &dag);
        let fitted = fit_network(&cbn, &FitConfig::default()).unwrap();
        let general = edge_unfairness_report(&fitted, UnfairnessMethod::General).unwrap();
        let weight = edge_unfairness_report(&fitted, UnfairnessMethod::Weight).unwrap();
        prop_assert_eq!(general.entries.len(), weight.entries.len());
        for ((e1, u1), (e2, u2)) in general.entries.iter().zip(&weight.entries) {
            prop_assert_eq!(e1, e2);
            prop_assert!((u1 - u2).abs() <= 1e-8);
        }
    }

    #[test]
    fn priority_is_an_affine_score_and_a_permutation(
        u in prop::collection::vec(0.0f64..1.0, 1..8),
        wu in 0.0f64..2.0,
        wp in 0.0f64..2.0,
    ) {
        let items: Vec<(String, f64, f64)> = u.iter().enumerate().map(|(i, &x)| (format!("e{i}"), x, 1.0 - x * x)).collect();
        let ranked = rank(items.clone(), wu, wp).unwrap();
        let names: BTreeSet<&str> = ranked.iter().map(|e| e.edge.as_str()).collect();
        prop_assert_eq!(names.len(), items.len());
        for e in &ranked {
            prop_assert_eq!(e.priority, wu * e.unfairness + wp * e.potential);
        }
        prop_assert!(ranked.windows(2).all(|w| w[0].priority >= w[1].priority));
    }

    #[test]
    fn generated_tables_are_distributions(seed in any::<u64>()) {
        let setup = BailSetup::new();
        let mut r = rng(seed);
        let dag = &setup.dag;
        let weights = dag
            .ids()
            .filter(|&v| !dag.parents(v).is_empty())
            .map(|v| (v, interior_simplex(&mut r, dag.parents(v).len())))
            .collect();
        let theta = ThetaParams::new(dag, weights).unwrap();
        let scores = ScoreTable::random(dag, &mut r);
        let cbn = generate_cpts(dag, &theta, &scores, &setup.roots).unwrap();
        prop_assert!(cbn.is_strictly_positive());
        for cpt in cbn.cpts() {
            for row in 0..cpt.rows() {
                prop_assert!((cpt.row(row).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        prop_assert!((cbn.joint_table().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

fn bail_fit() -> cea::fit::FittedNetwork {
    let setup = BailSetup::new();
    fit_network(&setup.cbn(&ThetaParams::equal(&setup.dag)).unwrap(), &FitConfig::default()).unwrap()
}

#[test]
fn sensitivity_slope_is_constant() {
    let fitted = bail_fit();
    let dag = fitted.cbn.dag();
    let s = Assignment::new().with(dag.id("R").unwrap(), 2).with(dag.id("G").unwrap(), 0);
    let y = Assignment::new().with(dag.id("J").unwrap(), 1);
    for e in dag.unfair_edges() {
        let d = sensitivity(&fitted, e, &s, &y).unwrap();
        let slopes: Vec<f64> = [(0.0, 0.3), (0.3, 0.7), (0.7, 1.0)]
            .iter()
            .map(|&(a, b)| {
                let f = |w| approx_cumulative_at(&fitted, e, w, &s, &y).unwrap();
                (f(b) - f(a)) / (b - a)
            })
            .collect();
        for sl in slopes {
            assert!((sl - d).abs() <= 1e-10 * d.abs().max(1.0), "{}: {sl} vs {d}", dag.edge_name(e));
        }
    }
}

#[test]
fn debias_invariants_and_utility_monotonicity() {
    let initial = bail_fit();
    let mut prev: Option<(f64, f64)> = None;
    for lambda in [0.1, 10.0, 1000.0] {
        let config = DebiasConfig {
            utility_weight: lambda,
            ..DebiasConfig::default()
        };
        let r = remove_discrimination_from(initial.clone(), &config).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.unfairness_after() <= r.unfairness_before());
        for m in r.fitted.models() {
            let w = m.weights();
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= w.len() as f64 * f64::EPSILON);
        }
        let (u, j) = (r.terms_after.unfairness, r.terms_after.joint_error);
        if let Some((pu, pj)) = prev {
            assert!(j <= pj + 1e-12, "joint error rose: {pj} -> {j}");
            assert!(u >= pu - 1e-12, "unfairness fell: {pu} -> {u}");
        }
        prev = Some((u, j));
    }
}

#[test]
fn unfair_edges_have_sensitive_sources() {
    let setup = BailSetup::new();
    for e in setup.dag.edges() {
        assert_eq!(setup.dag.is_unfair(e), setup.dag.is_sensitive(e.from));
    }
}
