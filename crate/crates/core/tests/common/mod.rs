//! Random instances and brute-force oracles shared by the integration tests.
//! Everything here enumerates full joints or raw node sequences, without
//! reusing the library's inference code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cea::{Assignment, Cbn, CausalDag, Cpt, DirectedPath, Edge, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG on `n` nodes named `V0..`; edges only go from lower to higher
/// index. Node 0 is sensitive.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, max_card: usize, edge_prob: f64) -> CausalDag {
    let mut b = CausalDag::builder();
    for i in 0..n {
        let card = rng.random_range(2..=max_card);
        b = b.node(&format!("V{i}"), (0..card).map(|v| v.to_string()));
    }
    for j in 1..n {
        for i in 0..j {
            if rng.random_bool(edge_prob) {
                b = b.edge(&format!("V{i}"), &format!("V{j}"));
            }
        }
    }
    b.sensitive("V0").build().unwrap()
}

/// Strictly positive random tables.
pub fn random_cbn(rng: &mut ChaCha8Rng, dag: &CausalDag) -> Cbn {
    let cpts = dag
        .ids()
        .map(|v| {
            let shape = Cpt::uniform(dag, v);
            let card = shape.card();
            let mut t = Vec::with_capacity(shape.table().len());
            for _ in 0..shape.rows() {
                let row: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = row.iter().sum();
                t.extend(row.iter().map(|x| x / s));
            }
            Cpt::new(dag, v, t).unwrap()
        })
        .collect();
    Cbn::new(dag.clone(), cpts).unwrap()
}

/// Every full state of `cards`, last coordinate fastest.
pub fn all_states(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..c).map(move |v| {
                    let mut t = s.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

fn parent_values(dag: &CausalDag, v: NodeId, state: &[usize]) -> Vec<usize> {
    dag.parents(v).iter().map(|p| state[p.0]).collect()
}

/// `P(y | do(x))` by graph surgery: intervened nodes lose their parents and
/// get point-mass tables, then the full joint of the mutilated network is
/// enumerated.
pub fn surgery_oracle(cbn: &Cbn, do_x: &Assignment, y: &Assignment) -> f64 {
    let dag = cbn.dag();
    let n = dag.len();
    let mut total = 0.0;
    for state in all_states(&dag.cardinalities()) {
        if y.iter().any(|(k, v)| state[k.0] != v) {
            continue;
        }
        let mut p = 1.0;
        for i in 0..n {
            let v = NodeId(i);
            p *= match do_x.get(v) {
                Some(x) => (state[i] == x) as u8 as f64,
                None => cbn.cpt(v).get(&parent_values(dag, v, &state), state[i]),
            };
        }
        total += p;
    }
    total
}

/// `P(y)` under a path-specific intervention by explicit two-world
/// expansion: every non-source node has an active copy and a baseline copy.
/// Baseline copies read baseline parents with sources at `off`; active
/// copies read a parent's active copy (or `on` for a source) along edges of
/// selected paths and its baseline copy otherwise. `y` is read from the
/// active world.
pub fn two_world_oracle(cbn: &Cbn, sources: &[NodeId], on: &Assignment, off: &Assignment, pi: &[DirectedPath], y: &Assignment) -> f64 {
    let dag = cbn.dag();
    let selected: BTreeSet<Edge> = pi.iter().flat_map(|p| p.edges().collect::<Vec<_>>()).collect();
    let free: Vec<NodeId> = dag.ids().filter(|v| !sources.contains(v)).collect();
    let cards: Vec<usize> = free.iter().flat_map(|&v| [dag.cardinality(v); 2]).collect();
    let mut total = 0.0;
    for s in all_states(&cards) {
        let mut active = vec![0usize; dag.len()];
        let mut base = vec![0usize; dag.len()];
        for &x in sources {
            active[x.0] = on.get(x).unwrap();
            base[x.0] = off.get(x).unwrap();
        }
        for (k, &v) in free.iter().enumerate() {
            active[v.0] = s[2 * k];
            base[v.0] = s[2 * k + 1];
        }
        if y.iter().any(|(k, v)| active[k.0] != v) {
            continue;
        }
        let mut p = 1.0;
        for &v in &free {
            let cpt = cbn.cpt(v);
            let pa_base: Vec<usize> = dag.parents(v).iter().map(|q| base[q.0]).collect();
            let pa_active: Vec<usize> = dag
                .parents(v)
                .iter()
                .map(|&q| if selected.contains(&Edge::new(q, v)) { active[q.0] } else { base[q.0] })
                .collect();
            p *= cpt.get(&pa_base, base[v.0]) * cpt.get(&pa_active, active[v.0]);
        }
        total += p;
    }
    total
}

/// All directed paths from `src` to `dst`, by testing every sequence of
/// distinct nodes.
pub fn brute_paths(dag: &CausalDag, src: NodeId, dst: NodeId) -> BTreeSet<Vec<NodeId>> {
    let mut out = BTreeSet::new();
    let others: Vec<NodeId> = dag.ids().filter(|&v| v != src && v != dst).collect();
    let mut stack: Vec<Vec<NodeId>> = vec![vec![src]];
    while let Some(seq) = stack.pop() {
        let mut full = seq.clone();
        full.push(dst);
        if src != dst && full.windows(2).all(|w| dag.has_edge(w[0], w[1])) {
            out.insert(full);
        }
        for &o in &others {
            if !seq.contains(&o) {
                let mut next = seq.clone();
                next.push(o);
                stack.push(next);
            }
        }
    }
    out
}

/// d-separation by enumerating every simple undirected trail.
pub fn brute_d_separated(dag: &CausalDag, a: &[NodeId], b: &[NodeId], c: &[NodeId]) -> bool {
    let cset: BTreeSet<NodeId> = c.iter().copied().collect();
    let adjacent = |u: NodeId, v: NodeId| dag.has_edge(u, v) || dag.has_edge(v, u);
    let collider_open = |n: NodeId| cset.contains(&n) || dag.descendants(n).iter().any(|d| cset.contains(d));
    for &s in a {
        for &t in b {
            let mut stack = vec![vec![s]];
            while let Some(trail) = stack.pop() {
                let last = *trail.last().unwrap();
                if last == t {
                    let active = trail.windows(3).all(|w| {
                        let collider = dag.has_edge(w[0], w[1]) && dag.has_edge(w[2], w[1]);
                        if collider {
                            collider_open(w[1])
                        } else {
                            !cset.contains(&w[1])
                        }
                    });
                    if active {
                        return false;
                    }
                    continue;
                }
                for v in dag.ids() {
                    if !trail.contains(&v) && adjacent(last, v) {
                        let mut next = trail.clone();
                        next.push(v);
                        stack.push(next);
                    }
                }
            }
        }
    }
    true
}

/// True when some child of the source starts both a selected and an
/// unselected source-to-target path.
pub fn children_overlap(dag: &CausalDag, source: NodeId, target: NodeId, pi: &[DirectedPath]) -> bool {
    let chosen: BTreeSet<Vec<NodeId>> = pi.iter().map(|p| p.nodes().to_vec()).collect();
    let mut on = BTreeSet::new();
    let mut off = BTreeSet::new();
    for p in brute_paths(dag, source, target) {
        if chosen.contains(&p) {
            on.insert(p[1]);
        } else {
            off.insert(p[1]);
        }
    }
    on.intersection(&off).next().is_some()
}

/// Random subset of `items`, each kept with probability 1/2.
pub fn random_subset<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> Vec<T> {
    items.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
}

/// Random point on the simplex with `k` coordinates, bounded away from the
/// faces.
pub fn interior_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Groups `(key, value)` pairs.
pub fn group_by<K: Ord, V>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<K, Vec<V>> {
    let mut m: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (k, v) in pairs {
        m.entry(k).or_default().push(v);
    }
    m
}
