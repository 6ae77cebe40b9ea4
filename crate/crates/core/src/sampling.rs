//! Ancestral sampling and maximum-likelihood table estimation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cbn::{Cbn, Cpt};
use crate::error::{Error, Result};
use crate::graph::{CausalDag, NodeId};

/// Complete samples stored as dense state vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub samples: Vec<Vec<usize>>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws `n` independent samples in topological order.
pub fn sample(cbn: &Cbn, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let dag = cbn.dag();
    let samplers: Vec<Vec<Option<WeightedIndex<f64>>>> = dag
        .ids()
        .map(|v| {
            let cpt = cbn.cpt(v);
            (0..cpt.rows()).map(|r| WeightedIndex::new(cpt.row(r)).ok()).collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut state = vec![0; dag.len()];
        for &v in dag.topological_order() {
            let cpt = cbn.cpt(v);
            let row = cpt.row_index(&cpt.parents().iter().map(|p| state[p.0]).collect::<Vec<_>>());
            state[v.0] = samplers[v.0][row]
                .as_ref()
                .expect("CPT rows have positive mass")
                .sample(&mut rng);
        }
        samples.push(state);
    }
    Ok(SampleSet { samples, seed })
}

/// Estimated network plus the `(node, row)` pairs that no sample reached.
#[derive(Debug, Clone)]
pub struct MleEstimate {
    pub cbn: Cbn,
    /// Rows with zero total weight; they fall back to uniform.
    pub unseen_rows: Vec<(NodeId, usize)>,
}

/// Row-wise `(count + smoothing) / (total + smoothing * card)`.
pub fn mle_estimate(dag: &CausalDag, samples: &SampleSet, smoothing: f64) -> Result<MleEstimate> {
    if smoothing.is_nan() || smoothing < 0.0 {
        return Err(Error::InvalidInput(format!("smoothing must be non-negative, got {smoothing}")));
    }
    let mut cpts = Vec::with_capacity(dag.len());
    let mut unseen_rows = Vec::new();
    for v in dag.ids() {
        let shape = Cpt::uniform(dag, v);
        let card = shape.card();
        let mut counts = vec![0.0; shape.table().len()];
        for s in &samples.samples {
            if s.len() != dag.len() {
                return Err(Error::IncompleteAssignment(format!("sample of length {}", s.len())));
            }
            let row = shape.row_index(&shape.parents().iter().map(|p| s[p.0]).collect::<Vec<_>>());
            counts[row * card + s[v.0]] += 1.0;
        }
        for (r, row) in counts.chunks_mut(card).enumerate() {
            let total: f64 = row.iter().sum::<f64>() + smoothing * card as f64;
            if total > 0.0 {
                row.iter_mut().for_each(|c| *c = (*c + smoothing) / total);
            } else {
                unseen_rows.push((v, r));
                row.iter_mut().for_each(|c| *c = 1.0 / card as f64);
            }
        }
        cpts.push(Cpt::new(dag, v, counts)?);
    }
    Ok(MleEstimate {
        cbn: Cbn::new(dag.clone(), cpts)?,
        unseen_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny;

    #[test]
    fn deterministic_per_seed() {
        let cbn = tiny();
        assert_eq!(sample(&cbn, 50, 7).unwrap(), sample(&cbn, 50, 7).unwrap());
        assert_ne!(sample(&cbn, 50, 7).unwrap(), sample(&cbn, 50, 8).unwrap());
        let one = sample(&cbn, 1, 0).unwrap();
        assert_eq!(one.samples[0].len(), 2);
    }

    #[test]
    fn counts_to_rows() {
        let cbn = tiny();
        let dag = cbn.dag();
        let set = SampleSet {
            samples: vec![vec![0, 0], vec![0, 0], vec![0, 0], vec![0, 1]],
            seed: 0,
        };
        let est = mle_estimate(dag, &set, 0.0).unwrap();
        assert_eq!(est.cbn.cpt(NodeId(1)).row(0), &[0.75, 0.25]);
        assert_eq!(est.cbn.cpt(NodeId(1)).row(1), &[0.5, 0.5]);
        assert_eq!(est.unseen_rows, vec![(NodeId(1), 1)]);

        let smoothed = mle_estimate(dag, &set, 1.0).unwrap();
        assert_eq!(smoothed.cbn.cpt(NodeId(1)).row(1), &[0.5, 0.5]);
        assert!(smoothed.unseen_rows.is_empty());
    }

    #[test]
    fn recovers_tiny() {
        let cbn = tiny();
        let set = sample(&cbn, 100_000, 0).unwrap();
        let ones = set.samples.iter().filter(|s| s[0] == 1).count() as f64 / set.len() as f64;
        assert!((ones - 0.4).abs() < 0.01);
        let est = mle_estimate(cbn.dag(), &set, 0.0).unwrap();
        assert!((est.cbn.cpt(NodeId(1)).get(&[1], 1) - 0.6).abs() < 0.02);
    }
}
