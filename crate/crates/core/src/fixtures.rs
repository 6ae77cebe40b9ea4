//! Small hand-specified networks used throughout the docs and tests.

use crate::cbn::{Cbn, Cpt};
use crate::graph::{CausalDag, NodeId};

/// `S -> Y` with `P(S=1) = 0.4`, `P(Y=1|S=0) = 0.2`, `P(Y=1|S=1) = 0.6`.
pub fn tiny() -> Cbn {
    let dag = CausalDag::builder()
        .binary("S")
        .binary("Y")
        .edge("S", "Y")
        .sensitive("S")
        .build()
        .expect("valid graph");
    let s = Cpt::new(&dag, NodeId(0), vec![0.6, 0.4]).expect("valid row");
    let y = Cpt::new(&dag, NodeId(1), vec![0.8, 0.2, 0.4, 0.6]).expect("valid rows");
    Cbn::new(dag, vec![s, y]).expect("valid network")
}

/// Mediation triangle `S -> M -> Y`, `S -> Y`, all binary, `S` sensitive.
///
/// `P(S=1) = 0.3`, `P(M=1|S) = (0.25, 0.7)`,
/// `P(Y=1|S,M) = (0.1, 0.5, 0.4, 0.8)` for `(S,M) = 00, 01, 10, 11`.
pub fn med() -> Cbn {
    let dag = CausalDag::builder()
        .binary("S")
        .binary("M")
        .binary("Y")
        .edge("S", "M")
        .edge("S", "Y")
        .edge("M", "Y")
        .sensitive("S")
        .build()
        .expect("valid graph");
    let s = Cpt::new(&dag, NodeId(0), vec![0.7, 0.3]).expect("valid row");
    let m = Cpt::new(&dag, NodeId(1), vec![0.75, 0.25, 0.3, 0.7]).expect("valid rows");
    let y = Cpt::new(&dag, NodeId(2), vec![0.9, 0.1, 0.5, 0.5, 0.6, 0.4, 0.2, 0.8]).expect("valid rows");
    Cbn::new(dag, vec![s, m, y]).expect("valid network")
}
