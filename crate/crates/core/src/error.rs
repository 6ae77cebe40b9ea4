use thiserror::Error;

/// Errors raised by graph construction, inference, fitting and the
/// experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("node `{node}` has cardinality {cardinality}; at least 2 values are required")]
    Cardinality { node: String, cardinality: usize },

    #[error("node `{node}` has duplicate value label `{label}`")]
    DuplicateLabel { node: String, label: String },

    #[error("the edge set contains a cycle through `{0}`")]
    Cycle(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} is out of range for node `{node}` (cardinality {cardinality})")]
    ValueOutOfRange {
        node: String,
        value: usize,
        cardinality: usize,
    },

    #[error("assignment is missing node `{0}`")]
    IncompleteAssignment(String),

    #[error("conditioning event has probability zero")]
    ZeroProbabilityCondition,

    #[error("CPT of `{node}` is invalid: {reason}")]
    InvalidCpt { node: String, reason: String },

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("path-specific distribution is not identifiable: `{witness}` is a recanting witness")]
    RecantingWitness { witness: String },

    #[error("path-specific distribution is not identifiable: edge `{from}->{to}` lies on both selected and unselected paths")]
    AmbiguousEdge { from: String, to: String },

    #[error("group of nodes {0:?} has a single joint value; nothing to average over")]
    DegenerateDomain(Vec<String>),

    #[error("node `{0}` has no parents")]
    Parentless(String),

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("model file: {0}")]
    ModelFile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
