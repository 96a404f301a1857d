use thiserror::Error;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error("cycle detected through node '{node}'")]
    CycleDetected { node: String },
    #[error("cpt shape mismatch for node '{node}': {detail}")]
    CptShapeMismatch { node: String, detail: String },
    #[error("cpt row '{key}' of node '{node}' sums to {sum}, expected 1")]
    RowNotNormalized { node: String, key: String, sum: f64 },
    #[error("joint state space has {states} states, above the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },
    #[error("evidence [{evidence}] has probability {probability:e}, at or below the conditioning floor")]
    ZeroProbabilityEvidence { evidence: String, probability: f64 },
    #[error("unknown variable '{name}'")]
    UnknownVariable { name: String },
    #[error("value '{value}' is not in the domain of '{variable}'")]
    UnknownValue { variable: String, value: String },
    #[error("role '{role}' is not mapped to a node in the graph")]
    RoleUnmapped { role: String },
    #[error("graph shape does not match the check: {detail}")]
    TopologyMismatch { detail: String },
    #[error("invalid graph spec: {detail}")]
    InvalidSpec { detail: String },
    #[error("invalid evidence: {detail}")]
    InvalidEvidence { detail: String },
}
