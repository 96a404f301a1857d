//! Numeric tolerances used across the crate. Values are in probability mass
//! or nats unless noted.

/// A CPT row must sum to 1 within this bound.
pub const CPT_ROW_SUM: f64 = 1e-12;

/// A joint table must sum to 1 within this bound.
pub const JOINT_SUM: f64 = 1e-9;

/// Evidence with total mass at or below this floor cannot be conditioned on.
pub const EVIDENCE_FLOOR: f64 = 1e-15;

/// Mutual information this close below zero is rounding noise and is clamped
/// to exactly 0.
pub const MI_NEGATIVE_FLOOR: f64 = -1e-12;

/// Default verdict threshold for independence tests, in nats.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-9;

/// Default cap on the joint state count of a graph.
pub const STATE_CAP: u64 = 1 << 22;
