use serde::Serialize;

use crate::dist::DiscreteDistribution;
use crate::error::CausalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Independent,
    Dependent,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub x: String,
    pub y: String,
    /// Evidence the joint was conditioned on, as (variable, value) pairs.
    pub evidence: Vec<(String, String)>,
    /// I(x; y | evidence) in nats.
    pub mutual_information: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Tests whether `x` and `y` are independent after conditioning `dist` on
/// the given evidence, by thresholding exact conditional mutual information.
pub fn test_independence(
    dist: &DiscreteDistribution,
    x: &str,
    y: &str,
    evidence: &[(&str, &str)],
    threshold: f64,
) -> Result<IndependenceReport, CausalError> {
    if x == y {
        return Err(CausalError::InvalidEvidence {
            detail: format!("independence needs two distinct variables, got '{x}' twice"),
        });
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(CausalError::InvalidEvidence {
            detail: format!("threshold must be a positive number, got {threshold}"),
        });
    }
    for (name, _) in evidence {
        if name == &x || name == &y {
            return Err(CausalError::InvalidEvidence {
                detail: format!("'{name}' cannot appear in both the pair and the evidence"),
            });
        }
    }
    let conditioned;
    let view = if evidence.is_empty() {
        dist
    } else {
        conditioned = dist.condition(evidence)?;
        &conditioned
    };
    let mi = view.mutual_information(x, y)?;
    Ok(IndependenceReport {
        x: x.to_string(),
        y: y.to_string(),
        evidence: evidence.iter().map(|(n, v)| (n.to_string(), v.to_string())).collect(),
        mutual_information: mi,
        threshold,
        verdict: if mi < threshold { Verdict::Independent } else { Verdict::Dependent },
    })
}
