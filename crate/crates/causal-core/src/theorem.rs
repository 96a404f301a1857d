//! Verifies, by exact enumeration, the decoupling claim behind the prompting
//! strategies: in a reasoning graph where the decision depends on the social
//! category only through the fact and salient-text representations, once the
//! category is independent of each of those representations given the
//! selections, the decision itself is independent of the category given the
//! same selections.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CausalError;
use crate::graph::{CausalGraph, NodeRole, SelectionTable};
use crate::tol;

/// Maps the roles the check needs onto node names of a concrete graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleMap {
    /// The social category representation.
    #[serde(alias = "A")]
    pub category: String,
    /// The model's potential decision.
    #[serde(alias = "Y")]
    pub decision: String,
    /// The data-corpus selection node.
    #[serde(alias = "S")]
    pub selection: String,
    /// The prompt-induced selection node.
    #[serde(alias = "PPC")]
    pub ppc: String,
    #[serde(alias = "entity-repr")]
    pub entity: String,
    #[serde(alias = "scenario-repr")]
    pub scenario: String,
    #[serde(alias = "fact-repr")]
    pub fact: String,
    #[serde(alias = "salient-repr")]
    pub salient: String,
}

impl RoleMap {
    fn entries(&self) -> [(&'static str, &str); 8] {
        [
            ("category", &self.category),
            ("decision", &self.decision),
            ("selection", &self.selection),
            ("ppc", &self.ppc),
            ("entity", &self.entity),
            ("scenario", &self.scenario),
            ("fact", &self.fact),
            ("salient", &self.salient),
        ]
    }
}

/// One conditional-independence check inside the theorem report.
#[derive(Debug, Clone, Serialize)]
pub struct MiCheck {
    pub label: String,
    pub x: String,
    pub y: String,
    pub mutual_information: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremStatus {
    /// All premises hold and the decision is independent of the category.
    ConclusionHolds,
    /// All premises hold but the conclusion check failed.
    ConclusionFails,
    /// At least one premise failed; the theorem makes no claim here.
    PremisesUnsatisfied,
}

impl fmt::Display for TheoremStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            TheoremStatus::ConclusionHolds => "conclusion holds",
            TheoremStatus::ConclusionFails => "conclusion fails",
            TheoremStatus::PremisesUnsatisfied => "premises unsatisfied",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    /// Category-vs-representation checks, all conditioned on both selection
    /// nodes being 1.
    pub premises: Vec<MiCheck>,
    /// Category-vs-decision check under the same conditioning.
    pub conclusion: MiCheck,
    pub threshold: f64,
    pub status: TheoremStatus,
}

impl TheoremReport {
    pub fn conclusion_holds(&self) -> bool {
        self.status == TheoremStatus::ConclusionHolds
    }

    pub fn premises_hold(&self) -> bool {
        self.premises.iter().all(|p| p.satisfied)
    }

    pub fn max_premise_mi(&self) -> f64 {
        self.premises.iter().map(|p| p.mutual_information).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the decoupling check on `graph` with the default threshold.
pub fn verify_theorem(graph: &CausalGraph, roles: &RoleMap) -> Result<TheoremReport, CausalError> {
    verify_theorem_with_threshold(graph, roles, tol::INDEPENDENCE_THRESHOLD)
}

pub fn verify_theorem_with_threshold(
    graph: &CausalGraph,
    roles: &RoleMap,
    threshold: f64,
) -> Result<TheoremReport, CausalError> {
    validate_roles(graph, roles)?;

    let joint = graph.joint_distribution()?;
    let conditioned = joint
        .condition(&[(roles.selection.as_str(), "1"), (roles.ppc.as_str(), "1")])?;

    let premise_targets = [
        ("category-vs-fact", roles.fact.as_str()),
        ("category-vs-entity", roles.entity.as_str()),
        ("category-vs-scenario", roles.scenario.as_str()),
        ("category-vs-salient", roles.salient.as_str()),
    ];
    let mut premises = Vec::with_capacity(premise_targets.len());
    for (label, target) in premise_targets {
        let mi = conditioned.mutual_information(&roles.category, target)?;
        premises.push(MiCheck {
            label: label.to_string(),
            x: roles.category.clone(),
            y: target.to_string(),
            mutual_information: mi,
            satisfied: mi < threshold,
        });
    }
    let conclusion_mi = conditioned.mutual_information(&roles.category, &roles.decision)?;
    let conclusion = MiCheck {
        label: "category-vs-decision".to_string(),
        x: roles.category.clone(),
        y: roles.decision.clone(),
        mutual_information: conclusion_mi,
        satisfied: conclusion_mi < threshold,
    };

    let status = if !premises.iter().all(|p| p.satisfied) {
        TheoremStatus::PremisesUnsatisfied
    } else if conclusion.satisfied {
        TheoremStatus::ConclusionHolds
    } else {
        TheoremStatus::ConclusionFails
    };
    Ok(TheoremReport { premises, conclusion, threshold, status })
}

fn validate_roles(graph: &CausalGraph, roles: &RoleMap) -> Result<(), CausalError> {
    let names = graph.node_names();
    let entries = roles.entries();
    for (role, node) in entries {
        if !names.contains(&node) {
            return Err(CausalError::RoleUnmapped { role: role.to_string() });
        }
    }
    for (i, (_, a)) in entries.iter().enumerate() {
        for (_, b) in entries.iter().skip(i + 1) {
            if a == b {
                return Err(CausalError::TopologyMismatch {
                    detail: format!("node '{a}' is mapped to two roles"),
                });
            }
        }
    }
    for role_node in [&roles.selection, &roles.ppc] {
        if graph.role(role_node)? != NodeRole::Selection {
            return Err(CausalError::TopologyMismatch {
                detail: format!("node '{role_node}' must be a selection node"),
            });
        }
    }
    // The decision must hear about the category only through fact and
    // salient: no other non-selection parents, and in particular not the
    // category itself.
    let mut decision_parents = graph.parents_of(&roles.decision)?;
    decision_parents.sort_unstable();
    let mut expected = [roles.fact.as_str(), roles.salient.as_str()];
    expected.sort_unstable();
    if decision_parents != expected {
        return Err(CausalError::TopologyMismatch {
            detail: format!(
                "decision node '{}' must have exactly the fact and salient nodes as parents, found [{}]",
                roles.decision,
                decision_parents.join(", ")
            ),
        });
    }
    Ok(())
}

/// Outcome of a randomized search over prompt-selection tables.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    /// Best table found, keyed like any selection table.
    pub table: SelectionTable,
    pub report: TheoremReport,
    /// Max premise MI of the best table (the search objective).
    pub objective: f64,
    /// Objective of the first trial, for gauging improvement.
    pub first_trial_objective: f64,
    pub trials: u32,
    pub seed: u64,
}

/// Randomized search for a prompt-selection table that minimizes the worst
/// premise MI. Each trial draws every row of the table uniformly from
/// [0.05, 0.95] (bounded away from 0 and 1 so conditioning stays well
/// defined) and keeps the best trial. Deterministic for a fixed seed.
pub fn search_ppc(
    graph: &CausalGraph,
    roles: &RoleMap,
    trials: u32,
    seed: u64,
) -> Result<SearchOutcome, CausalError> {
    if trials == 0 {
        return Err(CausalError::InvalidSpec { detail: "search needs at least one trial".into() });
    }
    validate_roles(graph, roles)?;
    let base = graph.selection_table(&roles.ppc).ok_or_else(|| CausalError::InvalidSpec {
        detail: format!("node '{}' has no selection table", roles.ppc),
    })?;
    let keys: Vec<String> = base.keys().cloned().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, SelectionTable, TheoremReport)> = None;
    let mut first_objective = f64::INFINITY;
    for trial in 0..trials {
        let mut table = SelectionTable::new();
        for key in &keys {
            table.insert(key.clone(), rng.gen_range(0.05..=0.95));
        }
        let candidate = graph.with_selection_table(&roles.ppc, table.clone())?;
        let report = match verify_theorem(&candidate, roles) {
            Ok(r) => r,
            Err(CausalError::ZeroProbabilityEvidence { .. }) => continue,
            Err(e) => return Err(e),
        };
        let objective = report.max_premise_mi();
        if trial == 0 {
            first_objective = objective;
        }
        if best.as_ref().map_or(true, |(b, _, _)| objective < *b) {
            best = Some((objective, table, report));
        }
    }
    let (objective, table, report) = best.ok_or_else(|| CausalError::InvalidSpec {
        detail: "every trial produced zero-probability evidence".into(),
    })?;
    Ok(SearchOutcome {
        table,
        report,
        objective,
        first_trial_objective: first_objective,
        trials,
        seed,
    })
}
