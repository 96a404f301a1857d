//! Ready-made graphs: the binary reasoning graph the theorem check targets,
//! and a two-disease clinic graph that shows selection inducing dependence
//! between unrelated causes (Berkson's paradox).

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CausalError;
use crate::graph::{CausalGraph, EdgeLabel, EdgeSpec, GraphSpec, NodeRole, NodeSpec, SelectionTable};
use crate::theorem::RoleMap;

fn binary(name: &str, role: NodeRole) -> NodeSpec {
    NodeSpec { name: name.into(), domain: vec!["0".into(), "1".into()], role }
}

fn edge(from: &str, to: &str, label: EdgeLabel) -> EdgeSpec {
    EdgeSpec { from: from.into(), to: to.into(), label }
}

/// All the free probabilities of the reasoning graph. Every node is binary.
///
/// Array rows follow the declared parent order, first parent slowest:
/// `fact` is indexed by (entity, scenario), `salient` by (category, fact),
/// `decision` by (fact, salient), `select` by (category, entity, scenario),
/// and `ppc` by (category, entity, scenario, salient, fact).
#[derive(Debug, Clone)]
pub struct ReasoningParams {
    pub p_category: f64,
    pub p_entity: f64,
    pub p_scenario: f64,
    pub fact: [f64; 4],
    pub salient: [f64; 4],
    pub decision: [f64; 4],
    pub select: [f64; 8],
    pub ppc: [f64; 32],
}

impl ReasoningParams {
    /// Draws every probability uniformly from [0.05, 0.95], so all events
    /// keep positive mass. Deterministic for a fixed seed.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || rng.gen_range(0.05..=0.95);
        Self {
            p_category: draw(),
            p_entity: draw(),
            p_scenario: draw(),
            fact: std::array::from_fn(|_| draw()),
            salient: std::array::from_fn(|_| draw()),
            decision: std::array::from_fn(|_| draw()),
            select: std::array::from_fn(|_| draw()),
            ppc: std::array::from_fn(|_| draw()),
        }
    }
}

fn root_cpt(p1: f64) -> BTreeMap<String, Vec<f64>> {
    BTreeMap::from([(String::new(), vec![1.0 - p1, p1])])
}

fn table_cpt(probs: &[f64]) -> BTreeMap<String, Vec<f64>> {
    keyed(probs).into_iter().map(|(k, p)| (k, vec![1.0 - p, p])).collect()
}

fn selection(probs: &[f64]) -> SelectionTable {
    keyed(probs).into_iter().collect()
}

/// Pairs each probability with its binary parent-assignment key, first
/// parent slowest.
fn keyed(probs: &[f64]) -> Vec<(String, f64)> {
    let bits = probs.len().trailing_zeros() as usize;
    debug_assert_eq!(1 << bits, probs.len());
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let key: Vec<String> =
                (0..bits).rev().map(|b| ((i >> b) & 1).to_string()).collect();
            (key.join("|"), p)
        })
        .collect()
}

/// The reasoning graph: three root representations (category, entity,
/// scenario), a fact representation fed by entity and scenario, a salient
/// representation fed by category and fact, a decision fed by fact and
/// salient, a corpus selection over the roots, and a prompt selection over
/// all five representations.
pub fn reasoning_graph_spec(params: &ReasoningParams) -> GraphSpec {
    GraphSpec {
        nodes: vec![
            binary("category", NodeRole::InternalRepresentation),
            binary("entity", NodeRole::InternalRepresentation),
            binary("scenario", NodeRole::InternalRepresentation),
            binary("fact", NodeRole::InternalRepresentation),
            binary("salient", NodeRole::InternalRepresentation),
            binary("decision", NodeRole::Observed),
            binary("select", NodeRole::Selection),
            binary("ppc", NodeRole::Selection),
        ],
        edges: vec![
            edge("category", "salient", EdgeLabel::Red1),
            edge("entity", "fact", EdgeLabel::Red2),
            edge("scenario", "fact", EdgeLabel::Red3),
            edge("fact", "salient", EdgeLabel::Red4),
            edge("fact", "decision", EdgeLabel::Red5),
            edge("salient", "decision", EdgeLabel::Red6),
            edge("category", "ppc", EdgeLabel::BlueI),
            edge("entity", "ppc", EdgeLabel::BlueII),
            edge("scenario", "ppc", EdgeLabel::BlueIII),
            edge("salient", "ppc", EdgeLabel::BlueIV),
            edge("fact", "ppc", EdgeLabel::BlueV),
            edge("category", "select", EdgeLabel::RedVI),
            edge("entity", "select", EdgeLabel::RedVII),
            edge("scenario", "select", EdgeLabel::RedVIII),
        ],
        cpts: BTreeMap::from([
            ("category".to_string(), root_cpt(params.p_category)),
            ("entity".to_string(), root_cpt(params.p_entity)),
            ("scenario".to_string(), root_cpt(params.p_scenario)),
            ("fact".to_string(), table_cpt(&params.fact)),
            // Salient parents are (category, fact): category feeds it
            // directly, fact supplies the content it decorates.
            ("salient".to_string(), table_cpt(&params.salient)),
            ("decision".to_string(), table_cpt(&params.decision)),
        ]),
        selections: BTreeMap::from([
            ("select".to_string(), selection(&params.select)),
            ("ppc".to_string(), selection(&params.ppc)),
        ]),
    }
}

pub fn reasoning_roles() -> RoleMap {
    RoleMap {
        category: "category".into(),
        decision: "decision".into(),
        selection: "select".into(),
        ppc: "ppc".into(),
        entity: "entity".into(),
        scenario: "scenario".into(),
        fact: "fact".into(),
        salient: "salient".into(),
    }
}

/// Builds a prompt-selection table that makes the category independent of
/// every other ppc parent once both selections are conditioned on.
///
/// For each parent assignment it weights acceptance by
/// `P(rest | select=1) * P(category | select=1) / P(category, rest | select=1)`,
/// scaled so the largest weight is 1. After this reweighting the selected
/// population factorizes between the category and the rest, so every
/// premise of the decoupling check holds by construction.
///
/// Requires strictly positive mass on every ppc-parent assignment given
/// `select = 1`.
pub fn neutralizing_ppc(
    graph: &CausalGraph,
    roles: &RoleMap,
) -> Result<SelectionTable, CausalError> {
    let parents: Vec<String> =
        graph.parents_of(&roles.ppc)?.into_iter().map(str::to_string).collect();
    if !parents.iter().any(|p| p == &roles.category) {
        return Err(CausalError::TopologyMismatch {
            detail: format!("'{}' is not a parent of '{}'", roles.category, roles.ppc),
        });
    }
    for required in [&roles.entity, &roles.scenario, &roles.fact, &roles.salient] {
        if !parents.iter().any(|p| p == required) {
            return Err(CausalError::TopologyMismatch {
                detail: format!("'{required}' is not a parent of '{}'", roles.ppc),
            });
        }
    }

    let joint = graph.joint_distribution()?;
    let selected = joint.condition(&[(roles.selection.as_str(), "1")])?;
    let parent_refs: Vec<&str> = parents.iter().map(String::as_str).collect();
    let over_parents = selected.marginal(&parent_refs)?;
    let rest: Vec<&str> =
        parent_refs.iter().copied().filter(|p| *p != roles.category).collect();
    let over_rest = over_parents.marginal(&rest)?;
    let over_category = over_parents.marginal(&[roles.category.as_str()])?;

    let domains: Vec<Vec<String>> = parents
        .iter()
        .map(|p| graph.domain_of(p).map(<[String]>::to_vec))
        .collect::<Result<_, _>>()?;
    let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
    let mut digits = vec![0usize; parents.len()];
    let total: usize = sizes.iter().product();

    let mut weights: Vec<(String, f64)> = Vec::with_capacity(total);
    let mut max_weight = 0.0f64;
    for _ in 0..total {
        let assignment: Vec<(&str, &str)> = parents
            .iter()
            .zip(&digits)
            .map(|(p, &d)| (p.as_str(), domains_value(&domains, &parents, p, d)))
            .collect();
        let p_all = over_parents.prob(&assignment)?;
        if p_all <= 0.0 {
            return Err(CausalError::InvalidSpec {
                detail: format!(
                    "assignment {:?} has zero mass under the corpus selection; \
                     the reweighting is undefined",
                    assignment
                ),
            });
        }
        let rest_assignment: Vec<(&str, &str)> =
            assignment.iter().copied().filter(|(n, _)| *n != roles.category).collect();
        let category_value = assignment
            .iter()
            .find(|(n, _)| *n == roles.category)
            .map(|(_, v)| *v)
            .unwrap();
        let w = over_rest.prob(&rest_assignment)?
            * over_category.prob(&[(roles.category.as_str(), category_value)])?
            / p_all;
        max_weight = max_weight.max(w);
        let key: Vec<&str> = assignment.iter().map(|(_, v)| *v).collect();
        weights.push((key.join("|"), w));
        bump(&mut digits, &sizes);
    }

    Ok(weights.into_iter().map(|(k, w)| (k, w / max_weight)).collect())
}

fn domains_value<'a>(
    domains: &'a [Vec<String>],
    parents: &[String],
    parent: &str,
    digit: usize,
) -> &'a str {
    let i = parents.iter().position(|p| p == parent).unwrap();
    domains[i][digit].as_str()
}

fn bump(digits: &mut [usize], sizes: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < sizes[i] {
            return;
        }
        digits[i] = 0;
    }
}

/// Two independent diseases with one symptom each, plus five selection
/// nodes: on a cause (s1), on an effect (s2), on a cause-effect pair (s3),
/// on the two symptoms (s4, hospital admission), and on the two diseases
/// (s5). Conditioning on s4 couples the marginally independent diseases.
#[derive(Debug, Clone)]
pub struct ClinicParams {
    pub p_disease_a: f64,
    pub p_disease_b: f64,
    /// P(symptom_a = 1 | disease_a), indexed by disease value.
    pub symptom_a: [f64; 2],
    pub symptom_b: [f64; 2],
}

impl Default for ClinicParams {
    fn default() -> Self {
        Self {
            p_disease_a: 0.3,
            p_disease_b: 0.2,
            symptom_a: [0.05, 0.9],
            symptom_b: [0.1, 0.85],
        }
    }
}

pub fn clinic_graph_spec(params: &ClinicParams) -> GraphSpec {
    GraphSpec {
        nodes: vec![
            binary("x1", NodeRole::Observed),
            binary("x2", NodeRole::Observed),
            binary("y1", NodeRole::Observed),
            binary("y2", NodeRole::Observed),
            binary("s1", NodeRole::Selection),
            binary("s2", NodeRole::Selection),
            binary("s3", NodeRole::Selection),
            binary("s4", NodeRole::Selection),
            binary("s5", NodeRole::Selection),
        ],
        edges: vec![
            edge("x1", "y1", EdgeLabel::Plain),
            edge("x2", "y2", EdgeLabel::Plain),
            edge("x1", "s1", EdgeLabel::Plain),
            edge("y1", "s2", EdgeLabel::Plain),
            edge("x2", "s3", EdgeLabel::Plain),
            edge("y2", "s3", EdgeLabel::Plain),
            edge("y1", "s4", EdgeLabel::Plain),
            edge("y2", "s4", EdgeLabel::Plain),
            edge("x1", "s5", EdgeLabel::Plain),
            edge("x2", "s5", EdgeLabel::Plain),
        ],
        cpts: BTreeMap::from([
            ("x1".to_string(), root_cpt(params.p_disease_a)),
            ("x2".to_string(), root_cpt(params.p_disease_b)),
            ("y1".to_string(), table_cpt(&params.symptom_a)),
            ("y2".to_string(), table_cpt(&params.symptom_b)),
        ]),
        selections: BTreeMap::from([
            ("s1".to_string(), selection(&[0.05, 0.7])),
            ("s2".to_string(), selection(&[0.05, 0.8])),
            ("s3".to_string(), selection(&[0.02, 0.6, 0.5, 0.9])),
            // Admission happens exactly when either symptom is present.
            ("s4".to_string(), selection(&[0.0, 1.0, 1.0, 1.0])),
            ("s5".to_string(), selection(&[0.1, 0.5, 0.5, 0.8])),
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::theorem::verify_theorem;
    use crate::tol;

    #[test]
    fn reasoning_graph_builds_with_256_states() {
        let g = build_graph(reasoning_graph_spec(&ReasoningParams::seeded(11))).unwrap();
        assert_eq!(g.joint_state_count(), 256);
        assert!((g.joint_distribution().unwrap().sum() - 1.0).abs() < tol::JOINT_SUM);
    }

    #[test]
    fn neutralizing_table_satisfies_every_premise() {
        let g = build_graph(reasoning_graph_spec(&ReasoningParams::seeded(12))).unwrap();
        let roles = reasoning_roles();
        let table = neutralizing_ppc(&g, &roles).unwrap();
        let fixed = g.with_selection_table("ppc", table).unwrap();
        let report = verify_theorem(&fixed, &roles).unwrap();
        assert!(report.premises_hold(), "premise MIs: {:?}", report.premises);
        assert!(report.conclusion_holds());
        assert!(report.max_premise_mi() < 1e-12);
    }

    #[test]
    fn clinic_graph_couples_diseases_only_under_admission() {
        let g = build_graph(clinic_graph_spec(&ClinicParams::default())).unwrap();
        let joint = g.joint_distribution().unwrap();
        let marginal_mi = joint.mutual_information("x1", "x2").unwrap();
        assert!(marginal_mi < 1e-12, "marginal MI {marginal_mi}");
        let admitted = joint.condition(&[("s4", "1")]).unwrap();
        let admitted_mi = admitted.mutual_information("x1", "x2").unwrap();
        assert!(admitted_mi > 0.01, "admitted MI {admitted_mi}");
    }
}
