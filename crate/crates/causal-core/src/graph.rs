//! Causal graph specs and their validated, enumerable form.
//!
//! A graph mixes ordinary nodes (with CPTs) and selection nodes. A selection
//! node is a binary sink whose table gives P(selected = 1 | parents); value
//! "1" means the sample passes the selection. Conditioning the joint on a
//! selection node set to "1" models studying only the selected population.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::CausalError;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Observed,
    InternalRepresentation,
    Selection,
}

/// Edge annotations. Labels are metadata for reports and diagrams only; they
/// never change inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeLabel {
    #[default]
    #[serde(rename = "plain")]
    Plain,
    #[serde(rename = "red-1")]
    Red1,
    #[serde(rename = "red-2")]
    Red2,
    #[serde(rename = "red-3")]
    Red3,
    #[serde(rename = "red-4")]
    Red4,
    #[serde(rename = "red-5")]
    Red5,
    #[serde(rename = "red-6")]
    Red6,
    #[serde(rename = "blue-i")]
    BlueI,
    #[serde(rename = "blue-ii")]
    BlueII,
    #[serde(rename = "blue-iii")]
    BlueIII,
    #[serde(rename = "blue-iv")]
    BlueIV,
    #[serde(rename = "blue-v")]
    BlueV,
    #[serde(rename = "red-vi")]
    RedVI,
    #[serde(rename = "red-vii")]
    RedVII,
    #[serde(rename = "red-viii")]
    RedVIII,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub domain: Vec<String>,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub label: EdgeLabel,
}

/// Table for one selection node: parent-assignment key to P(selected = 1).
pub type SelectionTable = BTreeMap<String, f64>;

/// Serializable graph description.
///
/// CPT and selection rows are keyed by the parent values joined with `|` in
/// declared parent order (the order the incoming edges appear in `edges`).
/// Root nodes use the single key `""`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub cpts: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    #[serde(default)]
    pub selections: BTreeMap<String, SelectionTable>,
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self, CausalError> {
        serde_json::from_str(text)
            .map_err(|e| CausalError::InvalidSpec { detail: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph spec serializes")
    }
}

#[derive(Debug, Clone)]
pub struct CausalGraph {
    spec: GraphSpec,
    index: BTreeMap<String, usize>,
    parents: Vec<Vec<usize>>,
    topo: Vec<usize>,
    /// Per node, a dense factor laid out as
    /// `[parent_state * |domain| + value]`, parent state mixed-radix in
    /// declared parent order, first parent slowest.
    dense: Vec<Vec<f64>>,
    states: u128,
}

pub fn build_graph(spec: GraphSpec) -> Result<CausalGraph, CausalError> {
    build_graph_with_cap(spec, tol::STATE_CAP)
}

pub fn build_graph_with_cap(spec: GraphSpec, cap: u64) -> Result<CausalGraph, CausalError> {
    CausalGraph::build(spec, cap)
}

impl CausalGraph {
    fn build(spec: GraphSpec, cap: u64) -> Result<Self, CausalError> {
        let n = spec.nodes.len();
        if n == 0 {
            return Err(CausalError::InvalidSpec { detail: "graph has no nodes".into() });
        }
        let mut index = BTreeMap::new();
        for (i, node) in spec.nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(CausalError::InvalidSpec {
                    detail: format!("duplicate node name '{}'", node.name),
                });
            }
            if node.domain.is_empty() {
                return Err(CausalError::InvalidSpec {
                    detail: format!("node '{}' has an empty domain", node.name),
                });
            }
            let mut seen = node.domain.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != node.domain.len() {
                return Err(CausalError::InvalidSpec {
                    detail: format!("node '{}' repeats a domain value", node.name),
                });
            }
            if node.role == NodeRole::Selection && node.domain != ["0", "1"] {
                return Err(CausalError::InvalidSpec {
                    detail: format!(
                        "selection node '{}' must have domain [\"0\", \"1\"]",
                        node.name
                    ),
                });
            }
        }

        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for edge in &spec.edges {
            let from = *index.get(&edge.from).ok_or_else(|| CausalError::UnknownVariable {
                name: edge.from.clone(),
            })?;
            let to = *index.get(&edge.to).ok_or_else(|| CausalError::UnknownVariable {
                name: edge.to.clone(),
            })?;
            if from == to {
                return Err(CausalError::CycleDetected { node: edge.from.clone() });
            }
            if spec.nodes[from].role == NodeRole::Selection {
                return Err(CausalError::InvalidSpec {
                    detail: format!(
                        "selection node '{}' has an outgoing edge; selection nodes are sinks",
                        edge.from
                    ),
                });
            }
            if parents[to].contains(&from) {
                return Err(CausalError::InvalidSpec {
                    detail: format!("duplicate edge {} -> {}", edge.from, edge.to),
                });
            }
            parents[to].push(from);
            children[from].push(to);
        }

        let topo = topo_sort(&spec, &parents, &children)?;

        let mut states: u128 = 1;
        for node in &spec.nodes {
            states = states.saturating_mul(node.domain.len() as u128);
        }
        if states > cap as u128 {
            return Err(CausalError::StateSpaceTooLarge { states, cap });
        }

        let mut dense: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (i, node) in spec.nodes.iter().enumerate() {
            let parent_sizes: Vec<usize> =
                parents[i].iter().map(|&p| spec.nodes[p].domain.len()).collect();
            let rows: usize = parent_sizes.iter().product();
            let table = match node.role {
                NodeRole::Selection => {
                    if spec.cpts.contains_key(&node.name) {
                        return Err(CausalError::InvalidSpec {
                            detail: format!(
                                "selection node '{}' must use 'selections', not 'cpts'",
                                node.name
                            ),
                        });
                    }
                    let rows_spec = spec.selections.get(&node.name).ok_or_else(|| {
                        CausalError::CptShapeMismatch {
                            node: node.name.clone(),
                            detail: "missing selection table".into(),
                        }
                    })?;
                    build_selection_dense(node, rows_spec, &spec, &parents[i], rows)?
                }
                _ => {
                    if spec.selections.contains_key(&node.name) {
                        return Err(CausalError::InvalidSpec {
                            detail: format!(
                                "node '{}' is not a selection node but appears in 'selections'",
                                node.name
                            ),
                        });
                    }
                    let rows_spec = spec.cpts.get(&node.name).ok_or_else(|| {
                        CausalError::CptShapeMismatch {
                            node: node.name.clone(),
                            detail: "missing cpt".into(),
                        }
                    })?;
                    build_cpt_dense(node, rows_spec, &spec, &parents[i], rows)?
                }
            };
            dense.push(table);
        }

        Ok(Self { spec, index, parents, topo, dense, states })
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn node_names(&self) -> Vec<&str> {
        self.spec.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    pub fn role(&self, name: &str) -> Result<NodeRole, CausalError> {
        let i = self.node_index(name)?;
        Ok(self.spec.nodes[i].role)
    }

    pub fn parents_of(&self, name: &str) -> Result<Vec<&str>, CausalError> {
        let i = self.node_index(name)?;
        Ok(self.parents[i].iter().map(|&p| self.spec.nodes[p].name.as_str()).collect())
    }

    pub fn domain_of(&self, name: &str) -> Result<&[String], CausalError> {
        let i = self.node_index(name)?;
        Ok(&self.spec.nodes[i].domain)
    }

    pub fn joint_state_count(&self) -> u128 {
        self.states
    }

    fn node_index(&self, name: &str) -> Result<usize, CausalError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| CausalError::UnknownVariable { name: name.to_string() })
    }

    /// Selection table of a selection node, as written in the spec.
    pub fn selection_table(&self, name: &str) -> Option<&SelectionTable> {
        self.spec.selections.get(name)
    }

    /// Returns a copy of the graph with one selection node's table replaced.
    /// The replacement is validated like any other spec.
    pub fn with_selection_table(
        &self,
        name: &str,
        table: SelectionTable,
    ) -> Result<CausalGraph, CausalError> {
        let i = self.node_index(name)?;
        if self.spec.nodes[i].role != NodeRole::Selection {
            return Err(CausalError::InvalidSpec {
                detail: format!("node '{name}' is not a selection node"),
            });
        }
        let mut spec = self.spec.clone();
        spec.selections.insert(name.to_string(), table);
        CausalGraph::build(spec, tol::STATE_CAP.max(self.states as u64))
    }

    /// Exact joint over every node, selection nodes included, computed by
    /// multiplying the factors along a topological order for each state.
    pub fn joint_distribution(&self) -> Result<DiscreteDistribution, CausalError> {
        let order = &self.topo;
        let pos_in_order: BTreeMap<usize, usize> =
            order.iter().enumerate().map(|(pos, &node)| (node, pos)).collect();
        let sizes: Vec<usize> =
            order.iter().map(|&i| self.spec.nodes[i].domain.len()).collect();
        let total = self.states as usize;

        let mut probs = vec![0.0f64; total];
        let mut digits = vec![0usize; order.len()];
        for slot in probs.iter_mut() {
            let mut p = 1.0f64;
            for (pos, &node) in order.iter().enumerate() {
                let mut parent_state = 0usize;
                for &parent in &self.parents[node] {
                    let ppos = pos_in_order[&parent];
                    parent_state =
                        parent_state * self.spec.nodes[parent].domain.len() + digits[ppos];
                }
                let dom = self.spec.nodes[node].domain.len();
                p *= self.dense[node][parent_state * dom + digits[pos]];
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
            inc(&mut digits, &sizes);
        }

        DiscreteDistribution::new(
            order.iter().map(|&i| self.spec.nodes[i].name.clone()).collect(),
            order.iter().map(|&i| self.spec.nodes[i].domain.clone()).collect(),
            probs,
        )
    }
}

fn inc(digits: &mut [usize], sizes: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < sizes[i] {
            return;
        }
        digits[i] = 0;
    }
}

fn topo_sort(
    spec: &GraphSpec,
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
) -> Result<Vec<usize>, CausalError> {
    let n = spec.nodes.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    ready.sort();
    let mut order = Vec::with_capacity(n);
    while let Some(node) = ready.pop() {
        order.push(node);
        for &child in &children[node] {
            indegree[child] -= 1;
            if indegree[child] == 0 {
                ready.push(child);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
        return Err(CausalError::CycleDetected { node: spec.nodes[stuck].name.clone() });
    }
    Ok(order)
}

/// Enumerates parent-assignment keys in mixed-radix order, first parent
/// slowest, matching the dense layout.
fn parent_keys(spec: &GraphSpec, parents: &[usize]) -> Vec<String> {
    if parents.is_empty() {
        return vec![String::new()];
    }
    let mut keys = vec![String::new()];
    for &p in parents {
        let mut next = Vec::with_capacity(keys.len() * spec.nodes[p].domain.len());
        for prefix in &keys {
            for value in &spec.nodes[p].domain {
                if prefix.is_empty() {
                    next.push(value.clone());
                } else {
                    next.push(format!("{prefix}|{value}"));
                }
            }
        }
        keys = next;
    }
    keys
}

fn build_cpt_dense(
    node: &NodeSpec,
    rows: &BTreeMap<String, Vec<f64>>,
    spec: &GraphSpec,
    parents: &[usize],
    row_count: usize,
) -> Result<Vec<f64>, CausalError> {
    let keys = parent_keys(spec, parents);
    debug_assert_eq!(keys.len(), row_count);
    if rows.len() != row_count {
        return Err(CausalError::CptShapeMismatch {
            node: node.name.clone(),
            detail: format!("{} rows given, parents require {row_count}", rows.len()),
        });
    }
    let dom = node.domain.len();
    let mut dense = Vec::with_capacity(row_count * dom);
    for key in &keys {
        let row = rows.get(key).ok_or_else(|| CausalError::CptShapeMismatch {
            node: node.name.clone(),
            detail: format!("missing row for parent assignment '{key}'"),
        })?;
        if row.len() != dom {
            return Err(CausalError::CptShapeMismatch {
                node: node.name.clone(),
                detail: format!(
                    "row '{key}' has {} entries, domain has {dom}",
                    row.len()
                ),
            });
        }
        let mut sum = 0.0f64;
        for &p in row {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(CausalError::InvalidSpec {
                    detail: format!("node '{}' row '{key}' holds {p}, not a probability", node.name),
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > tol::CPT_ROW_SUM {
            return Err(CausalError::RowNotNormalized {
                node: node.name.clone(),
                key: key.clone(),
                sum,
            });
        }
        dense.extend_from_slice(row);
    }
    Ok(dense)
}

fn build_selection_dense(
    node: &NodeSpec,
    rows: &SelectionTable,
    spec: &GraphSpec,
    parents: &[usize],
    row_count: usize,
) -> Result<Vec<f64>, CausalError> {
    let keys = parent_keys(spec, parents);
    if rows.len() != row_count {
        return Err(CausalError::CptShapeMismatch {
            node: node.name.clone(),
            detail: format!("{} rows given, parents require {row_count}", rows.len()),
        });
    }
    let mut dense = Vec::with_capacity(row_count * 2);
    for key in &keys {
        let p = *rows.get(key).ok_or_else(|| CausalError::CptShapeMismatch {
            node: node.name.clone(),
            detail: format!("missing row for parent assignment '{key}'"),
        })?;
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(CausalError::InvalidSpec {
                detail: format!("selection node '{}' row '{key}' holds {p}", node.name),
            });
        }
        // Domain order is ["0", "1"], so P(0) first.
        dense.push(1.0 - p);
        dense.push(p);
    }
    Ok(dense)
}
