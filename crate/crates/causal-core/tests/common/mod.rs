//! Naive reference implementations used only to cross-check the crate.
//! Everything here works straight off the `GraphSpec` maps with plain loops,
//! sharing no inference code with the library.

use std::collections::BTreeMap;

use causal_core::{GraphSpec, NodeRole};

/// One fully enumerated joint: assignment (node name -> value index) paired
/// with its probability, in no particular order.
pub struct NaiveJoint {
    pub names: Vec<String>,
    pub domains: Vec<Vec<String>>,
    pub rows: Vec<(Vec<usize>, f64)>,
}

/// Multiplies CPT and selection rows for every assignment, looking rows up
/// by rebuilding the `|`-joined parent keys from the spec's edge list.
pub fn naive_joint(spec: &GraphSpec) -> NaiveJoint {
    let names: Vec<String> = spec.nodes.iter().map(|n| n.name.clone()).collect();
    let domains: Vec<Vec<String>> = spec.nodes.iter().map(|n| n.domain.clone()).collect();
    let index: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for e in &spec.edges {
        parents[index[e.to.as_str()]].push(index[e.from.as_str()]);
    }

    let mut rows = Vec::new();
    let sizes: Vec<usize> = domains.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut digits = vec![0usize; names.len()];
    for _ in 0..total {
        let mut p = 1.0f64;
        for (i, node) in spec.nodes.iter().enumerate() {
            let key = parents[i]
                .iter()
                .map(|&pi| domains[pi][digits[pi]].clone())
                .collect::<Vec<_>>()
                .join("|");
            p *= match node.role {
                NodeRole::Selection => {
                    let sel = spec.selections[&node.name][&key];
                    if digits[i] == 1 {
                        sel
                    } else {
                        1.0 - sel
                    }
                }
                _ => spec.cpts[&node.name][&key][digits[i]],
            };
        }
        rows.push((digits.clone(), p));
        // Odometer, last node fastest.
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < sizes[i] {
                break;
            }
            digits[i] = 0;
        }
    }
    NaiveJoint { names, domains, rows }
}

impl NaiveJoint {
    fn pos(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap()
    }

    /// I(x; y | evidence) in nats by direct double loops over the value
    /// grids. Returns the conditional-joint mass as well so callers can
    /// detect unconditionable evidence.
    pub fn cmi(&self, x: &str, y: &str, evidence: &[(&str, &str)]) -> (f64, f64) {
        let xi = self.pos(x);
        let yi = self.pos(y);
        let ev: Vec<(usize, usize)> = evidence
            .iter()
            .map(|(n, v)| {
                let ni = self.pos(n);
                (ni, self.domains[ni].iter().position(|d| d == v).unwrap())
            })
            .collect();

        let nx = self.domains[xi].len();
        let ny = self.domains[yi].len();
        let mut grid = vec![vec![0.0f64; ny]; nx];
        let mut mass = 0.0f64;
        for (digits, p) in &self.rows {
            if ev.iter().all(|&(ni, vi)| digits[ni] == vi) {
                grid[digits[xi]][digits[yi]] += p;
                mass += p;
            }
        }
        if mass <= 0.0 {
            return (f64::NAN, mass);
        }

        let mut px = vec![0.0f64; nx];
        let mut py = vec![0.0f64; ny];
        for a in 0..nx {
            for b in 0..ny {
                grid[a][b] /= mass;
                px[a] += grid[a][b];
            }
        }
        for b in 0..ny {
            for a in 0..nx {
                py[b] += grid[a][b];
            }
        }
        let mut mi = 0.0f64;
        for a in 0..nx {
            for b in 0..ny {
                if grid[a][b] > 0.0 {
                    mi += grid[a][b] * (grid[a][b] / (px[a] * py[b])).ln();
                }
            }
        }
        (mi.max(0.0), mass)
    }
}
