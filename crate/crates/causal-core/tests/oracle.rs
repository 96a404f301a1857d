//! Cross-checks exact inference against naive reference implementations.

mod common;

use std::collections::BTreeMap;

use causal_core::{
    build_graph, catalog, test_independence, tol, EdgeLabel, EdgeSpec, GraphSpec, NodeRole,
    NodeSpec, Verdict,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_spec(rng: &mut ChaCha8Rng) -> GraphSpec {
    let n: usize = rng.gen_range(2..=6);
    let mut edges = Vec::new();
    let mut has_out = vec![false; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
                has_out[i] = true;
            }
        }
    }
    let roles: Vec<NodeRole> = (0..n)
        .map(|i| {
            if !has_out[i] && rng.gen_bool(0.4) {
                NodeRole::Selection
            } else if rng.gen_bool(0.5) {
                NodeRole::Observed
            } else {
                NodeRole::InternalRepresentation
            }
        })
        .collect();

    let nodes: Vec<NodeSpec> = (0..n)
        .map(|i| NodeSpec {
            name: format!("v{i}"),
            domain: vec!["0".into(), "1".into()],
            role: roles[i],
        })
        .collect();

    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &edges {
        parents[j].push(i);
    }

    let mut cpts = BTreeMap::new();
    let mut selections = BTreeMap::new();
    for i in 0..n {
        let rows = 1usize << parents[i].len();
        let keys: Vec<String> = (0..rows)
            .map(|r| {
                (0..parents[i].len())
                    .map(|b| ((r >> (parents[i].len() - 1 - b)) & 1).to_string())
                    .collect::<Vec<_>>()
                    .join("|")
            })
            .collect();
        if roles[i] == NodeRole::Selection {
            let table: BTreeMap<String, f64> =
                keys.into_iter().map(|k| (k, rng.gen_range(0.02..=0.98))).collect();
            selections.insert(format!("v{i}"), table);
        } else {
            let table: BTreeMap<String, Vec<f64>> = keys
                .into_iter()
                .map(|k| {
                    let p: f64 = rng.gen_range(0.02..=0.98);
                    (k, vec![1.0 - p, p])
                })
                .collect();
            cpts.insert(format!("v{i}"), table);
        }
    }

    GraphSpec {
        nodes,
        edges: edges
            .into_iter()
            .map(|(i, j)| EdgeSpec {
                from: format!("v{i}"),
                to: format!("v{j}"),
                label: EdgeLabel::Plain,
            })
            .collect(),
        cpts,
        selections,
    }
}

#[test]
fn module_cmi_matches_naive_reference_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let cases = 500;
    let mut checked = 0;
    for _ in 0..cases {
        let spec = random_spec(&mut rng);
        let n = spec.nodes.len();
        let xi = rng.gen_range(0..n);
        let mut yi = rng.gen_range(0..n);
        while yi == xi {
            yi = rng.gen_range(0..n);
        }
        let x = format!("v{xi}");
        let y = format!("v{yi}");
        let mut evidence: Vec<(String, String)> = Vec::new();
        for i in 0..n {
            if i != xi && i != yi && rng.gen_bool(0.35) {
                evidence.push((format!("v{i}"), rng.gen_range(0..=1).to_string()));
            }
        }
        let ev_refs: Vec<(&str, &str)> =
            evidence.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();

        let oracle = common::naive_joint(&spec);
        let (expected, mass) = oracle.cmi(&x, &y, &ev_refs);
        assert!(mass > tol::EVIDENCE_FLOOR, "probabilities are bounded away from zero");

        let graph = build_graph(spec).unwrap();
        let joint = graph.joint_distribution().unwrap();
        let report =
            test_independence(&joint, &x, &y, &ev_refs, tol::INDEPENDENCE_THRESHOLD).unwrap();
        assert!(
            (report.mutual_information - expected).abs() <= 1e-12,
            "module {} vs oracle {} on x={x} y={y} ev={evidence:?}",
            report.mutual_information,
            expected
        );
        checked += 1;
    }
    assert_eq!(checked, cases);
}

/// The clinic numbers worked out with nothing but the four CPT parameters:
/// P(admitted | x1, x2) = 1 - (1 - P(y1=1|x1)) * (1 - P(y2=1|x2)), then a
/// 2x2 table over the diseases and a double-loop MI.
fn hand_admission_mi() -> f64 {
    let p = catalog::ClinicParams::default();
    let px1 = [1.0 - p.p_disease_a, p.p_disease_a];
    let px2 = [1.0 - p.p_disease_b, p.p_disease_b];
    let mut cells = [[0.0f64; 2]; 2];
    let mut mass = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let admit = 1.0 - (1.0 - p.symptom_a[a]) * (1.0 - p.symptom_b[b]);
            cells[a][b] = px1[a] * px2[b] * admit;
            mass += cells[a][b];
        }
    }
    let mut pa = [0.0f64; 2];
    let mut pb = [0.0f64; 2];
    for a in 0..2 {
        for b in 0..2 {
            cells[a][b] /= mass;
            pa[a] += cells[a][b];
            pb[b] += cells[a][b];
        }
    }
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            mi += cells[a][b] * (cells[a][b] / (pa[a] * pb[b])).ln();
        }
    }
    mi
}

#[test]
fn admission_conditioning_matches_the_two_by_two_oracle() {
    let spec = catalog::clinic_graph_spec(&catalog::ClinicParams::default());
    let graph = build_graph(spec.clone()).unwrap();
    let joint = graph.joint_distribution().unwrap();

    let marginal =
        test_independence(&joint, "x1", "x2", &[], tol::INDEPENDENCE_THRESHOLD).unwrap();
    assert_eq!(marginal.verdict, Verdict::Independent);
    assert!(marginal.mutual_information < 1e-12);

    let admitted =
        test_independence(&joint, "x1", "x2", &[("s4", "1")], tol::INDEPENDENCE_THRESHOLD)
            .unwrap();
    assert_eq!(admitted.verdict, Verdict::Dependent);
    assert!(admitted.mutual_information > 0.01);

    let hand = hand_admission_mi();
    assert!(
        (admitted.mutual_information - hand).abs() <= 1e-12,
        "module {} vs hand oracle {}",
        admitted.mutual_information,
        hand
    );

    // Same number through the naive full-joint reference.
    let (naive, _) = common::naive_joint(&spec).cmi("x1", "x2", &[("s4", "1")]);
    assert!((admitted.mutual_information - naive).abs() <= 1e-12);

    // Frozen value of the hand oracle for the default clinic parameters.
    assert!((hand - 0.07748714633451098).abs() < 1e-15, "hand oracle moved: {hand}");
}
