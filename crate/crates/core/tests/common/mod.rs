//! Random networks and a brute-force enumeration oracle shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use requisites::bn::{build_network, BayesianNetwork, Cpt, Evidence, Variable};

/// A network with up to `max_vars` variables of 2–3 states, at most three parents each and
/// CPT rows that occasionally contain zeros. Declaration order, parent order inside CPTs and
/// the hidden topological order are all shuffled.
pub fn random_network(seed: u64, max_vars: usize) -> BayesianNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_vars);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();

    // variables are created in topological order 0..n and then declared shuffled
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, own) in parents.iter_mut().enumerate().skip(1) {
        let mut candidates: Vec<usize> = (0..child).collect();
        candidates.shuffle(&mut rng);
        for p in candidates {
            if own.len() < 3 && rng.random_bool(0.4) {
                own.push(p);
            }
        }
    }

    let mut variables: Vec<Variable> = (0..n)
        .map(|i| Variable::new(&names[i], (0..cards[i]).map(|s| format!("s{s}"))))
        .collect();
    variables.shuffle(&mut rng);

    let mut edges = Vec::new();
    let mut cpts = Vec::new();
    for child in 0..n {
        for &p in &parents[child] {
            edges.push((names[p].clone(), names[child].clone()));
        }
        let rows: usize = parents[child].iter().map(|&p| cards[p]).product();
        let table = (0..rows).map(|_| random_row(&mut rng, cards[child])).collect();
        cpts.push(Cpt::new(
            &names[child],
            parents[child].iter().map(|&p| names[p].clone()).collect(),
            table,
        ));
    }
    edges.shuffle(&mut rng);
    cpts.shuffle(&mut rng);
    build_network(variables, edges, cpts).expect("generated network is valid")
}

fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.01..1.0) })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|x| x / total).collect();
        }
    }
}

/// Each variable observed with probability `p` in a uniformly random state.
pub fn random_evidence(net: &BayesianNetwork, seed: u64, p: f64) -> Evidence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Evidence::new();
    for v in net.variables() {
        if rng.random_bool(p) {
            let s = rng.random_range(0..v.states.len());
            e.insert(v.id.clone(), v.states[s].clone());
        }
    }
    e
}

/// A full assignment drawn by forward sampling, so it always has positive probability.
pub fn sample_assignment(net: &BayesianNetwork, seed: u64) -> Evidence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn: BTreeMap<String, usize> = BTreeMap::new();
    for id in net.topological_order() {
        let var = net.variable(id).unwrap();
        let cpt = net.cpt(id).unwrap();
        let mut row = 0;
        for p in &cpt.parents {
            row = row * net.variable(p).unwrap().states.len() + drawn[p];
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut state = var.states.len() - 1;
        for (s, p) in cpt.rows[row].iter().enumerate() {
            acc += p;
            if u < acc && *p > 0.0 {
                state = s;
                break;
            }
        }
        // guard against rounding landing on a zero-probability last state
        if cpt.rows[row][state] == 0.0 {
            state = cpt.rows[row].iter().position(|&p| p > 0.0).unwrap();
        }
        drawn.insert(id.to_string(), state);
    }
    drawn
        .into_iter()
        .map(|(id, s)| {
            let state = net.variable(&id).unwrap().states[s].clone();
            (id, state)
        })
        .collect()
}

/// `P(target | evidence)` by summing the full joint over every assignment. `None` when the
/// evidence has probability zero.
pub fn enumerate_posterior(net: &BayesianNetwork, evidence: &Evidence, target: &str) -> Option<Vec<f64>> {
    let vars = net.variables();
    let position: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
    let cpts: Vec<Cpt> = vars.iter().map(|v| net.cpt(&v.id).unwrap()).collect();
    let observed: Vec<Option<usize>> = vars
        .iter()
        .map(|v| evidence.get(&v.id).map(|s| v.state_index(s).unwrap()))
        .collect();
    let t = position[target];
    let mut totals = vec![0.0; vars[t].states.len()];

    let mut assignment = vec![0usize; vars.len()];
    loop {
        if assignment.iter().zip(&observed).all(|(a, o)| o.is_none_or(|s| s == *a)) {
            let mut joint = 1.0;
            for (i, cpt) in cpts.iter().enumerate() {
                let mut row = 0;
                for p in &cpt.parents {
                    let pi = position[p.as_str()];
                    row = row * vars[pi].states.len() + assignment[pi];
                }
                joint *= cpt.rows[row][assignment[i]];
            }
            totals[assignment[t]] += joint;
        }
        // odometer over all assignments
        let mut i = 0;
        loop {
            if i == vars.len() {
                let z: f64 = totals.iter().sum();
                return (z > 0.0).then(|| totals.iter().map(|x| x / z).collect());
            }
            assignment[i] += 1;
            if assignment[i] < vars[i].states.len() {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

/// Largest absolute difference between two distributions of equal length.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `(parent, child)` edges of the Requisites structure, written out independently of the
/// library.
pub const REQUISITES_EDGES: [(&str, &str); 15] = [
    ("degree_of_commitment", "specificity"),
    ("stakeholders_expertise", "unclear_cost_benefit"),
    ("domain_expertise", "requirement_completeness"),
    ("stakeholders_expertise", "requirement_completeness"),
    ("domain_expertise", "homogeneity_of_description"),
    ("stakeholders_expertise", "homogeneity_of_description"),
    ("unexpected_dependencies", "requirement_variability"),
    ("unclear_cost_benefit", "requirement_variability"),
    ("requirement_completeness", "requirement_variability"),
    ("degree_of_commitment", "requirement_variability"),
    ("specificity", "degree_of_revision"),
    ("homogeneity_of_description", "degree_of_revision"),
    ("requirement_variability", "degree_of_revision"),
    ("requirement_completeness", "degree_of_revision"),
    ("reused_requirement", "degree_of_revision"),
];

/// Markov blanket from an edge list by the textbook definition.
pub fn blanket_from_edges(edges: &[(&str, &str)], var: &str) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    for &(p, c) in edges {
        if c == var {
            out.insert(p.to_string());
        }
        if p == var {
            out.insert(c.to_string());
            for &(p2, c2) in edges {
                if c2 == c && p2 != var {
                    out.insert(p2.to_string());
                }
            }
        }
    }
    out
}

pub fn fixture_dir(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
