//! Exact inference by variable elimination.

use std::collections::{BTreeMap, BTreeSet};

use super::factor::Factor;
use super::{BayesianNetwork, BnError, Evidence, Posterior, Result};

/// Probability of a full assignment: the product of one CPT entry per variable.
pub fn joint_probability(net: &BayesianNetwork, assignment: &Evidence) -> Result<f64> {
    let resolved = assignment.resolve(net)?;
    let mut states = vec![usize::MAX; net.len()];
    for (v, s) in resolved {
        states[v] = s;
    }
    if let Some(missing) = states.iter().position(|&s| s == usize::MAX) {
        return Err(BnError::IncompleteAssignment(net.name(missing).to_string()));
    }
    let mut p = 1.0;
    for v in 0..net.len() {
        let mut row = 0;
        for &parent in net.parent_indices(v) {
            row = row * net.cardinality(parent) + states[parent];
        }
        p *= net.table(v)[row * net.cardinality(v) + states[v]];
    }
    Ok(p)
}

/// Exact `P(target | evidence)`.
///
/// An observed target yields a point mass on its observed state. Evidence with zero
/// probability is reported as [`BnError::InconsistentEvidence`].
pub fn posterior(net: &BayesianNetwork, evidence: &Evidence, target: &str) -> Result<Posterior> {
    let query = Query::new(net, evidence, target)?;
    let order = min_degree_order(&query.factors, &query.hidden);
    query.finish(net, order)
}

/// Like [`posterior`] but eliminates hidden variables in the caller's order.
///
/// `order` must list every unobserved variable other than `target` exactly once.
pub fn posterior_with_order(
    net: &BayesianNetwork,
    evidence: &Evidence,
    target: &str,
    order: &[&str],
) -> Result<Posterior> {
    let query = Query::new(net, evidence, target)?;
    let t = net.index_of(target)?;
    let observed: BTreeSet<usize> = evidence.resolve(net)?.into_iter().map(|(v, _)| v).collect();
    let expected: BTreeSet<usize> = (0..net.len())
        .filter(|v| *v != t && !observed.contains(v))
        .collect();
    let given: Vec<usize> = order.iter().map(|n| net.index_of(n)).collect::<Result<_>>()?;
    let given_set: BTreeSet<usize> = given.iter().copied().collect();
    if given_set.len() != given.len() || given_set != expected {
        return Err(BnError::InvalidOrder(
            "must list each hidden variable exactly once".into(),
        ));
    }
    let relevant: BTreeSet<usize> = query.hidden.iter().copied().collect();
    let order = given.into_iter().filter(|v| relevant.contains(v)).collect();
    query.finish(net, order)
}

/// Posteriors for several targets under the same evidence.
pub fn posteriors(
    net: &BayesianNetwork,
    evidence: &Evidence,
    targets: &[&str],
) -> Result<Vec<Posterior>> {
    targets.iter().map(|t| posterior(net, evidence, t)).collect()
}

/// Marginal of every variable with no evidence.
pub fn prior_marginals(net: &BayesianNetwork) -> BTreeMap<String, Posterior> {
    let empty = Evidence::new();
    net.variables()
        .iter()
        .map(|v| {
            let p = posterior(net, &empty, &v.id).expect("a valid network has no zero-probability empty evidence");
            (v.id.clone(), p)
        })
        .collect()
}

/// Most probable state of `class_var` given `evidence`, earliest declared state on ties.
pub fn map_predict(net: &BayesianNetwork, evidence: &Evidence, class_var: &str) -> Result<String> {
    net.index_of(class_var)?;
    if evidence.contains(class_var) {
        return Err(BnError::ClassObserved(class_var.to_string()));
    }
    Ok(posterior(net, evidence, class_var)?.argmax().to_string())
}

struct Query {
    target: usize,
    /// Observed state of the target, if any.
    target_state: Option<usize>,
    factors: Vec<Factor>,
    hidden: Vec<usize>,
}

impl Query {
    fn new(net: &BayesianNetwork, evidence: &Evidence, target: &str) -> Result<Self> {
        let t = net.index_of(target)?;
        let resolved = evidence.resolve(net)?;
        let target_state = resolved.iter().find(|(v, _)| *v == t).map(|&(_, s)| s);
        let observed: Vec<(usize, usize)> = resolved.into_iter().filter(|(v, _)| *v != t).collect();

        // Only ancestors of the target and the evidence influence the answer.
        let mut relevant = vec![false; net.len()];
        let mut stack: Vec<usize> = observed.iter().map(|&(v, _)| v).chain([t]).collect();
        while let Some(v) = stack.pop() {
            if !relevant[v] {
                relevant[v] = true;
                stack.extend_from_slice(net.parent_indices(v));
            }
        }

        let mut factors = Vec::new();
        for v in (0..net.len()).filter(|&v| relevant[v]) {
            let mut scope = net.parent_indices(v).to_vec();
            scope.push(v);
            let cards = scope.iter().map(|&i| net.cardinality(i)).collect();
            let mut f = Factor::new(scope, cards, net.table(v).to_vec());
            for &(ov, os) in &observed {
                if f.contains(ov) {
                    f = f.reduce(ov, os);
                }
            }
            factors.push(f);
        }
        let hidden = (0..net.len())
            .filter(|&v| relevant[v] && v != t && !observed.iter().any(|&(o, _)| o == v))
            .collect();
        Ok(Query {
            target: t,
            target_state,
            factors,
            hidden,
        })
    }

    fn finish(self, net: &BayesianNetwork, order: Vec<usize>) -> Result<Posterior> {
        let mut factors = self.factors;
        for var in order {
            let (touching, rest): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.contains(var));
            factors = rest;
            if let Some(joined) = touching.into_iter().reduce(|a, b| a.product(&b)) {
                factors.push(joined.marginalize(var));
            }
        }
        let joint = factors
            .into_iter()
            .fold(Factor::scalar(1.0), |acc, f| acc.product(&f));
        // the target's own CPT factor keeps it in scope until the end
        debug_assert_eq!(joint.scope, vec![self.target]);
        let unnormalized = joint.values;

        let states = &net.variables()[self.target].states;
        let probabilities = match self.target_state {
            Some(observed) => {
                if unnormalized[observed] <= 0.0 {
                    return Err(BnError::InconsistentEvidence);
                }
                states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), if i == observed { 1.0 } else { 0.0 }))
                    .collect()
            }
            None => {
                let z: f64 = unnormalized.iter().sum();
                if z <= 0.0 {
                    return Err(BnError::InconsistentEvidence);
                }
                states
                    .iter()
                    .cloned()
                    .zip(unnormalized.iter().map(|p| p / z))
                    .collect()
            }
        };
        Ok(Posterior {
            variable: net.name(self.target).to_string(),
            probabilities,
        })
    }
}

/// Greedy elimination order: repeatedly pick the hidden variable with the fewest
/// neighbours in the interaction graph (lowest index on ties), then connect its neighbours.
fn min_degree_order(factors: &[Factor], hidden: &[usize]) -> Vec<usize> {
    let mut neighbours: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in factors {
        for &a in &f.scope {
            let entry = neighbours.entry(a).or_default();
            entry.extend(f.scope.iter().copied().filter(|&b| b != a));
        }
    }
    let mut remaining: BTreeSet<usize> = hidden.iter().copied().collect();
    let mut order = Vec::with_capacity(remaining.len());
    while let Some(&next) = remaining
        .iter()
        .min_by_key(|&&v| (neighbours.get(&v).map_or(0, BTreeSet::len), v))
    {
        remaining.remove(&next);
        order.push(next);
        let adjacent = neighbours.remove(&next).unwrap_or_default();
        for &a in &adjacent {
            let set = neighbours.entry(a).or_default();
            set.remove(&next);
            set.extend(adjacent.iter().copied().filter(|&b| b != a));
        }
    }
    order
}
