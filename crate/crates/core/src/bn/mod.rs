//! Discrete Bayesian networks: representation, validation and exact inference.
//!
//! A [`BayesianNetwork`] is built once through [`build_network`] and is immutable afterwards,
//! so it can be shared freely between threads. Inference runs variable elimination
//! (see [`posterior`]) and never mutates the network.

mod factor;
pub mod format;
mod inference;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub use inference::{
    joint_probability, map_predict, posterior, posterior_with_order, posteriors,
    prior_marginals,
};

/// Tolerance used when checking that a distribution sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` is declared more than once")]
    DuplicateVariable(String),
    #[error("variable `{variable}`: {reason}")]
    InvalidVariable { variable: String, reason: String },
    #[error("edge {0} -> {1} is declared more than once")]
    DuplicateEdge(String, String),
    #[error("directed cycle through {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("CPT for `{child}`: {reason}")]
    CptMismatch { child: String, reason: String },
    #[error("CPT for `{child}`, row {row}: entries sum to {sum}")]
    RowNotNormalized { child: String, row: usize, sum: f64 },
    #[error("state `{state}` is not legal for variable `{variable}`")]
    IllegalState { variable: String, state: String },
    #[error("assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),
    #[error("evidence has zero probability under the model")]
    InconsistentEvidence,
    #[error("class variable `{0}` carries evidence")]
    ClassObserved(String),
    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),
}

impl BnError {
    /// Stable identifier of the error kind, used in CLI diagnostics and API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            BnError::UnknownVariable(_) => "UnknownVariable",
            BnError::DuplicateVariable(_) => "DuplicateVariable",
            BnError::InvalidVariable { .. } => "InvalidVariable",
            BnError::DuplicateEdge(..) => "DuplicateEdge",
            BnError::CycleDetected(_) => "CycleDetected",
            BnError::CptMismatch { .. } => "CptMismatch",
            BnError::RowNotNormalized { .. } => "RowNotNormalized",
            BnError::IllegalState { .. } => "IllegalState",
            BnError::IncompleteAssignment(_) => "IncompleteAssignment",
            BnError::InconsistentEvidence => "InconsistentEvidence",
            BnError::ClassObserved(_) => "ClassObserved",
            BnError::InvalidOrder(_) => "InvalidOrder",
        }
    }
}

pub type Result<T, E = BnError> = std::result::Result<T, E>;

/// A named discrete variable with an ordered list of states.
///
/// State order is significant: it fixes CPT column order and breaks ties in [`map_predict`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(id: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable {
            id: id.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Conditional probability table `P(child | parents)`.
///
/// `rows` holds one distribution over the child's states per parent combination. Rows are
/// ordered row-major over the parents as listed, with the last parent varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(child: impl Into<String>, parents: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            child: child.into(),
            parents,
            rows,
        }
    }

    /// CPT for a root variable.
    pub fn prior(child: impl Into<String>, row: Vec<f64>) -> Self {
        Cpt::new(child, Vec::new(), vec![row])
    }
}

/// Observed variable → state assignment. At most one state per variable by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence(BTreeMap<String, String>);

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn with(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.insert(variable, state);
        self
    }

    /// Sets the observed state of `variable`, returning the previous one.
    pub fn insert(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Option<String> {
        self.0.insert(variable.into(), state.into())
    }

    pub fn remove(&mut self, variable: &str) -> Option<String> {
        self.0.remove(variable)
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.0.get(variable).map(String::as_str)
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.0.contains_key(variable)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Checks every entry against `net`.
    pub fn validate(&self, net: &BayesianNetwork) -> Result<()> {
        self.resolve(net).map(|_| ())
    }

    /// Resolves names into `(variable index, state index)` pairs.
    pub(crate) fn resolve(&self, net: &BayesianNetwork) -> Result<Vec<(usize, usize)>> {
        self.0
            .iter()
            .map(|(var, state)| {
                let vi = net.index_of(var)?;
                let si = net.variables[vi].state_index(state).ok_or_else(|| {
                    BnError::IllegalState {
                        variable: var.clone(),
                        state: state.clone(),
                    }
                })?;
                Ok((vi, si))
            })
            .collect()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Evidence(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Normalized distribution over the states of one variable, in declared state order.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub variable: String,
    pub probabilities: Vec<(String, f64)>,
}

impl Posterior {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.probabilities
            .iter()
            .find(|(s, _)| s == state)
            .map(|&(_, p)| p)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.probabilities.iter().map(|&(_, p)| p)
    }

    /// State with the highest probability; the earliest declared state wins ties.
    pub fn argmax(&self) -> &str {
        let mut best = 0;
        for (i, &(_, p)) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best].1 {
                best = i;
            }
        }
        &self.probabilities[best].0
    }
}

struct StateMap<'a>(&'a [(String, f64)]);

impl Serialize for StateMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (state, p) in self.0 {
            map.serialize_entry(state, p)?;
        }
        map.end()
    }
}

impl Serialize for Posterior {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Posterior", 2)?;
        s.serialize_field("variable", &self.variable)?;
        s.serialize_field("probabilities", &StateMap(&self.probabilities))?;
        s.end()
    }
}

/// A validated, immutable discrete Bayesian network.
#[derive(Debug, Clone)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    edges: Vec<(String, String)>,
    /// Parents of each variable, in the order used by its CPT.
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// Flattened CPT per variable: parent combination major, child state minor.
    tables: Vec<Vec<f64>>,
    topo_order: Vec<usize>,
}

impl BayesianNetwork {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: &str) -> Result<&Variable> {
        self.index_of(id).map(|i| &self.variables[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Edges as declared, `(parent, child)`.
    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    /// Parents of `id` in CPT order.
    pub fn parents(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.index_of(id)?;
        Ok(self.parents[i].iter().map(|&p| self.name(p)).collect())
    }

    pub fn children(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.index_of(id)?;
        Ok(self.children[i].iter().map(|&c| self.name(c)).collect())
    }

    /// Reconstructs the public CPT of `id`.
    pub fn cpt(&self, id: &str) -> Result<Cpt> {
        let i = self.index_of(id)?;
        let card = self.variables[i].cardinality();
        Ok(Cpt {
            child: id.to_string(),
            parents: self.parents[i].iter().map(|&p| self.name(p).to_string()).collect(),
            rows: self.tables[i].chunks(card).map(<[f64]>::to_vec).collect(),
        })
    }

    pub fn cpts(&self) -> Vec<Cpt> {
        self.variables
            .iter()
            .map(|v| self.cpt(&v.id).expect("variable exists"))
            .collect()
    }

    /// Variable ids in a topological order (parents before children).
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo_order.iter().map(|&i| self.name(i)).collect()
    }

    /// Parents, children and the children's other parents of `id`, excluding `id` itself.
    pub fn markov_blanket(&self, id: &str) -> Result<BTreeSet<String>> {
        let i = self.index_of(id)?;
        let mut blanket = BTreeSet::new();
        for &p in &self.parents[i] {
            blanket.insert(self.name(p).to_string());
        }
        for &c in &self.children[i] {
            blanket.insert(self.name(c).to_string());
            for &co in &self.parents[c] {
                if co != i {
                    blanket.insert(self.name(co).to_string());
                }
            }
        }
        Ok(blanket)
    }

    pub(crate) fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| BnError::UnknownVariable(id.to_string()))
    }

    pub(crate) fn name(&self, i: usize) -> &str {
        &self.variables[i].id
    }

    pub(crate) fn cardinality(&self, i: usize) -> usize {
        self.variables[i].cardinality()
    }

    pub(crate) fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }
}

/// Free function form of [`BayesianNetwork::markov_blanket`].
pub fn markov_blanket(net: &BayesianNetwork, var: &str) -> Result<BTreeSet<String>> {
    net.markov_blanket(var)
}

/// Validates the parts and assembles an immutable network.
pub fn build_network(
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
) -> Result<BayesianNetwork> {
    let mut index = HashMap::with_capacity(variables.len());
    for (i, v) in variables.iter().enumerate() {
        if v.states.len() < 2 {
            return Err(BnError::InvalidVariable {
                variable: v.id.clone(),
                reason: "needs at least two states".into(),
            });
        }
        let distinct: BTreeSet<&String> = v.states.iter().collect();
        if distinct.len() != v.states.len() {
            return Err(BnError::InvalidVariable {
                variable: v.id.clone(),
                reason: "state labels must be unique".into(),
            });
        }
        if index.insert(v.id.clone(), i).is_some() {
            return Err(BnError::DuplicateVariable(v.id.clone()));
        }
    }
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| BnError::UnknownVariable(id.to_string()))
    };

    let n = variables.len();
    let mut structural_parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (parent, child) in &edges {
        let p = lookup(parent)?;
        let c = lookup(child)?;
        if p == c {
            return Err(BnError::CycleDetected(vec![parent.clone(), child.clone()]));
        }
        if !structural_parents[c].insert(p) {
            return Err(BnError::DuplicateEdge(parent.clone(), child.clone()));
        }
        children[p].push(c);
    }

    let topo_order = topological_sort(n, &structural_parents, &children).map_err(|cycle| {
        BnError::CycleDetected(cycle.iter().map(|&i| variables[i].id.clone()).collect())
    })?;

    let mut parents: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); n];
    for cpt in cpts {
        let c = lookup(&cpt.child)?;
        if parents[c].is_some() {
            return Err(BnError::CptMismatch {
                child: cpt.child.clone(),
                reason: "more than one CPT given".into(),
            });
        }
        let order: Vec<usize> = cpt
            .parents
            .iter()
            .map(|p| lookup(p))
            .collect::<Result<_>>()?;
        let as_set: BTreeSet<usize> = order.iter().copied().collect();
        if as_set.len() != order.len() || as_set != structural_parents[c] {
            return Err(BnError::CptMismatch {
                child: cpt.child.clone(),
                reason: format!(
                    "parents [{}] differ from structural parents [{}]",
                    cpt.parents.join(", "),
                    structural_parents[c]
                        .iter()
                        .map(|&i| variables[i].id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
        let expected_rows: usize = order.iter().map(|&p| variables[p].cardinality()).product();
        if cpt.rows.len() != expected_rows {
            return Err(BnError::CptMismatch {
                child: cpt.child.clone(),
                reason: format!("expected {expected_rows} rows, found {}", cpt.rows.len()),
            });
        }
        let card = variables[c].cardinality();
        let mut table = Vec::with_capacity(expected_rows * card);
        for (r, row) in cpt.rows.iter().enumerate() {
            if row.len() != card {
                return Err(BnError::CptMismatch {
                    child: cpt.child.clone(),
                    reason: format!("row {r} has {} entries, expected {card}", row.len()),
                });
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(BnError::CptMismatch {
                    child: cpt.child.clone(),
                    reason: format!("row {r} has an entry outside [0, 1]"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(BnError::RowNotNormalized {
                    child: cpt.child.clone(),
                    row: r,
                    sum,
                });
            }
            table.extend_from_slice(row);
        }
        parents[c] = Some(order);
        tables[c] = table;
    }

    let parents = parents
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| BnError::CptMismatch {
                child: variables[i].id.clone(),
                reason: "no CPT given".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BayesianNetwork {
        variables,
        index,
        edges,
        parents,
        children,
        tables,
        topo_order,
    })
}

/// Kahn's algorithm. On failure returns one directed cycle, closed (first node repeated).
fn topological_sort(
    n: usize,
    parents: &[BTreeSet<usize>],
    children: &[Vec<usize>],
) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let mut indegree: Vec<usize> = parents.iter().map(BTreeSet::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unsorted node has an unsorted parent, so walking parents must revisit a node.
    let start = (0..n).find(|&i| indegree[i] > 0).expect("unsorted node");
    let mut path = vec![start];
    let mut seen = HashMap::from([(start, 0usize)]);
    let mut current = start;
    loop {
        let next = *parents[current]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("unsorted node has an unsorted parent");
        if let Some(&pos) = seen.get(&next) {
            let mut cycle: Vec<usize> = path[pos..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            return Err(cycle);
        }
        seen.insert(next, path.len());
        path.push(next);
        current = next;
    }
}
