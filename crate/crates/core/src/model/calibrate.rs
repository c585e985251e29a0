//! Fitting the compact CPT parameters to target posteriors.
//!
//! The search is random-restart coordinate hill-climbing. Within a restart every coordinate
//! is nudged up and then down by the current step, keeping the first move that lowers the
//! objective; a sweep without improvement halves the step. Each restart after the first
//! begins from a random perturbation of the best point found so far. The random stream is
//! seeded, so a given `(constraints, seed, budget)` always produces the same result.
//!
//! Constraint files are TOML:
//!
//! ```toml
//! format = "calibration-constraints"
//!
//! [[constraint]]
//! evidence = { homogeneity_of_description = "yes" }
//! target = "degree_of_revision"
//! state = "no"
//! probability = 0.54
//! weight = 1.0          # optional, defaults to 1
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_requisites, spec, CptParamSet, ModelError, Trend};
use crate::bn::format::FormatError;
use crate::bn::{posterior, Evidence};

pub const CONSTRAINTS_FORMAT: &str = "calibration-constraints";

const INITIAL_STEP: f64 = 0.2;
const MIN_STEP: f64 = 1e-9;
const RESTART_SPREAD: f64 = 0.2;
/// Smallest allowed gap between adjacent ordered weights.
const WEIGHT_GAP: f64 = 0.01;
const PRIOR_FLOOR: f64 = 1e-4;
const MAX_LEAK: f64 = 0.99;

/// Target: `P(target = state | evidence) ≈ probability`, with a squared-error weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConstraint {
    #[serde(default)]
    pub evidence: Evidence,
    pub target: String,
    pub state: String,
    pub probability: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsDocument {
    format: String,
    #[serde(rename = "constraint", default)]
    constraints: Vec<CalibrationConstraint>,
}

pub fn load_constraints(text: &str) -> Result<Vec<CalibrationConstraint>, ModelError> {
    let doc: ConstraintsDocument =
        toml::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
    if doc.format != CONSTRAINTS_FORMAT {
        return Err(FormatError::WrongFormat {
            expected: CONSTRAINTS_FORMAT.into(),
            found: doc.format,
        }
        .into());
    }
    let reference = build_requisites(&CptParamSet::uniform())?;
    for c in &doc.constraints {
        c.evidence.validate(&reference)?;
        let target = reference.variable(&c.target)?;
        if target.state_index(&c.state).is_none() {
            return Err(ModelError::Constraint(format!(
                "`{}` is not a state of `{}`",
                c.state, c.target
            )));
        }
        if c.evidence.contains(&c.target) {
            return Err(ModelError::Constraint(format!("target `{}` is observed", c.target)));
        }
        if !(0.0..=1.0).contains(&c.probability) {
            return Err(ModelError::Constraint(format!("probability {} outside [0, 1]", c.probability)));
        }
        if !(c.weight.is_finite() && c.weight >= 0.0) {
            return Err(ModelError::Constraint(format!("weight {} must be non-negative", c.weight)));
        }
    }
    Ok(doc.constraints)
}

pub fn save_constraints(constraints: &[CalibrationConstraint]) -> String {
    toml::to_string(&ConstraintsDocument {
        format: CONSTRAINTS_FORMAT.into(),
        constraints: constraints.to_vec(),
    })
    .expect("constraint documents always serialize")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub seed: u64,
    /// Maximum number of objective evaluations, at least 1.
    pub budget: usize,
    /// The search stops once the objective is at or below this value.
    pub tolerance: f64,
}

impl CalibrationOptions {
    pub fn new(seed: u64, budget: usize) -> Self {
        CalibrationOptions {
            seed,
            budget,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: CptParamSet,
    /// Objective value of `params`.
    pub residual: f64,
    pub evaluations: usize,
    /// Best objective after each sweep, starting with the initial value.
    pub trace: Vec<f64>,
}

/// Calibrates from [`CptParamSet::initial`].
pub fn calibrate(
    constraints: &[CalibrationConstraint],
    seed: u64,
    budget: usize,
) -> Result<CalibrationResult, ModelError> {
    calibrate_from(&CptParamSet::initial(), constraints, &CalibrationOptions::new(seed, budget))
}

pub fn calibrate_from(
    start: &CptParamSet,
    constraints: &[CalibrationConstraint],
    options: &CalibrationOptions,
) -> Result<CalibrationResult, ModelError> {
    start.validate()?;
    let budget = options.budget.max(1);
    let mut objective = Objective::new(constraints);
    let coords = coordinates(start);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut best = start.clone();
    let mut best_f = objective.eval(&best);
    let mut trace = vec![best_f];

    let mut restart = 0usize;
    while objective.evaluations < budget && best_f > options.tolerance {
        let (mut x, mut fx) = if restart == 0 {
            (best.clone(), best_f)
        } else {
            let mut x = best.clone();
            for c in &coords {
                apply_move(&mut x, *c, rng.random_range(-RESTART_SPREAD..RESTART_SPREAD));
            }
            let fx = objective.eval(&x);
            (x, fx)
        };
        restart += 1;
        let mut order = coords.clone();
        order.shuffle(&mut rng);

        let mut step = INITIAL_STEP;
        while step >= MIN_STEP && objective.evaluations < budget && best_f > options.tolerance {
            let mut improved = false;
            'sweep: for &c in &order {
                for direction in [1.0, -1.0] {
                    if objective.evaluations >= budget {
                        break 'sweep;
                    }
                    let mut candidate = x.clone();
                    if !apply_move(&mut candidate, c, direction * step) {
                        continue;
                    }
                    let f = objective.eval(&candidate);
                    if f < fx {
                        x = candidate;
                        fx = f;
                        improved = true;
                        break;
                    }
                }
            }
            if fx < best_f {
                best = x.clone();
                best_f = fx;
            }
            trace.push(best_f);
            if !improved {
                step *= 0.5;
            }
        }
    }

    Ok(CalibrationResult {
        params: best,
        residual: best_f,
        evaluations: objective.evaluations,
        trace,
    })
}

struct Objective<'a> {
    constraints: &'a [CalibrationConstraint],
    /// Distinct `(evidence, target)` queries and, per constraint, the query it reads.
    queries: Vec<(&'a Evidence, &'a str)>,
    query_of: Vec<usize>,
    evaluations: usize,
}

impl<'a> Objective<'a> {
    fn new(constraints: &'a [CalibrationConstraint]) -> Self {
        let mut queries: Vec<(&Evidence, &str)> = Vec::new();
        let mut query_of = Vec::with_capacity(constraints.len());
        for c in constraints {
            let key = (&c.evidence, c.target.as_str());
            let idx = match queries.iter().position(|q| *q == key) {
                Some(i) => i,
                None => {
                    queries.push(key);
                    queries.len() - 1
                }
            };
            query_of.push(idx);
        }
        Objective {
            constraints,
            queries,
            query_of,
            evaluations: 0,
        }
    }

    /// Weighted squared error; infinite when the parameters make a query impossible.
    fn eval(&mut self, params: &CptParamSet) -> f64 {
        self.evaluations += 1;
        if self.constraints.is_empty() {
            return 0.0;
        }
        let Ok(net) = build_requisites(params) else {
            return f64::INFINITY;
        };
        let mut posteriors = Vec::with_capacity(self.queries.len());
        for (evidence, target) in &self.queries {
            match posterior(&net, evidence, target) {
                Ok(p) => posteriors.push(p),
                Err(_) => return f64::INFINITY,
            }
        }
        self.constraints
            .iter()
            .zip(&self.query_of)
            .map(|(c, &q)| {
                let p = posteriors[q].probability(&c.state).unwrap_or(f64::NAN);
                c.weight * (p - c.probability).powi(2)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coord {
    Prior { root: usize, state: usize },
    Leak { cause: usize },
    Weight { cause: usize, parent: usize, state: usize },
}

fn coordinates(params: &CptParamSet) -> Vec<Coord> {
    let mut coords = Vec::new();
    for (root, prior) in params.priors.iter().enumerate() {
        coords.extend((0..prior.probabilities.len()).map(|state| Coord::Prior { root, state }));
    }
    for (cause, block) in params.causes.iter().enumerate() {
        coords.push(Coord::Leak { cause });
        for (parent, pw) in block.parents.iter().enumerate() {
            coords.extend(
                (0..pw.weights.len()).map(|state| Coord::Weight { cause, parent, state }),
            );
        }
    }
    coords
}

/// Moves one coordinate by `delta`, projected onto its feasible range.
/// Returns `false` when the projection leaves the value unchanged.
fn apply_move(params: &mut CptParamSet, coord: Coord, delta: f64) -> bool {
    match coord {
        Coord::Prior { root, state } => {
            let p = &mut params.priors[root].probabilities;
            let k = p.len() as f64;
            let old = p[state];
            let new = (old + delta).clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR * (k - 1.0));
            if new == old {
                return false;
            }
            let scale = (1.0 - new) / (1.0 - old);
            for (i, v) in p.iter_mut().enumerate() {
                *v = if i == state { new } else { *v * scale };
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            true
        }
        Coord::Leak { cause } => {
            let leak = &mut params.causes[cause].leak;
            let new = (*leak + delta).clamp(0.0, MAX_LEAK);
            let changed = new != *leak;
            *leak = new;
            changed
        }
        Coord::Weight { cause, parent, state } => {
            let trend = spec::CAUSES[cause].parents[parent].1;
            let w = &mut params.causes[cause].parents[parent].weights;
            let before = state.checked_sub(1).map(|i| w[i]);
            let after = w.get(state + 1).copied();
            let (lo, hi) = match trend {
                Trend::Rising => (
                    before.map_or(0.0, |b| b + WEIGHT_GAP),
                    after.map_or(1.0, |a| a - WEIGHT_GAP),
                ),
                Trend::Falling => (
                    after.map_or(0.0, |a| a + WEIGHT_GAP),
                    before.map_or(1.0, |b| b - WEIGHT_GAP),
                ),
            };
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            if lo > hi {
                return false;
            }
            let new = (w[state] + delta).clamp(lo, hi);
            let changed = new != w[state];
            w[state] = new;
            changed
        }
    }
}
