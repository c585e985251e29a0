//! Compact CPT parameterization for the Requisites network.
//!
//! Root variables carry an explicit prior row. Every other variable uses a weighted-cause
//! (noisy-OR with graded output) model: each state of each parent has a weight in `[0, 1]`
//! and the child has a leak term. For one parent combination the activation is
//!
//! ```text
//! q = 1 - (1 - leak) * Π_j (1 - weight[j][state_j])
//! ```
//!
//! and the child distribution is the binomial spread of `q` over its `k` ordered states:
//! state `i` (0 = first declared) gets `C(k-1, i) * q^(k-1-i) * (1-q)^i`. A binary child is
//! therefore `P(first state) = q`, and a larger `q` moves mass toward the first state.
//!
//! Parameter files are TOML in the `requisites-params` dialect:
//!
//! ```toml
//! format = "requisites-params"
//!
//! [[prior]]
//! variable = "stakeholders_expertise"
//! probabilities = [0.3, 0.3, 0.4]
//!
//! [[cause]]
//! variable = "specificity"
//! leak = 0.05
//!
//! [[cause.parent]]
//! variable = "degree_of_commitment"
//! weights = [0.05, 0.25, 0.5]     # one per parent state, declared order
//! ```

use serde::{Deserialize, Serialize};

use super::{spec, ModelError, Trend};
use crate::bn::format::FormatError;
use crate::bn::{Cpt, NORMALIZATION_TOLERANCE};

pub const PARAMS_FORMAT: &str = "requisites-params";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootPrior {
    pub variable: String,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentWeights {
    pub variable: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauseParams {
    pub variable: String,
    pub leak: f64,
    #[serde(rename = "parent")]
    pub parents: Vec<ParentWeights>,
}

/// Full parameter set for the fixed Requisites structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptParamSet {
    #[serde(default = "params_format")]
    format: String,
    #[serde(rename = "prior")]
    pub priors: Vec<RootPrior>,
    #[serde(rename = "cause")]
    pub causes: Vec<CauseParams>,
}

fn params_format() -> String {
    PARAMS_FORMAT.to_string()
}

/// Weights of the initial parameter set, from weakest to strongest push.
const GRADED_WEIGHTS_2: [f64; 2] = [0.05, 0.5];
const GRADED_WEIGHTS_3: [f64; 3] = [0.05, 0.25, 0.5];
const INITIAL_LEAK: f64 = 0.05;

impl CptParamSet {
    /// Uniform priors, every weight 0.5 and leak 0.5.
    pub fn uniform() -> Self {
        Self::from_fn(|_, k| vec![0.5; k], 0.5)
    }

    /// Starting point for calibration: uniform priors, weights graded along each
    /// parent's direction of influence and a small leak.
    pub fn initial() -> Self {
        Self::from_fn(
            |trend, k| {
                let graded: &[f64] = if k == 2 { &GRADED_WEIGHTS_2 } else { &GRADED_WEIGHTS_3 };
                let mut w = graded.to_vec();
                if trend == Trend::Falling {
                    w.reverse();
                }
                w
            },
            INITIAL_LEAK,
        )
    }

    fn from_fn(weights: impl Fn(Trend, usize) -> Vec<f64>, leak: f64) -> Self {
        let priors = spec::ROOTS
            .iter()
            .map(|&root| {
                let k = spec::states(root).len();
                RootPrior {
                    variable: root.to_string(),
                    probabilities: vec![1.0 / k as f64; k],
                }
            })
            .collect();
        let causes = spec::CAUSES
            .iter()
            .map(|cause| CauseParams {
                variable: cause.child.to_string(),
                leak,
                parents: cause
                    .parents
                    .iter()
                    .map(|&(parent, trend)| {
                        ParentWeights {
                            variable: parent.to_string(),
                            weights: weights(trend, spec::states(parent).len()),
                        }
                    })
                    .collect(),
            })
            .collect();
        CptParamSet {
            format: params_format(),
            priors,
            causes,
        }
    }

    /// Checks shape and ranges against the fixed structure.
    pub fn validate(&self) -> Result<(), ModelError> {
        let shape = |msg: String| Err(ModelError::ParamShape(msg));
        if self.format != PARAMS_FORMAT {
            return shape(format!("format must be `{PARAMS_FORMAT}`, found `{}`", self.format));
        }
        if self.priors.len() != spec::ROOTS.len() {
            return shape(format!("expected {} priors, found {}", spec::ROOTS.len(), self.priors.len()));
        }
        for (prior, &root) in self.priors.iter().zip(spec::ROOTS) {
            if prior.variable != root {
                return shape(format!("expected prior for `{root}`, found `{}`", prior.variable));
            }
            if prior.probabilities.len() != spec::states(root).len() {
                return shape(format!("prior for `{root}` has the wrong number of states"));
            }
            if !prior.probabilities.iter().all(|p| (0.0..=1.0).contains(p)) {
                return shape(format!("prior for `{root}` has an entry outside [0, 1]"));
            }
            let sum: f64 = prior.probabilities.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return shape(format!("prior for `{root}` sums to {sum}"));
            }
        }
        if self.causes.len() != spec::CAUSES.len() {
            return shape(format!("expected {} causes, found {}", spec::CAUSES.len(), self.causes.len()));
        }
        for (params, cause) in self.causes.iter().zip(spec::CAUSES) {
            if params.variable != cause.child {
                return shape(format!("expected cause block for `{}`, found `{}`", cause.child, params.variable));
            }
            if !(0.0..=1.0).contains(&params.leak) {
                return shape(format!("leak of `{}` outside [0, 1]", cause.child));
            }
            if params.parents.len() != cause.parents.len() {
                return shape(format!("`{}` needs {} parent blocks", cause.child, cause.parents.len()));
            }
            for (pw, &(parent, _)) in params.parents.iter().zip(cause.parents) {
                if pw.variable != parent {
                    return shape(format!("`{}`: expected parent `{parent}`, found `{}`", cause.child, pw.variable));
                }
                if pw.weights.len() != spec::states(parent).len() {
                    return shape(format!("`{}`: weights for `{parent}` have the wrong length", cause.child));
                }
                if !pw.weights.iter().all(|w| (0.0..=1.0).contains(w)) {
                    return shape(format!("`{}`: weight for `{parent}` outside [0, 1]", cause.child));
                }
            }
        }
        Ok(())
    }

    /// Expands every parameter block into a full CPT.
    pub fn expand(&self) -> Result<Vec<Cpt>, ModelError> {
        self.validate()?;
        let mut cpts: Vec<Cpt> = self
            .priors
            .iter()
            .map(|p| Cpt::prior(p.variable.clone(), p.probabilities.clone()))
            .collect();
        for cause in &self.causes {
            cpts.push(expand_cause(cause));
        }
        Ok(cpts)
    }

    pub fn prior(&self, variable: &str) -> Option<&RootPrior> {
        self.priors.iter().find(|p| p.variable == variable)
    }

    pub fn cause(&self, variable: &str) -> Option<&CauseParams> {
        self.causes.iter().find(|c| c.variable == variable)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameter sets always serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let params: CptParamSet =
            toml::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

fn expand_cause(cause: &CauseParams) -> Cpt {
    let k = spec::states(&cause.variable).len();
    let cards: Vec<usize> = cause.parents.iter().map(|p| p.weights.len()).collect();
    let rows_total: usize = cards.iter().product();
    let mut rows = Vec::with_capacity(rows_total);
    let mut digits = vec![0usize; cards.len()];
    for _ in 0..rows_total {
        let mut inactive = 1.0 - cause.leak;
        for (pw, &s) in cause.parents.iter().zip(&digits) {
            inactive *= 1.0 - pw.weights[s];
        }
        rows.push(binomial_row(1.0 - inactive, k));
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            if digits[d] < cards[d] {
                break;
            }
            digits[d] = 0;
        }
    }
    Cpt::new(
        cause.variable.clone(),
        cause.parents.iter().map(|p| p.variable.clone()).collect(),
        rows,
    )
}

/// Binomial spread of activation `q` over `k` ordered states, first state most active.
pub(crate) fn binomial_row(q: f64, k: usize) -> Vec<f64> {
    let n = (k - 1) as i32;
    let mut coefficient = 1.0;
    (0..k)
        .map(|i| {
            let i = i as i32;
            let p = coefficient * q.powi(n - i) * (1.0 - q).powi(i);
            coefficient = coefficient * f64::from(n - i) / f64::from(i + 1);
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_rows() {
        assert_eq!(binomial_row(0.3, 2), vec![0.3, 0.7]);
        let r = binomial_row(0.5, 3);
        assert_eq!(r, vec![0.25, 0.5, 0.25]);
        let r = binomial_row(1.0, 3);
        assert_eq!(r, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn expansion_of_specificity_block() {
        let params = CptParamSet::initial();
        let cpts = params.expand().unwrap();
        let sp = cpts.iter().find(|c| c.child == spec::SPECIFICITY).unwrap();
        assert_eq!(sp.parents, vec![spec::DEGREE_OF_COMMITMENT]);
        // commitment high -> weight 0.05, q = 1 - 0.95 * 0.95
        let q: f64 = 1.0 - 0.95 * 0.95;
        assert!((sp.rows[0][0] - q * q).abs() < 1e-15);
        let dr = cpts.iter().find(|c| c.child == spec::DEGREE_OF_REVISION).unwrap();
        assert_eq!(dr.rows.len(), 162);
        let rv = cpts.iter().find(|c| c.child == spec::REQUIREMENT_VARIABILITY).unwrap();
        assert_eq!(rv.rows.len(), 54);
    }

    #[test]
    fn last_parent_varies_fastest() {
        let mut params = CptParamSet::uniform();
        let hd = params
            .causes
            .iter_mut()
            .find(|c| c.variable == spec::HOMOGENEITY_OF_DESCRIPTION)
            .unwrap();
        hd.leak = 0.0;
        hd.parents[0].weights = vec![0.0, 0.0, 0.0];
        hd.parents[1].weights = vec![0.1, 0.2, 0.3];
        let cpt = expand_cause(hd);
        let expected = [0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.1, 0.2, 0.3];
        for (row, want) in cpt.rows.iter().zip(expected) {
            assert!((row[0] - want).abs() < 1e-15, "{:?}", cpt.rows);
        }
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let params = CptParamSet::initial();
        let text = params.to_toml();
        assert!(text.starts_with("format = \"requisites-params\""));
        assert_eq!(CptParamSet::from_toml(&text).unwrap(), params);

        let mut broken = params.clone();
        broken.causes[0].parents[0].weights.pop();
        assert!(matches!(broken.validate(), Err(ModelError::ParamShape(_))));
        let mut broken = params.clone();
        broken.priors[0].probabilities[0] = 0.9;
        assert!(matches!(broken.validate(), Err(ModelError::ParamShape(_))));
        let mut broken = params;
        broken.causes[5].leak = 1.5;
        assert!(broken.validate().is_err());
    }
}
