//! The Requisites network: eleven variables describing a requirements specification and
//! its need for another revision cycle.
//!
//! The structure is fixed (see [`spec`]); only the CPTs vary, through a compact
//! [`CptParamSet`]. The shipped parameters in `data/requisites-params.toml` were produced by
//! [`calibrate`] against `data/trajectory-constraints.toml` with [`DEFAULT_SEED`] and
//! [`DEFAULT_BUDGET`].

mod calibrate;
mod params;
pub mod spec;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::bn::format::FormatError;
use crate::bn::{build_network, posterior, BayesianNetwork, BnError, Evidence, Posterior, Variable};

pub use calibrate::{
    calibrate, calibrate_from, load_constraints, save_constraints, CalibrationConstraint,
    CalibrationOptions, CalibrationResult,
};
pub use params::{CauseParams, CptParamSet, ParentWeights, RootPrior, PARAMS_FORMAT};
pub use spec::DEGREE_OF_REVISION;

/// Seed used to generate the shipped parameters.
pub const DEFAULT_SEED: u64 = 2017;
/// Objective-evaluation budget used to generate the shipped parameters.
pub const DEFAULT_BUDGET: usize = 200_000;

pub const SHIPPED_PARAMS: &str = include_str!("../../data/requisites-params.toml");
pub const SHIPPED_CONSTRAINTS: &str = include_str!("../../data/trajectory-constraints.toml");

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter set does not fit the Requisites structure: {0}")]
    ParamShape(String),
    #[error("invalid constraint: {0}")]
    Constraint(String),
    #[error("variable `{0}` appears more than once in the evidence sequence")]
    DuplicateEvidence(String),
    #[error(transparent)]
    Network(#[from] BnError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::ParamShape(_) => "ParamShape",
            ModelError::Constraint(_) => "InvalidConstraint",
            ModelError::DuplicateEvidence(_) => "DuplicateEvidence",
            ModelError::Network(e) => e.code(),
            ModelError::Format(e) => e.code(),
        }
    }
}

/// Direction in which a parent's states push a child toward the child's first state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    /// Later-declared parent states push harder: weights are non-decreasing.
    Rising,
    /// Earlier-declared parent states push harder: weights are non-increasing.
    Falling,
}

/// Variables, edges and parameters of a Requisites network.
#[derive(Debug, Clone, PartialEq)]
pub struct RequisitesSpec {
    pub variables: Vec<Variable>,
    pub edges: Vec<(String, String)>,
    pub params: CptParamSet,
}

impl RequisitesSpec {
    pub fn new(params: CptParamSet) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(RequisitesSpec {
            variables: spec::VARIABLES
                .iter()
                .map(|(id, states)| Variable::new(*id, states.iter().copied()))
                .collect(),
            edges: spec::edges(),
            params,
        })
    }

    pub fn build(&self) -> Result<BayesianNetwork, ModelError> {
        Ok(build_network(
            self.variables.clone(),
            self.edges.clone(),
            self.params.expand()?,
        )?)
    }
}

/// Expands `params` into the Requisites network.
pub fn build_requisites(params: &CptParamSet) -> Result<BayesianNetwork, ModelError> {
    RequisitesSpec::new(params.clone())?.build()
}

/// The shipped, pre-calibrated parameter set.
pub fn default_params() -> CptParamSet {
    CptParamSet::from_toml(SHIPPED_PARAMS).expect("shipped parameters are valid")
}

/// The Requisites network with the shipped parameters. Built once and cached.
pub fn default_network() -> &'static BayesianNetwork {
    static NETWORK: OnceLock<BayesianNetwork> = OnceLock::new();
    NETWORK.get_or_init(|| build_requisites(&default_params()).expect("shipped parameters build"))
}

/// The shipped calibration constraints.
pub fn default_constraints() -> Vec<CalibrationConstraint> {
    load_constraints(SHIPPED_CONSTRAINTS).expect("shipped constraints parse")
}

/// Posterior of `degree_of_revision` as evidence items are added one at a time.
///
/// Element `k` conditions on the first `k` items; element 0 is the prior.
pub fn evidence_trajectory(
    net: &BayesianNetwork,
    ordered_evidence: &[(String, String)],
) -> Result<Vec<Posterior>, ModelError> {
    let mut seen = BTreeSet::new();
    for (var, _) in ordered_evidence {
        if !seen.insert(var.as_str()) {
            return Err(ModelError::DuplicateEvidence(var.clone()));
        }
    }
    let mut evidence = Evidence::new();
    let mut out = vec![posterior(net, &evidence, DEGREE_OF_REVISION)?];
    for (var, state) in ordered_evidence {
        evidence.insert(var.clone(), state.clone());
        evidence.validate(net)?;
        out.push(posterior(net, &evidence, DEGREE_OF_REVISION)?);
    }
    Ok(out)
}
