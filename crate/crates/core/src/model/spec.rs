//! Fixed variables and structure of the Requisites network.

use super::Trend;

pub const STAKEHOLDERS_EXPERTISE: &str = "stakeholders_expertise";
pub const DOMAIN_EXPERTISE: &str = "domain_expertise";
pub const REUSED_REQUIREMENT: &str = "reused_requirement";
pub const UNEXPECTED_DEPENDENCIES: &str = "unexpected_dependencies";
pub const SPECIFICITY: &str = "specificity";
pub const UNCLEAR_COST_BENEFIT: &str = "unclear_cost_benefit";
pub const DEGREE_OF_COMMITMENT: &str = "degree_of_commitment";
pub const HOMOGENEITY_OF_DESCRIPTION: &str = "homogeneity_of_description";
pub const REQUIREMENT_COMPLETENESS: &str = "requirement_completeness";
pub const REQUIREMENT_VARIABILITY: &str = "requirement_variability";
pub const DEGREE_OF_REVISION: &str = "degree_of_revision";

const HML: &[&str] = &["high", "medium", "low"];
const YES_NO: &[&str] = &["yes", "no"];

/// All eleven variables with their ordered states.
pub const VARIABLES: &[(&str, &[&str])] = &[
    (STAKEHOLDERS_EXPERTISE, HML),
    (DOMAIN_EXPERTISE, HML),
    (REUSED_REQUIREMENT, &["many", "few", "none"]),
    (UNEXPECTED_DEPENDENCIES, YES_NO),
    (SPECIFICITY, HML),
    (UNCLEAR_COST_BENEFIT, HML),
    (DEGREE_OF_COMMITMENT, HML),
    (HOMOGENEITY_OF_DESCRIPTION, YES_NO),
    (REQUIREMENT_COMPLETENESS, HML),
    (REQUIREMENT_VARIABILITY, HML),
    (DEGREE_OF_REVISION, YES_NO),
];

/// Variables without parents, in parameter-file order.
pub const ROOTS: &[&str] = &[
    STAKEHOLDERS_EXPERTISE,
    DOMAIN_EXPERTISE,
    REUSED_REQUIREMENT,
    UNEXPECTED_DEPENDENCIES,
    DEGREE_OF_COMMITMENT,
];

/// A child variable with its parents (in CPT order) and how each parent pushes it.
pub struct CauseSpec {
    pub child: &'static str,
    pub parents: &'static [(&'static str, Trend)],
}

/// Every non-root variable. The child is pushed toward its first declared state.
pub const CAUSES: &[CauseSpec] = &[
    CauseSpec {
        child: SPECIFICITY,
        // more requirements needing negotiation, less shared meaning
        parents: &[(DEGREE_OF_COMMITMENT, Trend::Rising)],
    },
    CauseSpec {
        child: UNCLEAR_COST_BENEFIT,
        parents: &[(STAKEHOLDERS_EXPERTISE, Trend::Rising)],
    },
    CauseSpec {
        child: REQUIREMENT_COMPLETENESS,
        parents: &[
            (DOMAIN_EXPERTISE, Trend::Falling),
            (STAKEHOLDERS_EXPERTISE, Trend::Falling),
        ],
    },
    CauseSpec {
        child: HOMOGENEITY_OF_DESCRIPTION,
        parents: &[
            (DOMAIN_EXPERTISE, Trend::Falling),
            (STAKEHOLDERS_EXPERTISE, Trend::Falling),
        ],
    },
    CauseSpec {
        child: REQUIREMENT_VARIABILITY,
        parents: &[
            (UNEXPECTED_DEPENDENCIES, Trend::Falling),
            (UNCLEAR_COST_BENEFIT, Trend::Falling),
            (REQUIREMENT_COMPLETENESS, Trend::Rising),
            (DEGREE_OF_COMMITMENT, Trend::Falling),
        ],
    },
    CauseSpec {
        child: DEGREE_OF_REVISION,
        parents: &[
            (SPECIFICITY, Trend::Rising),
            (HOMOGENEITY_OF_DESCRIPTION, Trend::Rising),
            (REQUIREMENT_VARIABILITY, Trend::Falling),
            (REQUIREMENT_COMPLETENESS, Trend::Rising),
            (REUSED_REQUIREMENT, Trend::Rising),
        ],
    },
];

/// Declared states of a Requisites variable. Panics on unknown names.
pub fn states(variable: &str) -> &'static [&'static str] {
    VARIABLES
        .iter()
        .find(|(id, _)| *id == variable)
        .map(|(_, s)| *s)
        .unwrap_or_else(|| panic!("`{variable}` is not a Requisites variable"))
}

/// The frozen edge list, `(parent, child)`, grouped by child.
pub fn edges() -> Vec<(String, String)> {
    CAUSES
        .iter()
        .flat_map(|c| {
            c.parents
                .iter()
                .map(move |(p, _)| (p.to_string(), c.child.to_string()))
        })
        .collect()
}

pub fn trend(child: &str, parent: &str) -> Option<Trend> {
    CAUSES
        .iter()
        .find(|c| c.child == child)?
        .parents
        .iter()
        .find(|(p, _)| *p == parent)
        .map(|&(_, t)| t)
}
