//! Evidence extraction from project data.
//!
//! A project is described by its requirement hierarchy (objectives, features, specific
//! requirements), stakeholder ratings of requirements, stakeholder-to-stakeholder salience
//! recommendations and, optionally, an activity log. From these the module derives states
//! for the Requisites variables that can be measured and marks the rest as manual.

mod dataset;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bn::Evidence;
use crate::model::spec;
use stats::{mean, modal_bin, rating_bin, salience_bin, tercile_level, FiveNumberSummary, Level3};

pub use dataset::{
    load_dataset, DatasetFiles, ACTIVITY_FILE, ASSIGNMENTS_FILE, HIERARCHY_FILE, RATINGS_FILE,
    RECOMMENDATIONS_FILE, TEMPLATE_FILL_FILE,
};

/// Detail threshold, in percent, that the first quartile must reach for a homogeneous description.
pub const HOMOGENEITY_Q1_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("the hierarchy has no objectives")]
    EmptyHierarchy,
    #[error("requirement `{id}`: {reason}")]
    InvalidNode { id: String, reason: String },
    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),
    #[error("{what} {value} is out of scale")]
    OutOfScale { what: &'static str, value: f64 },
    #[error("`{0}` appears more than once")]
    Duplicate(String),
    #[error("stakeholder `{0}` recommends themself")]
    SelfRecommendation(String),
    #[error("objective `{0}` has no ratings")]
    UnratedObjective(String),
    #[error("no salience recommendations")]
    NoRecommendations,
    #[error("missing required file `{0}`")]
    MissingFile(&'static str),
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: u64,
        column: u64,
        message: String,
    },
    #[error("{file}:{line}:{column}: {message}")]
    Invalid {
        file: String,
        line: u64,
        column: u64,
        message: String,
    },
    #[error("{file}: {message}")]
    Io { file: String, message: String },
}

impl MetricsError {
    /// Malformed input, as opposed to well-formed input that violates a rule.
    pub fn is_syntax(&self) -> bool {
        matches!(
            self,
            MetricsError::Parse { .. } | MetricsError::MissingFile(_) | MetricsError::Io { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Objective,
    Feature,
    Specific,
}

impl FromStr for Level {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "objective" => Ok(Level::Objective),
            "feature" => Ok(Level::Feature),
            "specific" => Ok(Level::Specific),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementNode {
    pub id: String,
    pub level: Level,
    pub parent: Option<String>,
}

impl RequirementNode {
    pub fn objective(id: impl Into<String>) -> Self {
        RequirementNode {
            id: id.into(),
            level: Level::Objective,
            parent: None,
        }
    }

    pub fn feature(id: impl Into<String>, objective: impl Into<String>) -> Self {
        RequirementNode {
            id: id.into(),
            level: Level::Feature,
            parent: Some(objective.into()),
        }
    }

    pub fn specific(id: impl Into<String>, feature: impl Into<String>) -> Self {
        RequirementNode {
            id: id.into(),
            level: Level::Specific,
            parent: Some(feature.into()),
        }
    }
}

/// Validated three-level requirement tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    nodes: BTreeMap<String, RequirementNode>,
}

impl Hierarchy {
    pub fn new(nodes: Vec<RequirementNode>) -> Result<Self, MetricsError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            if map.contains_key(&node.id) {
                return Err(MetricsError::InvalidNode {
                    id: node.id,
                    reason: "duplicate id".into(),
                });
            }
            map.insert(node.id.clone(), node);
        }
        for node in map.values() {
            let bad = |reason: &str| {
                Err(MetricsError::InvalidNode {
                    id: node.id.clone(),
                    reason: reason.into(),
                })
            };
            let expected_parent = match node.level {
                Level::Objective => {
                    if node.parent.is_some() {
                        return bad("objectives cannot have a parent");
                    }
                    continue;
                }
                Level::Feature => Level::Objective,
                Level::Specific => Level::Feature,
            };
            match node.parent.as_ref().and_then(|p| map.get(p)) {
                None => return bad("orphan: parent missing or unknown"),
                Some(parent) if parent.level != expected_parent => {
                    return bad(&format!("parent `{}` must be a {expected_parent:?}", parent.id).to_lowercase());
                }
                Some(_) => {}
            }
        }
        Ok(Hierarchy { nodes: map })
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &RequirementNode> {
        self.nodes.values()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn objectives(&self) -> impl Iterator<Item = &str> {
        self.of_level(Level::Objective)
    }

    fn of_level(&self, level: Level) -> impl Iterator<Item = &str> {
        self.nodes
            .values()
            .filter(move |n| n.level == level)
            .map(|n| n.id.as_str())
    }

    /// The objective a requirement belongs to (itself for objectives).
    pub fn objective_of(&self, id: &str) -> Option<&str> {
        let mut node = self.nodes.get(id)?;
        while let Some(parent) = &node.parent {
            node = self.nodes.get(parent)?;
        }
        Some(&node.id)
    }

    fn children_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a RequirementNode> + 'a {
        self.nodes
            .values()
            .filter(move |n| n.parent.as_deref() == Some(id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub stakeholder: String,
    pub requirement: String,
    pub rating: u8,
}

/// Ratings on the 0–5 scale, at most one per (stakeholder, requirement) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingMatrix {
    entries: BTreeMap<(String, String), u8>,
}

impl RatingMatrix {
    pub fn new(ratings: impl IntoIterator<Item = Rating>) -> Result<Self, MetricsError> {
        let mut m = RatingMatrix::default();
        for r in ratings {
            m.insert(r)?;
        }
        Ok(m)
    }

    pub fn insert(&mut self, rating: Rating) -> Result<(), MetricsError> {
        if rating.rating > 5 {
            return Err(MetricsError::OutOfScale {
                what: "rating",
                value: f64::from(rating.rating),
            });
        }
        let key = (rating.stakeholder, rating.requirement);
        if self.entries.contains_key(&key) {
            return Err(MetricsError::Duplicate(format!("rating {}/{}", key.0, key.1)));
        }
        self.entries.insert(key, rating.rating);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// `(stakeholder, requirement, rating)` triples in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.entries
            .iter()
            .map(|((s, r), &v)| (s.as_str(), r.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalienceRecommendation {
    pub from: String,
    pub to: String,
    pub salience: u8,
}

impl SalienceRecommendation {
    pub fn new(from: impl Into<String>, to: impl Into<String>, salience: u8) -> Result<Self, MetricsError> {
        let (from, to) = (from.into(), to.into());
        if from == to {
            return Err(MetricsError::SelfRecommendation(from));
        }
        if !(1..=8).contains(&salience) {
            return Err(MetricsError::OutOfScale {
                what: "salience",
                value: f64::from(salience),
            });
        }
        Ok(SalienceRecommendation { from, to, salience })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActivityKind {
    Comment,
    Change,
    Accepted,
    Rejected,
}

impl FromStr for ActivityKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "COMMENT" => Ok(ActivityKind::Comment),
            "CHANGE" => Ok(ActivityKind::Change),
            "ACCEPTED" => Ok(ActivityKind::Accepted),
            "REJECTED" => Ok(ActivityKind::Rejected),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub requirement: String,
    pub kind: ActivityKind,
    pub stakeholder: String,
    pub timestamp: String,
}

/// Requirement events, template fill ratios and per-stakeholder project counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivityLog {
    events: Vec<ActivityEvent>,
    template_fill: BTreeMap<String, f64>,
    assignments: BTreeMap<String, u32>,
}

impl ActivityLog {
    pub fn new(
        mut events: Vec<ActivityEvent>,
        template_fill: BTreeMap<String, f64>,
        assignments: BTreeMap<String, u32>,
    ) -> Result<Self, MetricsError> {
        if let Some(&value) = template_fill.values().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(MetricsError::OutOfScale {
                what: "template fill ratio",
                value,
            });
        }
        // canonical order: requirement, timestamp, then kind and stakeholder
        events.sort_by(|a, b| {
            (&a.requirement, &a.timestamp, a.kind, &a.stakeholder)
                .cmp(&(&b.requirement, &b.timestamp, b.kind, &b.stakeholder))
        });
        Ok(ActivityLog {
            events,
            template_fill,
            assignments,
        })
    }

    pub fn events(&self) -> &[ActivityEvent] {
        &self.events
    }

    pub fn template_fill(&self) -> &BTreeMap<String, f64> {
        &self.template_fill
    }

    pub fn assignments(&self) -> &BTreeMap<String, u32> {
        &self.assignments
    }

    fn events_of<'a>(&'a self, requirement: &'a str) -> impl Iterator<Item = &'a ActivityEvent> + 'a {
        self.events.iter().filter(move |e| e.requirement == requirement)
    }

    fn distinct_stakeholders(&self, requirement: &str, kinds: &[ActivityKind]) -> usize {
        self.events_of(requirement)
            .filter(|e| kinds.contains(&e.kind))
            .map(|e| e.stakeholder.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Number of ACCEPTED ↔ REJECTED transitions in the requirement's status history.
    fn status_flips(&self, requirement: &str) -> usize {
        let statuses: Vec<ActivityKind> = self
            .events_of(requirement)
            .filter(|e| matches!(e.kind, ActivityKind::Accepted | ActivityKind::Rejected))
            .map(|e| e.kind)
            .collect();
        statuses.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn latest_status(&self, requirement: &str) -> Option<ActivityKind> {
        self.events_of(requirement)
            .filter(|e| matches!(e.kind, ActivityKind::Accepted | ActivityKind::Rejected))
            .last()
            .map(|e| e.kind)
    }
}

/// Everything extraction needs about one project.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectDataset {
    pub hierarchy: Hierarchy,
    pub ratings: RatingMatrix,
    pub recommendations: Vec<SalienceRecommendation>,
    pub activity: Option<ActivityLog>,
}

impl ProjectDataset {
    pub fn extract(&self) -> Result<EvidenceReport, MetricsError> {
        extract_evidence(
            &self.hierarchy,
            &self.ratings,
            &self.recommendations,
            self.activity.as_ref(),
        )
    }
}

/// Per objective: percentage of its features that are refined into specific requirements.
/// An objective without features scores 0.
pub fn detail_percentage(hierarchy: &Hierarchy) -> Result<BTreeMap<String, f64>, MetricsError> {
    let out: BTreeMap<String, f64> = hierarchy
        .objectives()
        .map(|o| {
            let features: Vec<&RequirementNode> = hierarchy.children_of(o).collect();
            let detailed = features
                .iter()
                .filter(|f| hierarchy.children_of(&f.id).next().is_some())
                .count();
            let pct = if features.is_empty() {
                0.0
            } else {
                100.0 * detailed as f64 / features.len() as f64
            };
            (o.to_string(), pct)
        })
        .collect();
    if out.is_empty() {
        return Err(MetricsError::EmptyHierarchy);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityResult {
    /// `yes` or `no`.
    pub state: &'static str,
    pub summary: FiveNumberSummary,
    pub detail: BTreeMap<String, f64>,
}

/// `yes` when the first quartile of the detail percentages reaches 50%.
pub fn homogeneity(hierarchy: &Hierarchy) -> Result<HomogeneityResult, MetricsError> {
    let detail = detail_percentage(hierarchy)?;
    let values: Vec<f64> = detail.values().copied().collect();
    let summary = FiveNumberSummary::of(&values);
    let state = if summary.q1 >= HOMOGENEITY_Q1_THRESHOLD { "yes" } else { "no" };
    Ok(HomogeneityResult {
        state,
        summary,
        detail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedItem {
    pub mean: f64,
    pub bin: Level3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalResult {
    pub state: Level3,
    /// Percentage of items that fall in the modal bin.
    pub share: f64,
    pub items: BTreeMap<String, BinnedItem>,
}

/// Specificity from the mean rating of each objective, counting ratings of its descendants.
pub fn objective_specificity(
    hierarchy: &Hierarchy,
    ratings: &RatingMatrix,
) -> Result<ModalResult, MetricsError> {
    let mut per_objective: BTreeMap<&str, Vec<f64>> =
        hierarchy.objectives().map(|o| (o, Vec::new())).collect();
    if per_objective.is_empty() {
        return Err(MetricsError::EmptyHierarchy);
    }
    for (_, requirement, rating) in ratings.iter() {
        let objective = hierarchy
            .objective_of(requirement)
            .ok_or_else(|| MetricsError::UnknownRequirement(requirement.to_string()))?;
        per_objective
            .get_mut(objective)
            .expect("objective_of returns objectives")
            .push(f64::from(rating));
    }
    let mut items = BTreeMap::new();
    for (objective, values) in per_objective {
        if values.is_empty() {
            return Err(MetricsError::UnratedObjective(objective.to_string()));
        }
        let m = mean(&values);
        items.insert(objective.to_string(), BinnedItem { mean: m, bin: rating_bin(m) });
    }
    let (state, share) = modal_bin(items.values().map(|i| i.bin)).expect("non-empty");
    Ok(ModalResult { state, share, items })
}

/// Stakeholders' expertise from the mean salience each stakeholder receives.
pub fn stakeholder_expertise(
    recommendations: &[SalienceRecommendation],
) -> Result<ModalResult, MetricsError> {
    if recommendations.is_empty() {
        return Err(MetricsError::NoRecommendations);
    }
    let mut received: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in recommendations {
        received.entry(&r.to).or_default().push(f64::from(r.salience));
    }
    let items: BTreeMap<String, BinnedItem> = received
        .into_iter()
        .map(|(s, v)| {
            let m = mean(&v);
            (s.to_string(), BinnedItem { mean: m, bin: salience_bin(m) })
        })
        .collect();
    let (state, share) = modal_bin(items.values().map(|i| i.bin)).expect("non-empty");
    Ok(ModalResult { state, share, items })
}

/// Extracted state, or manual when project data cannot determine the variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvidenceValue {
    State(String),
    Manual,
}

impl EvidenceValue {
    pub const MANUAL: &'static str = "MANUAL";

    pub fn state(&self) -> Option<&str> {
        match self {
            EvidenceValue::State(s) => Some(s),
            EvidenceValue::Manual => None,
        }
    }
}

impl fmt::Display for EvidenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.state().unwrap_or(Self::MANUAL))
    }
}

impl Serialize for EvidenceValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EvidenceValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(if s == Self::MANUAL { EvidenceValue::Manual } else { EvidenceValue::State(s) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub variable: String,
    pub value: EvidenceValue,
    /// The numbers that justify `value`.
    pub statistics: BTreeMap<String, f64>,
    pub note: String,
}

/// One entry per Requisites input variable, in declared variable order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub entries: Vec<EvidenceEntry>,
}

impl EvidenceReport {
    pub fn get(&self, variable: &str) -> Option<&EvidenceEntry> {
        self.entries.iter().find(|e| e.variable == variable)
    }

    pub fn value(&self, variable: &str) -> Option<&EvidenceValue> {
        self.get(variable).map(|e| &e.value)
    }

    /// The extracted states as evidence; manual entries are left out.
    pub fn evidence(&self) -> Evidence {
        self.entries
            .iter()
            .filter_map(|e| e.value.state().map(|s| (e.variable.clone(), s.to_string())))
            .collect()
    }
}

const NOTE_MANUAL: &str = "Manual assignment.";
const NOTE_UNSUPPORTED: &str = "Not measurable from project data.";

/// Fills every measurable Requisites variable from the project data.
///
/// Homogeneity comes from the hierarchy, specificity from ratings, stakeholders' expertise
/// from salience recommendations. With an activity log, commitment, unclear cost/benefit,
/// variability and completeness are placed by [`stats::tercile_level`] over per-requirement
/// measures. Missing inputs yield manual entries, never errors.
pub fn extract_evidence(
    hierarchy: &Hierarchy,
    ratings: &RatingMatrix,
    recommendations: &[SalienceRecommendation],
    activity: Option<&ActivityLog>,
) -> Result<EvidenceReport, MetricsError> {
    let mut entries: BTreeMap<&str, EvidenceEntry> = BTreeMap::new();
    let mut put = |variable: &'static str, value: EvidenceValue, statistics: Vec<(&str, f64)>, note: String| {
        entries.insert(
            variable,
            EvidenceEntry {
                variable: variable.to_string(),
                value,
                statistics: statistics.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                note,
            },
        );
    };
    let state = |s: &str| EvidenceValue::State(s.to_string());

    let h = homogeneity(hierarchy)?;
    put(
        spec::HOMOGENEITY_OF_DESCRIPTION,
        state(h.state),
        vec![
            ("objectives", h.detail.len() as f64),
            ("detail_min", h.summary.min),
            ("detail_q1", h.summary.q1),
            ("detail_median", h.summary.median),
            ("detail_q3", h.summary.q3),
            ("detail_max", h.summary.max),
        ],
        format!("first quartile of objective detail percentages vs {HOMOGENEITY_Q1_THRESHOLD}%"),
    );

    let requirements: Vec<&str> = hierarchy.nodes().map(|n| n.id.as_str()).collect();

    if ratings.is_empty() {
        put(spec::SPECIFICITY, EvidenceValue::Manual, vec![], "no ratings available".into());
    } else {
        let s = objective_specificity(hierarchy, ratings)?;
        let mut statistics = vec![("objectives", s.items.len() as f64), ("modal_share_pct", s.share)];
        if let Some(log) = activity {
            let accepted_shared = requirements
                .iter()
                .filter(|r| log.latest_status(r) == Some(ActivityKind::Accepted))
                .filter(|r| {
                    log.distinct_stakeholders(r, &[ActivityKind::Comment, ActivityKind::Change]) >= 2
                })
                .count();
            statistics.push(("accepted_multi_stakeholder_requirements", accepted_shared as f64));
        }
        put(
            spec::SPECIFICITY,
            state(s.state.as_str()),
            statistics,
            "modal bin of per-objective mean ratings".into(),
        );
    }

    if recommendations.is_empty() {
        put(
            spec::STAKEHOLDERS_EXPERTISE,
            EvidenceValue::Manual,
            vec![],
            "no salience recommendations available".into(),
        );
    } else {
        let e = stakeholder_expertise(recommendations)?;
        let mut statistics = vec![("stakeholders", e.items.len() as f64), ("modal_share_pct", e.share)];
        if let Some(log) = activity {
            if !log.assignments().is_empty() {
                let projects: Vec<f64> = log.assignments().values().map(|&p| f64::from(p)).collect();
                statistics.push(("mean_projects_assigned", mean(&projects)));
            }
            let mut touched: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for ev in log.events() {
                touched.entry(&ev.stakeholder).or_default().insert(&ev.requirement);
            }
            if !touched.is_empty() {
                let counts: Vec<f64> = touched.values().map(|s| s.len() as f64).collect();
                statistics.push(("mean_requirements_touched", mean(&counts)));
            }
        }
        put(
            spec::STAKEHOLDERS_EXPERTISE,
            state(e.state.as_str()),
            statistics,
            "modal bin of mean received salience".into(),
        );
    }

    put(spec::DOMAIN_EXPERTISE, EvidenceValue::Manual, vec![], NOTE_MANUAL.into());
    put(spec::REUSED_REQUIREMENT, EvidenceValue::Manual, vec![], NOTE_UNSUPPORTED.into());
    put(spec::UNEXPECTED_DEPENDENCIES, EvidenceValue::Manual, vec![], NOTE_UNSUPPORTED.into());

    let with_events = activity.filter(|log| !log.events().is_empty());
    let tercile_entry = |values: &[f64], mut extra: Vec<(&'static str, f64)>| {
        let t = tercile_level(values);
        extra.extend([("tercile_lower", t.lower), ("tercile_upper", t.upper), ("mean", t.mean)]);
        (EvidenceValue::State(t.level.as_str().to_string()), extra)
    };

    match with_events {
        None => {
            for var in [
                spec::DEGREE_OF_COMMITMENT,
                spec::UNCLEAR_COST_BENEFIT,
                spec::REQUIREMENT_VARIABILITY,
            ] {
                put(var, EvidenceValue::Manual, vec![], "no activity log available".into());
            }
        }
        Some(log) => {
            let participants: Vec<f64> = requirements
                .iter()
                .map(|r| log.distinct_stakeholders(r, &[ActivityKind::Comment, ActivityKind::Change]) as f64)
                .collect();
            let several = participants.iter().filter(|&&p| p >= 2.0).count();
            let (value, stats) = tercile_entry(&participants, vec![("requirements_with_several_participants", several as f64)]);
            put(
                spec::DEGREE_OF_COMMITMENT,
                value,
                stats,
                "distinct commenting or changing stakeholders per requirement, by terciles".into(),
            );

            let mut flip_flops = 0usize;
            let mut multi_commented = 0usize;
            let unclear: Vec<f64> = requirements
                .iter()
                .map(|r| {
                    let flips = log.status_flips(r);
                    let several = log.distinct_stakeholders(r, &[ActivityKind::Comment]) >= 2;
                    flip_flops += usize::from(flips > 0);
                    multi_commented += usize::from(several);
                    flips as f64 + f64::from(u8::from(several))
                })
                .collect();
            let (value, stats) = tercile_entry(
                &unclear,
                vec![
                    ("requirements_with_status_flips", flip_flops as f64),
                    ("requirements_with_several_commenters", multi_commented as f64),
                ],
            );
            put(
                spec::UNCLEAR_COST_BENEFIT,
                value,
                stats,
                "status flips plus multi-stakeholder comments per requirement, by terciles".into(),
            );

            let changes: Vec<f64> = requirements
                .iter()
                .map(|r| log.events_of(r).filter(|e| e.kind == ActivityKind::Change).count() as f64)
                .collect();
            let total: f64 = changes.iter().sum();
            let (value, stats) = tercile_entry(&changes, vec![("total_changes", total)]);
            put(
                spec::REQUIREMENT_VARIABILITY,
                value,
                stats,
                "registered changes per requirement, by terciles".into(),
            );
        }
    }

    match activity.filter(|log| !log.template_fill().is_empty()) {
        None => put(
            spec::REQUIREMENT_COMPLETENESS,
            EvidenceValue::Manual,
            vec![],
            "no template fill data available".into(),
        ),
        Some(log) => {
            let fill: Vec<f64> = log.template_fill().values().copied().collect();
            let (value, stats) = tercile_entry(&fill, vec![("requirements", fill.len() as f64)]);
            put(
                spec::REQUIREMENT_COMPLETENESS,
                value,
                stats,
                "template fill ratio per requirement, by terciles".into(),
            );
        }
    }

    let entries = spec::VARIABLES
        .iter()
        .filter_map(|(var, _)| entries.remove(var))
        .collect();
    Ok(EvidenceReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One objective per entry of `shape`: `(features, features with specific children)`.
    fn hierarchy(shape: &[(usize, usize)]) -> Hierarchy {
        let mut nodes = Vec::new();
        for (o, &(features, detailed)) in shape.iter().enumerate() {
            let oid = format!("O{o}");
            nodes.push(RequirementNode::objective(&oid));
            for f in 0..features {
                let fid = format!("{oid}.F{f}");
                nodes.push(RequirementNode::feature(&fid, &oid));
                if f < detailed {
                    nodes.push(RequirementNode::specific(format!("{fid}.S0"), &fid));
                }
            }
        }
        Hierarchy::new(nodes).unwrap()
    }

    #[test]
    fn detail_percentages_by_hand() {
        let h = hierarchy(&[(4, 4), (4, 1), (0, 0)]);
        let d = detail_percentage(&h).unwrap();
        assert_eq!(d["O0"], 100.0);
        assert_eq!(d["O1"], 25.0);
        assert_eq!(d["O2"], 0.0);
    }

    #[test]
    fn empty_hierarchy() {
        let h = Hierarchy::new(vec![]).unwrap();
        assert_eq!(detail_percentage(&h).unwrap_err(), MetricsError::EmptyHierarchy);
        assert_eq!(homogeneity(&h).unwrap_err(), MetricsError::EmptyHierarchy);
    }

    #[test]
    fn homogeneity_decisions() {
        let all = homogeneity(&hierarchy(&[(2, 2), (3, 3)])).unwrap();
        assert_eq!((all.state, all.summary.q1), ("yes", 100.0));

        // detail [0, 30, 50, 70, 90]: Q1 at position 1
        let h = hierarchy(&[(10, 0), (10, 3), (10, 5), (10, 7), (10, 9)]);
        let r = homogeneity(&h).unwrap();
        assert!((r.summary.q1 - 30.0).abs() < 1e-12);
        assert_eq!(r.state, "no");
    }

    #[test]
    fn hierarchy_rules() {
        let err = Hierarchy::new(vec![RequirementNode::feature("F", "O")]).unwrap_err();
        assert!(matches!(err, MetricsError::InvalidNode { .. }));
        let err = Hierarchy::new(vec![
            RequirementNode::objective("O"),
            RequirementNode::specific("S", "O"),
        ])
        .unwrap_err();
        assert!(matches!(err, MetricsError::InvalidNode { .. }));
        let err = Hierarchy::new(vec![RequirementNode::objective("O"), RequirementNode::objective("O")])
            .unwrap_err();
        assert!(matches!(err, MetricsError::InvalidNode { .. }));
        let mut o = RequirementNode::objective("O");
        o.parent = Some("X".into());
        assert!(Hierarchy::new(vec![o]).is_err());
    }

    fn rating(s: &str, r: &str, v: u8) -> Rating {
        Rating {
            stakeholder: s.into(),
            requirement: r.into(),
            rating: v,
        }
    }

    #[test]
    fn specificity_bins_objective_means() {
        let h = hierarchy(&[(1, 1), (1, 1), (1, 1)]);
        // means 0.4, 2.6, 4.2 over five ratings each, placed at different levels
        let mut ratings = Vec::new();
        let spread = [[0, 0, 0, 1, 1], [2, 2, 3, 3, 3], [4, 4, 4, 4, 5]];
        for (o, values) in spread.iter().enumerate() {
            let targets = [format!("O{o}"), format!("O{o}.F0"), format!("O{o}.F0.S0")];
            for (i, &v) in values.iter().enumerate() {
                ratings.push(rating(&format!("s{i}"), &targets[i % 3], v));
            }
        }
        let m = RatingMatrix::new(ratings).unwrap();
        let s = objective_specificity(&h, &m).unwrap();
        let bins: Vec<Level3> = s.items.values().map(|i| i.bin).collect();
        assert_eq!(bins, vec![Level3::Low, Level3::Medium, Level3::High]);
        assert!((s.items["O0"].mean - 0.4).abs() < 1e-12);
    }

    #[test]
    fn all_fives_are_high_with_full_share() {
        let h = hierarchy(&[(1, 0), (2, 1)]);
        let m = RatingMatrix::new(vec![rating("a", "O0", 5), rating("a", "O1.F1", 5)]).unwrap();
        let s = objective_specificity(&h, &m).unwrap();
        assert_eq!((s.state, s.share), (Level3::High, 100.0));
    }

    #[test]
    fn unrated_objective_is_an_error() {
        let h = hierarchy(&[(1, 0), (1, 0)]);
        let m = RatingMatrix::new(vec![rating("a", "O0", 5)]).unwrap();
        assert_eq!(
            objective_specificity(&h, &m).unwrap_err(),
            MetricsError::UnratedObjective("O1".into())
        );
    }

    #[test]
    fn rating_matrix_rules() {
        assert!(RatingMatrix::new(vec![rating("a", "O0", 6)]).is_err());
        assert!(RatingMatrix::new(vec![rating("a", "O0", 1), rating("a", "O0", 2)]).is_err());
    }

    #[test]
    fn expertise_bins() {
        let recs = vec![
            SalienceRecommendation::new("x", "a", 2).unwrap(),
            SalienceRecommendation::new("x", "b", 4).unwrap(),
            SalienceRecommendation::new("y", "b", 5).unwrap(),
            SalienceRecommendation::new("x", "c", 7).unwrap(),
        ];
        let e = stakeholder_expertise(&recs).unwrap();
        let bins: Vec<Level3> = e.items.values().map(|i| i.bin).collect();
        assert_eq!(bins, vec![Level3::Low, Level3::Medium, Level3::High]);
        assert_eq!(e.items["b"].mean, 4.5);

        let single = [SalienceRecommendation::new("x", "a", 8).unwrap()];
        assert_eq!(stakeholder_expertise(&single).unwrap().state, Level3::High);
        assert_eq!(stakeholder_expertise(&[]).unwrap_err(), MetricsError::NoRecommendations);
        assert!(SalienceRecommendation::new("a", "a", 3).is_err());
        assert!(SalienceRecommendation::new("a", "b", 0).is_err());
        assert!(SalienceRecommendation::new("a", "b", 9).is_err());
    }

    #[test]
    fn graceful_degradation_without_inputs() {
        let h = hierarchy(&[(2, 2)]);
        let report = extract_evidence(&h, &RatingMatrix::default(), &[], None).unwrap();
        assert_eq!(report.entries.len(), 10);
        assert_eq!(
            report.value(spec::HOMOGENEITY_OF_DESCRIPTION),
            Some(&EvidenceValue::State("yes".into()))
        );
        for e in &report.entries {
            if e.variable != spec::HOMOGENEITY_OF_DESCRIPTION {
                assert_eq!(e.value, EvidenceValue::Manual, "{}", e.variable);
            }
        }
        assert_eq!(report.evidence(), Evidence::new().with(spec::HOMOGENEITY_OF_DESCRIPTION, "yes"));
    }

    fn event(r: &str, kind: ActivityKind, s: &str, t: &str) -> ActivityEvent {
        ActivityEvent {
            requirement: r.into(),
            kind,
            stakeholder: s.into(),
            timestamp: t.into(),
        }
    }

    #[test]
    fn identical_change_counts_degenerate_to_medium() {
        let h = hierarchy(&[(2, 1)]);
        let ids: Vec<String> = h.nodes().map(|n| n.id.clone()).collect();
        let mut events = Vec::new();
        for id in &ids {
            for k in 0..3 {
                events.push(event(id, ActivityKind::Change, "alice", &format!("2010-01-0{k}")));
            }
        }
        let log = ActivityLog::new(events, BTreeMap::new(), BTreeMap::new()).unwrap();
        let report = extract_evidence(&h, &RatingMatrix::default(), &[], Some(&log)).unwrap();
        let entry = report.get(spec::REQUIREMENT_VARIABILITY).unwrap();
        assert_eq!(entry.value, EvidenceValue::State("medium".into()));
        assert_eq!(entry.statistics["tercile_lower"], entry.statistics["tercile_upper"]);
        assert_eq!(
            report.value(spec::REQUIREMENT_COMPLETENESS),
            Some(&EvidenceValue::Manual)
        );
    }

    #[test]
    fn activity_measures() {
        use ActivityKind::*;
        let h = hierarchy(&[(3, 0)]);
        let log = ActivityLog::new(
            vec![
                event("O0.F0", Accepted, "a", "1"),
                event("O0.F0", Rejected, "b", "2"),
                event("O0.F0", Accepted, "a", "3"),
                event("O0.F0", Comment, "a", "1"),
                event("O0.F0", Comment, "b", "1"),
                event("O0.F1", Change, "c", "1"),
                event("O0.F1", Comment, "d", "2"),
            ],
            BTreeMap::from([("O0.F0".to_string(), 0.9), ("O0.F1".to_string(), 0.1), ("O0.F2".to_string(), 0.2)]),
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(log.status_flips("O0.F0"), 2);
        assert_eq!(log.latest_status("O0.F0"), Some(Accepted));
        assert_eq!(log.distinct_stakeholders("O0.F1", &[Comment, Change]), 2);
        let report = extract_evidence(&h, &RatingMatrix::default(), &[], Some(&log)).unwrap();
        let ucb = report.get(spec::UNCLEAR_COST_BENEFIT).unwrap();
        assert_eq!(ucb.statistics["requirements_with_status_flips"], 1.0);
        assert_eq!(ucb.statistics["requirements_with_several_commenters"], 1.0);
        // per requirement [O0: 0, F0: 3, F1: 0, F2: 0]: both cuts are 0, degenerate split
        assert_eq!(ucb.value, EvidenceValue::State("medium".into()));
        let completeness = report.get(spec::REQUIREMENT_COMPLETENESS).unwrap();
        // fill [0.1, 0.2, 0.9]: cuts 0.1667 and 0.4333, mean 0.4 -> medium
        assert_eq!(completeness.value, EvidenceValue::State("medium".into()));
    }

    #[test]
    fn report_json_shape() {
        let h = hierarchy(&[(1, 1)]);
        let report = extract_evidence(&h, &RatingMatrix::default(), &[], None).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["entries"][0]["variable"], "stakeholders_expertise");
        assert_eq!(json["entries"][0]["value"], "MANUAL");
        let back: EvidenceReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }
}
