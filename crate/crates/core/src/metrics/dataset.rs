//! Reading a project dataset from delimited text files.
//!
//! A dataset is a directory of UTF-8, comma-separated files. Each file starts with the exact
//! header row shown below; values are trimmed of surrounding whitespace.
//!
//! | file                  | required | header                                  |
//! |-----------------------|----------|-----------------------------------------|
//! | `hierarchy.csv`       | yes      | `id,level,parent`                       |
//! | `ratings.csv`         | no       | `stakeholder,requirement,rating`        |
//! | `recommendations.csv` | no       | `from,to,salience`                      |
//! | `activity.csv`        | no       | `requirement,event,stakeholder,timestamp` |
//! | `template_fill.csv`   | no       | `requirement,ratio`                     |
//! | `assignments.csv`     | no       | `stakeholder,projects`                  |
//!
//! * `level` is `objective`, `feature` or `specific`; `parent` is empty for objectives.
//! * `rating` is an integer in 0–5, `salience` an integer in 1–8.
//! * `event` is `COMMENT`, `CHANGE`, `ACCEPTED` or `REJECTED`. `timestamp` is an ISO-8601
//!   string; events of one requirement are ordered by comparing timestamps as text.
//! * `ratio` is a real number in [0, 1]; `projects` a non-negative integer.
//!
//! An optional file that is missing, zero bytes long, or holds only its header contributes
//! no records. Syntax problems are [`MetricsError::Parse`]; well-formed values that break a
//! rule (out of scale, unknown requirement, orphan node) are [`MetricsError::Invalid`].
//! Both carry the file name and the 1-based line and column.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{
    ActivityEvent, ActivityKind, ActivityLog, Hierarchy, Level, MetricsError, ProjectDataset,
    Rating, RatingMatrix, RequirementNode, SalienceRecommendation,
};

pub const HIERARCHY_FILE: &str = "hierarchy.csv";
pub const RATINGS_FILE: &str = "ratings.csv";
pub const RECOMMENDATIONS_FILE: &str = "recommendations.csv";
pub const ACTIVITY_FILE: &str = "activity.csv";
pub const TEMPLATE_FILL_FILE: &str = "template_fill.csv";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";

/// Raw file contents keyed by file name, as read from disk or uploaded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct DatasetFiles(pub BTreeMap<String, String>);

impl DatasetFiles {
    pub fn read_dir(dir: &Path) -> Result<Self, MetricsError> {
        if !dir.is_dir() {
            return Err(MetricsError::Io {
                file: dir.display().to_string(),
                message: "not a directory".into(),
            });
        }
        let mut files = BTreeMap::new();
        for name in [
            HIERARCHY_FILE,
            RATINGS_FILE,
            RECOMMENDATIONS_FILE,
            ACTIVITY_FILE,
            TEMPLATE_FILL_FILE,
            ASSIGNMENTS_FILE,
        ] {
            let path = dir.join(name);
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| MetricsError::Io {
                    file: name.into(),
                    message: e.to_string(),
                })?;
                files.insert(name.to_string(), text);
            }
        }
        Ok(DatasetFiles(files))
    }

    pub fn with(mut self, name: &str, text: impl Into<String>) -> Self {
        self.0.insert(name.to_string(), text.into());
        self
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    pub fn parse(&self) -> Result<ProjectDataset, MetricsError> {
        if let Some(unknown) = self.0.keys().find(|k| !KNOWN_FILES.contains(&k.as_str())) {
            return Err(MetricsError::Parse {
                file: unknown.clone(),
                line: 0,
                column: 0,
                message: "unknown dataset file".into(),
            });
        }
        let hierarchy_text = self.get(HIERARCHY_FILE).ok_or(MetricsError::MissingFile(HIERARCHY_FILE))?;
        let hierarchy = parse_hierarchy(hierarchy_text)?;
        let ratings = parse_ratings(self.get(RATINGS_FILE).unwrap_or(""), &hierarchy)?;
        let recommendations = parse_recommendations(self.get(RECOMMENDATIONS_FILE).unwrap_or(""))?;
        let events = parse_activity(self.get(ACTIVITY_FILE).unwrap_or(""), &hierarchy)?;
        let fill = parse_template_fill(self.get(TEMPLATE_FILL_FILE).unwrap_or(""), &hierarchy)?;
        let assignments = parse_assignments(self.get(ASSIGNMENTS_FILE).unwrap_or(""))?;
        let activity = if events.is_empty() && fill.is_empty() && assignments.is_empty() {
            None
        } else {
            Some(ActivityLog::new(events, fill, assignments)?)
        };
        Ok(ProjectDataset {
            hierarchy,
            ratings,
            recommendations,
            activity,
        })
    }
}

const KNOWN_FILES: [&str; 6] = [
    HIERARCHY_FILE,
    RATINGS_FILE,
    RECOMMENDATIONS_FILE,
    ACTIVITY_FILE,
    TEMPLATE_FILL_FILE,
    ASSIGNMENTS_FILE,
];

pub fn load_dataset(dir: &Path) -> Result<ProjectDataset, MetricsError> {
    DatasetFiles::read_dir(dir)?.parse()
}

/// One data row: its 1-based line number and trimmed fields.
struct Row {
    line: u64,
    fields: Vec<String>,
}

fn rows(file: &'static str, text: &str, header: &[&str]) -> Result<Vec<Row>, MetricsError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| {
        let line = e.position().map_or(0, csv::Position::line);
        MetricsError::Parse {
            file: file.into(),
            line,
            column: 0,
            message: e.to_string(),
        }
    };
    let found: Vec<String> = reader
        .headers()
        .map_err(parse_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(MetricsError::Parse {
            file: file.into(),
            line: 1,
            column: 1,
            message: format!("header must be `{}`, found `{}`", header.join(","), found.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        let line = record.position().map_or(0, csv::Position::line);
        out.push(Row {
            line,
            fields: record.iter().map(str::to_string).collect(),
        });
    }
    Ok(out)
}

fn field<T: FromStr>(file: &'static str, row: &Row, column: usize, what: &str) -> Result<T, MetricsError> {
    row.fields[column].parse().map_err(|_| MetricsError::Parse {
        file: file.into(),
        line: row.line,
        column: column as u64 + 1,
        message: format!("`{}` is not a valid {what}", row.fields[column]),
    })
}

fn invalid(file: &'static str, row: &Row, column: usize, err: MetricsError) -> MetricsError {
    MetricsError::Invalid {
        file: file.into(),
        line: row.line,
        column: column as u64 + 1,
        message: err.to_string(),
    }
}

fn parse_hierarchy(text: &str) -> Result<Hierarchy, MetricsError> {
    let file = HIERARCHY_FILE;
    let rows = rows(file, text, &["id", "level", "parent"])?;
    let mut nodes = Vec::with_capacity(rows.len());
    for row in &rows {
        let level: Level = field(file, row, 1, "level (objective, feature or specific)")?;
        let parent = Some(row.fields[2].clone()).filter(|p| !p.is_empty());
        nodes.push(RequirementNode {
            id: row.fields[0].clone(),
            level,
            parent,
        });
    }
    Hierarchy::new(nodes).map_err(|e| match e {
        MetricsError::InvalidNode { ref id, .. } => {
            let row = rows.iter().find(|r| &r.fields[0] == id).expect("node came from a row");
            invalid(file, row, 0, e)
        }
        other => other,
    })
}

fn parse_ratings(text: &str, hierarchy: &Hierarchy) -> Result<RatingMatrix, MetricsError> {
    let file = RATINGS_FILE;
    let mut matrix = RatingMatrix::default();
    for row in rows(file, text, &["stakeholder", "requirement", "rating"])? {
        let rating: i64 = field(file, &row, 2, "integer rating")?;
        let rating = Rating {
            stakeholder: row.fields[0].clone(),
            requirement: row.fields[1].clone(),
            rating: u8::try_from(rating).unwrap_or(u8::MAX),
        };
        if !hierarchy.contains(&rating.requirement) {
            return Err(invalid(file, &row, 1, MetricsError::UnknownRequirement(rating.requirement)));
        }
        let column = if rating.rating > 5 { 2 } else { 0 };
        matrix.insert(rating).map_err(|e| invalid(file, &row, column, e))?;
    }
    Ok(matrix)
}

fn parse_recommendations(text: &str) -> Result<Vec<SalienceRecommendation>, MetricsError> {
    let file = RECOMMENDATIONS_FILE;
    let mut out = Vec::new();
    for row in rows(file, text, &["from", "to", "salience"])? {
        let salience: i64 = field(file, &row, 2, "integer salience")?;
        let rec = SalienceRecommendation::new(
            row.fields[0].clone(),
            row.fields[1].clone(),
            u8::try_from(salience).unwrap_or(u8::MAX),
        )
        .map_err(|e| invalid(file, &row, 2, e))?;
        out.push(rec);
    }
    Ok(out)
}

fn parse_activity(text: &str, hierarchy: &Hierarchy) -> Result<Vec<ActivityEvent>, MetricsError> {
    let file = ACTIVITY_FILE;
    let mut out = Vec::new();
    for row in rows(file, text, &["requirement", "event", "stakeholder", "timestamp"])? {
        let kind: ActivityKind = field(file, &row, 1, "event (COMMENT, CHANGE, ACCEPTED or REJECTED)")?;
        if !hierarchy.contains(&row.fields[0]) {
            return Err(invalid(file, &row, 0, MetricsError::UnknownRequirement(row.fields[0].clone())));
        }
        out.push(ActivityEvent {
            requirement: row.fields[0].clone(),
            kind,
            stakeholder: row.fields[2].clone(),
            timestamp: row.fields[3].clone(),
        });
    }
    Ok(out)
}

fn parse_template_fill(text: &str, hierarchy: &Hierarchy) -> Result<BTreeMap<String, f64>, MetricsError> {
    let file = TEMPLATE_FILL_FILE;
    let mut out = BTreeMap::new();
    for row in rows(file, text, &["requirement", "ratio"])? {
        let ratio: f64 = field(file, &row, 1, "number")?;
        if !(0.0..=1.0).contains(&ratio) {
            return Err(invalid(file, &row, 1, MetricsError::OutOfScale {
                what: "template fill ratio",
                value: ratio,
            }));
        }
        if !hierarchy.contains(&row.fields[0]) {
            return Err(invalid(file, &row, 0, MetricsError::UnknownRequirement(row.fields[0].clone())));
        }
        if out.insert(row.fields[0].clone(), ratio).is_some() {
            return Err(invalid(file, &row, 0, MetricsError::Duplicate(row.fields[0].clone())));
        }
    }
    Ok(out)
}

fn parse_assignments(text: &str) -> Result<BTreeMap<String, u32>, MetricsError> {
    let file = ASSIGNMENTS_FILE;
    let mut out = BTreeMap::new();
    for row in rows(file, text, &["stakeholder", "projects"])? {
        let projects: u32 = field(file, &row, 1, "non-negative integer")?;
        if out.insert(row.fields[0].clone(), projects).is_some() {
            return Err(invalid(file, &row, 0, MetricsError::Duplicate(row.fields[0].clone())));
        }
    }
    Ok(out)
}
