//! Canonical text format for networks.
//!
//! A network file is a TOML document:
//!
//! ```toml
//! format = "network"
//! name = "chain"                      # optional
//! edges = [["A", "B"]]                # (parent, child) pairs
//!
//! [[variable]]
//! id = "A"
//! states = ["a", "not_a"]             # order is significant
//!
//! [[variable]]
//! id = "B"
//! states = ["b", "not_b"]
//!
//! [[cpt]]
//! child = "A"
//! parents = []
//! rows = [[0.3, 0.7]]
//!
//! [[cpt]]
//! child = "B"
//! parents = ["A"]
//! rows = [[0.8, 0.2], [0.1, 0.9]]     # one row per parent combination
//! ```
//!
//! CPT rows enumerate parent combinations row-major in the order `parents` lists them,
//! the last-listed parent varying fastest. With parents `[X, Y]` over states `[x0, x1]`
//! and `[y0, y1, y2]` the rows are `(x0,y0) (x0,y1) (x0,y2) (x1,y0) (x1,y1) (x1,y2)`.
//! Each row lists one probability per child state in declared state order. Floats are
//! written in shortest round-trip form, so save followed by load is lossless.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{build_network, BayesianNetwork, BnError, Cpt, Variable};

pub const NETWORK_FORMAT: &str = "network";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Syntax(String),
    #[error("expected format `{expected}`, found `{found}`")]
    WrongFormat { expected: String, found: String },
    #[error(transparent)]
    Invalid(#[from] BnError),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Syntax(_) => "Syntax",
            FormatError::WrongFormat { .. } => "WrongFormat",
            FormatError::Invalid(e) => e.code(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(rename = "variable", default)]
    variables: Vec<Variable>,
    #[serde(rename = "cpt", default)]
    cpts: Vec<Cpt>,
}

/// Reads the `format` key of a TOML document without interpreting the rest.
pub fn document_format(text: &str) -> Result<String, FormatError> {
    #[derive(Deserialize)]
    struct Header {
        format: String,
    }
    let header: Header = toml::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
    Ok(header.format)
}

pub fn load_network(text: &str) -> Result<BayesianNetwork, FormatError> {
    let doc: NetworkDocument =
        toml::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
    if doc.format != NETWORK_FORMAT {
        return Err(FormatError::WrongFormat {
            expected: NETWORK_FORMAT.into(),
            found: doc.format,
        });
    }
    Ok(build_network(doc.variables, doc.edges, doc.cpts)?)
}

pub fn save_network(net: &BayesianNetwork, name: Option<&str>) -> String {
    let doc = NetworkDocument {
        format: NETWORK_FORMAT.into(),
        name: name.map(str::to_string),
        edges: net.edges().to_vec(),
        variables: net.variables().to_vec(),
        cpts: net.cpts(),
    };
    toml::to_string(&doc).expect("network documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"
format = "network"
edges = [["A", "B"]]

[[variable]]
id = "A"
states = ["a", "not_a"]

[[variable]]
id = "B"
states = ["b", "not_b"]

[[cpt]]
child = "A"
parents = []
rows = [[0.3, 0.7]]

[[cpt]]
child = "B"
parents = ["A"]
rows = [[0.8, 0.2], [0.1, 0.9]]
"#;

    #[test]
    fn loads_documented_example() {
        let net = load_network(CHAIN).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.cpt("B").unwrap().rows[1], vec![0.1, 0.9]);
    }

    #[test]
    fn save_then_load_is_lossless() {
        let net = load_network(CHAIN).unwrap();
        let text = save_network(&net, Some("chain"));
        let again = load_network(&text).unwrap();
        assert_eq!(net.cpts(), again.cpts());
        assert_eq!(net.variables(), again.variables());
        assert_eq!(net.edges(), again.edges());
    }

    #[test]
    fn cycle_surfaces_as_validation_error() {
        let text = CHAIN.replace(r#"edges = [["A", "B"]]"#, r#"edges = [["A", "B"], ["B", "A"]]"#);
        let err = load_network(&text).unwrap_err();
        assert_eq!(err.code(), "CycleDetected");
    }

    #[test]
    fn wrong_dialect_and_garbage() {
        let err = load_network("format = \"requisites-params\"").unwrap_err();
        assert!(matches!(err, FormatError::WrongFormat { .. }));
        assert_eq!(load_network("not toml [").unwrap_err().code(), "Syntax");
        assert_eq!(document_format(CHAIN).unwrap(), "network");
    }
}
