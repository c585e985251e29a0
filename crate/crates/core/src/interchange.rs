//! XML interchange of evidence.
//!
//! The document has a single `evidence` root element containing one empty element per
//! observed variable, named after the variable, whose `state` attribute holds the state:
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <evidence>
//!   <homogeneity_of_description state="yes"/>
//!   <specificity state="high"/>
//! </evidence>
//! ```
//!
//! Elements appear in variable-name order. An empty `<evidence/>` is empty evidence. The
//! XML declaration, comments and whitespace are allowed; any other content, attribute or
//! nesting is rejected. Variable ids must be XML names to be exported.

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::bn::{BayesianNetwork, BnError, Evidence};

pub const ROOT_ELEMENT: &str = "evidence";
pub const STATE_ATTRIBUTE: &str = "state";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XmlError {
    #[error("malformed XML at byte {position}: {message}")]
    Malformed { position: u64, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("`{0}` is not a valid XML element name")]
    InvalidName(String),
    #[error(transparent)]
    Evidence(#[from] BnError),
}

impl XmlError {
    pub fn code(&self) -> &'static str {
        match self {
            XmlError::Malformed { .. } => "MalformedXml",
            XmlError::Schema(_) => "XmlSchemaViolation",
            XmlError::InvalidName(_) => "InvalidXmlName",
            XmlError::Evidence(e) => e.code(),
        }
    }
}

fn is_xml_name(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else { return false };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !s.to_ascii_lowercase().starts_with("xml")
}

pub fn evidence_to_xml(evidence: &Evidence) -> Result<String, XmlError> {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if evidence.is_empty() {
        out.push_str("<evidence/>\n");
        return Ok(out);
    }
    out.push_str("<evidence>\n");
    for (var, state) in evidence.iter() {
        if !is_xml_name(var) {
            return Err(XmlError::InvalidName(var.to_string()));
        }
        out.push_str(&format!("  <{var} {STATE_ATTRIBUTE}=\"{}\"/>\n", escape(state)));
    }
    out.push_str("</evidence>\n");
    Ok(out)
}

/// Parses an evidence document and validates it against `net`.
pub fn evidence_from_xml(text: &str, net: &BayesianNetwork) -> Result<Evidence, XmlError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let malformed = |reader: &Reader<&[u8]>, message: String| XmlError::Malformed {
        position: reader.buffer_position(),
        message,
    };

    let mut evidence = Evidence::new();
    let mut seen_root = false;
    let mut closed_root = false;
    // name of the open variable element, if any
    let mut open: Option<String> = None;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| malformed(&reader, e.to_string()))?;
        let is_empty = matches!(event, Event::Empty(_));
        match event {
            Event::Decl(_) | Event::Comment(_) => {}
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) if !seen_root => {
                if e.name().as_ref() != ROOT_ELEMENT.as_bytes() {
                    return Err(XmlError::Schema(format!(
                        "root element must be <{ROOT_ELEMENT}>, found <{}>",
                        String::from_utf8_lossy(e.name().as_ref())
                    )));
                }
                if e.attributes().next().is_some() {
                    return Err(XmlError::Schema(format!("<{ROOT_ELEMENT}> takes no attributes")));
                }
                seen_root = true;
                closed_root = is_empty;
            }
            Event::Start(e) | Event::Empty(e) if !closed_root && open.is_none() => {
                let (var, state) = variable_element(&e)?;
                net.variable(&var)?;
                if evidence.contains(&var) {
                    return Err(XmlError::Schema(format!("variable `{var}` appears more than once")));
                }
                evidence.insert(var.clone(), state);
                if !is_empty {
                    open = Some(var);
                }
            }
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                match open.take() {
                    Some(var) if var == name => {}
                    Some(var) => {
                        return Err(malformed(&reader, format!("expected </{var}>, found </{name}>")));
                    }
                    None if name == ROOT_ELEMENT && seen_root && !closed_root => closed_root = true,
                    None => return Err(malformed(&reader, format!("unexpected </{name}>"))),
                }
            }
            Event::Start(e) | Event::Empty(e) => {
                return Err(XmlError::Schema(format!(
                    "unexpected element <{}>",
                    String::from_utf8_lossy(e.name().as_ref())
                )));
            }
            other => {
                return Err(XmlError::Schema(format!("unexpected content {other:?}")));
            }
        }
    }
    if !seen_root {
        return Err(XmlError::Schema(format!("missing <{ROOT_ELEMENT}> root element")));
    }
    if !closed_root {
        return Err(malformed(&reader, format!("unclosed <{ROOT_ELEMENT}>")));
    }
    evidence.validate(net)?;
    Ok(evidence)
}

fn variable_element(e: &BytesStart<'_>) -> Result<(String, String), XmlError> {
    let var = std::str::from_utf8(e.name().as_ref())
        .map_err(|_| XmlError::Schema("element name is not UTF-8".into()))?
        .to_string();
    let mut state = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| XmlError::Schema(err.to_string()))?;
        if attr.key.as_ref() != STATE_ATTRIBUTE.as_bytes() {
            return Err(XmlError::Schema(format!(
                "<{var}> has unexpected attribute `{}`",
                String::from_utf8_lossy(attr.key.as_ref())
            )));
        }
        let value = attr
            .unescape_value()
            .map_err(|err| XmlError::Schema(err.to_string()))?;
        state = Some(value.into_owned());
    }
    let state = state.ok_or_else(|| XmlError::Schema(format!("<{var}> lacks a `{STATE_ATTRIBUTE}` attribute")))?;
    Ok((var, state))
}
