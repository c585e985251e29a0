//! Measures a project dataset directory and prints the evidence it yields.
//!
//! ```text
//! cargo run --example extract_metrics [dataset-dir]
//! ```

use std::path::PathBuf;

use requisites::bn::posterior;
use requisites::interchange::evidence_to_xml;
use requisites::metrics::load_dataset;
use requisites::model::{default_network, DEGREE_OF_REVISION};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/ralic-activity"));
    let report = load_dataset(&dir)?.extract()?;

    for entry in &report.entries {
        println!("{:<28} {}", entry.variable, serde_json::to_string(&entry.value)?);
        for (k, v) in &entry.statistics {
            println!("    {k} = {v}");
        }
        if !entry.note.is_empty() {
            println!("    {}", entry.note);
        }
    }

    let evidence = report.evidence();
    println!("\n{}", evidence_to_xml(&evidence)?);
    let p = posterior(default_network(), &evidence, DEGREE_OF_REVISION)?;
    println!("P({DEGREE_OF_REVISION} = yes | measured evidence) = {:.3}", p.probability("yes").unwrap());
    Ok(())
}
