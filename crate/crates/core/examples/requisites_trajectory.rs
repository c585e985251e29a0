//! Feeds project evidence into the shipped Requisites network one item at a time.
//!
//! ```text
//! cargo run --example requisites_trajectory
//! ```

use requisites::bn::{map_predict, posteriors, Evidence};
use requisites::model::spec::{HOMOGENEITY_OF_DESCRIPTION, SPECIFICITY, STAKEHOLDERS_EXPERTISE};
use requisites::model::{default_network, evidence_trajectory, DEGREE_OF_REVISION};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = default_network();
    let steps: Vec<(String, String)> = [
        (HOMOGENEITY_OF_DESCRIPTION, "yes"),
        (SPECIFICITY, "high"),
        (STAKEHOLDERS_EXPERTISE, "low"),
    ]
    .into_iter()
    .map(|(v, s)| (v.to_string(), s.to_string()))
    .collect();

    let trajectory = evidence_trajectory(net, &steps)?;
    println!("{:<40} {:>6} {:>6}", "evidence", "yes", "no");
    for (k, p) in trajectory.iter().enumerate() {
        let label = if k == 0 { "(prior)".to_string() } else { format!("+ {}={}", steps[k - 1].0, steps[k - 1].1) };
        println!("{label:<40} {:>6.3} {:>6.3}", p.probability("yes").unwrap(), p.probability("no").unwrap());
    }

    let evidence: Evidence = steps.into_iter().collect();
    println!("\nprediction: {DEGREE_OF_REVISION} = {}", map_predict(net, &evidence, DEGREE_OF_REVISION)?);

    let targets: Vec<&str> = net.variables().iter().map(|v| v.id.as_str()).collect();
    println!("\nall posteriors under the final evidence:");
    for p in posteriors(net, &evidence, &targets)? {
        println!("  {:<28} {}", p.variable, p.argmax());
    }
    Ok(())
}
