//! Edits one weight of the shipped parameter set and compares the rebuilt network.
//!
//! ```text
//! cargo run --example custom_params
//! ```

use requisites::bn::{posterior, Evidence};
use requisites::model::spec::{REUSED_REQUIREMENT, STAKEHOLDERS_EXPERTISE};
use requisites::model::{build_requisites, default_network, default_params, CptParamSet, DEGREE_OF_REVISION};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut params = default_params();
    let revision = params.causes.iter_mut().find(|c| c.variable == DEGREE_OF_REVISION).unwrap();
    let reuse = revision.parents.iter_mut().find(|p| p.variable == REUSED_REQUIREMENT).unwrap();
    println!("{REUSED_REQUIREMENT} weights on {DEGREE_OF_REVISION}: {:?}", reuse.weights);
    // weaken the effect of no reuse; weights must stay ordered along the declared trend
    reuse.weights[2] = reuse.weights[1];
    params.validate()?;

    let text = params.to_toml();
    let edited = build_requisites(&CptParamSet::from_toml(&text)?)?;

    let evidence = Evidence::new().with(REUSED_REQUIREMENT, "none").with(STAKEHOLDERS_EXPERTISE, "low");
    for (label, net) in [("shipped", default_network()), ("edited", &edited)] {
        let p = posterior(net, &evidence, DEGREE_OF_REVISION)?;
        println!("{label:<8} P({DEGREE_OF_REVISION}=yes | no reuse, low expertise) = {:.3}", p.probability("yes").unwrap());
    }
    Ok(())
}
