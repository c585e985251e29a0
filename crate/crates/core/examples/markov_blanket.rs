//! Shows that a variable's Markov blanket screens it off from the rest of the network.
//!
//! ```text
//! cargo run --example markov_blanket [variable]
//! ```

use requisites::bn::{map_predict, posterior, Evidence};
use requisites::model::{default_network, spec::SPECIFICITY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = default_network();
    let var = std::env::args().nth(1).unwrap_or_else(|| SPECIFICITY.to_string());
    let blanket = net.markov_blanket(&var)?;
    println!("blanket of {var}: {}", blanket.iter().cloned().collect::<Vec<_>>().join(", "));

    // observe everything else in its most likely state given what is already fixed
    let mut everything = Evidence::new();
    for id in net.topological_order().into_iter().filter(|id| *id != var) {
        let state = map_predict(net, &everything, id)?;
        everything.insert(id, state);
    }
    let on_blanket: Evidence = everything.iter().filter(|(k, _)| blanket.contains(*k)).collect();

    let full = posterior(net, &everything, &var)?;
    let local = posterior(net, &on_blanket, &var)?;
    for ((state, a), b) in full.probabilities.iter().zip(local.values()) {
        println!("  {state:<8} all others {a:.6}   blanket only {b:.6}");
    }
    Ok(())
}
