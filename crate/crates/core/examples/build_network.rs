//! Builds a small network by hand, queries it and prints it in the TOML network format.
//!
//! ```text
//! cargo run --example build_network
//! ```

use requisites::bn::format::{load_network, save_network};
use requisites::bn::{build_network, map_predict, posterior, Cpt, Evidence, Variable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let variables = vec![
        Variable::new("rain", ["yes", "no"]),
        Variable::new("sprinkler", ["on", "off"]),
        Variable::new("wet_grass", ["yes", "no"]),
    ];
    let edges = vec![
        ("rain".to_string(), "sprinkler".to_string()),
        ("rain".to_string(), "wet_grass".to_string()),
        ("sprinkler".to_string(), "wet_grass".to_string()),
    ];
    // rows follow the parent order given in each CPT, last parent varying fastest
    let cpts = vec![
        Cpt::prior("rain", vec![0.2, 0.8]),
        Cpt::new("sprinkler", vec!["rain".into()], vec![vec![0.01, 0.99], vec![0.4, 0.6]]),
        Cpt::new(
            "wet_grass",
            vec!["rain".into(), "sprinkler".into()],
            vec![vec![0.99, 0.01], vec![0.8, 0.2], vec![0.9, 0.1], vec![0.0, 1.0]],
        ),
    ];
    let net = build_network(variables, edges, cpts)?;

    let evidence = Evidence::new().with("wet_grass", "yes");
    let rain = posterior(&net, &evidence, "rain")?;
    println!("P(rain | wet_grass=yes) = {:.4}", rain.probability("yes").unwrap());
    println!("most likely sprinkler state: {}", map_predict(&net, &evidence, "sprinkler")?);

    let text = save_network(&net, Some("sprinkler"));
    assert_eq!(save_network(&load_network(&text)?, Some("sprinkler")), text);
    print!("\n{text}");
    Ok(())
}
