mod common;

use common::{enumerate_posterior, max_abs_diff, random_evidence, random_network, sample_assignment};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use requisites::bn::{
    joint_probability, map_predict, posterior, posterior_with_order, prior_marginals, BnError, Evidence,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn elimination_matches_enumeration(net_seed in any::<u64>(), ev_seed in any::<u64>()) {
        let net = random_network(net_seed, 8);
        let evidence = random_evidence(&net, ev_seed, 0.3);
        for v in net.variables() {
            match (posterior(&net, &evidence, &v.id), enumerate_posterior(&net, &evidence, &v.id)) {
                (Ok(p), Some(oracle)) => {
                    let got: Vec<f64> = p.values().collect();
                    prop_assert!(max_abs_diff(&got, &oracle) <= 1e-9, "{}: {got:?} vs {oracle:?}", v.id);
                }
                (Err(BnError::InconsistentEvidence), None) => {}
                (got, oracle) => prop_assert!(false, "{}: {got:?} vs {oracle:?}", v.id),
            }
        }
    }

    #[test]
    fn any_elimination_order_gives_the_same_posterior(
        net_seed in any::<u64>(),
        ev_seed in any::<u64>(),
        order_seed in any::<u64>(),
    ) {
        let net = random_network(net_seed, 8);
        let evidence = random_evidence(&net, ev_seed, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        for v in net.variables() {
            let mut hidden: Vec<&str> = net
                .variables()
                .iter()
                .map(|u| u.id.as_str())
                .filter(|u| *u != v.id && !evidence.contains(u))
                .collect();
            hidden.shuffle(&mut rng);
            let a = posterior(&net, &evidence, &v.id);
            let b = posterior_with_order(&net, &evidence, &v.id, &hidden);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let (a, b): (Vec<f64>, Vec<f64>) = (a.values().collect(), b.values().collect());
                    prop_assert!(max_abs_diff(&a, &b) <= 1e-9);
                }
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn blanket_screens_off_the_rest(net_seed in any::<u64>(), ev_seed in any::<u64>()) {
        let net = random_network(net_seed, 8);
        let full = sample_assignment(&net, ev_seed);
        for v in net.variables() {
            let blanket = net.markov_blanket(&v.id).unwrap();
            prop_assert!(!blanket.contains(&v.id));
            let on_blanket: Evidence = full.iter().filter(|(k, _)| blanket.contains(*k)).collect();
            let extra: Evidence = full.iter().filter(|(k, _)| *k != v.id).collect();
            let a: Vec<f64> = posterior(&net, &on_blanket, &v.id).unwrap().values().collect();
            let b: Vec<f64> = posterior(&net, &extra, &v.id).unwrap().values().collect();
            prop_assert!(max_abs_diff(&a, &b) <= 1e-9, "{}: {a:?} vs {b:?}", v.id);
        }
    }

    #[test]
    fn joint_sums_to_one(net_seed in any::<u64>()) {
        let net = random_network(net_seed, 6);
        let vars = net.variables();
        let mut assignment = vec![0usize; vars.len()];
        let mut total = 0.0;
        'outer: loop {
            let full: Evidence = vars.iter().zip(&assignment).map(|(v, &s)| (v.id.clone(), v.states[s].clone())).collect();
            total += joint_probability(&net, &full).unwrap();
            for i in 0..vars.len() {
                assignment[i] += 1;
                if assignment[i] < vars[i].states.len() {
                    continue 'outer;
                }
                assignment[i] = 0;
            }
            break;
        }
        prop_assert!((total - 1.0).abs() <= 1e-9, "{total}");
    }

    #[test]
    fn priors_are_normalized_and_match_posteriors(net_seed in any::<u64>()) {
        let net = random_network(net_seed, 8);
        for (id, m) in prior_marginals(&net) {
            prop_assert!((m.values().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(&m, &posterior(&net, &Evidence::new(), &id).unwrap());
        }
    }

    #[test]
    fn observed_variables_are_point_masses(net_seed in any::<u64>(), ev_seed in any::<u64>()) {
        let net = random_network(net_seed, 8);
        let evidence = random_evidence(&net, ev_seed, 0.5);
        for (var, state) in evidence.iter() {
            if let Ok(p) = posterior(&net, &evidence, var) {
                for (s, v) in &p.probabilities {
                    prop_assert_eq!(*v, if s == state { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn map_predict_is_first_argmax(net_seed in any::<u64>(), ev_seed in any::<u64>()) {
        let net = random_network(net_seed, 8);
        let evidence = random_evidence(&net, ev_seed, 0.3);
        for v in net.variables().iter().filter(|v| !evidence.contains(&v.id)) {
            let Some(oracle) = enumerate_posterior(&net, &evidence, &v.id) else { continue };
            let predicted = map_predict(&net, &evidence, &v.id).unwrap();
            let best = oracle.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let idx = v.state_index(&predicted).unwrap();
            prop_assert!(oracle[idx] >= best - 1e-9);
            // nothing earlier is strictly tied or better, up to rounding
            prop_assert!(oracle[..idx].iter().all(|&p| p < best + 1e-9));
            prop_assert_eq!(&predicted, &map_predict(&net, &evidence, &v.id).unwrap());
        }
    }
}
