//! Erdős–Rényi trust-network generation.

use rand::Rng;

use crate::types::{DoId, TrustNetwork};

/// `G(n, p)`: every unordered pair is connected independently with
/// probability `edge_prob`. Pairs are visited in lexicographic order, one
/// uniform draw each, so the graph is a pure function of the RNG state.
pub fn generate_trust_network<R: Rng + ?Sized>(n_dos: usize, edge_prob: f64, rng: &mut R) -> TrustNetwork {
    let mut net = TrustNetwork::empty(n_dos);
    for a in 0..n_dos {
        for b in (a + 1)..n_dos {
            let u: f64 = rng.random();
            if u < edge_prob {
                net.add_edge(DoId(a), DoId(b));
            }
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn zero_probability_has_no_edges() {
        let mut rng = stream(1, Purpose::Network, 0, 0);
        assert_eq!(generate_trust_network(100, 0.0, &mut rng).edge_count(), 0);
    }

    #[test]
    fn unit_probability_is_complete() {
        let mut rng = stream(1, Purpose::Network, 0, 0);
        let net = generate_trust_network(100, 1.0, &mut rng);
        assert_eq!(net.edge_count(), 4950);
        for i in 0..100 {
            assert!(!net.contains_edge(DoId(i), DoId(i)));
        }
    }

    #[test]
    fn edge_count_matches_binomial_mean() {
        let pairs: f64 = 4950.0;
        let p = 0.7;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        let seeds = 100;
        let mut total = 0.0;
        for seed in 0..seeds {
            let mut rng = stream(seed, Purpose::Network, 0, 0);
            let net = generate_trust_network(100, p, &mut rng);
            let e = net.edge_count() as f64;
            assert!((e - pairs * p).abs() <= 5.0 * sd, "seed {seed}: {e}");
            for i in 0..100 {
                for &k in net.neighbors(DoId(i)) {
                    assert!(net.contains_edge(k, DoId(i)));
                }
            }
            total += e;
        }
        let mean = total / seeds as f64;
        assert!((mean - 3465.0).abs() <= 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_trust_network(30, 0.5, &mut stream(9, Purpose::Network, 0, 0));
        let b = generate_trust_network(30, 0.5, &mut stream(9, Purpose::Network, 0, 0));
        assert_eq!(a, b);
    }
}
