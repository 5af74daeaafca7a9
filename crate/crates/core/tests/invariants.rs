use normshift::netgen::{barabasi_albert, ring_lattice, watts_strogatz};
use normshift::popgen::{ipf_fit, Dimension, Marginal, MarginalSet, SeedTable};
use normshift::stats::hpdi;
use normshift::weather::{generate_sequence, stationary_wet};
use normshift::{derive_rng_stream, Weather};
use proptest::prelude::*;

fn table(shape: &[usize], cells: Vec<f64>) -> SeedTable {
    SeedTable {
        dimensions: shape
            .iter()
            .enumerate()
            .map(|(i, &n)| Dimension { name: format!("d{i}"), categories: (0..n).map(|k| k.to_string()).collect() })
            .collect(),
        cells,
    }
}

fn shaped_cells() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, Vec<f64>)> {
    prop::collection::vec(2usize..4, 2..4).prop_flat_map(|shape| {
        let n = shape.iter().product::<usize>();
        (Just(shape), prop::collection::vec(0.05f64..20.0, n), prop::collection::vec(0.0f64..50.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ipf_matches_consistent_marginals((shape, seed, truth) in shaped_cells()) {
        let seed = table(&shape, seed);
        let targets = MarginalSet {
            marginals: (0..shape.len())
                .map(|d| Marginal { dimension: format!("d{d}"), counts: seed.marginal_of(&truth, d) })
                .collect(),
        };
        let fit = ipf_fit(&seed, &targets, 1e-8, 500).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.weights.iter().all(|w| *w >= 0.0));
        for (d, m) in targets.marginals.iter().enumerate() {
            for (a, b) in seed.marginal_of(&fit.weights, d).iter().zip(&m.counts) {
                prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
        prop_assert_eq!(fit.error_history.len(), fit.sweeps as usize);
    }

    #[test]
    fn small_world_preserves_edge_count(n in 8usize..200, half_k in 1usize..4, beta in 0.0f64..1.0, s in any::<u64>()) {
        let k = 2 * half_k;
        let g = watts_strogatz(n, k, beta, &mut derive_rng_stream(s, "inv/ws", 0)).unwrap();
        prop_assert_eq!(g.edge_count(), n * k / 2);
        prop_assert_eq!(g.check(), Ok(()));
        prop_assert_eq!((0..n).map(|i| g.degree(i)).sum::<usize>(), n * k);
        if beta == 0.0 {
            prop_assert_eq!(g, ring_lattice(n, k).unwrap());
        }
    }

    #[test]
    fn preferential_attachment_edge_identity(n in 1usize..300, m0 in 1usize..8, m in 1usize..8, s in any::<u64>()) {
        prop_assume!(m <= m0 && m0 <= n);
        let g = barabasi_albert(n, m0, m, &mut derive_rng_stream(s, "inv/ba", 0)).unwrap();
        prop_assert_eq!(g.edge_count(), m0 * (m0 - 1) / 2 + (n - m0) * m);
        prop_assert_eq!(g.check(), Ok(()));
        prop_assert!((m0..n).all(|i| g.degree(i) >= m));
    }

    #[test]
    fn weather_sequences_are_seed_determined(p in 0.01f64..0.99, q in 0.01f64..0.99, days in 0usize..400, s in any::<u64>()) {
        let matrix = [[p, 1.0 - p], [q, 1.0 - q]];
        let a = generate_sequence(&matrix, Weather::Dry, days, &mut derive_rng_stream(s, "inv/w", 0));
        let b = generate_sequence(&matrix, Weather::Dry, days, &mut derive_rng_stream(s, "inv/w", 0));
        prop_assert_eq!(a.days(), b.days());
        prop_assert_eq!(a.len(), days);
        if days > 0 {
            prop_assert_eq!(a.get(0), Weather::Dry);
        }
        let pi = stationary_wet(&matrix);
        prop_assert!((0.0..=1.0).contains(&pi));
        // balance: wet -> dry flow equals dry -> wet flow
        prop_assert!((pi * matrix[0][1] - (1.0 - pi) * matrix[1][0]).abs() < 1e-12);
    }

    #[test]
    fn hpdi_covers_the_requested_mass(v in prop::collection::vec(-1e3f64..1e3, 1..300), mass in 0.05f64..1.0) {
        let (lo, hi) = hpdi(&v, mass);
        prop_assert!(lo <= hi);
        let inside = v.iter().filter(|x| (lo..=hi).contains(*x)).count();
        prop_assert!(inside as f64 >= mass * v.len() as f64 - 1e-9, "{inside} of {}", v.len());
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo >= min && hi <= max);
    }
}
