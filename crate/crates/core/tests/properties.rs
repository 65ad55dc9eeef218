use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpnet::featurize::{decode_features, encode_features, normalize_diagram, FeatureDataset};
use rpnet::nn::{decode_checkpoint, encode_checkpoint};
use rpnet::persistence::{compute_diagram, compute_diagram_oracle};
use rpnet::signature::{return_probabilities_naive, return_probabilities_spectral};
use rpnet::verify::random_feature_tensor;
use rpnet::{Graph, RpnetConfig, RpnetModel};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..=2 * n).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> =
                pairs.into_iter().filter(|(u, v)| u != v).map(|(u, v)| (u.min(v), u.max(v))).collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::new(n, edges).unwrap()
        })
    })
}

fn graph_with_values(max_n: usize) -> impl Strategy<Value = (Graph, Vec<i64>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), proptest::collection::vec(-3i64..=3, n))
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_matches_oracle_on_integers((g, values) in graph_with_values(12)) {
        let a = compute_diagram(&g, &values).unwrap();
        let b = compute_diagram_oracle(&g, &values).unwrap();
        prop_assert!(a.same_multiset(&b), "{:?} vs {:?}", a.sorted_points(), b.sorted_points());
    }

    #[test]
    fn diagram_is_invariant_under_relabeling(
        ((g, values), perm) in graph_with_values(14).prop_flat_map(|(g, v)| {
            let n = g.n();
            (Just((g, v)), permutation(n))
        })
    ) {
        let h = g.permuted(&perm).unwrap();
        let mut moved = vec![0; values.len()];
        for (i, &p) in perm.iter().enumerate() {
            moved[p] = values[i];
        }
        let a = compute_diagram(&g, &values).unwrap();
        let b = compute_diagram(&h, &moved).unwrap();
        prop_assert!(a.same_multiset(&b));
    }

    #[test]
    fn shifting_values_shifts_the_diagram((g, values) in graph_with_values(14), shift in -10i64..=10) {
        let shifted: Vec<i64> = values.iter().map(|v| v + shift).collect();
        let a = compute_diagram(&g, &values).unwrap().map_values(|v| v + shift);
        let b = compute_diagram(&g, &shifted).unwrap();
        prop_assert!(a.same_multiset(&b));
    }

    #[test]
    fn signature_is_permutation_equivariant(
        (g, perm) in graph_strategy(16).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), permutation(n))
        }),
        k in 1usize..=6,
    ) {
        let h = g.permuted(&perm).unwrap();
        let a = return_probabilities_spectral::<f64>(&g, k).unwrap().permute_rows(&perm);
        let b = return_probabilities_spectral::<f64>(&h, k).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
        let c = return_probabilities_naive::<f64>(&h, k).unwrap();
        prop_assert!(b.max_abs_diff(&c) < 1e-10);
    }

    #[test]
    fn return_probabilities_are_probabilities(g in graph_strategy(16), k in 1usize..=8) {
        let s = return_probabilities_spectral::<f64>(&g, k).unwrap();
        for v in 0..g.n() {
            for c in 0..k {
                prop_assert!((0.0..=1.0).contains(&s.get(v, c)));
            }
        }
    }

    #[test]
    fn normalization_ignores_positive_scaling(
        (g, values) in graph_with_values(12),
        power in -4i32..=4,
    ) {
        // Shift into positive values; powers of two keep the scaling exact.
        let base: Vec<f64> = values.iter().map(|&v| v as f64 + 4.0).collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * 2f64.powi(power)).collect();
        let mut a = normalize_diagram(&compute_diagram(&g, &base).unwrap());
        let mut b = normalize_diagram(&compute_diagram(&g, &scaled).unwrap());
        let key = |p: &rpnet::TaggedPoint<f64>| (p.group, p.birth.to_bits(), p.death.to_bits());
        a.sort_by_key(key);
        b.sort_by_key(key);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|p| (0.0..=1.0).contains(&p.birth) && (0.0..=1.0).contains(&p.death)));
    }

    #[test]
    fn feature_file_round_trip_and_corruption(seed in any::<u64>(), flip in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors: Vec<_> = (0..6).map(|_| random_feature_tensor(&mut rng, 3, 4, 3)).collect();
        let ds = FeatureDataset::new(tensors, 3, 4, 3).unwrap();
        let bytes = encode_features(&ds);
        let back: FeatureDataset<f64> = decode_features(&bytes).unwrap();
        prop_assert_eq!(encode_features(&back), bytes.clone());
        prop_assert_eq!(back.tensors(), ds.tensors());
        let mut bad = bytes.clone();
        let i = flip.index(bad.len());
        bad[i] ^= 0x20;
        prop_assert!(decode_features::<f64>(&bad).is_err());
        prop_assert!(decode_features::<f64>(&bytes[..i]).is_err());
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>()) {
        let model = RpnetModel::<f64>::new(RpnetConfig::new(2, 3), seed).unwrap();
        let bytes = encode_checkpoint(model.params());
        prop_assert_eq!(&decode_checkpoint::<f64>(&bytes).unwrap(), model.params());
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 1;
        prop_assert!(decode_checkpoint::<f64>(&bad).is_err());
    }
}
