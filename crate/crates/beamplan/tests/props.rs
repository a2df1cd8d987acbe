//! Property tests for the metric and quantization layers.

use beamplan::arraysim::{array_response, dft_codebook};
use beamplan::skeleton::{
    quantize_skeleton, skeleton_distance, AnglePair, PathSkeleton, QuantizedSkeleton,
};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    // Stay inside the open ULA range.
    -1.55f64..1.55
}

fn skeleton(l: usize) -> impl Strategy<Value = PathSkeleton> {
    proptest::collection::vec(
        proptest::option::weighted(0.8, (angle(), angle())),
        l..=l,
    )
    .prop_map(|pairs| {
        PathSkeleton::new(
            pairs
                .into_iter()
                .map(|p| p.map(|(aod_rad, aoa_rad)| AnglePair { aod_rad, aoa_rad }))
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn steering_vectors_are_unit_norm(phi in angle(), n in 1usize..=96) {
        let sv = array_response(phi, n).unwrap();
        let norm: f64 = sv.elements().iter().map(|e| e.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_is_symmetric_and_bounded(a in skeleton(3), b in skeleton(3)) {
        let d_ab = skeleton_distance(&a, &b, 32, 4).unwrap();
        let d_ba = skeleton_distance(&b, &a, 32, 4).unwrap();
        prop_assert!((d_ab - d_ba).abs() < 1e-12);
        prop_assert!((-1e-12..=3.0 + 1e-12).contains(&d_ab));
    }

    #[test]
    fn nulling_an_entry_never_increases_distance(
        a in skeleton(3),
        b in skeleton(3),
        slot in 0usize..3,
    ) {
        let base = skeleton_distance(&a, &b, 32, 4).unwrap();
        let mut pairs = b.pairs().to_vec();
        pairs[slot] = None;
        let degraded = skeleton_distance(&a, &PathSkeleton::new(pairs), 32, 4).unwrap();
        prop_assert!(degraded <= base + 1e-12);
    }

    #[test]
    fn quantization_picks_the_nearest_grid_point(phi in angle()) {
        let bs = dft_codebook(16, 48).unwrap();
        let ue = dft_codebook(4, 24).unwrap();
        let ps = PathSkeleton::new(vec![Some(AnglePair { aod_rad: phi, aoa_rad: -phi })]);
        let qs = quantize_skeleton(&ps, &bs, &ue).unwrap();
        let pair = qs.pairs()[0].unwrap();
        for k in 0..48 {
            prop_assert!(
                (phi.sin() - bs.sin_angle(pair.bs as usize)).abs()
                    <= (phi.sin() - bs.sin_angle(k)).abs() + 1e-15
            );
        }
        // Grid-aligned skeletons are fixed points of dequantize-quantize.
        let round = quantize_skeleton(&qs.dequantize(&bs, &ue), &bs, &ue).unwrap();
        prop_assert_eq!(round, qs);
    }

    #[test]
    fn quantized_identity_distance_counts_active_paths(
        pairs in proptest::collection::vec(proptest::option::weighted(0.7, (0u16..32, 0u16..16)), 3),
    ) {
        let bs = dft_codebook(16, 32).unwrap();
        let ue = dft_codebook(4, 16).unwrap();
        let qs = QuantizedSkeleton::new(
            pairs.into_iter().map(|p| p.map(|(b, u)| beamplan::skeleton::BeamPair { bs: b, ue: u })).collect(),
        );
        let d = beamplan::skeleton::quantized_distance(&qs, &qs, &bs, &ue).unwrap();
        prop_assert!((d - qs.active_paths() as f64).abs() < 1e-9);
    }
}
