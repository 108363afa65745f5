mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeucb_core::partition::{verify_nested, Metric, Partition};

#[test]
fn every_point_has_exactly_one_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = common::random_partition(&mut rng, 3, 40);
    let hi = p.domain().hi().to_vec();
    for i in 0..100_000 {
        let mut x = common::random_point(&mut rng, 3);
        // Put some points exactly on faces and on the domain's upper boundary.
        if i % 10 == 0 {
            let r = &p.regions()[rng.random_range(0..p.len())];
            let d = rng.random_range(0..3);
            x[d] = if i % 20 == 0 { r.lo[d] } else { r.hi[d] };
        }
        let owners = p.regions().iter().filter(|r| r.contains(&x, &hi)).count();
        assert_eq!(owners, 1, "point {x:?}");
        assert!(p.region_of(&x).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn splits_nest_and_shrink(seed in any::<u64>(), dims in 1usize..4, splits in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = common::random_partition(&mut rng, dims, splits / 2);
        let before = p.clone();
        for _ in 0..splits {
            let parent_diameter = |p: &Partition, id| p.get(id).map(|r: &treeucb_core::partition::Region| r.diameter(Metric::Linf));
            let snapshot = p.clone();
            let (id, _, _) = common::random_split(&mut rng, &mut p);
            let split = *p.history().last().unwrap();
            let d = parent_diameter(&snapshot, id).unwrap();
            for child in [split.lower, split.upper] {
                prop_assert!(p.get(child).unwrap().diameter(Metric::Linf) <= d);
                prop_assert!(p.get(child).unwrap().diameter(Metric::L2) <= snapshot.get(id).unwrap().diameter(Metric::L2));
            }
            prop_assert!(verify_nested(&snapshot, &p).unwrap().nested);
        }
        prop_assert!(verify_nested(&before, &p).unwrap().nested);
        prop_assert!(p.validate().is_ok());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), dims in 1usize..4, splits in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_partition(&mut rng, dims, splits);
        let back = Partition::from_json(&p.to_json()).unwrap();
        prop_assert_eq!(back.regions(), p.regions());
        prop_assert_eq!(back.to_json(), p.to_json());
    }

    #[test]
    fn coarsening_is_detected(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse = common::random_partition(&mut rng, 2, 1);
        let split = coarse.history()[0];
        // A different single split of the whole square straddles the first one.
        let other_dim = 1 - split.dim;
        let other = Partition::trivial(coarse.domain().clone()).split_region(treeucb_core::partition::RegionId(0), other_dim, 0.5).unwrap();
        let nesting = verify_nested(&coarse, &other).unwrap();
        prop_assert!(!nesting.nested);
        prop_assert!(nesting.witness.is_some());
    }
}
