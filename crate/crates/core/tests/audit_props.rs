mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeucb_core::audit::{audit, bound2, record_from_engine, replay, AuditRecord, ReplayEvent};
use treeucb_core::bandit::{Engine, EngineConfig, Refinement, Variant};
use treeucb_core::observations::ObservationLog;
use treeucb_core::partition::{Domain, Partition};

const ALPHAS: [f64; 3] = [0.3, 0.5, 0.9];

/// Points that pile up where the partition is coarse: repeats of the last
/// point, tight clusters and uniform draws, with splits placed through the
/// region of the latest point.
fn adversarial_events(rng: &mut ChaCha8Rng, dims: usize, rounds: usize, max_regions: usize) -> Vec<ReplayEvent> {
    let mut partition = Partition::trivial(Domain::unit(dims));
    let centers: Vec<Vec<f64>> = (0..3).map(|_| common::random_point(rng, dims)).collect();
    let mut last = common::random_point(rng, dims);
    let mut events = Vec::with_capacity(rounds + max_regions);
    let mut points = 0;
    while points < rounds {
        if partition.len() < max_regions && rng.random_bool(0.02) {
            let region = partition.region_of(&last).unwrap().clone();
            let dim = rng.random_range(0..dims);
            let threshold = region.lo[dim] + region.edge(dim) * rng.random_range(0.01..0.99);
            if threshold > region.lo[dim] && threshold < region.hi[dim] {
                partition.split_in_place(region.id, dim, threshold).unwrap();
                events.push(ReplayEvent::Split { region: region.id, dim, threshold });
            }
            continue;
        }
        let point = match rng.random_range(0..4) {
            0 => last.clone(),
            1 => {
                let c = &centers[rng.random_range(0..centers.len())];
                c.iter().map(|&v| (v + rng.random_range(-1e-3..1e-3)).clamp(0.0, 1.0)).collect()
            }
            2 => (0..dims).map(|_| if rng.random_bool(0.5) { 0.0 } else { 1.0 }).collect(),
            _ => common::random_point(rng, dims),
        };
        last = point.clone();
        events.push(ReplayEvent::Point(point));
        points += 1;
    }
    events
}

/// The same records by brute force: rebuild the partition up to each point
/// and count earlier points in its region.
fn naive_records(dims: usize, events: &[ReplayEvent]) -> Vec<AuditRecord> {
    let mut partition = Partition::trivial(Domain::unit(dims));
    let mut log = ObservationLog::new();
    let mut records: Vec<AuditRecord> = Vec::new();
    for event in events {
        match event {
            ReplayEvent::Split { region, dim, threshold } => {
                partition.split_in_place(*region, *dim, *threshold).unwrap();
                if let Some(r) = records.last_mut() {
                    r.partition_size = partition.len();
                }
            }
            ReplayEvent::Point(p) => {
                records.push(record_from_engine(&partition, &log, p).unwrap());
                log.record(p.clone(), None, 0.0).unwrap();
            }
        }
    }
    records
}

#[test]
fn adversarial_traces_satisfy_all_three_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let dims = 1 + case % 3;
        let events = adversarial_events(&mut rng, dims, 5000, 64);
        let records = replay(&Partition::trivial(Domain::unit(dims)), &events).unwrap();
        assert_eq!(records.len(), 5000);
        let report = audit(&records, &ALPHAS).unwrap();
        assert!(report.final_partition_size <= 64);
        assert!(report.pass, "case {case}:\n{report}");
    }
}

#[test]
fn replay_matches_brute_force_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..10 {
        let dims = 1 + case % 3;
        let events = adversarial_events(&mut rng, dims, 800, 40);
        let fast = replay(&Partition::trivial(Domain::unit(dims)), &events).unwrap();
        assert_eq!(fast, naive_records(dims, &events), "case {case}");
    }
}

fn engine_events(variant: Variant, refinement: Refinement, seed: u64, rounds: usize) -> (Partition, Vec<ReplayEvent>) {
    let mut cfg = EngineConfig::for_variant(variant);
    cfg.refinement = refinement;
    cfg.horizon = Some(rounds as u64);
    cfg.seed = seed;
    let domain = Domain::cube(2, -0.5, 0.5);
    let mut engine = Engine::new(cfg, domain.clone(), None).unwrap();
    let mut noise = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let mut events = Vec::new();
    for _ in 0..rounds {
        let p = engine.ask(None).unwrap();
        events.extend(p.splits.iter().map(|s| ReplayEvent::Split { region: s.parent, dim: s.dim, threshold: s.threshold }));
        let f = 1.0 - (p.arm[0] - 0.2).abs() - (p.arm[1] + 0.1).abs();
        engine.tell(f + noise.random_range(-0.05..0.05)).unwrap();
        events.push(ReplayEvent::Point(p.arm));
    }
    let tail = engine.finalize().unwrap();
    events.extend(tail.iter().map(|s| ReplayEvent::Split { region: s.parent, dim: s.dim, threshold: s.threshold }));
    assert_eq!(
        replay_size(&Partition::trivial(domain.clone()), &events),
        engine.partition().len(),
        "replayed splits rebuild the engine's partition"
    );
    (Partition::trivial(domain), events)
}

fn replay_size(initial: &Partition, events: &[ReplayEvent]) -> usize {
    replay(initial, events).unwrap().last().unwrap().partition_size
}

#[test]
fn engine_traces_pass_for_every_refinement() {
    let fit = treeucb_core::tree::FitConfig::default();
    let cases = [
        (Variant::Tucb, Refinement::Tree(fit)),
        (Variant::UniformMesh, Refinement::Mesh),
        (Variant::Tucb, Refinement::Zooming),
        (Variant::Tucb, Refinement::Fixed),
    ];
    for (variant, refinement) in cases {
        for seed in 0..3 {
            let (initial, events) = engine_events(variant, refinement.clone(), seed, 1500);
            let records = replay(&initial, &events).unwrap();
            let report = audit(&records, &ALPHAS).unwrap();
            assert!(report.pass, "{variant} {refinement:?} seed {seed}:\n{report}");
        }
    }
}

#[test]
fn hand_trace_values() {
    let records: Vec<AuditRecord> = (1..=3)
        .map(|t| AuditRecord { t, prev_partition_size: 1, partition_size: 1, n_pre: (t - 1).max(1), n0_pre: t - 1 })
        .collect();
    let r = audit(&records, &[0.5]).unwrap();
    assert_eq!(r.sum1, 2.5);
    assert!((r.sum2 - 11.0 / 6.0).abs() < 1e-12);
    assert!((r.bound1 - std::f64::consts::E * (1.0 + 3.0 * (std::f64::consts::E - 1.0)).ln()).abs() < 1e-12);
    assert!((r.bound2 - (1.0 + 3f64.ln())).abs() < 1e-12);
    assert!(r.pass);
}

#[test]
fn every_point_alone_meets_bound2_exactly() {
    // Each point in its own fresh cell: n0 = 0 throughout, sum2 = T.
    for t in [1u64, 2, 10, 500] {
        let records: Vec<AuditRecord> = (1..=t)
            .map(|i| AuditRecord { t: i, prev_partition_size: i as usize, partition_size: i as usize + 1, n_pre: 1, n0_pre: 0 })
            .collect();
        let last_size = t as usize + 1;
        let report = audit(&records, &ALPHAS).unwrap();
        assert!(report.bound2.is_finite());
        assert_eq!(report.bound2, bound2(t, last_size));
        assert!((report.bound2 - t as f64).abs() < 1e-9 && report.sum2 <= report.bound2 + 1e-9, "{report}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_short_traces_pass(seed in any::<u64>(), dims in 1usize..4, rounds in 1usize..300, regions in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = adversarial_events(&mut rng, dims, rounds, regions);
        let records = replay(&Partition::trivial(Domain::unit(dims)), &events).unwrap();
        let report = audit(&records, &ALPHAS).unwrap();
        prop_assert!(report.pass, "{}", report);
    }
}
