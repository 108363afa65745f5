use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeucb_core::bench::{
    goldstein_raw, himmelblau_raw, uniform_baseline, Benchmark, ContextStream, ContextualObjective, Noise,
    NoiseStream, Objective, RegretTrace, RescaledObjective, CONTEXT_ORACLE_GRID,
};
use treeucb_core::partition::Domain;

fn grid(n: usize) -> impl Iterator<Item = [f64; 2]> {
    let step = 1.0 / (n - 1) as f64;
    (0..n).flat_map(move |i| (0..n).map(move |j| [-0.5 + step * i as f64, -0.5 + step * j as f64]))
}

#[test]
fn raw_examples() {
    assert_eq!(himmelblau_raw(3.0, 2.0), 0.0);
    assert_eq!(himmelblau_raw(0.0, 0.0), -170.0);
    assert_eq!(himmelblau_raw(5.0, 5.0), -890.0);
    assert_eq!(goldstein_raw(0.0, -1.0), -3.0);
    assert_eq!(goldstein_raw(0.0, 0.0), -600.0);
}

#[test]
fn goldstein_never_exceeds_its_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let v = goldstein_raw(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
        assert!(v.is_finite() && v <= -3.0, "{v}");
    }
}

#[test]
fn rescaled_values_fill_the_unit_interval_on_the_full_grid() {
    for benchmark in [Benchmark::Himmelblau, Benchmark::Goldstein] {
        let f = RescaledObjective::make(benchmark, 1024).unwrap();
        let fine = RescaledObjective::make(benchmark, 4096).unwrap();
        let (mut lo, mut hi, mut drift) = (f64::INFINITY, f64::NEG_INFINITY, 0f64);
        for u in grid(1024) {
            let v = f.eval(&u);
            assert!((0.0..=1.0).contains(&v), "{benchmark} at {u:?}: {v}");
            lo = lo.min(v);
            hi = hi.max(v);
            drift = drift.max((v - fine.eval(&u)).abs());
        }
        assert_eq!(lo, 0.0, "{benchmark}");
        assert!((hi - 1.0).abs() <= 1e-3, "{benchmark}: grid max {hi}");
        assert!(drift <= 1e-3, "{benchmark}: drift {drift}");
    }
}

#[test]
fn rescaled_optima() {
    let h = RescaledObjective::make(Benchmark::Himmelblau, 1024).unwrap();
    assert!((h.eval(&[0.3, 0.2]) - 1.0).abs() <= 1e-6);
    assert_eq!(h.f_min, -890.0);
    let g = RescaledObjective::make(Benchmark::Goldstein, 1024).unwrap();
    assert!((g.eval(&[0.0, -0.25]) - 1.0).abs() <= 1e-3);
}

#[test]
fn noise_statistics() {
    let mut uniform = NoiseStream::new(Noise::Uniform { sigma: 0.1 }, 3);
    let mean = (0..100_000).map(|_| uniform.next_noise()).sum::<f64>() / 1e5;
    assert!(mean.abs() <= 0.002, "{mean}");

    let mut gauss = NoiseStream::new("truncated-gaussian:0.2".parse().unwrap(), 4);
    assert!((0..100_000).all(|_| gauss.next_noise().abs() <= 0.6 + 1e-15));

    let mut none = NoiseStream::new(Noise::Uniform { sigma: 0.0 }, 5);
    assert!((0..1000).all(|_| none.next_noise() == 0.0));
}

#[test]
fn contextual_oracle_agrees_across_resolutions() {
    for benchmark in [Benchmark::Himmelblau, Benchmark::Goldstein] {
        let c = ContextualObjective::new(RescaledObjective::make(benchmark, 1024).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let z = rng.random_range(-0.5..=0.5);
            let coarse = c.best_arm(z, CONTEXT_ORACLE_GRID).1;
            let fine = c.best_arm(z, 65_536).1;
            assert!((coarse - fine).abs() <= 1e-3, "{benchmark} z={z}: {coarse} vs {fine}");
        }
    }
}

#[test]
fn contextual_regret_is_never_negative() {
    let c = ContextualObjective::new(RescaledObjective::make(Benchmark::Himmelblau, 1024).unwrap());
    let mut contexts = ContextStream::new(Domain::cube(1, -0.5, 0.5), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..2000 {
        let z = contexts.next_context();
        let a = [rng.random_range(-0.5..=0.5)];
        assert!(c.optimum(Some(&z)) - c.value(Some(&z), &a) >= -1e-6);
        let best = c.best_arm(z[0], CONTEXT_ORACLE_GRID);
        assert!(c.optimum(Some(&z)) - c.value(Some(&z), &[best.0]) >= -1e-6);
    }
}

#[test]
fn uniform_play_regret_matches_the_grid_mean() {
    let f = RescaledObjective::make(Benchmark::Himmelblau, 1024).unwrap();
    let grid_mean = grid(1024).map(|u| f.eval(&u)).sum::<f64>() / (1024.0 * 1024.0);
    let trace = uniform_baseline(&f, 1000, 0, 0);
    assert!((trace.avg_at(1000) - (1.0 - grid_mean)).abs() <= 0.02, "{} vs {}", trace.avg_at(1000), 1.0 - grid_mean);
}

#[test]
fn regret_ignores_the_noise_seed() {
    let f = RescaledObjective::make(Benchmark::Goldstein, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let arms: Vec<[f64; 2]> = (0..500).map(|_| [rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5)]).collect();
    let run = |noise_seed: u64| {
        let mut noise = NoiseStream::new(Noise::Uniform { sigma: 0.1 }, noise_seed);
        let mut trace = RegretTrace::new();
        let mut observed = Vec::new();
        for a in &arms {
            observed.push(f.value(None, a) + noise.next_noise());
            trace.push(f.value(None, a), f.optimum(None));
        }
        (trace, observed)
    };
    let (t1, o1) = run(1);
    let (t2, o2) = run(2);
    assert_eq!(t1, t2);
    assert_ne!(o1, o2);
    assert!(t1.inst.iter().all(|&r| r >= -1e-9));
    assert!(t1.cum.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn shared_seeds_give_identical_streams() {
    let d = Domain::cube(1, -0.5, 0.5);
    let (mut a, mut b) = (ContextStream::new(d.clone(), 9), ContextStream::new(d, 9));
    let (mut na, mut nb) = (NoiseStream::new(Noise::default(), 9), NoiseStream::new(Noise::default(), 9));
    for _ in 0..1000 {
        assert_eq!(a.next_context(), b.next_context());
        assert_eq!(na.next_noise(), nb.next_noise());
    }
    let c = ContextualObjective::new(RescaledObjective::make(Benchmark::Himmelblau, 256).unwrap());
    let (r1, r2) = (uniform_baseline(&c, 50, 1, 4), uniform_baseline(&c, 50, 1, 4));
    assert_eq!(r1, r2);
}
