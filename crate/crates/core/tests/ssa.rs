mod common;

use common::*;
use dormhgt::experiments::meanfield_check;
use dormhgt::rng::seeded;
use dormhgt::ssa::*;
use dormhgt::Density;

fn channel_of(before: Counts, after: Counts) -> Channel {
    let diff = [
        after.active as i64 - before.active as i64,
        after.dormant as i64 - before.dormant as i64,
        after.trait2 as i64 - before.trait2 as i64,
    ];
    *Channel::ALL.iter().find(|c| c.increment() == diff).expect("a known increment")
}

fn one_event(gen: &Generator, x: Counts, seed: u64) -> Outcome {
    let rule = StopRule {
        event_cap: 1,
        ..StopRule::default()
    };
    run(gen, x, &rule, None, &mut seeded(seed)).0
}

#[test]
fn rates_examples() {
    let p = worked();
    let gen = Generator::new(&p, 100).unwrap();
    assert_eq!(gen.rates(&Counts::new(0, 0, 0)), [0.0; 8]);
    let r = gen.rates(&Counts::new(1, 0, 0));
    assert_eq!(r[Channel::Birth1 as usize], 3.0);
    assert!((r[Channel::Death1 as usize] - (1.0 + 0.5 / 100.0)).abs() < 1e-15);
    assert!((r[Channel::Dormancy as usize] - 0.5 / 100.0).abs() < 1e-15);
    assert_eq!(r[Channel::Transfer as usize], 0.0);
    let r = gen.rates(&Counts::new(0, 0, 1));
    let nonzero: Vec<usize> = (0..8).filter(|i| r[*i] != 0.0).collect();
    assert_eq!(nonzero, vec![Channel::Birth2 as usize, Channel::Death2 as usize]);
    assert_eq!(r[Channel::Birth2 as usize], 2.0);
    assert!((r[Channel::Death2 as usize] - 1.01).abs() < 1e-15);
}

#[test]
fn transfer_moves_an_active_individual() {
    // every other channel is negligible next to transfer
    let p = params([1e-12, 1e-12, 1e-12, 1e-12, 0.5, 0.0, 1.0, 1e6]);
    let gen = Generator::new(&p, 1).unwrap();
    for seed in 0..20 {
        let o = one_event(&gen, Counts::new(1, 0, 1), seed);
        assert_eq!(o.state, Counts::new(0, 0, 2));
    }
}

#[test]
fn a_single_open_channel_always_fires() {
    let p = worked();
    let gen = Generator::new(&p, 10).unwrap();
    // only resuscitation and dormant death, and kappa = 0 closes the latter
    for seed in 0..50 {
        let o = one_event(&gen, Counts::new(0, 3, 0), seed);
        assert_eq!(o.state, Counts::new(1, 2, 0));
    }
}

#[test]
fn channel_frequencies_match_rates() {
    let p = params([3.0, 2.0, 1.0, 1.0, 0.5, 0.3, 1.0, 0.5]);
    let gen = Generator::new(&p, 100).unwrap();
    let x = Counts::new(50, 20, 30);
    let r = gen.rates(&x);
    let total: f64 = r.iter().sum();
    let n = 1_000_000u64;
    let rule = StopRule {
        event_cap: 1,
        ..StopRule::default()
    };
    let mut rng = seeded(2024);
    let mut hits = [0u64; 8];
    let mut waiting = 0.0;
    for _ in 0..n {
        let o = run(&gen, x, &rule, None, &mut rng).0;
        hits[channel_of(x, o.state) as usize] += 1;
        waiting += o.t;
    }
    for i in 0..8 {
        let q = r[i] / total;
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        let dev = hits[i] as f64 - n as f64 * q;
        assert!(dev.abs() <= 3.0 * sd, "{:?}: {} vs {}", Channel::ALL[i], hits[i], n as f64 * q);
    }
    let mean = waiting / n as f64;
    assert!((mean * total - 1.0).abs() <= 3.0 / (n as f64).sqrt());
}

#[test]
fn increments_conserve_what_they_should() {
    for c in Channel::ALL {
        let [a, d, n2] = c.increment();
        match c {
            Channel::Transfer => assert_eq!(a + n2, 0),
            Channel::Dormancy | Channel::Resuscitation => assert_eq!(a + d, 0),
            _ => assert_eq!([a, d, n2].iter().filter(|v| **v != 0).count(), 1),
        }
    }
}

#[test]
fn identical_seeds_give_identical_runs() {
    let p = coexistence();
    let gen = Generator::new(&p, 200).unwrap();
    let rule = StopRule {
        time_cap: Some(5.0),
        ..StopRule::default()
    };
    let x = Counts::new(100, 10, 5);
    let a = run(&gen, x, &rule, Some(0.1), &mut seeded(9));
    let b = run(&gen, x, &rule, Some(0.1), &mut seeded(9));
    assert_eq!(a, b);
    assert!(a.0.events > 100);
    let c = run(&gen, x, &rule, Some(0.1), &mut seeded(10));
    assert_ne!(a.0.state, c.0.state);
}

#[test]
fn empty_population_is_absorbed_at_once() {
    let gen = Generator::new(&worked(), 100).unwrap();
    let (o, path) = run(&gen, Counts::default(), &StopRule::default(), Some(1.0), &mut seeded(1));
    assert_eq!((o.stop, o.t, o.events), (StopReason::Absorbed, 0.0, 0));
    let path = path.unwrap();
    assert_eq!(path.times, vec![0.0]);
}

#[test]
fn fixation_set_needs_trait1_gone() {
    let p = worked();
    let k = 1000;
    let set = TargetSet {
        kind: TargetKind::FixationTwo,
        centre: p.trait2_point(),
        radius: 0.05,
    };
    assert!(set.contains(&Counts::new(0, 0, 1000), k));
    assert!(set.contains(&Counts::new(0, 0, 1049), k));
    assert!(set.contains(&Counts::new(0, 0, 951), k));
    assert!(!set.contains(&Counts::new(0, 0, 1051), k));
    assert!(!set.contains(&Counts::new(0, 1, 1000), k));
    assert!(!set.contains(&Counts::new(1, 0, 1000), k));
}

#[test]
fn subcritical_lineage_dies_at_the_branching_rate() {
    let p = params([3.0, 0.6, 1.0, 1.0, 0.2, 0.0, 1.0, 0.5]);
    let gen = Generator::new(&p, 10_000).unwrap();
    let rule = StopRule {
        extinction: Some(TraitId::Two),
        ..StopRule::default()
    };
    let n = 100_000u64;
    let mut rng = seeded(77);
    let times: Vec<f64> = (0..n)
        .map(|_| {
            let o = run(&gen, Counts::new(0, 0, 1), &rule, None, &mut rng).0;
            assert_eq!(o.stop, StopReason::Absorbed);
            o.t
        })
        .collect();
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    // linear birth-death started from one individual
    let (b, d) = (p.birth2, p.death);
    let want = (d / (d - b)).ln() / b;
    assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn meanfield_deviation_shrinks_with_k() {
    let p = worked();
    let init = Density::new(0.5, 0.2, 0.5);
    let medians: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&k| {
            let mut d = meanfield_check(&p, k, &init, 2.0, 0.05, 50, 31).unwrap();
            d.sort_by(f64::total_cmp);
            (d[24] + d[25]) / 2.0
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}
