mod common;

use common::*;
use dormhgt::experiments::*;
use dormhgt::Error;

fn study(p: &dormhgt::Params, ks: &[u64], trials: u64, dir: Direction, seed: u64) -> (StudySummary, Vec<Vec<TrialRecord>>) {
    invasion_study(p, ks, trials, dir, DEFAULT_RADIUS, seed, DEFAULT_EVENT_CAP).unwrap()
}

#[test]
fn unfit_trait1_mutant_dies_out() {
    let p = params([2.0, 2.5, 1.0, 1.0, 0.2, 0.0, 1.0, 2.0]);
    assert_eq!(dormhgt::regime::regime(&p), dormhgt::regime::Regime::FixationTwoFaster);
    let (s, _) = study(&p, &[10_000], 2000, Direction::OneIntoTwo, 5);
    let row = &s.rows[0];
    assert_eq!(row.censored, 0);
    assert!(row.extinctions as f64 / row.trials as f64 >= 0.99, "{row:?}");
    assert_eq!(row.theory_time, None);
}

#[test]
fn every_trial_lands_in_one_class() {
    let (s, raw) = study(&coexistence(), &[300, 1000], 200, Direction::TwoIntoOne, 8);
    for (row, recs) in s.rows.iter().zip(&raw) {
        assert_eq!(row.extinctions + row.fixations + row.coexistences + row.censored, row.trials);
        assert_eq!(recs.len() as u64, row.trials);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.trial, i as u64);
            if r.kind == TrialKind::Extinction {
                assert_eq!(r.state.trait2, 0);
            }
        }
        assert!(row.coexistences > 0 && row.extinctions > 0);
        assert!((0.0..=1.0).contains(&row.success));
        assert!(row.wilson_low <= row.success && row.success <= row.wilson_high);
    }
}

#[test]
fn same_seed_same_summary() {
    let p = worked();
    let a = study(&p, &[500], 100, Direction::OneIntoTwo, 42);
    let b = study(&p, &[500], 100, Direction::OneIntoTwo, 42);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let c = study(&p, &[500], 100, Direction::OneIntoTwo, 43);
    assert_ne!(a.1, c.1);
}

#[test]
fn directions_agree_on_a_nearly_neutral_pair() {
    let p = params([2.0, 2.0, 1.0, 1.0, 1e-3, 0.0, 1.0, 2e-3]);
    let (a, ra) = study(&p, &[100], 2000, Direction::TwoIntoOne, 11);
    let (b, rb) = study(&p, &[100], 2000, Direction::OneIntoTwo, 12);
    let (a, b) = (&a.rows[0], &b.rows[0]);
    assert_eq!(a.censored + b.censored, 0);
    let na = (a.trials - a.censored) as f64;
    let nb = (b.trials - b.censored) as f64;
    let pooled = (a.success * na + b.success * nb) / (na + nb);
    let z = (a.success - b.success) / (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    assert!(z.abs() < 2.576, "success {} vs {} (z = {z})", a.success, b.success);
    let ext = |recs: &[TrialRecord]| -> Vec<f64> {
        recs.iter().filter(|r| r.kind == TrialKind::Extinction).map(|r| r.t).collect()
    };
    let (ta, tb) = (MeanSe::of(&ext(&ra[0])).unwrap(), MeanSe::of(&ext(&rb[0])).unwrap());
    let z = (ta.mean - tb.mean) / (ta.se * ta.se + tb.se * tb.se).sqrt();
    assert!(z.abs() < 2.576, "extinction time {} vs {} (z = {z})", ta.mean, tb.mean);
}

#[test]
fn proportion_check_edge_cases() {
    let p = worked();
    let all = proportion_check(&p, 10_000, 100, 0.05, 1.0, 3, DEFAULT_EVENT_CAP).unwrap();
    assert!(all.reached > 0);
    assert_eq!(all.within, all.reached);
    assert_eq!(all.within_fraction(), 1.0);
    let rare = dormhgt::Params { dormancy: 1e-6, ..p };
    let c = proportion_check(&rare, 10_000, 100, 0.05, 0.05, 4, DEFAULT_EVENT_CAP).unwrap();
    assert!(c.target > 0.999);
    assert!(c.reached > 0 && c.within_fraction() == 1.0);
}

#[test]
fn empty_requests_are_rejected() {
    let p = worked();
    let e = invasion_study(&p, &[1000], 0, Direction::OneIntoTwo, 0.05, 1, 1000);
    assert!(matches!(e, Err(Error::InvalidState(_))));
    let e = invasion_study(&p, &[], 10, Direction::OneIntoTwo, 0.05, 1, 1000);
    assert!(matches!(e, Err(Error::InvalidState(_))));
}

#[test]
fn critical_mutant_is_rejected() {
    let p = params([3.0, 2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 1.5]);
    let e = InvasionSetup::new(&p, 1000, Direction::OneIntoTwo, 0.05, 1000);
    assert!(matches!(e, Err(Error::Critical { trait_id: 1, .. })));
}

#[test]
fn hitting_time_approaches_the_time_constant() {
    let p = fixation_two_slower();
    let (s, _) = study(&p, &[1_000, 100_000], 200, Direction::TwoIntoOne, 21);
    let tc = s.rows[0].theory_time.unwrap();
    assert!((tc - 1.816).abs() < 1e-3);
    let gap = |r: &StudyRow| (r.success_time.unwrap().mean - tc).abs() / tc;
    let (small, large) = (gap(&s.rows[0]), gap(&s.rows[1]));
    assert!(large < small, "relative gap {small} at 1e3, {large} at 1e5");
}

#[test]
fn mean_and_median() {
    let m = MeanSe::of(&[1.0, 2.0, 6.0]).unwrap();
    assert_eq!((m.n, m.mean, m.median), (3, 3.0, 2.0));
    assert!((m.se - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!(MeanSe::of(&[]).is_none());
}
