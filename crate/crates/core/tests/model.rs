mod common;

use common::*;
use dormhgt::model::{Chain, CoexistenceCondition};
use dormhgt::{Error, Params};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn trait2_equilibrium_examples() {
    let with = |l2: f64, mu: f64, c: f64| params([2.0, l2, mu, c, 0.1, 0.0, 1.0, 0.5]).trait2_equilibrium();
    assert_eq!(with(1.0, 2.0, 1.0), 0.0);
    assert_eq!(with(3.0, 2.0, 1.0), 1.0);
    assert_eq!(with(4.0, 1.0, 2.0), 1.5);
    let p = params([2.0, 4.0, 1.0, 2.0, 0.1, 0.0, 1.0, 0.5]);
    assert!(field(&p, [0.0, 0.0, 1.5]).iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn trait1_equilibrium_examples() {
    assert_eq!(params([1.0, 2.0, 2.0, 1.0, 0.3, 0.5, 1.0, 0.5]).trait1_equilibrium(), (0.0, 0.0));
    assert_eq!(params([2.0, 2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.5]).trait1_equilibrium(), (1.0, 0.0));
    let p = params([3.1, 2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 0.5]);
    let (a, d) = p.trait1_equilibrium();
    assert!(close(a, 4.2, 1e-12) && close(d, 8.82, 1e-12), "({a}, {d})");
    let r = field(&p, [4.2, 8.82, 0.0]);
    assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
}

#[test]
fn trait1_equilibrium_small_dormancy_limit() {
    let p = params([3.0, 2.0, 1.0, 1.5, 1e-8, 0.0, 1.0, 0.5]);
    let (a, d) = p.trait1_equilibrium();
    assert!(close(a, 2.0 / 1.5, 1e-7) && d.abs() < 1e-7);
}

#[test]
fn critical_value_examples() {
    let p = params([2.0, 2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.7]);
    assert_eq!(p.critical_value().unwrap(), 0.0);
    let m = coexistence_unfit().critical_value().unwrap();
    let oracle = (0.05 / 1.2) * (-0.5) + (1.0 / 1.2) * 4.5;
    assert!(close(m, oracle, 1e-14) && close(m, 3.729, 1e-3));
    let m = founder_control().critical_value().unwrap();
    let oracle = 2.0 * 1.054 + 20.0 * (-0.054);
    assert!(close(m, oracle, 1e-12) && close(m, 1.028, 1e-12));
    let tau0 = params([2.0, 2.0, 1.0, 1.0, 0.1, 0.0, 1.0, 0.0]);
    assert!(matches!(tau0.critical_value(), Err(Error::TransferFree)));
}

#[test]
fn coexistence_examples() {
    let c = fig3a().coexistence_equilibrium().unwrap().unwrap();
    assert!(close(c.active, 1.0, 1e-12) && c.dormant == 0.0 && close(c.trait2, 1.0, 1e-12));

    let p = coexistence_unfit();
    assert_eq!(p.chain().unwrap(), Chain::StableCoexistence);
    let c = p.coexistence_equilibrium().unwrap().unwrap();
    assert!(c.active > 0.0 && c.dormant > 0.0 && c.trait2 > 0.0);
    assert!(field(&p, c.to_array()).iter().all(|v| v.abs() < 1e-10));
    assert_eq!(p.equilibrium_report().condition, CoexistenceCondition::MutantLessFit);

    let p = params([3.0, 2.0, 1.0, 1.0, 0.1, 0.0, 0.9, 0.1]);
    assert!(matches!(p.coexistence_point(), Err(Error::DegenerateDenominator)));
    assert_eq!(p.coexistence_equilibrium().unwrap(), None);
    let p = params([3.0, 2.0, 1.0, 1.0, 0.1, 0.0, 0.9, 0.2]);
    assert_eq!(p.coexistence_equilibrium().unwrap(), None);
}

#[test]
fn founder_control_chain() {
    let p = founder_control();
    assert_eq!(p.chain().unwrap(), Chain::FounderControl);
    assert_eq!(p.equilibrium_report().condition, CoexistenceCondition::MutantFitter);
}

#[test]
fn boundary_chain_is_not_classified() {
    // p = 0 and C = tau put M at lambda1 - lambda2, which equals lambda2 - mu here
    let p = params([3.0, 2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    assert_eq!(p.chain().unwrap(), Chain::Boundary);
}

#[test]
fn trait2_pressure_bound_needs_the_dormancy_factor() {
    let p = params([2.8, 2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 1.0]);
    assert_eq!(p.chain().unwrap(), Chain::StableCoexistence);
    let (c, tau) = (p.competition, p.transfer);
    let n2 = p.net2() / c;
    assert!((c + tau) * n2 > p.net1());
    let shrink = 1.0 - p.dormancy * p.resuscitation / p.dormant_exit();
    assert!((c * shrink + tau) * n2 < p.net1());
}

#[test]
fn report_invariants() {
    let p = coexistence_unfit();
    let r = p.equilibrium_report();
    assert!(r.trait2_signed < 0.0);
    assert_eq!(r.trait2.trait2, 0.0);
}

fn arb_params() -> impl Strategy<Value = Params> {
    (
        0.1..6.0f64,
        0.1..6.0f64,
        0.2..2.0f64,
        0.2..4.0f64,
        0.0..0.95f64,
        0.0..2.0f64,
        0.1..4.0f64,
        0.05..5.0f64,
    )
        .prop_map(|(l1, l2, mu, c, p, k, s, t)| params([l1, l2, mu, c, p, k, s, t]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn coexistence_annihilates_the_field(p in arb_params()) {
        if let Ok(Some(c)) = p.coexistence_equilibrium() {
            prop_assert!(c.active > 0.0 && c.trait2 > 0.0);
            let r = field(&p, c.to_array());
            prop_assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
        }
    }

    #[test]
    fn coexistence_needs_a_fit_resident(p in arb_params()) {
        if p.net1() <= 0.0 {
            prop_assert_eq!(p.coexistence_equilibrium().ok().flatten(), None);
        }
    }

    #[test]
    fn chains_bound_the_transfer_rate(p in arb_params()) {
        prop_assume!(p.net1() > 0.0 && p.dormancy > 0.0);
        let bound = p.competition * p.dormancy * p.resuscitation / p.dormant_exit();
        match p.chain().unwrap() {
            Chain::FounderControl => prop_assert!(p.transfer < bound),
            Chain::StableCoexistence => prop_assert!(p.transfer > bound),
            _ => {}
        }
    }

    #[test]
    fn dormancy_free_point_matches_planar_formula(p in arb_params()) {
        let q = Params { dormancy: 0.0, ..p };
        let full = q.coexistence_point().unwrap();
        let (n1, n2) = q.coexistence_without_dormancy().unwrap();
        let scale = n1.abs().max(n2.abs()).max(1.0);
        prop_assert_eq!(full.dormant, 0.0);
        prop_assert!(close(full.active, n1, 1e-10 * scale) && close(full.trait2, n2, 1e-10 * scale));
    }

    #[test]
    fn monomorphic_points_are_fixed(p in arb_params()) {
        for x in [p.trait1_point(), p.trait2_point()] {
            let r = field(&p, x.to_array());
            prop_assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
        }
    }

    #[test]
    fn chain_is_exclusive_and_matches_comparisons(p in arb_params()) {
        let m = p.critical_value().unwrap();
        let (a, b) = (p.net2(), p.net1());
        let expect = if (a - m).abs() <= 1e-12 || (m - b).abs() <= 1e-12 {
            Chain::Boundary
        } else if a > m && m > b {
            Chain::FounderControl
        } else if a < m && m < b {
            Chain::StableCoexistence
        } else if m > a && m > b {
            Chain::FixationOne
        } else {
            Chain::FixationTwo
        };
        prop_assert_eq!(p.chain().unwrap(), expect);
    }

    #[test]
    fn effective_competition_identity(p in arb_params()) {
        if let Ok(Some(c)) = p.coexistence_equilibrium() {
            let cn2 = p.net2();
            let rhs = p.competition * (c.active + c.trait2) - p.transfer * c.active;
            prop_assert!(close(cn2, rhs, 1e-10 * rhs.abs().max(1.0)));
        }
    }

    #[test]
    fn effective_competition_inequalities(p in arb_params()) {
        prop_assume!(p.net1() > 0.0);
        let (c, tau) = (p.competition, p.transfer);
        let m = p.critical_value().unwrap();
        let (a, b) = (p.net2(), p.net1());
        let n2_signed = a / c;
        let (n1a_bar, _) = p.trait1_equilibrium();
        // second inequality of the coexistence chain is equivalent to positive trait-2 fitness
        if (m - b).abs() > 1e-9 {
            prop_assert_eq!(b > m, c * n2_signed > (c - tau) * n1a_bar);
        }
        match p.chain().unwrap() {
            Chain::StableCoexistence => {
                if let Some(x) = p.coexistence_equilibrium().unwrap() {
                    prop_assert!(c * (x.active + x.trait2) + tau * x.trait2 >= b - 1e-10);
                }
                let shrink = 1.0 - p.dormancy * p.resuscitation / p.dormant_exit();
                prop_assert!((c * shrink + tau) * n2_signed < b);
            }
            Chain::FixationTwo => {
                prop_assert!((c + tau) * p.trait2_equilibrium() > b);
            }
            _ => {}
        }
    }
}
