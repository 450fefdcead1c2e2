#![allow(dead_code)]

use dormhgt::model::Chain;
use dormhgt::Params;
use rand::Rng;

pub fn params(v: [f64; 8]) -> Params {
    Params::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]).unwrap()
}

/// Worked two-type example with dormancy.
pub fn worked() -> Params {
    params([3.0, 2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 0.5])
}

/// Dormancy-free coexistence at (1, 1).
pub fn fig3a() -> Params {
    params([5.0, 3.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0])
}

/// Coexistence with trait 2 unfit alone.
pub fn coexistence_unfit() -> Params {
    params([5.0, 0.5, 1.0, 1.0, 0.05, 0.0, 1.0, 1.2])
}

/// Coexistence with both traits viable alone.
pub fn coexistence() -> Params {
    params([5.0, 1.5, 1.0, 4.0, 0.2, 0.0, 0.5, 6.0])
}

/// Trait 2 fixes although trait 1 reproduces faster.
pub fn fixation_two_slower() -> Params {
    params([2.0, 1.8, 1.0, 2.0, 0.2, 0.0, 1.0, 4.0])
}

pub fn founder_control() -> Params {
    params([2.0, 2.054, 1.0, 1.0, 0.1, 0.0, 0.9, 0.05])
}

/// Random parameters with dormancy and transfer switched on.
pub fn draw<R: Rng>(rng: &mut R) -> Params {
    let mu = rng.random_range(0.2..2.0);
    Params::new(
        rng.random_range(0.1..6.0),
        rng.random_range(0.1..6.0),
        mu,
        rng.random_range(0.2..4.0),
        rng.random_range(0.01..0.95),
        rng.random_range(0.0..2.0),
        rng.random_range(0.1..4.0),
        rng.random_range(0.05..5.0),
    )
    .unwrap()
}

/// Draws whose chain admits a positive coexistence point.
pub fn draw_coexisting<R: Rng>(rng: &mut R) -> Params {
    loop {
        let p = draw(rng);
        if matches!(p.chain(), Ok(Chain::FounderControl | Chain::StableCoexistence))
            && p.coexistence_equilibrium().ok().flatten().is_some()
        {
            return p;
        }
    }
}

/// Vector field of the full system, written out independently of the crate.
pub fn field(p: &Params, x: [f64; 3]) -> [f64; 3] {
    let (l1, l2, mu, c, pr, ka, s, tau) = (
        p.birth1,
        p.birth2,
        p.death,
        p.competition,
        p.dormancy,
        p.dormant_death,
        p.resuscitation,
        p.transfer,
    );
    let [a, d, n2] = x;
    [
        a * (l1 - mu - c * (a + n2) - tau * n2) + s * d,
        pr * c * a * (a + n2) - (ka * mu + s) * d,
        n2 * (l2 - mu - c * (a + n2) + tau * a),
    ]
}
