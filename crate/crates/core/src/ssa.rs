//! Exact stochastic simulation of the individual-based model.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Density, Params};

/// Individual counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub active: u64,
    pub dormant: u64,
    pub trait2: u64,
}

impl Counts {
    pub fn new(active: u64, dormant: u64, trait2: u64) -> Self {
        Self {
            active,
            dormant,
            trait2,
        }
    }

    /// Nearest counts to `k * x`.
    pub fn scaled_from(x: &Density, k: u64) -> Self {
        let r = |v: f64| (v.max(0.0) * k as f64).round() as u64;
        Self::new(r(x.active), r(x.dormant), r(x.trait2))
    }

    pub fn trait1(&self) -> u64 {
        self.active + self.dormant
    }

    pub fn density(&self, k: u64) -> Density {
        let k = k as f64;
        Density::new(
            self.active as f64 / k,
            self.dormant as f64 / k,
            self.trait2 as f64 / k,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Birth1,
    Death1,
    Dormancy,
    Transfer,
    DormantDeath,
    Resuscitation,
    Birth2,
    Death2,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::Birth1,
        Channel::Death1,
        Channel::Dormancy,
        Channel::Transfer,
        Channel::DormantDeath,
        Channel::Resuscitation,
        Channel::Birth2,
        Channel::Death2,
    ];

    /// Change of (active, dormant, trait 2).
    pub fn increment(&self) -> [i64; 3] {
        match self {
            Channel::Birth1 => [1, 0, 0],
            Channel::Death1 => [-1, 0, 0],
            Channel::Dormancy => [-1, 1, 0],
            Channel::Transfer => [-1, 0, 1],
            Channel::DormantDeath => [0, -1, 0],
            Channel::Resuscitation => [1, -1, 0],
            Channel::Birth2 => [0, 0, 1],
            Channel::Death2 => [0, 0, -1],
        }
    }
}

fn apply(x: &mut Counts, ch: Channel) {
    match ch {
        Channel::Birth1 => x.active += 1,
        Channel::Death1 => x.active -= 1,
        Channel::Dormancy => {
            x.active -= 1;
            x.dormant += 1;
        }
        Channel::Transfer => {
            x.active -= 1;
            x.trait2 += 1;
        }
        Channel::DormantDeath => x.dormant -= 1,
        Channel::Resuscitation => {
            x.dormant -= 1;
            x.active += 1;
        }
        Channel::Birth2 => x.trait2 += 1,
        Channel::Death2 => x.trait2 -= 1,
    }
}

/// Event rates of the model at carrying capacity `K`.
#[derive(Debug, Clone, Copy)]
pub struct Generator {
    params: Params,
    capacity: u64,
    comp: f64,
    transfer: f64,
    dormant_death: f64,
}

impl Generator {
    pub fn new(params: &Params, capacity: u64) -> Result<Self> {
        params.validate()?;
        if capacity == 0 {
            return Err(Error::InvalidState("carrying capacity must be positive"));
        }
        let k = capacity as f64;
        Ok(Self {
            params: *params,
            capacity,
            comp: params.competition / k,
            transfer: params.transfer / k,
            dormant_death: params.dormant_death * params.death,
        })
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Rates in the order of [`Channel::ALL`].
    #[inline]
    pub fn rates(&self, x: &Counts) -> [f64; 8] {
        let p = &self.params;
        let a = x.active as f64;
        let d = x.dormant as f64;
        let n2 = x.trait2 as f64;
        let crowd = self.comp * (a + n2);
        [
            p.birth1 * a,
            (p.death + (1.0 - p.dormancy) * crowd) * a,
            p.dormancy * crowd * a,
            self.transfer * a * n2,
            self.dormant_death * d,
            p.resuscitation * d,
            p.birth2 * n2,
            (p.death + crowd) * n2,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraitId {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl TraitId {
    fn count(&self, x: &Counts) -> u64 {
        match self {
            TraitId::One => x.trait1(),
            TraitId::Two => x.trait2,
        }
    }

    fn digit(&self) -> char {
        match self {
            TraitId::One => '1',
            TraitId::Two => '2',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    FixationOne,
    FixationTwo,
    Coexistence,
}

/// A neighbourhood of an equilibrium in scaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub kind: TargetKind,
    pub centre: Density,
    pub radius: f64,
}

impl TargetSet {
    pub fn contains(&self, x: &Counts, k: u64) -> bool {
        let y = x.density(k);
        let near = |a: f64, b: f64| (a - b).abs() <= self.radius;
        match self.kind {
            TargetKind::FixationTwo => {
                x.trait1() == 0 && near(y.trait2, self.centre.trait2)
            }
            TargetKind::FixationOne => {
                x.trait2 == 0 && near(y.active, self.centre.active) && near(y.dormant, self.centre.dormant)
            }
            TargetKind::Coexistence => {
                near(y.active, self.centre.active)
                    && near(y.dormant, self.centre.dormant)
                    && near(y.trait2, self.centre.trait2)
            }
        }
    }
}

/// When to stop a run. Conditions are checked in field order after every
/// event and once at time zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop when this trait has no individuals left.
    pub extinction: Option<TraitId>,
    /// Stop on entering any of these sets; earlier entries win.
    pub targets: Vec<TargetSet>,
    /// Stop when the total count of a trait equals the level.
    pub levels: Vec<(TraitId, u64)>,
    pub time_cap: Option<f64>,
    pub event_cap: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            extinction: None,
            targets: Vec::new(),
            levels: Vec::new(),
            time_cap: None,
            event_cap: 1_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    /// Every population is extinct.
    Absorbed,
    Extinction(TraitId),
    Target(TargetKind),
    Level(TraitId),
    TimeCap,
    EventCap,
}

impl StopReason {
    pub fn is_censored(&self) -> bool {
        matches!(self, StopReason::TimeCap | StopReason::EventCap)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Absorbed => f.write_str("absorbed"),
            StopReason::Extinction(t) => write!(f, "extinction-{}", t.digit()),
            StopReason::Target(TargetKind::FixationOne) => f.write_str("fixation-1"),
            StopReason::Target(TargetKind::FixationTwo) => f.write_str("fixation-2"),
            StopReason::Target(TargetKind::Coexistence) => f.write_str("coexistence"),
            StopReason::Level(t) => write!(f, "level-{}", t.digit()),
            StopReason::TimeCap => f.write_str("time-cap"),
            StopReason::EventCap => f.write_str("event-cap"),
        }
    }
}

impl Serialize for StopReason {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub stop: StopReason,
    pub t: f64,
    pub state: Counts,
    pub events: u64,
}

/// Counts sampled on a fixed time grid, held constant between events.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<Counts>,
}

struct Sampler {
    dt: f64,
    next: u64,
    path: Path,
}

impl Sampler {
    fn fill(&mut self, upto: f64, inclusive: bool, x: Counts) {
        loop {
            let t = self.next as f64 * self.dt;
            if t < upto || (inclusive && t <= upto) {
                self.path.times.push(t);
                self.path.states.push(x);
                self.next += 1;
            } else {
                break;
            }
        }
    }
}

fn check(rule: &StopRule, x: &Counts, k: u64) -> Option<StopReason> {
    if x.trait1() == 0 && x.trait2 == 0 {
        return Some(StopReason::Absorbed);
    }
    if let Some(t) = rule.extinction {
        if t.count(x) == 0 {
            return Some(StopReason::Extinction(t));
        }
    }
    for s in &rule.targets {
        if s.contains(x, k) {
            return Some(StopReason::Target(s.kind));
        }
    }
    for (t, level) in &rule.levels {
        if t.count(x) == *level {
            return Some(StopReason::Level(*t));
        }
    }
    None
}

/// Run the direct method from `init` until the stop rule fires. Each event
/// uses one uniform for the waiting time and one for the channel. With
/// `sample_dt` set, the path is recorded on the grid `0, dt, 2 dt, ...`.
pub fn run<R: Rng + ?Sized>(
    gen: &Generator,
    init: Counts,
    rule: &StopRule,
    sample_dt: Option<f64>,
    rng: &mut R,
) -> (Outcome, Option<Path>) {
    let k = gen.capacity;
    let mut x = init;
    let mut t = 0.0f64;
    let mut events = 0u64;
    let mut sampler = sample_dt.filter(|dt| *dt > 0.0).map(|dt| Sampler {
        dt,
        next: 0,
        path: Path::default(),
    });
    let finish = |stop, t, x, events, sampler: Option<Sampler>| {
        (
            Outcome {
                stop,
                t,
                state: x,
                events,
            },
            sampler.map(|s| s.path),
        )
    };
    if let Some(stop) = check(rule, &x, k) {
        if let Some(s) = sampler.as_mut() {
            s.fill(0.0, true, x);
        }
        return finish(stop, 0.0, x, 0, sampler);
    }
    loop {
        if events >= rule.event_cap {
            if let Some(s) = sampler.as_mut() {
                s.fill(t, true, x);
            }
            return finish(StopReason::EventCap, t, x, events, sampler);
        }
        let r = gen.rates(&x);
        let total: f64 = r.iter().sum();
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let t_next = t - (1.0 - u1).ln() / total;
        if let Some(cap) = rule.time_cap {
            if t_next > cap {
                if let Some(s) = sampler.as_mut() {
                    s.fill(cap, true, x);
                }
                return finish(StopReason::TimeCap, cap, x, events, sampler);
            }
        }
        if let Some(s) = sampler.as_mut() {
            s.fill(t_next, false, x);
        }
        let target = u2 * total;
        let mut acc = 0.0;
        let mut ch = Channel::Death2;
        for (i, rate) in r.iter().enumerate() {
            acc += rate;
            if target < acc {
                ch = Channel::ALL[i];
                break;
            }
        }
        // guard against rounding selecting an empty channel
        if r[ch as usize] == 0.0 {
            ch = Channel::ALL[r.iter().rposition(|v| *v > 0.0).expect("positive total rate")];
        }
        apply(&mut x, ch);
        t = t_next;
        events += 1;
        if let Some(stop) = check(rule, &x, k) {
            if let Some(s) = sampler.as_mut() {
                s.fill(t, true, x);
            }
            return finish(stop, t, x, events, sampler);
        }
    }
}
