//! Invasion studies and mean-field comparisons built on the simulator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::{self, wilson_interval, CRITICAL_TOL};
use crate::error::{Error, Result};
use crate::model::{Density, Params};
use crate::ode::{self, OdeOptions, System};
use crate::rng::{seeded, splitmix64, trial_seed};
use crate::ssa::{self, Counts, Generator, StopReason, StopRule, TargetKind, TargetSet, TraitId};

/// Default radius of the target neighbourhoods.
pub const DEFAULT_RADIUS: f64 = 0.05;
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// A single trait-2 individual enters the trait-1 resident.
    #[serde(rename = "2into1")]
    TwoIntoOne,
    /// A single active trait-1 individual enters the trait-2 resident.
    #[serde(rename = "1into2")]
    OneIntoTwo,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::TwoIntoOne => "2into1",
            Direction::OneIntoTwo => "1into2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialKind {
    Extinction,
    Fixation,
    Coexistence,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub kind: TrialKind,
    pub t: f64,
    pub state: Counts,
    pub events: u64,
}

/// Everything needed to run invasion trials for one parameter set and `K`.
#[derive(Debug, Clone)]
pub struct InvasionSetup {
    pub params: Params,
    pub capacity: u64,
    pub direction: Direction,
    pub init: Counts,
    pub rule: StopRule,
    pub coexistence: Option<Density>,
    /// Growth rate of the invading mutant.
    pub mutant_fitness: f64,
    /// Growth rate of the resident as a mutant in the other direction, if defined.
    pub reverse_fitness: Option<f64>,
    /// Branching-process extinction probability of the mutant.
    pub extinction_prob: f64,
}

impl InvasionSetup {
    pub fn new(p: &Params, capacity: u64, direction: Direction, radius: f64, event_cap: u64) -> Result<Self> {
        Generator::new(p, capacity)?;
        let coexistence = p.coexistence_equilibrium().ok().flatten();
        let mut targets = Vec::new();
        if let Some(c) = coexistence {
            targets.push(TargetSet {
                kind: TargetKind::Coexistence,
                centre: c,
                radius,
            });
        }
        let (init, extinction, mutant_fitness, reverse_fitness, extinction_prob) = match direction {
            Direction::TwoIntoOne => {
                let fit = branching::trait2_fitness(p)?;
                if fit.abs() < CRITICAL_TOL {
                    return Err(Error::Critical {
                        trait_id: 2,
                        value: fit,
                    });
                }
                if p.net2() > 0.0 {
                    targets.push(TargetSet {
                        kind: TargetKind::FixationTwo,
                        centre: p.trait2_point(),
                        radius,
                    });
                }
                let mut init = Counts::scaled_from(&p.trait1_point(), capacity);
                init.trait2 = 1;
                (
                    init,
                    TraitId::Two,
                    fit,
                    branching::trait1_fitness(p).ok(),
                    branching::trait2_extinction(p)?,
                )
            }
            Direction::OneIntoTwo => {
                let fit = branching::trait1_fitness(p)?;
                if fit.abs() < CRITICAL_TOL {
                    return Err(Error::Critical {
                        trait_id: 1,
                        value: fit,
                    });
                }
                if p.net1() > 0.0 {
                    targets.push(TargetSet {
                        kind: TargetKind::FixationOne,
                        centre: p.trait1_point(),
                        radius,
                    });
                }
                let mut init = Counts::scaled_from(&p.trait2_point(), capacity);
                init.active = 1;
                (
                    init,
                    TraitId::One,
                    fit,
                    branching::trait2_fitness(p).ok(),
                    branching::trait1_extinction(p)?,
                )
            }
        };
        Ok(Self {
            params: *p,
            capacity,
            direction,
            init,
            rule: StopRule {
                extinction: Some(extinction),
                targets,
                levels: Vec::new(),
                time_cap: None,
                event_cap,
            },
            coexistence,
            mutant_fitness,
            reverse_fitness,
            extinction_prob,
        })
    }

    /// Asymptotic slope of the successful hitting time against `ln K`.
    pub fn time_constant(&self) -> Option<f64> {
        if self.mutant_fitness <= 0.0 {
            return None;
        }
        if self.coexistence.is_some() {
            Some(1.0 / self.mutant_fitness)
        } else {
            match self.reverse_fitness {
                Some(r) if r < 0.0 => Some(1.0 / self.mutant_fitness - 1.0 / r),
                _ => None,
            }
        }
    }

    pub fn success_prob(&self) -> f64 {
        1.0 - self.extinction_prob
    }

    pub fn trial(&self, base_seed: u64, index: u64) -> TrialRecord {
        let gen = Generator::new(&self.params, self.capacity).expect("validated in new");
        let seed = trial_seed(base_seed, index);
        let (o, _) = ssa::run(&gen, self.init, &self.rule, None, &mut seeded(seed));
        let kind = match o.stop {
            StopReason::Extinction(_) | StopReason::Absorbed => TrialKind::Extinction,
            StopReason::Target(TargetKind::Coexistence) => TrialKind::Coexistence,
            StopReason::Target(_) => TrialKind::Fixation,
            _ => TrialKind::Censored,
        };
        TrialRecord {
            trial: index,
            seed,
            kind,
            t: o.t,
            state: o.state,
            events: o.events,
        }
    }

    /// Run `trials` independent trials in parallel; records come back in trial order.
    pub fn run(&self, trials: u64, base_seed: u64) -> Vec<TrialRecord> {
        (0..trials)
            .into_par_iter()
            .map(|i| self.trial(base_seed, i))
            .collect()
    }
}

/// Mean, standard error and median of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub n: u64,
    pub mean: f64,
    pub se: f64,
    pub median: f64,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[m]
        } else {
            0.5 * (sorted[m - 1] + sorted[m])
        };
        Some(Self {
            n: xs.len() as u64,
            mean,
            se: (var / n).sqrt(),
            median,
        })
    }
}

/// Aggregate over the trials for one `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub capacity: u64,
    pub trials: u64,
    pub extinctions: u64,
    pub fixations: u64,
    pub coexistences: u64,
    pub censored: u64,
    /// Fraction of uncensored trials in which the mutant invaded.
    pub success: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub theory_success: f64,
    /// Hitting time of the success set divided by `ln K`.
    pub success_time: Option<MeanSe>,
    pub theory_time: Option<f64>,
    /// Mutant extinction time divided by `ln K`, over failed invasions.
    pub extinction_time: Option<MeanSe>,
}

pub fn summarize(setup: &InvasionSetup, records: &[TrialRecord]) -> StudyRow {
    let count = |k: TrialKind| records.iter().filter(|r| r.kind == k).count() as u64;
    let (ext, fix, co, cens) = (
        count(TrialKind::Extinction),
        count(TrialKind::Fixation),
        count(TrialKind::Coexistence),
        count(TrialKind::Censored),
    );
    let decided = ext + fix + co;
    let wins = fix + co;
    let (wilson_low, wilson_high) = wilson_interval(wins, decided, 3.0);
    let ln_k = (setup.capacity as f64).ln();
    let times = |pred: &dyn Fn(TrialKind) -> bool| -> Vec<f64> {
        records
            .iter()
            .filter(|r| pred(r.kind))
            .map(|r| r.t / ln_k)
            .collect()
    };
    StudyRow {
        capacity: setup.capacity,
        trials: records.len() as u64,
        extinctions: ext,
        fixations: fix,
        coexistences: co,
        censored: cens,
        success: if decided > 0 {
            wins as f64 / decided as f64
        } else {
            f64::NAN
        },
        wilson_low,
        wilson_high,
        theory_success: setup.success_prob(),
        success_time: MeanSe::of(&times(&|k| matches!(k, TrialKind::Fixation | TrialKind::Coexistence))),
        theory_time: setup.time_constant(),
        extinction_time: MeanSe::of(&times(&|k| k == TrialKind::Extinction)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub direction: Direction,
    pub params: Params,
    pub radius: f64,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
}

/// Base seed used for carrying capacity `K` under study seed `seed`.
pub fn capacity_seed(seed: u64, capacity: u64) -> u64 {
    splitmix64(seed ^ splitmix64(capacity))
}

/// Invasion trials for each `K`; returns the summary and the raw records.
pub fn invasion_study(
    p: &Params,
    capacities: &[u64],
    trials: u64,
    direction: Direction,
    radius: f64,
    seed: u64,
    event_cap: u64,
) -> Result<(StudySummary, Vec<Vec<TrialRecord>>)> {
    if trials == 0 {
        return Err(Error::InvalidState("need at least one trial"));
    }
    if capacities.is_empty() {
        return Err(Error::InvalidState("need at least one K"));
    }
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &k in capacities {
        let setup = InvasionSetup::new(p, k, direction, radius, event_cap)?;
        let recs = setup.run(trials, capacity_seed(seed, k));
        rows.push(summarize(&setup, &recs));
        raw.push(recs);
    }
    Ok((
        StudySummary {
            direction,
            params: *p,
            radius,
            seed,
            rows,
        },
        raw,
    ))
}

/// Active share of the trait-1 mutant when its total first reaches a level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionCheck {
    pub trials: u64,
    pub level: u64,
    pub reached: u64,
    pub within: u64,
    pub censored: u64,
    pub target: f64,
    pub tolerance: f64,
    pub fractions: Vec<f64>,
}

impl ProportionCheck {
    pub fn within_fraction(&self) -> f64 {
        self.within as f64 / self.reached.max(1) as f64
    }
}

pub fn proportion_check(
    p: &Params,
    capacity: u64,
    trials: u64,
    level_fraction: f64,
    tolerance: f64,
    seed: u64,
    event_cap: u64,
) -> Result<ProportionCheck> {
    let target = branching::type_proportions(p)?.active;
    let mut setup = InvasionSetup::new(p, capacity, Direction::OneIntoTwo, DEFAULT_RADIUS, event_cap)?;
    let level = (level_fraction * capacity as f64).floor() as u64;
    setup.rule.targets.clear();
    setup.rule.levels = vec![(TraitId::One, level)];
    let gen = Generator::new(p, capacity)?;
    let base = capacity_seed(seed, capacity);
    let outcomes: Vec<ssa::Outcome> = (0..trials)
        .into_par_iter()
        .map(|i| ssa::run(&gen, setup.init, &setup.rule, None, &mut seeded(trial_seed(base, i))).0)
        .collect();
    let fractions: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.stop == StopReason::Level(TraitId::One))
        .map(|o| o.state.active as f64 / o.state.trait1() as f64)
        .collect();
    let within = fractions.iter().filter(|f| (*f - target).abs() <= tolerance).count() as u64;
    Ok(ProportionCheck {
        trials,
        level,
        reached: fractions.len() as u64,
        within,
        censored: outcomes.iter().filter(|o| o.stop.is_censored()).count() as u64,
        target,
        tolerance,
        fractions,
    })
}

/// Largest coordinate-wise gap between a scaled simulation and the ODE
/// started from the same scaled counts, over the sample grid on `[0, horizon]`.
pub fn meanfield_deviation(
    p: &Params,
    capacity: u64,
    init: &Density,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let gen = Generator::new(p, capacity)?;
    let start = Counts::scaled_from(init, capacity);
    let rule = StopRule {
        time_cap: Some(horizon),
        event_cap: u64::MAX,
        ..StopRule::default()
    };
    let (_, path) = ssa::run(&gen, start, &rule, Some(dt), &mut seeded(seed));
    let path = path.expect("sampling requested");
    let y0 = start.density(capacity).to_array();
    let tr = ode::integrate_at(p, System::Full, &y0, &path.times, OdeOptions::default())?;
    Ok(path
        .states
        .iter()
        .zip(&tr.states)
        .map(|(c, y)| c.density(capacity).sup_distance(&Density::new(y[0], y[1], y[2])))
        .fold(0.0, f64::max))
}

/// Deviations of `runs` independent simulations, in run order.
pub fn meanfield_check(
    p: &Params,
    capacity: u64,
    init: &Density,
    horizon: f64,
    dt: f64,
    runs: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let base = capacity_seed(seed, capacity);
    (0..runs)
        .into_par_iter()
        .map(|i| meanfield_deviation(p, capacity, init, horizon, dt, trial_seed(base, i)))
        .collect()
}

/// Box of initial conditions around the trait-1 equilibrium with a small
/// trait-2 population of order `sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialBox {
    pub centre: Density,
    pub half_width: f64,
    pub trait2_low: f64,
    pub trait2_high: f64,
}

impl InitialBox {
    pub fn new(p: &Params, width_factor: f64, eps: f64) -> Self {
        let s = eps.sqrt();
        Self {
            centre: p.trait1_point(),
            half_width: width_factor * s,
            trait2_low: s / 2.0,
            trait2_high: s,
        }
    }

    pub fn contains(&self, x: &Density) -> bool {
        (x.active - self.centre.active).abs() <= self.half_width
            && (x.dormant - self.centre.dormant).abs() <= self.half_width
            && (self.trait2_low..=self.trait2_high).contains(&x.trait2)
    }
}

/// Whether the dormant-to-active ratio of `x` lies in the window under which
/// a small trait-1 population grows in both coordinates.
pub fn dormancy_ratio_window(p: &Params, x: &Density) -> bool {
    if x.active <= 0.0 {
        return false;
    }
    let c = p.competition;
    let ratio = x.dormant / x.active;
    let upper = p.dormancy * c * (x.active + x.trait2) / p.dormant_exit();
    let lower = (p.death - p.birth1 + c * (x.trait2 + x.active) + p.transfer * x.trait2) / p.resuscitation;
    upper > ratio && ratio > lower
}
