//! Branching-process approximations of a rare mutant near a resident equilibrium.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;
use crate::rng::trial_rng;

/// Invasion fitness below this magnitude counts as critical.
pub const CRITICAL_TOL: f64 = 1e-10;
const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_CAP: usize = 1_000_000;

/// Which trait plays the mutant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mutant {
    #[serde(rename = "1")]
    Trait1,
    #[serde(rename = "2")]
    Trait2,
}

/// Mean offspring-rate matrix of the two-type trait-1 mutant process.
/// Row index is the parent type (0 active, 1 dormant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMatrix(pub [[f64; 2]; 2]);

impl MeanMatrix {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest eigenvalue. The off-diagonal product is non-negative so both
    /// eigenvalues are real.
    pub fn perron_root(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let disc = (a - d) * (a - d) + 4.0 * b * c;
        0.5 * (a + d + disc.max(0.0).sqrt())
    }
}

/// Birth and death rates of a single-type linear birth-death process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthDeath {
    pub birth: f64,
    pub death: f64,
}

/// Per-individual rates of the two-type (active, dormant) mutant process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTypeRates {
    pub birth: f64,
    pub death: f64,
    pub to_dormant: f64,
    pub dormant_death: f64,
    pub resuscitation: f64,
}

impl TwoTypeRates {
    pub fn active_total(&self) -> f64 {
        self.birth + self.death + self.to_dormant
    }

    pub fn dormant_total(&self) -> f64 {
        self.dormant_death + self.resuscitation
    }
}

/// Stationary type distribution of the supercritical two-type process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeProportions {
    pub active: f64,
    pub dormant: f64,
    /// Set when dormancy is switched off and the dormant share is trivially zero.
    pub degenerate: bool,
}

/// Summary of invasion quantities for both directions. Missing entries were
/// not applicable for the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub fitness2: Option<f64>,
    pub fitness1: Option<f64>,
    pub extinction2: Option<f64>,
    pub extinction1: Option<f64>,
    pub proportions: Option<TypeProportions>,
    pub notes: Vec<String>,
}

/// Monte Carlo estimate of an extinction probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u64,
    pub extinct: u64,
    pub fraction: f64,
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

fn resident1_needed(p: &Params) -> Result<()> {
    if p.net1() <= 0.0 {
        Err(Error::ResidentUnfit(1))
    } else {
        Ok(())
    }
}

fn resident2_needed(p: &Params) -> Result<()> {
    if p.net2() <= 0.0 {
        Err(Error::ResidentUnfit(2))
    } else {
        Ok(())
    }
}

/// Linear rates of a trait-2 mutant in the trait-1 resident.
pub fn trait2_mutant_rates(p: &Params) -> Result<BirthDeath> {
    resident1_needed(p)?;
    let (active, _) = p.trait1_equilibrium();
    Ok(BirthDeath {
        birth: p.birth2 + p.transfer * active,
        death: p.death + p.competition * active,
    })
}

/// Growth rate of a trait-2 mutant in the trait-1 resident.
pub fn trait2_fitness(p: &Params) -> Result<f64> {
    resident1_needed(p)?;
    let (active, _) = p.trait1_equilibrium();
    Ok(p.net2() - (p.competition - p.transfer) * active)
}

/// Extinction probability of a trait-2 mutant, `min(1, death / birth)`.
pub fn trait2_extinction(p: &Params) -> Result<f64> {
    let fit = trait2_fitness(p)?;
    if fit.abs() < CRITICAL_TOL {
        return Err(Error::Critical {
            trait_id: 2,
            value: fit,
        });
    }
    let r = trait2_mutant_rates(p)?;
    Ok((r.death / r.birth).min(1.0))
}

/// Rates of a trait-1 mutant in the trait-2 resident.
pub fn trait1_mutant_rates(p: &Params) -> Result<TwoTypeRates> {
    resident2_needed(p)?;
    let n2 = p.trait2_equilibrium();
    let c = p.competition;
    Ok(TwoTypeRates {
        birth: p.birth1,
        death: p.death + c * (1.0 - p.dormancy) * n2 + p.transfer * n2,
        to_dormant: c * p.dormancy * n2,
        dormant_death: p.dormant_death * p.death,
        resuscitation: p.resuscitation,
    })
}

pub fn mean_matrix(p: &Params) -> Result<MeanMatrix> {
    resident2_needed(p)?;
    let a = p.net2();
    Ok(MeanMatrix([
        [
            p.birth1 - p.birth2 - p.transfer / p.competition * a,
            p.dormancy * a,
        ],
        [p.resuscitation, -p.dormant_exit()],
    ]))
}

/// Largest eigenvalue of the mean matrix in the explicit radical form.
pub fn trait1_fitness_closed_form(p: &Params) -> Result<f64> {
    resident2_needed(p)?;
    let (c, g, tau, a) = (p.competition, p.dormant_exit(), p.transfer, p.net2());
    let d12 = p.birth1 - p.birth2;
    let alpha = c * g - c * d12 + a * tau;
    let inner = -c * c * g * d12 - c * c * p.dormancy * p.resuscitation * a + c * g * tau * a;
    Ok((-alpha + (alpha * alpha - 4.0 * inner).sqrt()) / (2.0 * c))
}

/// Growth rate of a trait-1 mutant in the trait-2 resident.
pub fn trait1_fitness(p: &Params) -> Result<f64> {
    let m = mean_matrix(p)?;
    let root = m.perron_root();
    debug_assert!({
        let alt = trait1_fitness_closed_form(p)?;
        (alt - root).abs() <= 1e-8 * root.abs().max(1.0)
    });
    Ok(root)
}

/// Extinction probability of a trait-1 mutant started from one active individual.
///
/// Minimal fixed point of the offspring generating functions, reached by
/// monotone iteration from zero.
pub fn trait1_extinction(p: &Params) -> Result<f64> {
    let fit = trait1_fitness(p)?;
    if fit.abs() < CRITICAL_TOL {
        return Err(Error::Critical {
            trait_id: 1,
            value: fit,
        });
    }
    if fit < 0.0 {
        return Ok(1.0);
    }
    let r = trait1_mutant_rates(p)?;
    let (ta, td) = (r.active_total(), r.dormant_total());
    let (mut sa, mut sd) = (0.0f64, 0.0f64);
    for _ in 0..FIXED_POINT_CAP {
        let na = (r.birth * sa * sa + r.death + r.to_dormant * sd) / ta;
        let nd = (r.dormant_death + r.resuscitation * sa) / td;
        let step = (na - sa).abs().max((nd - sd).abs());
        sa = na;
        sd = nd;
        if step < FIXED_POINT_TOL {
            return Ok(sa);
        }
    }
    Err(Error::NoConvergence(FIXED_POINT_CAP))
}

/// Left Perron eigenvector of the mean matrix, normalized to sum one.
pub fn type_proportions(p: &Params) -> Result<TypeProportions> {
    let m = mean_matrix(p)?;
    let root = m.perron_root();
    if root <= CRITICAL_TOL {
        return Err(Error::NotSupercritical {
            trait_id: 1,
            value: root,
        });
    }
    if p.dormancy == 0.0 {
        return Ok(TypeProportions {
            active: 1.0,
            dormant: 0.0,
            degenerate: true,
        });
    }
    let ratio = (root - m.0[0][0]) / m.0[1][0];
    let active = 1.0 / (1.0 + ratio);
    Ok(TypeProportions {
        active,
        dormant: 1.0 - active,
        degenerate: false,
    })
}

pub fn fitness_report(p: &Params) -> FitnessReport {
    let mut notes = Vec::new();
    let keep = |r: Result<f64>, notes: &mut Vec<String>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let fitness2 = keep(trait2_fitness(p), &mut notes);
    let fitness1 = keep(trait1_fitness(p), &mut notes);
    let extinction2 = if fitness2.is_some() {
        keep(trait2_extinction(p), &mut notes)
    } else {
        None
    };
    let extinction1 = if fitness1.is_some() {
        keep(trait1_extinction(p), &mut notes)
    } else {
        None
    };
    let proportions = match fitness1 {
        Some(f) if f > CRITICAL_TOL => type_proportions(p).ok(),
        _ => None,
    };
    notes.dedup();
    FitnessReport {
        fitness2,
        fitness1,
        extinction2,
        extinction1,
        proportions,
        notes,
    }
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let f = successes as f64 / n;
    let z2 = z * z;
    let centre = (f + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (f * (1.0 - f) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Options for the branching Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOptions {
    pub trials: u64,
    /// Population size counted as survival.
    pub survival_threshold: u64,
    /// Jumps per trial after which a supercritical lineage counts as surviving.
    pub event_cap: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            trials: 100_000,
            survival_threshold: 10_000,
            event_cap: 100_000_000,
        }
    }
}

fn one_type_extinct<R: Rng>(r: BirthDeath, opts: &McOptions, supercritical: bool, rng: &mut R) -> bool {
    let up = r.birth / (r.birth + r.death);
    let mut n: u64 = 1;
    for _ in 0..opts.event_cap {
        if rng.random::<f64>() < up {
            n += 1;
            if n >= opts.survival_threshold {
                return false;
            }
        } else {
            n -= 1;
            if n == 0 {
                return true;
            }
        }
    }
    !supercritical
}

fn two_type_extinct<R: Rng>(r: TwoTypeRates, opts: &McOptions, supercritical: bool, rng: &mut R) -> bool {
    let (ta, td) = (r.active_total(), r.dormant_total());
    let (mut a, mut d): (u64, u64) = (1, 0);
    for _ in 0..opts.event_cap {
        let wa = a as f64 * ta;
        let total = wa + d as f64 * td;
        let u = rng.random::<f64>() * total;
        if u < wa {
            let v = u / a as f64;
            if v < r.birth {
                a += 1;
            } else if v < r.birth + r.death {
                a -= 1;
            } else {
                a -= 1;
                d += 1;
            }
        } else {
            let v = (u - wa) / d as f64;
            if v < r.resuscitation {
                a += 1;
            }
            d -= 1;
        }
        let n = a + d;
        if n == 0 {
            return true;
        }
        if n >= opts.survival_threshold {
            return false;
        }
    }
    !supercritical
}

/// Estimate the extinction probability of a single mutant by simulating the
/// embedded jump chain of its branching process.
pub fn extinction_mc(p: &Params, mutant: Mutant, opts: &McOptions, seed: u64) -> Result<McEstimate> {
    let extinct: u64 = match mutant {
        Mutant::Trait2 => {
            let r = trait2_mutant_rates(p)?;
            let sup = r.birth > r.death;
            (0..opts.trials)
                .into_par_iter()
                .map(|i| one_type_extinct(r, opts, sup, &mut trial_rng(seed, i)) as u64)
                .sum()
        }
        Mutant::Trait1 => {
            let r = trait1_mutant_rates(p)?;
            let sup = trait1_fitness(p)? > 0.0;
            (0..opts.trials)
                .into_par_iter()
                .map(|i| two_type_extinct(r, opts, sup, &mut trial_rng(seed, i)) as u64)
                .sum()
        }
    };
    let n = opts.trials.max(1) as f64;
    let fraction = extinct as f64 / n;
    let (wilson_low, wilson_high) = wilson_interval(extinct, opts.trials, 3.0);
    Ok(McEstimate {
        trials: opts.trials,
        extinct,
        fraction,
        std_error: (fraction * (1.0 - fraction) / n).sqrt(),
        wilson_low,
        wilson_high,
    })
}
