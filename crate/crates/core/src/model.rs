//! Parameters, equilibria and the chains of inequalities that decide
//! which equilibria exist.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Absolute tolerance under which two sides of a chain count as equal.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Relative tolerance for the vanishing coexistence denominator.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// Rates of the two-trait model.
///
/// Serialized under the conventional short keys so configuration files
/// read like the model definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Birth rate of trait 1 (the dormancy trait).
    #[serde(rename = "lambda1")]
    pub birth1: f64,
    /// Birth rate of trait 2.
    #[serde(rename = "lambda2")]
    pub birth2: f64,
    /// Natural death rate of active individuals.
    #[serde(rename = "mu")]
    pub death: f64,
    /// Competition strength.
    #[serde(rename = "C")]
    pub competition: f64,
    /// Probability that a competitive event sends the loser to dormancy.
    #[serde(rename = "p")]
    pub dormancy: f64,
    /// Dormant death rate as a multiple of the active death rate.
    #[serde(rename = "kappa")]
    pub dormant_death: f64,
    /// Resuscitation rate.
    #[serde(rename = "sigma")]
    pub resuscitation: f64,
    /// Horizontal transfer rate from trait 2 to trait 1 individuals.
    #[serde(rename = "tau")]
    pub transfer: f64,
}

/// Scaled population state: active and dormant trait-1 mass, trait-2 mass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Density {
    pub active: f64,
    pub dormant: f64,
    pub trait2: f64,
}

impl Density {
    pub const ORIGIN: Density = Density {
        active: 0.0,
        dormant: 0.0,
        trait2: 0.0,
    };

    pub fn new(active: f64, dormant: f64, trait2: f64) -> Self {
        Self {
            active,
            dormant,
            trait2,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.active, self.dormant, self.trait2]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn distance(&self, other: &Density) -> f64 {
        let d = [
            self.active - other.active,
            self.dormant - other.dormant,
            self.trait2 - other.trait2,
        ];
        d.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sup_distance(&self, other: &Density) -> f64 {
        (self.active - other.active)
            .abs()
            .max((self.dormant - other.dormant).abs())
            .max((self.trait2 - other.trait2).abs())
    }
}

/// Which of the four orderings of the chain comparison holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chain {
    /// Mutant fitter than the critical value, resident below it: founder control.
    FounderControl,
    /// Critical value above both growth rates: trait 1 takes over.
    FixationOne,
    /// Critical value strictly between: stable coexistence.
    StableCoexistence,
    /// Critical value below both growth rates: trait 2 takes over.
    FixationTwo,
    Boundary,
}

/// Which chain makes the coexistence equilibrium exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoexistenceCondition {
    None,
    MutantFitter,
    MutantLessFit,
}

/// All equilibria of the full system for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub origin: Density,
    pub trait2: Density,
    /// Trait-2 monomorphic value before truncation at zero.
    pub trait2_signed: f64,
    pub trait1: Density,
    pub coexistence: Option<Density>,
    pub condition: CoexistenceCondition,
    pub chain: Option<Chain>,
}

/// Compare with the boundary tolerance; `Equal` marks a boundary.
pub fn strict_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= BOUNDARY_TOL {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

impl Params {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        birth1: f64,
        birth2: f64,
        death: f64,
        competition: f64,
        dormancy: f64,
        dormant_death: f64,
        resuscitation: f64,
        transfer: f64,
    ) -> Result<Self> {
        let p = Self {
            birth1,
            birth2,
            death,
            competition,
            dormancy,
            dormant_death,
            resuscitation,
            transfer,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("lambda1", self.birth1)?;
        positive("lambda2", self.birth2)?;
        positive("mu", self.death)?;
        positive("C", self.competition)?;
        positive("sigma", self.resuscitation)?;
        if !(self.dormancy.is_finite() && (0.0..1.0).contains(&self.dormancy)) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.dormancy,
                reason: "must lie in [0, 1)",
            });
        }
        for (name, v) in [("kappa", self.dormant_death), ("tau", self.transfer)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite and non-negative",
                });
            }
        }
        Ok(())
    }

    /// Net growth rate of trait 1 alone at low density.
    pub fn net1(&self) -> f64 {
        self.birth1 - self.death
    }

    /// Net growth rate of trait 2 alone at low density.
    pub fn net2(&self) -> f64 {
        self.birth2 - self.death
    }

    /// Total exit rate of a dormant individual.
    pub fn dormant_exit(&self) -> f64 {
        self.dormant_death * self.death + self.resuscitation
    }

    /// `kappa mu + (1 - p) sigma`
    fn effective_exit(&self) -> f64 {
        self.dormant_death * self.death + (1.0 - self.dormancy) * self.resuscitation
    }

    pub fn trait2_equilibrium_signed(&self) -> f64 {
        self.net2() / self.competition
    }

    pub fn trait2_equilibrium(&self) -> f64 {
        self.net2().max(0.0) / self.competition
    }

    /// Monomorphic trait-1 equilibrium as (active, dormant).
    pub fn trait1_equilibrium(&self) -> (f64, f64) {
        let b = self.net1().max(0.0);
        let g = self.dormant_exit();
        let h = self.effective_exit();
        let active = b / self.competition * g / h;
        let dormant = b * b * self.dormancy * g / (self.competition * h * h);
        (active, dormant)
    }

    pub fn trait1_point(&self) -> Density {
        let (a, d) = self.trait1_equilibrium();
        Density::new(a, d, 0.0)
    }

    pub fn trait2_point(&self) -> Density {
        Density::new(0.0, 0.0, self.trait2_equilibrium())
    }

    /// Critical growth rate that both net growth rates are compared against.
    pub fn critical_value(&self) -> Result<f64> {
        if self.transfer == 0.0 {
            return Err(Error::TransferFree);
        }
        let (c, tau) = (self.competition, self.transfer);
        let k = c * self.dormancy * self.resuscitation / (tau * self.dormant_exit());
        Ok(k * self.net2() + c / tau * (self.birth1 - self.birth2))
    }

    /// Classify the parameters by the chain of inequalities.
    pub fn chain(&self) -> Result<Chain> {
        let m = self.critical_value()?;
        let mutant = strict_cmp(self.net2(), m);
        let resident = strict_cmp(m, self.net1());
        use Ordering::*;
        Ok(match (mutant, resident) {
            (Greater, Greater) => Chain::FounderControl,
            (Less, Less) => Chain::StableCoexistence,
            (Less, Greater) => Chain::FixationOne,
            (Greater, Less) => Chain::FixationTwo,
            _ => Chain::Boundary,
        })
    }

    /// `C p sigma - g tau`, checked for degeneracy.
    fn coexistence_denominator(&self) -> Result<f64> {
        if self.transfer == 0.0 {
            return Err(Error::TransferFree);
        }
        let a = self.competition * self.dormancy * self.resuscitation;
        let b = self.dormant_exit() * self.transfer;
        let d = a - b;
        if d.abs() <= DEGENERACY_RTOL * a.abs().max(b.abs()) {
            return Err(Error::DegenerateDenominator);
        }
        Ok(d)
    }

    /// The interior fixed point of the full system, whether or not it is positive.
    pub fn coexistence_point(&self) -> Result<Density> {
        let d = self.coexistence_denominator()?;
        let (l1, l2, mu, c, tau) = (
            self.birth1,
            self.birth2,
            self.death,
            self.competition,
            self.transfer,
        );
        let g = self.dormant_exit();
        let cps = c * self.dormancy * self.resuscitation;
        let num = c * g * (l2 - l1) + cps * (mu - l2) + g * tau * (l2 - mu);
        let active = num / (tau * d);
        let dormant = self.dormancy * c * (l2 - l1) / d * active;
        let trait2 = (c * g * (l2 - l1) + cps * (mu - l2) + g * tau * (l1 - mu)) / (-tau * d);
        Ok(Density::new(active, dormant, trait2))
    }

    /// Interior equilibrium of the dormancy-free planar system as (trait 1, trait 2).
    pub fn coexistence_without_dormancy(&self) -> Result<(f64, f64)> {
        if self.transfer == 0.0 {
            return Err(Error::TransferFree);
        }
        let (c, tau) = (self.competition, self.transfer);
        let x = c / tau * (self.birth1 - self.birth2);
        let trait2 = (self.net1() - x) / tau;
        let trait1 = (x - self.net2()) / tau;
        Ok((trait1, trait2))
    }

    /// The coexistence equilibrium if it exists.
    ///
    /// It exists exactly under the founder-control and stable-coexistence
    /// chains and when every coordinate is positive; without dormancy the
    /// dormant coordinate is identically zero.
    pub fn coexistence_equilibrium(&self) -> Result<Option<Density>> {
        match self.chain()? {
            Chain::FounderControl | Chain::StableCoexistence => {}
            _ => return Ok(None),
        }
        let pt = match self.coexistence_point() {
            Ok(pt) => pt,
            Err(Error::DegenerateDenominator) => return Ok(None),
            Err(e) => return Err(e),
        };
        let dormant_ok = if self.dormancy == 0.0 {
            pt.dormant == 0.0
        } else {
            pt.dormant > 0.0
        };
        if pt.active > 0.0 && pt.trait2 > 0.0 && dormant_ok {
            Ok(Some(pt))
        } else {
            Ok(None)
        }
    }

    pub fn equilibrium_report(&self) -> EquilibriumReport {
        let chain = self.chain().ok();
        let coexistence = self.coexistence_equilibrium().ok().flatten();
        let condition = match (coexistence, chain) {
            (Some(_), Some(Chain::FounderControl)) => CoexistenceCondition::MutantFitter,
            (Some(_), Some(Chain::StableCoexistence)) => CoexistenceCondition::MutantLessFit,
            _ => CoexistenceCondition::None,
        };
        EquilibriumReport {
            origin: Density::ORIGIN,
            trait2: self.trait2_point(),
            trait2_signed: self.trait2_equilibrium_signed(),
            trait1: self.trait1_point(),
            coexistence,
            condition,
            chain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3a() -> Params {
        Params::new(5.0, 3.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, 1.0, 0.0, 1.0, 0.1, 0.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, 1.0, 1.0, 1.0, 0.1, -1.0, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, 1.0, 1.0, 1.0, 0.1, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn no_dormancy_example_coexists_at_one_one() {
        let p = fig3a();
        assert_eq!(p.chain().unwrap(), Chain::StableCoexistence);
        let pt = p.coexistence_equilibrium().unwrap().unwrap();
        assert!((pt.active - 1.0).abs() < 1e-12);
        assert_eq!(pt.dormant, 0.0);
        assert!((pt.trait2 - 1.0).abs() < 1e-12);
        let (a, b) = p.coexistence_without_dormancy().unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_free_and_degenerate_errors() {
        let mut p = fig3a();
        p.transfer = 0.0;
        assert_eq!(p.chain(), Err(Error::TransferFree));
        let q = Params::new(3.0, 2.0, 1.0, 1.0, 0.5, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(q.coexistence_point(), Err(Error::DegenerateDenominator));
    }

    #[test]
    fn unfit_trait2_truncates() {
        let p = Params::new(3.0, 0.5, 1.0, 2.0, 0.1, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.trait2_equilibrium(), 0.0);
        assert!((p.trait2_equilibrium_signed() + 0.25).abs() < 1e-15);
    }
}
