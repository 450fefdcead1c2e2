//! Regime labels, critical lines and parameter-plane maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{strict_cmp, Chain, Params, DEGENERACY_RTOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Founder control; requires trait 2 to be the fitter.
    #[serde(rename = "I")]
    FounderControl,
    /// Trait 1 fixes although trait 2 reproduces faster.
    #[serde(rename = "II")]
    FixationOneSlower,
    /// Trait 1 fixes, both traits viable alone, trait 1 faster.
    #[serde(rename = "II'")]
    FixationOneFaster,
    /// Trait 1 fixes, trait 2 not viable alone.
    #[serde(rename = "II''")]
    FixationOneUnfitTwo,
    /// Stable coexistence with both traits viable alone.
    #[serde(rename = "III")]
    Coexistence,
    /// Stable coexistence although trait 2 is not viable alone.
    #[serde(rename = "III'")]
    CoexistenceUnfitTwo,
    /// Trait 2 fixes and reproduces faster.
    #[serde(rename = "IV")]
    FixationTwoFaster,
    /// Trait 2 fixes although trait 1 reproduces faster.
    #[serde(rename = "IV'")]
    FixationTwoSlower,
    /// Without dormancy: interior equilibrium attracts.
    #[serde(rename = "stable-coexistence")]
    StableCoexistence,
    #[serde(rename = "fixation-1")]
    FixationOne,
    #[serde(rename = "fixation-2")]
    FixationTwo,
    /// Without dormancy: bistability with a saddle in between.
    #[serde(rename = "founder-control")]
    Bistable,
    /// Trait 2 cannot persist and dies out.
    #[serde(rename = "extinction")]
    Extinction,
    #[serde(rename = "resident-unfit")]
    ResidentUnfit,
    #[serde(rename = "boundary")]
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        use Regime::*;
        match self {
            FounderControl => "I",
            FixationOneSlower => "II",
            FixationOneFaster => "II'",
            FixationOneUnfitTwo => "II''",
            Coexistence => "III",
            CoexistenceUnfitTwo => "III'",
            FixationTwoFaster => "IV",
            FixationTwoSlower => "IV'",
            StableCoexistence => "stable-coexistence",
            FixationOne => "fixation-1",
            FixationTwo => "fixation-2",
            Bistable => "founder-control",
            Extinction => "extinction",
            ResidentUnfit => "resident-unfit",
            Boundary => "boundary",
        }
    }

    /// Outcome family shared by the labelled and the special-case regimes.
    pub fn family(&self) -> Chain {
        use Regime::*;
        match self {
            FounderControl | Bistable => Chain::FounderControl,
            FixationOneSlower | FixationOneFaster | FixationOneUnfitTwo | FixationOne | Extinction => {
                Chain::FixationOne
            }
            Coexistence | CoexistenceUnfitTwo | StableCoexistence => Chain::StableCoexistence,
            FixationTwoFaster | FixationTwoSlower | FixationTwo => Chain::FixationTwo,
            ResidentUnfit | Boundary => Chain::Boundary,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime of `p`, dispatching to the dormancy-free or transfer-free rules
/// where the general chain does not apply.
pub fn regime(p: &Params) -> Regime {
    if p.net1() <= 0.0 {
        return Regime::ResidentUnfit;
    }
    if p.transfer == 0.0 {
        return transfer_free_regime(p);
    }
    if p.dormancy == 0.0 {
        return dormancy_free_regime(p);
    }
    let chain = match p.chain() {
        Ok(c) => c,
        Err(_) => return Regime::Boundary,
    };
    sub_label(p, chain)
}

fn sub_label(p: &Params, chain: Chain) -> Regime {
    use Ordering::*;
    let l12 = strict_cmp(p.birth1, p.birth2);
    let l2mu = strict_cmp(p.birth2, p.death);
    match chain {
        Chain::FounderControl => match l12 {
            Less => Regime::FounderControl,
            _ => Regime::Boundary,
        },
        Chain::FixationOne => match (l12, l2mu) {
            (Less, _) => Regime::FixationOneSlower,
            (Greater, Greater) => Regime::FixationOneFaster,
            (Greater, Less) => Regime::FixationOneUnfitTwo,
            _ => Regime::Boundary,
        },
        Chain::StableCoexistence => match (l12, l2mu) {
            (Greater, Greater) => Regime::Coexistence,
            (Greater, Less) => Regime::CoexistenceUnfitTwo,
            _ => Regime::Boundary,
        },
        Chain::FixationTwo => match l12 {
            Less => Regime::FixationTwoFaster,
            Greater => Regime::FixationTwoSlower,
            Equal => Regime::Boundary,
        },
        Chain::Boundary => Regime::Boundary,
    }
}

/// Four-way classification without dormancy, comparing both growth rates
/// with `(C / tau)(lambda1 - lambda2)`.
pub fn dormancy_free_regime(p: &Params) -> Regime {
    if p.transfer == 0.0 {
        return transfer_free_regime(p);
    }
    let x = p.competition / p.transfer * (p.birth1 - p.birth2);
    use Ordering::*;
    match (strict_cmp(p.net2(), x), strict_cmp(x, p.net1())) {
        (Less, Less) => Regime::StableCoexistence,
        (Less, Greater) => Regime::FixationOne,
        (Greater, Less) => Regime::FixationTwo,
        (Greater, Greater) => Regime::Bistable,
        _ => Regime::Boundary,
    }
}

/// Without transfer the fitter trait, accounting for dormancy, takes over.
pub fn transfer_free_regime(p: &Params) -> Regime {
    if p.net1() <= 0.0 {
        return Regime::ResidentUnfit;
    }
    if p.net2() <= 0.0 {
        return Regime::Extinction;
    }
    let rhs = p.dormancy * p.net2() * p.resuscitation / p.dormant_exit();
    match strict_cmp(p.birth2 - p.birth1, rhs) {
        Ordering::Less => Regime::FixationOne,
        Ordering::Greater => Regime::FixationTwo,
        Ordering::Equal => Regime::Boundary,
    }
}

/// A line `a lambda1 + b lambda2 = c` in the (lambda1, lambda2) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    /// `d lambda2 / d lambda1`; infinite for vertical lines.
    pub fn slope(&self) -> f64 {
        -self.a / self.b
    }

    pub fn lambda2_at(&self, lambda1: f64) -> f64 {
        (self.c - self.a * lambda1) / self.b
    }

    pub fn contains(&self, lambda1: f64, lambda2: f64, tol: f64) -> bool {
        (self.a * lambda1 + self.b * lambda2 - self.c).abs() <= tol
    }
}

/// The two critical lines in the (lambda1, lambda2) plane for fixed
/// `mu, C, p, kappa, sigma, tau`. Both pass through `(mu, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLines {
    /// `lambda1 - mu` equals the critical value. Its slope is negative
    /// exactly when transfer beats competition, opening coexistence below
    /// `lambda2 = mu`.
    pub orange: Line,
    /// `lambda2 - mu` equals the critical value.
    pub blue: Line,
}

pub fn critical_lines(p: &Params) -> Result<CriticalLines> {
    if p.transfer == 0.0 {
        return Err(Error::TransferFree);
    }
    let (num, den) = (
        p.competition * p.dormancy * p.resuscitation,
        p.transfer * p.dormant_exit(),
    );
    // both lines collapse onto lambda1 = lambda2
    if (num - den).abs() <= DEGENERACY_RTOL * num.max(den) {
        return Err(Error::DegenerateDenominator);
    }
    let r = p.competition / p.transfer;
    let k = num / den;
    let mu = p.death;
    // lambda1 - mu = k (lambda2 - mu) + r (lambda1 - lambda2)
    let orange = Line {
        a: 1.0 - r,
        b: r - k,
        c: (1.0 - k) * mu,
    };
    // lambda2 - mu = k (lambda2 - mu) + r (lambda1 - lambda2)
    let blue = Line {
        a: -r,
        b: 1.0 - k + r,
        c: (1.0 - k) * mu,
    };
    Ok(CriticalLines { orange, blue })
}

/// Evenly spaced axis including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub regime: Regime,
}

/// Label every grid point, varying the two birth rates of `base`.
/// Cells are ordered with `lambda1` outermost.
pub fn regime_map(base: &Params, lambda1: Axis, lambda2: Axis) -> Vec<RegimeCell> {
    (0..lambda1.points * lambda2.points)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / lambda2.points, idx % lambda2.points);
            let p = Params {
                birth1: lambda1.value(i),
                birth2: lambda2.value(j),
                ..*base
            };
            RegimeCell {
                lambda1: p.birth1,
                lambda2: p.birth2,
                regime: regime(&p),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l1: f64, l2: f64, tau: f64, pr: f64) -> Params {
        Params::new(l1, l2, 1.0, 1.0, pr, 0.0, 1.0, tau).unwrap()
    }

    #[test]
    fn dormancy_free_fixation_two() {
        assert_eq!(regime(&p(3.0, 3.5, 10.0, 0.0)), Regime::FixationTwo);
    }

    #[test]
    fn no_dormancy_coexistence() {
        let q = Params::new(5.0, 3.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(regime(&q), Regime::StableCoexistence);
    }

    #[test]
    fn transfer_free_rules() {
        assert_eq!(regime(&p(3.0, 2.0, 0.0, 0.3)), Regime::FixationOne);
        assert_eq!(regime(&p(2.0, 3.0, 0.0, 0.3)), Regime::FixationTwo);
        assert_eq!(regime(&p(3.0, 0.5, 0.0, 0.3)), Regime::Extinction);
    }

    #[test]
    fn equal_births_at_equal_rates_is_fixation_two_family() {
        let q = p(2.0, 2.0, 1.0, 0.3);
        assert_eq!(q.chain().unwrap(), Chain::FixationTwo);
        assert_eq!(regime(&q), Regime::Boundary);
    }

    #[test]
    fn lines_pass_through_diagonal_point() {
        let l = critical_lines(&p(2.0, 2.0, 1.7, 0.2)).unwrap();
        assert!(l.orange.contains(1.0, 1.0, 1e-12));
        assert!(l.blue.contains(1.0, 1.0, 1e-12));
    }

    #[test]
    fn unfit_resident() {
        assert_eq!(regime(&p(0.9, 2.0, 1.0, 0.3)), Regime::ResidentUnfit);
    }
}
