//! Linear stability of the equilibria of the full system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Chain, Density, Params};

/// Real parts this close to zero give no stability verdict.
pub const ZERO_REAL_TOL: f64 = 1e-9;

pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityLabel {
    AsymptoticallyStable,
    Unstable,
    /// The equilibrium coincides with the origin because its trait is unfit.
    DegenerateCoincidesWithOrigin,
    /// Hyperbolic but not decided by the sign structure alone.
    IndeterminateLocal,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Origin,
    Trait2,
    Trait1,
    Coexistence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStability {
    pub kind: EquilibriumKind,
    pub point: Density,
    pub label: StabilityLabel,
    /// Eigenvalues as (re, im) pairs, sorted by descending real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub trace: f64,
    pub det: f64,
    /// The reported point has a negative coordinate.
    pub negative_coordinate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub chain: Option<Chain>,
    pub equilibria: Vec<EquilibriumStability>,
}

impl StabilityReport {
    pub fn get(&self, kind: EquilibriumKind) -> Option<&EquilibriumStability> {
        self.equilibria.iter().find(|e| e.kind == kind)
    }

    pub fn label(&self, kind: EquilibriumKind) -> Option<StabilityLabel> {
        self.get(kind).map(|e| e.label)
    }
}

/// Jacobian of the full vector field at `x`.
pub fn jacobian(p: &Params, x: &Density) -> Matrix3 {
    let (c, tau, pr) = (p.competition, p.transfer, p.dormancy);
    let (a, _, n2) = (x.active, x.dormant, x.trait2);
    [
        [
            p.net1() - 2.0 * c * a - (c + tau) * n2,
            p.resuscitation,
            -(c + tau) * a,
        ],
        [2.0 * pr * c * a + pr * c * n2, -p.dormant_exit(), pr * c * a],
        [(tau - c) * n2, 0.0, p.net2() - 2.0 * c * n2 - (c - tau) * a],
    ]
}

pub fn trace3(m: &Matrix3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

pub fn det3(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn minors_sum(m: &Matrix3) -> f64 {
    (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1])
}

fn cubic_value(a: f64, b: f64, c: f64, x: f64) -> (f64, f64) {
    let f = ((x + a) * x + b) * x + c;
    let df = (3.0 * x + 2.0 * a) * x + b;
    (f, df)
}

/// Roots of `x^3 + a x^2 + b x + c`: one real root from the closed form,
/// polished by Newton, then the deflated quadratic.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let pp = b - a * a / 3.0;
    let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = qq * qq / 4.0 + pp * pp * pp / 27.0;
    let mut r = if disc < 0.0 {
        // three real roots; take the largest
        let m = 2.0 * (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos() - shift
    } else {
        let s = disc.sqrt();
        (-qq / 2.0 + s).cbrt() + (-qq / 2.0 - s).cbrt() - shift
    };
    for _ in 0..2 {
        let (f, df) = cubic_value(a, b, c, r);
        if df != 0.0 {
            let next = r - f / df;
            if next.is_finite() && cubic_value(a, b, c, next).0.abs() <= f.abs() {
                r = next;
            }
        }
    }
    // x^3 + a x^2 + b x + c = (x - r)(x^2 + e x + f)
    let e = a + r;
    let f = b + r * e;
    let d = e * e / 4.0 - f;
    let (r2, r3) = if d >= 0.0 {
        let s = d.sqrt();
        let big = if e >= 0.0 { -e / 2.0 - s } else { -e / 2.0 + s };
        let small = if big != 0.0 { f / big } else { 0.0 };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let s = (-d).sqrt();
        (Complex64::new(-e / 2.0, s), Complex64::new(-e / 2.0, -s))
    };
    let mut out = [Complex64::new(r, 0.0), r2, r3];
    out.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    out
}

pub fn eigenvalues3(m: &Matrix3) -> [Complex64; 3] {
    cubic_roots(-trace3(m), minors_sum(m), -det3(m))
}

/// Label from eigenvalues. A clearly positive real part decides instability
/// even if another eigenvalue is near zero.
pub fn label_from_eigenvalues(eigs: &[Complex64]) -> StabilityLabel {
    if eigs.iter().any(|z| z.re > ZERO_REAL_TOL) {
        StabilityLabel::Unstable
    } else if eigs.iter().any(|z| z.re.abs() <= ZERO_REAL_TOL) {
        StabilityLabel::Boundary
    } else {
        StabilityLabel::AsymptoticallyStable
    }
}

fn analyse(p: &Params, kind: EquilibriumKind, point: Density) -> EquilibriumStability {
    let j = jacobian(p, &point);
    let eigs = eigenvalues3(&j);
    EquilibriumStability {
        kind,
        point,
        label: label_from_eigenvalues(&eigs),
        eigenvalues: eigs.iter().map(|z| (z.re, z.im)).collect(),
        trace: trace3(&j),
        det: det3(&j),
        negative_coordinate: point.active < 0.0 || point.dormant < 0.0 || point.trait2 < 0.0,
    }
}

/// Stability of every equilibrium that exists for `p`.
///
/// Monomorphic equilibria of unfit traits are reported as coinciding with
/// the origin; the trait-2 entry then carries its signed (negative) position.
/// Under the stable-coexistence chain with dormancy the interior equilibrium
/// is reported as indeterminate with its eigenvalues attached.
pub fn classify_equilibria(p: &Params) -> Result<StabilityReport> {
    if p.net1() <= 0.0 && p.net2() <= 0.0 {
        return Err(Error::NoClassification);
    }
    let chain = p.chain().ok();
    let mut equilibria = vec![analyse(p, EquilibriumKind::Origin, Density::ORIGIN)];

    let signed2 = Density::new(0.0, 0.0, p.trait2_equilibrium_signed());
    let mut e2 = analyse(p, EquilibriumKind::Trait2, signed2);
    if p.net2() <= 0.0 {
        e2.label = StabilityLabel::DegenerateCoincidesWithOrigin;
    }
    equilibria.push(e2);

    let mut e1 = analyse(p, EquilibriumKind::Trait1, p.trait1_point());
    if p.net1() <= 0.0 {
        e1.label = StabilityLabel::DegenerateCoincidesWithOrigin;
    }
    equilibria.push(e1);

    if let Some(pt) = p.coexistence_equilibrium().ok().flatten() {
        let mut ec = analyse(p, EquilibriumKind::Coexistence, pt);
        if chain == Some(Chain::StableCoexistence) && p.dormancy > 0.0 {
            ec.label = StabilityLabel::IndeterminateLocal;
        }
        equilibria.push(ec);
    }
    Ok(StabilityReport { chain, equilibria })
}

/// Labels that the chain classification predicts for (origin, trait 2,
/// trait 1, coexistence). `None` in the last slot means no coexistence point.
pub fn expected_labels(p: &Params, chain: Chain) -> Option<[Option<StabilityLabel>; 4]> {
    use StabilityLabel::*;
    let unfit_or = |net: f64, fit: StabilityLabel| {
        if net > 0.0 {
            fit
        } else {
            DegenerateCoincidesWithOrigin
        }
    };
    Some(match chain {
        Chain::FounderControl if p.net1() <= 0.0 => [
            Some(Unstable),
            Some(AsymptoticallyStable),
            Some(DegenerateCoincidesWithOrigin),
            None,
        ],
        Chain::FounderControl => [
            Some(Unstable),
            Some(AsymptoticallyStable),
            Some(AsymptoticallyStable),
            Some(Unstable),
        ],
        Chain::FixationOne => [
            Some(Unstable),
            Some(unfit_or(p.net2(), Unstable)),
            Some(AsymptoticallyStable),
            None,
        ],
        Chain::StableCoexistence => [
            Some(Unstable),
            Some(unfit_or(p.net2(), Unstable)),
            Some(Unstable),
            Some(IndeterminateLocal),
        ],
        Chain::FixationTwo => [
            Some(Unstable),
            Some(AsymptoticallyStable),
            Some(unfit_or(p.net1(), Unstable)),
            None,
        ],
        Chain::Boundary => return None,
    })
}
