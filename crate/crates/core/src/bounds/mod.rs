//! Upper and lower speed bounds from trial functions, and the weighted
//! profile functionals.

mod functional;
mod principles;
mod sform;
mod trial;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{integrate, integrate_left_power, Endpoints, QuadratureError};
use crate::oracle::{DecayBranch, OracleError, PhasePlaneSolution, UnitPoint};
use crate::reaction::ReactionError;

pub use functional::{profile_integrals, vp3_functional, xc_ratio, ProfileIntegrals, TAIL_FLAG};
pub use principles::{aw_bound, vp1_upper, vp2_lower, vp4_lower, zfk_bound, PartIntegrals};
pub use sform::{vp4s_value, vp5_action, FnProfile, SForm, SIntegrals, SProfile, TrialImage};
pub use trial::{Table, TrialFunction, TrialRole, TABLE_POINTS};

/// Default relative tolerance of the bound quadratures.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("trial `{trial}` is not admissible: {reason}")]
    Inadmissible { trial: String, reason: String },
    #[error("{op} needs a {expected} trial, got `{trial}`")]
    WrongRole { op: &'static str, expected: TrialRole, trial: String },
    #[error("{principle} applies to monostable reaction terms only (`{name}`)")]
    NotMonostable { principle: Principle, name: String },
    #[error("integral `{name}` diverges at u = 0 (power u^{exponent})")]
    Divergent { name: &'static str, exponent: f64 },
    #[error("numerator 2∫f·g du = {0} is not positive; choose another trial")]
    NonPositiveNumerator(f64),
    #[error("weight e^(cz) with c = {c} is not integrable against the decay rate {rate} of the profile")]
    DivergentWeight { c: f64, rate: f64 },
    #[error("quadrature of `{name}` failed: {source}")]
    Quadrature { name: &'static str, source: QuadratureError },
    #[error("endpoint slope {slope} of the trajectory does not give a finite exponent")]
    Exponent { slope: f64 },
    #[error("no optimal trial on the {0} decay branch")]
    NoOptimalTrial(DecayBranch),
    #[error("cannot parse trial `{0}`")]
    Parse(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Principle {
    VP1,
    VP2,
    VP4,
    VP4s,
    ZFK,
    AW,
}

impl Principle {
    pub fn direction(self) -> Direction {
        match self {
            Principle::VP1 | Principle::AW => Direction::Upper,
            _ => Direction::Lower,
        }
    }
}

impl fmt::Display for Principle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Principle {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "VP1" => Ok(Principle::VP1),
            "VP2" => Ok(Principle::VP2),
            "VP4" => Ok(Principle::VP4),
            "VP4S" => Ok(Principle::VP4s),
            "ZFK" => Ok(Principle::ZFK),
            "AW" => Ok(Principle::AW),
            _ => Err(BoundsError::Parse(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

/// A speed bound. VP4-type values are speeds; `squared` keeps `c²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub principle: Principle,
    pub direction: Direction,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squared: Option<f64>,
    pub trial: String,
    pub quad_error: f64,
}

/// `ĝ` from a solution, with `ĝ(1/2) = 1`.
pub fn optimal_trial(sol: &PhasePlaneSolution) -> Result<TrialFunction, BoundsError> {
    TrialFunction::optimal(sol)
}

/// `∫₀¹ u^e·ψ(u) du` with `ψ` bounded at `u = 0`.
///
/// The interval is split at `1/2` and at `breaks`. The left piece absorbs a
/// negative `e` by a power substitution, the right piece is integrated in
/// `1 - u` so that `ψ` sees exact complements near `u = 1`.
pub(crate) fn unit_integral<P>(
    name: &'static str,
    e: f64,
    psi: P,
    breaks: &[f64],
    rel_tol: f64,
) -> Result<(f64, f64), BoundsError>
where
    P: Fn(UnitPoint) -> f64,
{
    if e <= -1.0 {
        return Err(BoundsError::Divergent { name, exponent: e });
    }
    let quad = |source| BoundsError::Quadrature { name, source };
    let mut knots = vec![0.0, 0.5, 1.0];
    knots.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let weight = |q: UnitPoint| if e == 0.0 { 1.0 } else { q.u.powf(e) };
    let at = |u: f64| UnitPoint::new(u.max(f64::MIN_POSITIVE));
    let last = knots.len() - 2;
    let mut total = 0.0;
    let mut err = 0.0;
    for (i, w) in knots.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let r = if i == 0 {
            if e < 0.0 {
                integrate_left_power(|u| psi(at(u)), a, b, -e, rel_tol)
            } else {
                integrate(|u| weight(at(u)) * psi(at(u)), a, b, rel_tol, Endpoints::LO)
            }
        } else if i == last {
            integrate(
                |d| {
                    let q = UnitPoint::from_complement(d);
                    weight(q) * psi(q)
                },
                0.0,
                b - a,
                rel_tol,
                Endpoints::LO,
            )
        } else {
            integrate(|u| weight(at(u)) * psi(at(u)), a, b, rel_tol, Endpoints::BOTH)
        }
        .map_err(quad)?;
        total += r.value;
        err += r.error_estimate;
    }
    if !total.is_finite() {
        return Err(BoundsError::Divergent { name, exponent: e });
    }
    Ok((total, err))
}
