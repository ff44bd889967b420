//! Minimal front speed and the heteroclinic trajectory `p(u)` of
//! `p·p' - c·p + f = 0`, `p(0) = p(1) = 0`, `p > 0`.

mod curve;
mod profile;
mod shoot;

use std::cell::RefCell;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bisect, BisectError, OdeError};
use crate::reaction::{ReactionError, ReactionTerm};

pub use curve::{PhaseCurve, UnitPoint};
pub use profile::{front_profile, FrontProfile};
pub use shoot::{departure_slope, origin_slopes, shoot, ShootKind, ShootOutcome};

use shoot::Shooter;

/// Departure offset from `u = 1`.
pub const EPS: f64 = 1e-8;
/// Points of the uniform resampling grid.
pub const GRID_POINTS: usize = 8192;
const C_FLOOR: f64 = 1e-6;
const SHALLOW_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("speed must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("departure offset {0} outside [1e-10, 1e-4]")]
    InvalidEpsilon(f64),
    #[error("speed tolerance {0} below 1e-8")]
    InvalidTolerance(f64),
    #[error("profile truncation {0} outside [1e-8, 1e-3]")]
    InvalidDelta(f64),
    #[error("f'(1) = {0} >= 0: the departure from u = 1 is not a saddle")]
    UnsupportedDeparture(f64),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("trajectory integration failed: {0}")]
    Integration(OdeError),
    #[error("could not bracket the minimal speed in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("shooting outcome is not monotone in c: {samples:?}")]
    NonMonotone { samples: Vec<(f64, ShootKind)> },
    #[error("p is not positive at u = {0}")]
    NonPositive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayBranch {
    Steep,
    Shallow,
    Spiral,
    NotApplicable,
}

impl std::fmt::Display for DecayBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecayBranch::Steep => "steep",
            DecayBranch::Shallow => "shallow",
            DecayBranch::Spiral => "spiral",
            DecayBranch::NotApplicable => "not_applicable",
        })
    }
}

/// A speed with its connecting trajectory sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct PhasePlaneSolution {
    pub c: f64,
    pub u_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub mu1: f64,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub decay_branch: DecayBranch,
    curve: Arc<PhaseCurve>,
}

impl PhasePlaneSolution {
    /// Samples `curve` on the uniform grid.
    pub fn from_curve(curve: PhaseCurve, decay_branch: DecayBranch) -> Result<Self, OracleError> {
        let c = curve.c();
        let n = GRID_POINTS;
        let mut u_grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        // Breakpoints of f join the grid so no cell straddles a kink of p''.
        u_grid.extend(curve.reaction().breakpoints());
        u_grid.sort_by(f64::total_cmp);
        u_grid.dedup();
        let p: Vec<f64> = u_grid.iter().map(|&u| curve.p(u)).collect();
        if let Some(i) = p.iter().position(|&x| !(x > 0.0)) {
            return Err(OracleError::NonPositive(u_grid[i]));
        }
        let slopes = origin_slopes(c, curve.reaction().fprime0());
        Ok(PhasePlaneSolution {
            c,
            u_grid,
            p,
            mu1: curve.mu1(),
            lambda_minus: slopes.map(|s| s.0),
            lambda_plus: slopes.map(|s| s.1),
            decay_branch,
            curve: Arc::new(curve),
        })
    }

    pub fn curve(&self) -> &PhaseCurve {
        &self.curve
    }

    pub fn shared_curve(&self) -> Arc<PhaseCurve> {
        Arc::clone(&self.curve)
    }

    pub fn reaction(&self) -> &ReactionTerm {
        self.curve.reaction()
    }

    /// Continuous `p(u)`.
    pub fn p_at(&self, u: f64) -> f64 {
        self.curve.p(u)
    }
}

/// Maximum midpoint residual of the phase-plane equation on the grid, with
/// secant `dp/du` and `p` averaged over each cell.
pub fn residual(sol: &PhasePlaneSolution) -> f64 {
    let f = sol.reaction();
    let (u, p) = (&sol.u_grid, &sol.p);
    let mut worst: f64 = 0.0;
    for i in 0..u.len().saturating_sub(1) {
        let du = u[i + 1] - u[i];
        let pm = 0.5 * (p[i] + p[i + 1]);
        let um = 0.5 * (u[i] + u[i + 1]);
        let res = pm * (p[i + 1] - p[i]) / du - sol.c * pm + f.f(um);
        worst = worst.max(res.abs());
    }
    worst
}

/// Residual bound for a sampled trajectory: `1e-6·max(1, max p²)`.
pub fn residual_bound(sol: &PhasePlaneSolution) -> f64 {
    let pmax = sol.p.iter().cloned().fold(0.0, f64::max);
    1e-6 * (pmax * pmax).max(1.0)
}

fn default_p_tol(mu1: f64) -> f64 {
    1e-7 * mu1.max(1.0)
}

/// Minimal speed `c₀` by bisection on the shooting outcome.
pub fn minimal_speed(f: &ReactionTerm, c_tol: f64) -> Result<PhasePlaneSolution, OracleError> {
    if !(c_tol >= 1e-8) {
        return Err(OracleError::InvalidTolerance(c_tol));
    }
    let class = f.classify(200)?;
    let monostable = class.tag.is_monostable();
    let shooter = Shooter::new(f)?;
    let failure: RefCell<Option<OracleError>> = RefCell::new(None);
    let classify_c = |c: f64| -> Option<ShootKind> {
        let p_tol = departure_slope(c, f.fprime1()).map(default_p_tol).unwrap_or(1e-7);
        match shooter.shoot(c, EPS, p_tol) {
            Ok(o) => Some(o.kind),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                None
            }
        }
    };
    // Both `Connected` and `HitPZeroInterior` mean c is at or above c₀.
    let too_fast = |c: f64| classify_c(c).map(|k| k != ShootKind::HitAxisPPositive);

    let (mut lo, mut hi) = if monostable {
        let kpp = f.kpp_speed()?;
        let zfk = f.zfk_speed()?;
        ((kpp.max(zfk) - 0.5).max(C_FLOOR), f.aw_upper()? + 0.5)
    } else {
        (C_FLOOR, 2.0 * f.sup_ratio().max(0.0).sqrt() + 0.5)
    };
    let mut expanded = 0;
    loop {
        let lo_fast = too_fast(lo);
        let hi_fast = too_fast(hi);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        match (lo_fast, hi_fast) {
            (Some(false), Some(true)) => break,
            _ if expanded >= 8 => return Err(OracleError::Bracket { lo, hi }),
            (l, h) => {
                let step = 0.5 * 2f64.powi(expanded);
                if l == Some(true) {
                    if lo <= C_FLOOR {
                        return Err(OracleError::Bracket { lo, hi });
                    }
                    lo = (lo - step).max(C_FLOOR);
                }
                if h == Some(false) {
                    hi += step;
                }
                expanded += 1;
            }
        }
    }

    // Monotonicity screen on a coarse sweep of the bracket.
    let mut samples = Vec::new();
    for i in 0..=8 {
        let c = lo + (hi - lo) * i as f64 / 8.0;
        let p_tol = departure_slope(c, f.fprime1()).map(default_p_tol).unwrap_or(1e-7);
        samples.push((c, shooter.shoot(c, EPS, p_tol)?.kind));
    }
    let fast: Vec<bool> = samples.iter().map(|s| s.1 != ShootKind::HitAxisPPositive).collect();
    if fast.windows(2).any(|w| w[0] && !w[1]) {
        return Err(OracleError::NonMonotone { samples });
    }

    let sign = |c: f64| match too_fast(c) {
        Some(true) => 1.0,
        Some(false) => -1.0,
        None => f64::NAN,
    };
    let mut bracket = bisect(sign, lo, hi, c_tol).map_err(|e| bracket_error(e, lo, hi))?;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }

    let fp0 = f.fprime0();
    let kpp = 2.0 * fp0.max(0.0).sqrt();
    let shallow = monostable && fp0 > 0.0 && bracket.hi <= kpp + 2.0 * c_tol;
    if !shallow {
        // Keep halving so that the traced trajectory follows the separatrix
        // far into the linear regime before it departs.
        let tol = (1e-13 * bracket.hi).max(4.0 * f64::EPSILON * bracket.hi);
        bracket = bisect(sign, bracket.lo, bracket.hi, tol).map_err(|e| bracket_error(e, lo, hi))?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
    }
    let c = bracket.hi;
    let mu1 = departure_slope(c, f.fprime1())?;
    let trace = shooter.trace(c, EPS, !shallow, SHALLOW_FLOOR)?;
    let curve = PhaseCurve::from_knots(f, c, mu1, trace.sig, trace.r, trace.dr);
    let branch = match origin_slopes(c, fp0) {
        None => DecayBranch::Spiral,
        Some(_) if shallow => DecayBranch::Shallow,
        Some(_) => DecayBranch::Steep,
    };
    PhasePlaneSolution::from_curve(curve, branch)
}

fn bracket_error(e: BisectError, lo: f64, hi: f64) -> OracleError {
    match e {
        BisectError::NoSignChange { .. } | BisectError::InvalidBracket { .. } => OracleError::Bracket { lo, hi },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ansatz_bistable(a: f64) -> PhasePlaneSolution {
        let f = ReactionTerm::bistable_cubic(a).unwrap();
        let c = (1.0 - 2.0 * a) / 2f64.sqrt();
        let k = 1.0 / 2f64.sqrt();
        let mu1 = departure_slope(c, f.fprime1()).unwrap();
        let curve = PhaseCurve::from_closed_form(&f, c, mu1, |u| k * u * (1.0 - u), |u| k * (1.0 - 2.0 * u), 1e-6, EPS);
        PhasePlaneSolution::from_curve(curve, DecayBranch::Steep).unwrap()
    }

    #[test]
    fn fisher_speed_is_two() {
        let sol = minimal_speed(&ReactionTerm::fisher(), 1e-6).unwrap();
        assert!((sol.c - 2.0).abs() < 1e-3, "c = {}", sol.c);
        assert_eq!(sol.decay_branch, DecayBranch::Shallow);
        assert!(sol.p.iter().all(|&p| p > 0.0));
        assert!(residual(&sol) <= residual_bound(&sol));
    }

    #[test]
    fn hadeler_rothe_speed_matches_ansatz() {
        let sol = minimal_speed(&ReactionTerm::hadeler_rothe(4.0).unwrap(), 1e-6).unwrap();
        let exact = 1.5 * 2f64.sqrt();
        assert!((sol.c - exact).abs() < 1e-6, "c = {}", sol.c);
        assert_eq!(sol.decay_branch, DecayBranch::Steep);
        for (&u, &p) in sol.u_grid.iter().zip(&sol.p).step_by(97) {
            let pe = 2f64.sqrt() * u * (1.0 - u);
            assert!((p - pe).abs() < 1e-6, "u={u}: {p} vs {pe}");
        }
        assert!(residual(&sol) <= residual_bound(&sol));
    }

    #[test]
    fn bistable_speed_matches_ansatz() {
        let sol = minimal_speed(&ReactionTerm::bistable_cubic(0.3).unwrap(), 1e-6).unwrap();
        assert!((sol.c - 0.4 / 2f64.sqrt()).abs() < 1e-6, "c = {}", sol.c);
        assert_eq!(sol.decay_branch, DecayBranch::Steep);
        assert!(residual(&sol) <= residual_bound(&sol));
    }

    #[test]
    fn degenerate_and_ignition() {
        let sol = minimal_speed(&ReactionTerm::degenerate_power(2.0).unwrap(), 1e-6).unwrap();
        assert!((sol.c - 1.0 / 2f64.sqrt()).abs() < 1e-6, "c = {}", sol.c);
        assert_eq!(sol.lambda_minus, Some(0.0));
        let sol = minimal_speed(&ReactionTerm::ignition(0.2).unwrap(), 1e-6).unwrap();
        assert!(sol.c > 0.0 && sol.c < 2.0);
        assert!(residual(&sol) <= residual_bound(&sol));
    }

    #[test]
    fn ansatz_residual_is_tiny() {
        let sol = ansatz_bistable(0.3);
        assert!(residual(&sol) <= 1e-8, "{}", residual(&sol));
    }

    #[test]
    fn perturbed_trajectory_is_detected() {
        use rand::{Rng, SeedableRng};
        let mut sol = ansatz_bistable(0.3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for p in sol.p.iter_mut() {
            *p += 1e-3 * rng.gen_range(-1.0..1.0);
        }
        assert!(residual(&sol) > 1e-4);
    }

    #[test]
    fn mu1_solves_linearization() {
        let sol = minimal_speed(&ReactionTerm::hadeler_rothe(4.0).unwrap(), 1e-5).unwrap();
        let m = sol.mu1;
        assert!((m * m + sol.c * m - 5.0).abs() < 1e-12);
        assert!((m - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn rejects_loose_or_bad_input() {
        assert!(matches!(minimal_speed(&ReactionTerm::fisher(), 1e-9), Err(OracleError::InvalidTolerance(_))));
    }
}
