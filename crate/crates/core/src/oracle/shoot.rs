//! Shooting from `u = 1` along the unstable manifold.
//!
//! The phase-plane equation is integrated for `r = p/u` in `σ = ln u`:
//!
//! ```text
//! dr/dσ = c - r - F(u)/r,    F = f/u
//! ```
//!
//! which is regular down to `u = 0` and puts the origin's eigen-slopes
//! `λ± = (c ± √(c² - 4F(0)))/2` at finite fixed points. Outcomes are decided
//! by invariant regions built from the range of `F` on `(0, u]`:
//!
//! - `r > r+(F_min)` (or `c² < 4F_min`): `r` grows without bound and `p(0) > 0`;
//! - `F > 0` on `(0, u]`, `c² ≥ 4F_max`, `r < r+(F_max)`: `r` stays in a bounded
//!   positive band, so `p = r·u → 0`;
//! - `F_max ≤ 0`, `r < r+(F_max)`: `r` decreases to zero at some `u* > 0`.

use crate::numerics::{ode_solve, OdeError, StepControl, Termination, Trajectory};
use crate::reaction::ReactionTerm;

use super::OracleError;

/// Lowest `σ` reached before the trajectory is classified from its slope.
pub(crate) const SIGMA_MIN: f64 = -690.0;
const LOG_DECADES_PER_POINT: f64 = 0.05;
const LINEAR_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShootKind {
    /// Reached `u = 0` with `p(0) > 0`.
    HitAxisPPositive,
    /// `p` vanished at an interior `u* > 0`.
    HitPZeroInterior,
    /// Entered the origin.
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOutcome {
    pub kind: ShootKind,
    pub terminal_u: f64,
    pub terminal_p: f64,
}

/// Range of `F = f/u` over `(0, u]`, tabulated once per reaction term.
#[derive(Debug, Clone)]
pub(crate) struct RatioTable {
    u: Vec<f64>,
    max_pref: Vec<f64>,
    min_pref: Vec<f64>,
    positive_pref: Vec<bool>,
    margin: f64,
}

#[derive(Debug, Clone, Copy)]
struct RatioRange {
    min: f64,
    max: f64,
    positive: bool,
}

impl RatioTable {
    pub(crate) fn new(f: &ReactionTerm) -> Self {
        let mut u = Vec::new();
        let mut e = -300.0;
        while e < -2.0 {
            u.push(10f64.powf(e));
            e += LOG_DECADES_PER_POINT;
        }
        for i in 0..=LINEAR_POINTS {
            u.push(0.01 + 0.99 * i as f64 / LINEAR_POINTS as f64);
        }
        let limit = f.fprime0();
        let mut max_pref = Vec::with_capacity(u.len());
        let mut min_pref = Vec::with_capacity(u.len());
        let mut positive_pref = Vec::with_capacity(u.len());
        let (mut hi, mut lo, mut pos) = (limit, limit, true);
        let mut scale = limit.abs();
        for &x in &u {
            let v = f.f_over_u(x);
            hi = hi.max(v);
            lo = lo.min(v);
            pos &= v > 0.0;
            scale = scale.max(v.abs());
            max_pref.push(hi);
            min_pref.push(lo);
            positive_pref.push(pos);
        }
        RatioTable { u, max_pref, min_pref, positive_pref, margin: 1e-8 * scale.max(1e-3) }
    }

    fn range(&self, u: f64) -> RatioRange {
        let j = self.u.partition_point(|&x| x < u).min(self.u.len() - 1);
        RatioRange {
            min: self.min_pref[j] - self.margin,
            max: self.max_pref[j] + self.margin,
            positive: self.positive_pref[j],
        }
    }
}

fn r_plus(c: f64, big_f: f64) -> Option<f64> {
    let disc = c * c - 4.0 * big_f;
    (disc >= 0.0).then(|| 0.5 * (c + disc.sqrt()))
}

/// Eigen-slopes `(λ-, λ+)` of the origin, when real.
pub fn origin_slopes(c: f64, fprime0: f64) -> Option<(f64, f64)> {
    let disc = c * c - 4.0 * fprime0;
    (disc >= 0.0).then(|| {
        let s = disc.sqrt();
        (0.5 * (c - s), 0.5 * (c + s))
    })
}

/// Positive root of `μ² + cμ + f'(1) = 0`.
pub fn departure_slope(c: f64, fprime1: f64) -> Result<f64, OracleError> {
    if !(fprime1 < 0.0) {
        return Err(OracleError::UnsupportedDeparture(fprime1));
    }
    Ok(0.5 * (-c + (c * c - 4.0 * fprime1).sqrt()))
}

/// Per-reaction state shared by all shots of one speed search.
#[derive(Debug, Clone)]
pub(crate) struct Shooter<'a> {
    pub f: &'a ReactionTerm,
    table: RatioTable,
    fprime0: f64,
    fprime1: f64,
    ignition: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Escape,
    Connected,
    HitZero,
}

/// Knots of a traced trajectory in `σ` (decreasing).
pub(crate) struct Trace {
    pub sig: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
}

impl<'a> Shooter<'a> {
    pub(crate) fn new(f: &'a ReactionTerm) -> Result<Self, OracleError> {
        let fprime1 = f.fprime1();
        departure_slope(1.0, fprime1)?;
        Ok(Shooter {
            f,
            table: RatioTable::new(f),
            fprime0: f.fprime0(),
            fprime1,
            ignition: f.ignition_threshold(),
        })
    }

    fn rhs(&self, c: f64) -> impl Fn(f64, f64) -> f64 + '_ {
        move |s: f64, r: f64| c - r - self.f.f_over_u(s.exp()) / r
    }

    fn verdict(&self, c: f64, s: f64, r: f64) -> Option<Verdict> {
        let u = s.exp();
        let range = self.table.range(u);
        if !(r > 0.0) {
            return Some(Verdict::HitZero);
        }
        match r_plus(c, range.min) {
            None => return Some(Verdict::Escape),
            Some(rp) if r > rp => return Some(Verdict::Escape),
            _ => {}
        }
        if let Some(rp) = r_plus(c, range.max) {
            if r < rp {
                if range.positive {
                    return Some(Verdict::Connected);
                }
                if range.max <= 0.0 || self.table.max_pref_raw(u) <= 0.0 {
                    return Some(Verdict::HitZero);
                }
            }
        }
        None
    }

    fn start(&self, c: f64, eps: f64) -> Result<(f64, f64, f64), OracleError> {
        let mu1 = departure_slope(c, self.fprime1)?;
        Ok((mu1, (-eps).ln_1p(), mu1 * eps / (1.0 - eps)))
    }

    fn control(h_max: f64) -> StepControl {
        StepControl { rtol: 1e-11, atol: 1e-14, h_max, max_steps: 1_000_000, x_tol: 1e-13, ..StepControl::default() }
    }

    /// Classifies the trajectory leaving `(1, 0)` at speed `c`.
    pub(crate) fn shoot(&self, c: f64, eps: f64, p_tol: f64) -> Result<ShootOutcome, OracleError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(OracleError::InvalidSpeed(c));
        }
        if !(1e-10..=1e-4).contains(&eps) {
            return Err(OracleError::InvalidEpsilon(eps));
        }
        let (_, s0, r0) = self.start(c, eps)?;
        let ctl = Self::control(0.25);
        if let Some(a) = self.ignition {
            return Ok(self.shoot_ignition(c, s0, r0, a, p_tol, &ctl));
        }
        let run = ode_solve(self.rhs(c), s0, r0, SIGMA_MIN, &ctl, |s, r| self.verdict(c, s, r).is_some());
        let (s, r, stopped) = match run {
            Ok(t) => {
                let (s, r) = t.last();
                (s, r, t.termination == Termination::Stopped)
            }
            Err(e) => {
                let (s, r) = e.last_state();
                (s, r, false)
            }
        };
        let verdict = if stopped {
            self.verdict(c, s, r).expect("stop implies a verdict")
        } else {
            self.fallback(c, s, r)
        };
        Ok(self.terminal(c, eps, verdict, s, r))
    }

    fn fallback(&self, c: f64, s: f64, r: f64) -> Verdict {
        if let Some(v) = self.verdict(c, s, r) {
            return v;
        }
        match origin_slopes(c, self.fprime0) {
            Some((_, lp)) if r <= lp * (1.0 + 1e-9) && r > 0.0 => Verdict::Connected,
            _ if r <= 0.0 => Verdict::HitZero,
            _ => Verdict::Escape,
        }
    }

    fn shoot_ignition(&self, c: f64, s0: f64, r0: f64, a: f64, p_tol: f64, ctl: &StepControl) -> ShootOutcome {
        let sa = a.ln();
        let run = ode_solve(self.rhs(c), s0, r0, sa, ctl, |_, r| r <= 0.0);
        let (s, r) = match run {
            Ok(t) => t.last(),
            Err(e) => e.last_state(),
        };
        if s > sa + 1e-12 || r <= 0.0 {
            // Lost positivity above the threshold.
            return ShootOutcome { kind: ShootKind::HitPZeroInterior, terminal_u: s.exp(), terminal_p: 0.0 };
        }
        // Below the threshold f ≡ 0 and p is linear with slope c.
        let pa = r * a;
        let p0 = pa - c * a;
        if p0.abs() <= p_tol {
            ShootOutcome { kind: ShootKind::Connected, terminal_u: 0.0, terminal_p: p0.abs() }
        } else if p0 > 0.0 {
            ShootOutcome { kind: ShootKind::HitAxisPPositive, terminal_u: 0.0, terminal_p: p0 }
        } else {
            ShootOutcome { kind: ShootKind::HitPZeroInterior, terminal_u: a - pa / c, terminal_p: 0.0 }
        }
    }

    fn terminal(&self, c: f64, eps: f64, verdict: Verdict, s: f64, r: f64) -> ShootOutcome {
        let u = s.exp();
        let p = r * u;
        let pform = |x: f64, y: f64| c - self.f.f(x) / y;
        let ctl = StepControl { rtol: 1e-10, atol: 1e-15, x_tol: 1e-11, ..StepControl::default() };
        match verdict {
            Verdict::Escape => {
                let p0 = match ode_solve(pform, u, p, 0.0, &ctl, |_, _| false) {
                    Ok(t) => t.last().1,
                    Err(e) => e.last_state().1,
                };
                ShootOutcome { kind: ShootKind::HitAxisPPositive, terminal_u: 0.0, terminal_p: p0.max(f64::MIN_POSITIVE) }
            }
            Verdict::HitZero => {
                let p_stop = (1e-6f64).min(0.5 * p);
                let (x, y) = if p <= 0.0 {
                    (u, 0.0)
                } else {
                    match ode_solve(pform, u, p, 0.0, &ctl, |_, y| y <= p_stop) {
                        Ok(t) => t.last(),
                        Err(e) => e.last_state(),
                    }
                };
                let slope = 2.0 * (c * y - self.f.f(x));
                let u_star = if y > 0.0 && slope > 0.0 { x - y * y / slope } else { x };
                ShootOutcome { kind: ShootKind::HitPZeroInterior, terminal_u: u_star.max(0.0), terminal_p: 0.0 }
            }
            Verdict::Connected => {
                let s_eps = eps.ln();
                if s <= s_eps {
                    return ShootOutcome { kind: ShootKind::Connected, terminal_u: u, terminal_p: p };
                }
                let ctl = Self::control(0.25);
                let p_eps = match ode_solve(self.rhs(c), s, r, s_eps, &ctl, |_, _| false) {
                    Ok(t) => t.last().1 * eps,
                    Err(_) => r_plus(c, self.table.range(u).max).unwrap_or(c) * eps,
                };
                ShootOutcome { kind: ShootKind::Connected, terminal_u: eps, terminal_p: p_eps }
            }
        }
    }

    /// Trajectory knots at speed `c` for building a [`super::PhaseCurve`].
    ///
    /// `steep` traces along the fast eigen-direction and stops once the
    /// trajectory leaves it; otherwise the trace runs to `u = u_floor`.
    pub(crate) fn trace(&self, c: f64, eps: f64, steep: bool, u_floor: f64) -> Result<Trace, OracleError> {
        let (_, s0, r0) = self.start(c, eps)?;
        let ctl = Self::control(0.01);
        let lp = origin_slopes(c, self.fprime0).map(|(_, lp)| lp);
        let end = match self.ignition {
            Some(a) => a.ln(),
            None if steep => SIGMA_MIN,
            None => u_floor.ln(),
        };
        let departed = |s: f64, r: f64| -> bool {
            if r <= 0.0 {
                return true;
            }
            match (steep, lp) {
                (true, Some(lp)) => s < LINEAR_REGIME.ln() && (r - lp).abs() > 0.05 * lp,
                _ => false,
            }
        };
        let t = match ode_solve(self.rhs(c), s0, r0, end, &ctl, departed) {
            Ok(t) => t,
            Err(e) => return Err(OracleError::Integration(e)),
        };
        let mut trace = to_trace(t);
        if steep {
            if let Some(lp) = lp {
                cut_at_fast_direction(&mut trace, lp);
            }
        }
        // Drop a final point that touched p = 0.
        while trace.r.len() > 2 && *trace.r.last().unwrap() <= 0.0 {
            trace.sig.pop();
            trace.r.pop();
            trace.dr.pop();
        }
        Ok(trace)
    }
}

/// Below this `u` the steep trace is in its linear regime.
const LINEAR_REGIME: f64 = 1e-3;

impl RatioTable {
    fn max_pref_raw(&self, u: f64) -> f64 {
        let j = self.u.partition_point(|&x| x < u).min(self.u.len() - 1);
        self.max_pref[j]
    }
}

fn to_trace(t: Trajectory) -> Trace {
    Trace { sig: t.x, r: t.y, dr: t.dy }
}

/// Truncates the trace where `r` is closest to `λ+` inside the linear regime.
fn cut_at_fast_direction(trace: &mut Trace, lp: f64) {
    let s_lin = LINEAR_REGIME.ln();
    let best = trace
        .sig
        .iter()
        .zip(&trace.r)
        .enumerate()
        .filter(|(_, (&s, _))| s < s_lin)
        .min_by(|a, b| (a.1 .1 - lp).abs().total_cmp(&(b.1 .1 - lp).abs()))
        .map(|(i, _)| i);
    if let Some(i) = best {
        trace.sig.truncate(i + 1);
        trace.r.truncate(i + 1);
        trace.dr.truncate(i + 1);
    }
}

/// Convenience wrapper building a fresh [`Shooter`].
pub fn shoot(f: &ReactionTerm, c: f64, eps: f64, p_tol: f64) -> Result<ShootOutcome, OracleError> {
    Shooter::new(f)?.shoot(c, eps, p_tol)
}

impl From<OdeError> for OracleError {
    fn from(e: OdeError) -> Self {
        OracleError::Integration(e)
    }
}
