//! Bound tightening over parameterized trial families by a bounded
//! Nelder-Mead simplex.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{vp1_upper, vp2_lower, vp4_lower, BoundResult, BoundsError, Principle, TrialFunction, TrialRole};
use crate::oracle::{minimal_speed, OracleError, UnitPoint};
use crate::reaction::{ReactionError, ReactionTerm};

/// Smallest accepted evaluation budget.
pub const MIN_BUDGET: usize = 50;
const MONOTONICITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("evaluation budget {0} is below {MIN_BUDGET}")]
    Budget(usize),
    #[error("family {family} provides {role} trials, which {principle} does not take")]
    RoleMismatch { family: FamilyKind, role: TrialRole, principle: Principle },
    #[error("no admissible point found for {family} under {principle}")]
    NoAdmissiblePoint { family: FamilyKind, principle: Principle },
    #[error("invalid parameter box for {0}")]
    InvalidBox(FamilyKind),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `α = a·u(1 - b·u)`.
    PowerAlpha,
    /// `α = u(a₀ + a₁u + a₂u²)`.
    PolyAlpha,
    /// `g = ((1-u)/u)^λ`.
    PowerG,
    /// `g = u^{-λ₀}(1-u)^{λ₁}`.
    BetaG,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [FamilyKind::PowerAlpha, FamilyKind::PolyAlpha, FamilyKind::PowerG, FamilyKind::BetaG];

    pub fn role(self) -> TrialRole {
        match self {
            FamilyKind::PowerAlpha | FamilyKind::PolyAlpha => TrialRole::Alpha,
            FamilyKind::PowerG | FamilyKind::BetaG => TrialRole::G,
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::PowerAlpha => "power_alpha",
            FamilyKind::PolyAlpha => "poly_alpha",
            FamilyKind::PowerG => "power_g",
            FamilyKind::BetaG => "beta_g",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "power_alpha" => Ok(FamilyKind::PowerAlpha),
            "poly_alpha" => Ok(FamilyKind::PolyAlpha),
            "power_g" => Ok(FamilyKind::PowerG),
            "beta_g" => Ok(FamilyKind::BetaG),
            _ => Err(BoundsError::Parse(s.to_string())),
        }
    }
}

/// A family with its parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFamily {
    pub kind: FamilyKind,
    pub bounds: Vec<(f64, f64)>,
}

impl TrialFamily {
    /// Default box for `kind` under `principle`. Lower-bound boxes stop just
    /// short of the exponent at which the principle's integrals diverge.
    pub fn new(kind: FamilyKind, principle: Principle) -> Self {
        let edge = if principle == Principle::VP2 { 1.0 - 1e-6 } else { 2.0 - 1e-6 };
        let bounds = match kind {
            FamilyKind::PowerAlpha => vec![(0.05, 5.0), (0.0, 1.0)],
            FamilyKind::PolyAlpha => vec![(0.05, 5.0), (-5.0, 5.0), (-5.0, 5.0)],
            FamilyKind::PowerG => vec![(1e-3, edge)],
            FamilyKind::BetaG => vec![(0.0, edge), (0.0, 4.0)],
        };
        TrialFamily { kind, bounds }
    }

    pub fn with_box(kind: FamilyKind, bounds: Vec<(f64, f64)>) -> Result<Self, OptimizeError> {
        let dim = TrialFamily::new(kind, Principle::VP4).bounds.len();
        if bounds.len() != dim || bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(OptimizeError::InvalidBox(kind));
        }
        Ok(TrialFamily { kind, bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn trial(&self, x: &[f64]) -> TrialFunction {
        match self.kind {
            FamilyKind::PowerAlpha => TrialFunction::alpha_power(x[0], x[1]),
            FamilyKind::PolyAlpha => TrialFunction::alpha_poly(x[0], x[1], x[2]),
            FamilyKind::PowerG => TrialFunction::power_ratio(x[0]),
            FamilyKind::BetaG => TrialFunction::beta(x[0], x[1]),
        }
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Runtime admissibility screen on 64 interior points.
    pub fn admissible(&self, x: &[f64]) -> bool {
        let t = self.trial(x);
        let pts = (1..=MONOTONICITY_SAMPLES).map(|i| UnitPoint::new(i as f64 / (MONOTONICITY_SAMPLES + 1) as f64));
        match self.kind.role() {
            TrialRole::Alpha => {
                t.alpha_prime(UnitPoint::new(0.0)) > 0.0
                    && pts.into_iter().all(|q| t.alpha_over_u(q) > 0.0)
                    && t.alpha(UnitPoint::from_complement(0.0)) >= 0.0
            }
            TrialRole::G => {
                let (b0, b1) = t.exponents();
                b0 >= 0.0 && b1 >= 0.0 && b0 + b1 > 0.0 && pts.into_iter().all(|q| t.hg_reg(q) > 0.0)
            }
        }
    }

    fn center(&self) -> Vec<f64> {
        match self.kind {
            FamilyKind::PowerAlpha => vec![1.0, 0.5],
            FamilyKind::PolyAlpha => vec![1.0, 0.0, 0.0],
            FamilyKind::PowerG => vec![0.5],
            FamilyKind::BetaG => vec![0.5, 1.0],
        }
        .into_iter()
        .zip(&self.bounds)
        .map(|(v, &(lo, hi)): (f64, &(f64, f64))| v.clamp(lo, hi))
        .collect()
    }
}

fn evaluate(f: &ReactionTerm, trial: &TrialFunction, principle: Principle, rel_tol: f64) -> Result<BoundResult, BoundsError> {
    match principle {
        Principle::VP1 => vp1_upper(f, trial),
        Principle::VP2 => vp2_lower(f, trial, rel_tol),
        _ => vp4_lower(f, trial, rel_tol),
    }
}

/// Best-so-far simplex search state.
struct Search<'a> {
    f: &'a ReactionTerm,
    family: &'a TrialFamily,
    principle: Principle,
    rel_tol: f64,
    sign: f64,
    penalty: f64,
    evaluations: usize,
    budget: usize,
    best: Option<(Vec<f64>, BoundResult)>,
}

impl Search<'_> {
    /// Objective to minimize: `value` for upper bounds, `-value` for lower.
    fn objective(&mut self, x: &[f64]) -> f64 {
        self.objectives(&[x.to_vec()])[0]
    }

    fn objectives(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        let take = xs.len().min(self.budget.saturating_sub(self.evaluations));
        self.evaluations += take;
        let results: Vec<Option<(&Vec<f64>, BoundResult)>> = xs[..take]
            .par_iter()
            .map(|x| {
                if !self.family.admissible(x) {
                    return None;
                }
                evaluate(self.f, &self.family.trial(x), self.principle, self.rel_tol).ok().map(|b| (x, b))
            })
            .collect();
        let mut out = Vec::with_capacity(xs.len());
        for r in results {
            match r {
                Some((x, b)) if b.value.is_finite() => {
                    let obj = self.sign * b.value;
                    if self.best.as_ref().is_none_or(|(_, cur)| obj < self.sign * cur.value) {
                        self.best = Some((x.clone(), b));
                    }
                    out.push(obj);
                }
                _ => out.push(self.penalty),
            }
        }
        out.resize(xs.len(), f64::INFINITY);
        out
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    /// One Nelder-Mead run from `start`, projecting every trial point onto
    /// the box.
    fn run(&mut self, start: &[f64]) {
        let n = start.len();
        let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
        for i in 0..n {
            let (lo, hi) = self.family.bounds[i];
            let step = 0.25 * (hi - lo);
            let mut v = start.to_vec();
            v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
            simplex.push(v);
        }
        let mut vals = self.objectives(&simplex);
        while !self.exhausted() {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let spread = (vals[n] - vals[0]).abs();
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread <= 1e-12 * vals[0].abs().max(1.0) && size <= 1e-9 {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect();
                self.family.clamp(&mut p);
                p
            };
            let xr = along(-1.0);
            let fr = self.objective(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = self.objective(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let x = along(-0.5);
                    let v = self.objective(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = self.objective(&x);
                    (x, v)
                };
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    let best = simplex[0].clone();
                    let shrunk: Vec<Vec<f64>> = simplex[1..]
                        .iter()
                        .map(|v| v.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect())
                        .collect();
                    let sv = self.objectives(&shrunk);
                    for (k, (v, s)) in shrunk.into_iter().zip(sv).enumerate() {
                        simplex[k + 1] = v;
                        vals[k + 1] = s;
                    }
                }
            }
        }
    }
}

/// Best bound of `principle` over `family` within `budget` evaluations.
pub fn optimize_bound(
    f: &ReactionTerm,
    family: &TrialFamily,
    principle: Principle,
    budget: usize,
    rel_tol: f64,
) -> Result<BoundResult, OptimizeError> {
    if budget < MIN_BUDGET {
        return Err(OptimizeError::Budget(budget));
    }
    let role = family.kind.role();
    let wanted = if principle == Principle::VP1 { TrialRole::Alpha } else { TrialRole::G };
    if role != wanted || !matches!(principle, Principle::VP1 | Principle::VP2 | Principle::VP4) {
        return Err(OptimizeError::RoleMismatch { family: family.kind, role, principle });
    }
    let scale = f.aw_upper().unwrap_or_else(|_| 2.0 * f.sup_ratio().max(1e-12).sqrt());
    let sign = if principle == Principle::VP1 { 1.0 } else { -1.0 };
    let mut search = Search {
        f,
        family,
        principle,
        rel_tol,
        sign,
        penalty: 10.0 * scale,
        evaluations: 0,
        budget,
        best: None,
    };
    let start = family.center();
    let first = budget / 2;
    search.budget = first;
    search.run(&start);
    // Restart once from the best vertex found.
    search.budget = budget;
    let restart = search.best.as_ref().map_or(start, |(x, _)| x.clone());
    search.run(&restart);
    search.best.map(|(_, b)| b).ok_or(OptimizeError::NoAdmissiblePoint { family: family.kind, principle })
}

/// The tightest bounds over all compatible families, next to the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGap {
    pub reaction: String,
    pub oracle_c: f64,
    pub best_upper: Option<BoundResult>,
    pub best_lower: BoundResult,
    pub gap: Option<f64>,
}

/// Runs every compatible (family, principle) pair and keeps the best of each
/// direction.
pub fn bound_gap(f: &ReactionTerm, budget: usize, c_tol: f64, rel_tol: f64) -> Result<BoundGap, OptimizeError> {
    let sol = minimal_speed(f, c_tol)?;
    let monostable = f.classify(200)?.tag.is_monostable();
    let mut jobs: Vec<(FamilyKind, Principle)> = Vec::new();
    if monostable {
        jobs.extend([
            (FamilyKind::PowerAlpha, Principle::VP1),
            (FamilyKind::PolyAlpha, Principle::VP1),
            (FamilyKind::PowerG, Principle::VP2),
            (FamilyKind::BetaG, Principle::VP2),
        ]);
    }
    jobs.extend([(FamilyKind::PowerG, Principle::VP4), (FamilyKind::BetaG, Principle::VP4)]);
    let results: Vec<Result<BoundResult, OptimizeError>> = jobs
        .par_iter()
        .map(|&(kind, principle)| optimize_bound(f, &TrialFamily::new(kind, principle), principle, budget, rel_tol))
        .collect();
    let mut best_upper: Option<BoundResult> = None;
    let mut best_lower: Option<BoundResult> = None;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(b) if b.direction == crate::bounds::Direction::Upper => {
                if best_upper.as_ref().is_none_or(|u| b.value < u.value) {
                    best_upper = Some(b);
                }
            }
            Ok(b) => {
                if best_lower.as_ref().is_none_or(|l| b.value > l.value) {
                    best_lower = Some(b);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let best_lower = match (best_lower, first_error) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => {
            return Err(OptimizeError::NoAdmissiblePoint { family: FamilyKind::PowerG, principle: Principle::VP4 })
        }
    };
    let gap = best_upper.as_ref().map(|u| u.value - best_lower.value);
    Ok(BoundGap { reaction: f.name().to_string(), oracle_c: sol.c, best_upper, best_lower, gap })
}


#[cfg(test)]
mod gap_tests {
    use super::*;

    #[test]
    fn hadeler_gap_brackets_oracle() {
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let g = bound_gap(&f, 200, 1e-6, 1e-10).unwrap();
        let up = g.best_upper.as_ref().unwrap();
        assert!(up.value >= g.oracle_c - 1e-6 && g.best_lower.value <= g.oracle_c + 1e-6);
        assert!(g.gap.unwrap() <= 0.02, "{g:?}");
    }

    #[test]
    fn bistable_uses_lower_bound_only() {
        let f = ReactionTerm::bistable_cubic(0.3).unwrap();
        let g = bound_gap(&f, 120, 1e-6, 1e-10).unwrap();
        assert!(g.best_upper.is_none() && g.gap.is_none());
        assert_eq!(g.best_lower.principle, Principle::VP4);
        assert!(g.best_lower.value <= g.oracle_c + 1e-6);
        assert!(g.best_lower.value > 0.2, "{}", g.best_lower.value);
    }
}
