//! Numerical checks of the equivalences between the bounds and of the
//! change-of-variables identities at the optimum, collected into a report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    aw_bound, optimal_trial, profile_integrals, vp1_upper, vp2_lower, vp4_lower, vp4s_value, zfk_bound, BoundResult,
    BoundsError, Direction, PartIntegrals, SForm, TrialFunction, TrialImage, TrialRole,
};
use crate::oracle::{front_profile, minimal_speed, DecayBranch, FrontProfile, OracleError, PhasePlaneSolution};
use crate::reaction::{ReactionError, ReactionTerm};

/// Relative tolerance of the identities at the optimum.
pub const IDENTITY_TOL: f64 = 1e-4;
/// Relative tolerance of integration-by-parts equalities.
pub const PARTS_TOL: f64 = 1e-8;
/// Tolerance of `X_c` against 1.
pub const RATIO_TOL: f64 = 1e-3;
/// Relative tolerance of the u-form against the s-form.
pub const SFORM_TOL: f64 = 1e-6;
/// Profile truncation used for the weighted integrals.
pub const PROFILE_DELTA: f64 = 1e-8;
const PHASE_GRID: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("the trial `{trial}` has g(1) = {value}; this step integrates by parts and needs g(1) = 0")]
    NeedsZeroAtOne { trial: String, value: f64 },
    #[error("`{0}` is not a g trial")]
    NotG(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

/// A named intermediate value of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub status: CheckStatus,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    fn new(id: impl Into<String>, relation: Relation, lhs: f64, rhs: f64, tol: f64) -> Self {
        let ok = match relation {
            Relation::Le => rhs - lhs >= -tol,
            Relation::Ge => lhs - rhs >= -tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        };
        let status = if !(lhs.is_finite() && rhs.is_finite()) {
            CheckStatus::Inconclusive
        } else if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), lhs, rhs, tol, status, relation, terms: Vec::new(), note: None }
    }

    fn skipped(id: impl Into<String>, status: CheckStatus, note: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            tol: 0.0,
            status,
            relation: Relation::Eq,
            terms: Vec::new(),
            note: Some(note.into()),
        }
    }

    fn with_terms(mut self, terms: &[(&str, f64)]) -> Self {
        self.terms = terms.iter().map(|&(n, v)| Term { name: n.into(), value: v }).collect();
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Downgrades to `Fail` when any sub-condition failed.
    fn require(mut self, ok: bool, what: &str) -> Self {
        if !ok && self.status == CheckStatus::Pass {
            self.status = CheckStatus::Fail;
            self.note = Some(what.into());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

fn rel_tol_for(values: &[f64], rel: f64) -> f64 {
    rel * values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// The three members of the chain through `∫(αh + fg/α)/∫g`.
struct Chain {
    lower: f64,
    middle: f64,
    middle_parts: f64,
    sup: f64,
    alpha_h: f64,
    alpha_prime_g: f64,
    boundary: f64,
}

fn chain(f: &ReactionTerm, g: &TrialFunction, alpha: &TrialFunction, rel_tol: f64) -> Result<Chain, VerifyError> {
    let lower = vp2_lower(f, g, rel_tol)?.value;
    let sup = vp1_upper(f, alpha)?.value;
    let parts = PartIntegrals::new(f, g, rel_tol)?;
    let int_g = parts.g()?.0;
    let alpha_h = parts.alpha_h(alpha)?.0;
    let alpha_prime_g = parts.alpha_prime_g(alpha)?.0;
    let f_alpha = parts.f_over_alpha_g(alpha)?.0;
    let top = crate::oracle::UnitPoint::from_complement(0.0);
    Ok(Chain {
        lower,
        middle: (alpha_h + f_alpha) / int_g,
        middle_parts: (alpha_prime_g + f_alpha) / int_g,
        sup,
        alpha_h,
        alpha_prime_g,
        boundary: alpha.alpha(top) * g.g_at_one(),
    })
}

/// `2∫√(fgh)/∫g ≤ ∫(αh + fg/α)/∫g ≤ sup(α' + f/α)`.
pub fn check_chain_vp2_implies_vp1(
    f: &ReactionTerm,
    g: &TrialFunction,
    alpha: &TrialFunction,
    rel_tol: f64,
) -> Result<CheckRecord, VerifyError> {
    let c = chain(f, g, alpha, rel_tol)?;
    let tol = rel_tol_for(&[c.lower, c.middle, c.sup], rel_tol.max(1e-10));
    let terms = [
        ("vp2", c.lower),
        ("middle", c.middle),
        ("middle_by_parts", c.middle_parts),
        ("vp1", c.sup),
        ("int_alpha_h", c.alpha_h),
        ("int_alpha_prime_g", c.alpha_prime_g),
    ];
    let id = format!("chain_vp2_implies_vp1[{g}; {alpha}]");
    let rec = CheckRecord::new(id, Relation::Le, c.lower, c.sup, tol).with_terms(&terms);
    let rec = rec.require(c.middle - c.lower >= -tol, "first step violated");
    if c.boundary == 0.0 {
        let ok = close(c.alpha_h, c.alpha_prime_g, PARTS_TOL) && c.sup - c.middle >= -tol;
        Ok(rec.require(ok, "integration by parts or second step violated"))
    } else {
        // ∫αh = ∫α'g - α(1)g(1) ≤ ∫α'g.
        let ok = c.alpha_h <= c.alpha_prime_g + tol && c.sup - c.middle_parts >= -tol;
        Ok(rec
            .require(ok, "boundary-term inequality or second step violated")
            .with_note(format!("g(1) != 0: boundary term {} enters as an inequality", c.boundary)))
    }
}

/// `sup(α' + f/α) ≥ ∫(α' + f/α)g/∫g ≥ 2∫√(fgh)/∫g`, for `g(1) = 0`.
pub fn check_chain_vp1_implies_vp2(
    f: &ReactionTerm,
    alpha: &TrialFunction,
    g: &TrialFunction,
    rel_tol: f64,
) -> Result<CheckRecord, VerifyError> {
    let g1 = g.g_at_one();
    if g1 != 0.0 {
        return Err(VerifyError::NeedsZeroAtOne { trial: g.to_string(), value: g1 });
    }
    let c = chain(f, g, alpha, rel_tol)?;
    let tol = rel_tol_for(&[c.lower, c.middle, c.sup], rel_tol.max(1e-10));
    let terms = [("vp1", c.sup), ("middle", c.middle_parts), ("vp2", c.lower)];
    let ok = c.sup - c.middle_parts >= -tol
        && c.middle_parts - c.lower >= -tol
        && close(c.alpha_h, c.alpha_prime_g, PARTS_TOL);
    Ok(CheckRecord::new(format!("chain_vp1_implies_vp2[{alpha}; {g}]"), Relation::Ge, c.sup, c.lower, tol)
        .with_terms(&terms)
        .require(ok, "intermediate step violated"))
}

fn identity_trial(sol: &PhasePlaneSolution, id: &str) -> Result<TrialFunction, CheckRecord> {
    if sol.decay_branch != DecayBranch::Steep {
        return Err(CheckRecord::skipped(
            id,
            CheckStatus::NotApplicable,
            format!("decay branch is {}; the optimal g does not exist", sol.decay_branch),
        ));
    }
    optimal_trial(sol).map_err(|e| CheckRecord::skipped(id, CheckStatus::Inconclusive, e.to_string()))
}

fn weighted(f: &ReactionTerm, profile: &FrontProfile, c: f64, id: &str) -> Result<crate::bounds::ProfileIntegrals, CheckRecord> {
    match profile_integrals(f, profile, c) {
        Ok(p) if p.flagged() => Err(CheckRecord::skipped(
            id,
            CheckStatus::Inconclusive,
            format!("tail share {} exceeds the flag threshold", p.tail_share),
        )),
        Ok(p) => Ok(p),
        Err(e) => Err(CheckRecord::skipped(id, CheckStatus::Inconclusive, e.to_string())),
    }
}

/// `∫ĝ²/ĥ du = (1/c)∫e^{cz}u_z² dz` in the gauge `ĝ(u(0)) = 1`.
pub fn check_identity_down(f: &ReactionTerm, sol: &PhasePlaneSolution, profile: &FrontProfile, rel_tol: f64) -> CheckRecord {
    const ID: &str = "identity_down";
    let g = match identity_trial(sol, ID) {
        Ok(g) => g,
        Err(rec) => return rec,
    };
    let lhs = match PartIntegrals::new(f, &g, rel_tol).and_then(|p| p.g2_over_h()) {
        Ok(v) => v.0,
        Err(e) => return CheckRecord::skipped(ID, CheckStatus::Inconclusive, e.to_string()),
    };
    let w = match weighted(f, profile, sol.c, ID) {
        Ok(w) => w,
        Err(rec) => return rec,
    };
    let rhs = 2.0 * w.kinetic / sol.c;
    CheckRecord::new(ID, Relation::Eq, lhs, rhs, IDENTITY_TOL * rhs.abs()).with_terms(&[("tail_share", w.tail_share)])
}

/// `∫fĝ du = c∫e^{cz}V dz`, with `∫Vĥ du = ∫fĝ du` on the way.
pub fn check_identity_up(f: &ReactionTerm, sol: &PhasePlaneSolution, profile: &FrontProfile, rel_tol: f64) -> CheckRecord {
    const ID: &str = "identity_up";
    let g = match identity_trial(sol, ID) {
        Ok(g) => g,
        Err(rec) => return rec,
    };
    let parts = PartIntegrals::new(f, &g, rel_tol).and_then(|p| Ok((p.fg()?.0, p.potential_h()?.0)));
    let (fg, vh) = match parts {
        Ok(v) => v,
        Err(e) => return CheckRecord::skipped(ID, CheckStatus::Inconclusive, e.to_string()),
    };
    let w = match weighted(f, profile, sol.c, ID) {
        Ok(w) => w,
        Err(rec) => return rec,
    };
    let rhs = sol.c * w.potential;
    CheckRecord::new(ID, Relation::Eq, fg, rhs, IDENTITY_TOL * rhs.abs())
        .with_terms(&[("int_v_h", vh), ("tail_share", w.tail_share)])
        .require(close(vh, fg, PARTS_TOL), "integration by parts of the potential term violated")
}

/// Speeds below `c₀` at which the weighted ratio is compared against 1:
/// `n` points in `(c_KPP, c₀)` when `f'(0) > 0`, in `(c₀/2, c₀)` when
/// `f'(0) = 0`, none for terms that are not monostable.
pub fn phase_grid(f: &ReactionTerm, c0: f64, n: usize) -> Vec<f64> {
    let monostable = f.classify(200).is_ok_and(|c| c.tag.is_monostable());
    let lo = match lower_speed(f) {
        Some(lo) if monostable && lo > 0.0 => lo,
        Some(_) if monostable => 0.5 * c0,
        _ => return Vec::new(),
    };
    if !(lo < c0) {
        return Vec::new();
    }
    (1..=n).map(|k| lo + (c0 - lo) * k as f64 / (n + 1) as f64).collect()
}

/// Lower end of the range where `X_c ≥ 1` is expected.
fn lower_speed(f: &ReactionTerm) -> Option<f64> {
    let d = f.fprime0();
    if d > 0.0 {
        Some(2.0 * d.sqrt())
    } else if d == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// `X_{c₀} = 1` and `X_c ≥ 1` for each `c` in `c_list`, on the minimal
/// profile.
pub fn check_phasespace_relation(
    f: &ReactionTerm,
    sol: &PhasePlaneSolution,
    profile: &FrontProfile,
    c_list: &[f64],
) -> Vec<CheckRecord> {
    let mut out = Vec::with_capacity(c_list.len() + 1);
    let at_c0 = "phasespace_x_at_c0";
    if sol.decay_branch != DecayBranch::Steep {
        let note = format!("decay branch is {}; the weight e^(cz) is not integrable on the profile", sol.decay_branch);
        out.push(CheckRecord::skipped(at_c0, CheckStatus::NotApplicable, note));
        return out;
    }
    match weighted(f, profile, sol.c, at_c0) {
        Ok(w) => out.push(
            CheckRecord::new(at_c0, Relation::Eq, w.ratio(), 1.0, RATIO_TOL)
                .with_terms(&[("phi", w.phi()), ("c", sol.c)])
                .require(w.phi().abs() <= RATIO_TOL * w.kinetic, "functional does not vanish"),
        ),
        Err(rec) => out.push(rec),
    }
    let lo = lower_speed(f).unwrap_or(f64::INFINITY);
    for &c in c_list {
        let id = format!("phasespace_x_ge_1[c={}]", crate::numerics::fmt12(c));
        if (c - sol.c).abs() <= 1e-12 * sol.c {
            continue;
        }
        if !(c > lo && c < sol.c) {
            out.push(CheckRecord::skipped(id, CheckStatus::NotApplicable, format!("c outside ({lo}, {})", sol.c)));
            continue;
        }
        match weighted(f, profile, c, &id) {
            Ok(w) => out.push(CheckRecord::new(id, Relation::Ge, w.ratio(), 1.0, RATIO_TOL).with_terms(&[("c", c)])),
            Err(rec) => out.push(rec),
        }
    }
    out
}

/// `vp4s_value(u(s)) = vp4_lower(g)²` with `s = 1/g`.
pub fn check_vp4_vp4s_consistency(f: &ReactionTerm, g: &TrialFunction, form: SForm, rel_tol: f64) -> Result<CheckRecord, VerifyError> {
    if g.role() != TrialRole::G {
        return Err(VerifyError::NotG(g.to_string()));
    }
    let g1 = g.g_at_one();
    if g1 != 0.0 {
        return Err(VerifyError::NeedsZeroAtOne { trial: g.to_string(), value: g1 });
    }
    let id = match form {
        SForm::Corrected => format!("vp4_vs_vp4s[{g}]"),
        SForm::Printed => format!("vp4_vs_vp4s_printed[{g}]"),
    };
    let s_side = TrialImage::new(g).and_then(|img| vp4s_value(f, &img, form, rel_tol));
    let u_side = vp4_lower(f, g, rel_tol);
    Ok(match (s_side, u_side) {
        (Ok(s), Ok(u)) => {
            let u2 = u.squared.unwrap_or(u.value * u.value);
            CheckRecord::new(id, Relation::Eq, s, u2, SFORM_TOL * u2.abs()).with_terms(&[("ratio", s / u2)])
        }
        (Err(e), _) | (_, Err(e)) => CheckRecord::skipped(id, CheckStatus::Inconclusive, e.to_string()),
    })
}

/// Tolerances of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub c_tol: f64,
    pub quad_rel_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { c_tol: 1e-6, quad_rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub c0: f64,
    pub branch: DecayBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub reaction: String,
    pub oracle: OracleSummary,
    pub bounds: Vec<BoundResult>,
    pub checks: Vec<CheckRecord>,
    /// No check failed and none was inconclusive.
    pub pass: bool,
}

impl Report {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn default_g_trials(sol: &PhasePlaneSolution) -> Vec<TrialFunction> {
    let mut v = vec![TrialFunction::one_minus_pow(1.0), TrialFunction::power_ratio(0.5)];
    if sol.decay_branch == DecayBranch::Steep {
        if let Ok(g) = optimal_trial(sol) {
            v.push(g);
        }
    }
    v
}

fn bracket_record(b: &BoundResult, c0: f64, c_tol: f64) -> CheckRecord {
    let id = format!("bracket_{}[{}]", b.principle, b.trial);
    let slack = 2.0 * c_tol + b.quad_error;
    match b.direction {
        Direction::Lower => CheckRecord::new(id, Relation::Le, b.value, c0, slack),
        Direction::Upper => CheckRecord::new(id, Relation::Ge, b.value, c0, slack),
    }
}

type Job<'a> = Box<dyn Fn() -> Vec<CheckRecord> + Send + Sync + 'a>;

/// Oracle, default bounds and every applicable check for `f`.
pub fn full_report(f: &ReactionTerm, opts: ReportOptions) -> Result<Report, VerifyError> {
    let sol = minimal_speed(f, opts.c_tol)?;
    let c0 = sol.c;
    let tol = opts.quad_rel_tol;
    let monostable = f.classify(200)?.tag.is_monostable();
    let g_trials = default_g_trials(&sol);
    let profile = front_profile(&sol, PROFILE_DELTA);

    let mut bounds = Vec::new();
    let mut push = |r: Result<BoundResult, BoundsError>| {
        if let Ok(b) = r {
            bounds.push(b);
        }
    };
    if monostable {
        push(aw_bound(f));
        push(zfk_bound(f));
        push(vp1_upper(f, &TrialFunction::alpha_power(1.0, 0.0)));
        push(vp1_upper(f, &TrialFunction::alpha_phase(&sol)));
        for g in &g_trials {
            push(vp2_lower(f, g, tol));
        }
    }
    for g in &g_trials {
        push(vp4_lower(f, g, tol));
    }

    let err_record = |id: &str, e: VerifyError| CheckRecord::skipped(id, CheckStatus::Inconclusive, e.to_string());
    let mut jobs: Vec<Job> = Vec::new();
    if monostable {
        jobs.push(Box::new(|| {
            let pairs = [
                (TrialFunction::one_minus_pow(1.0), TrialFunction::alpha_power(1.0, 0.0)),
                (TrialFunction::one_minus_pow(2.0), TrialFunction::alpha_power(1.0, 1.0)),
            ];
            let mut out = Vec::new();
            for (g, a) in &pairs {
                out.push(check_chain_vp2_implies_vp1(f, g, a, tol).unwrap_or_else(|e| err_record("chain_vp2_implies_vp1", e)));
                out.push(check_chain_vp1_implies_vp2(f, a, g, tol).unwrap_or_else(|e| err_record("chain_vp1_implies_vp2", e)));
            }
            if sol.decay_branch != DecayBranch::Steep {
                let note = "balanced g is not integrable off the steep branch";
                out.push(CheckRecord::skipped("chain_vp2_implies_vp1[balanced]", CheckStatus::NotApplicable, note));
            } else if let Ok(g) = TrialFunction::balanced(&sol) {
                let a = TrialFunction::alpha_phase(&sol);
                out.push(check_chain_vp2_implies_vp1(f, &g, &a, tol).unwrap_or_else(|e| err_record("chain_vp2_implies_vp1", e)));
            }
            out
        }));
    } else {
        jobs.push(Box::new(|| {
            vec![CheckRecord::skipped("chain_vp2_vp1", CheckStatus::NotApplicable, "reaction term is not monostable")]
        }));
    }
    let profile = &profile;
    let sol_ref = &sol;
    jobs.push(Box::new(move || match profile {
        Ok(p) => vec![check_identity_down(f, sol_ref, p, tol), check_identity_up(f, sol_ref, p, tol)],
        Err(e) => vec![err_record("identity", e.clone().into())],
    }));
    jobs.push(Box::new(move || match profile {
        Ok(p) => check_phasespace_relation(f, sol_ref, p, &phase_grid(f, c0, PHASE_GRID)),
        Err(e) => vec![err_record("phasespace", e.clone().into())],
    }));
    let g_ref = &g_trials;
    jobs.push(Box::new(move || {
        g_ref
            .iter()
            .map(|g| check_vp4_vp4s_consistency(f, g, SForm::Corrected, tol).unwrap_or_else(|e| err_record("vp4_vs_vp4s", e)))
            .collect()
    }));

    let mut checks: Vec<CheckRecord> = bounds.iter().map(|b| bracket_record(b, c0, opts.c_tol)).collect();
    let results: Vec<Vec<CheckRecord>> = jobs.par_iter().map(|job| job()).collect();
    checks.extend(results.into_iter().flatten());
    let pass = checks.iter().all(|c| matches!(c.status, CheckStatus::Pass | CheckStatus::NotApplicable));
    Ok(Report {
        reaction: f.name().to_string(),
        oracle: OracleSummary { c0, branch: sol.decay_branch },
        bounds,
        checks,
        pass,
    })
}
