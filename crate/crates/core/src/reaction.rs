//! Reaction terms `f(u)` on `[0, 1]`, their classification, and the closed-form
//! speed functionals built from them (linear KPP speed, ZFK speed and the
//! Aronson-Weinberger upper bound).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{golden_max, integrate, Endpoints, QuadratureError};

/// Tolerance for `f(0) = f(1) = 0`.
pub const ENDPOINT_TOL: f64 = 1e-12;
/// Step for centered-difference derivatives of piecewise terms.
pub const FD_STEP: f64 = 1e-6;
const SUP_GRID: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReactionError {
    #[error("empty reaction spec")]
    EmptySpec,
    #[error("unknown builtin reaction `{0}`")]
    UnknownBuiltin(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("parameter {name} = {value} out of range ({expected})")]
    ParameterOutOfRange { name: String, value: f64, expected: &'static str },
    #[error("f({at}) = {value:e} but must vanish")]
    EndpointNotZero { at: f64, value: f64 },
    #[error("invalid piecewise segments: {0}")]
    InvalidSegments(String),
    #[error("reaction `{name}` is unclassifiable: {reason}")]
    Unclassifiable { name: String, reason: String },
    #[error("f'(0) = {0} < 0: no linear spreading speed")]
    NegativeSlope(f64),
    #[error("integral of f is {0} <= 0")]
    NonPositiveIntegral(f64),
    #[error("reaction `{0}` is not monostable")]
    NotMonostable(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("cannot parse reaction `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Fisher,
    HadelerRothe { nu: f64 },
    BistableCubic { a: f64 },
    Ignition { a: f64 },
    DegeneratePower { m: f64 },
}

/// One polynomial piece `Σ c_k u^k` (powers from 0) on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Builtin(Builtin),
    /// `f = Σ c_i u^i`, `i = 1..=n`.
    Polynomial(Vec<f64>),
    Piecewise(Vec<Segment>),
}

/// An evaluable nonlinearity `f` on `[0, 1]` with `f(0) = f(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionTerm {
    kind: Kind,
    scale: f64,
    name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    MonostableKpp,
    MonostableGeneral,
    MonostableDegenerate,
    Bistable,
    Combustion,
}

impl ClassTag {
    pub fn is_monostable(self) -> bool {
        matches!(
            self,
            ClassTag::MonostableKpp | ClassTag::MonostableGeneral | ClassTag::MonostableDegenerate
        )
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassTag::MonostableKpp => "monostable_kpp",
            ClassTag::MonostableGeneral => "monostable_general",
            ClassTag::MonostableDegenerate => "monostable_degenerate",
            ClassTag::Bistable => "bistable",
            ClassTag::Combustion => "combustion",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionClass {
    pub tag: ClassTag,
    pub fprime0: f64,
    /// Sign-change point `a` for bistable and combustion terms.
    pub sign_change: Option<f64>,
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn check_unit(name: &str, value: f64) -> Result<f64, ReactionError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(ReactionError::ParameterOutOfRange { name: name.into(), value, expected: "0 < a < 1" })
    }
}

impl ReactionTerm {
    pub fn fisher() -> Self {
        Self::builtin(Builtin::Fisher).expect("fisher is valid")
    }

    pub fn hadeler_rothe(nu: f64) -> Result<Self, ReactionError> {
        Self::builtin(Builtin::HadelerRothe { nu })
    }

    pub fn bistable_cubic(a: f64) -> Result<Self, ReactionError> {
        Self::builtin(Builtin::BistableCubic { a })
    }

    pub fn ignition(a: f64) -> Result<Self, ReactionError> {
        Self::builtin(Builtin::Ignition { a })
    }

    pub fn degenerate_power(m: f64) -> Result<Self, ReactionError> {
        Self::builtin(Builtin::DegeneratePower { m })
    }

    pub fn builtin(b: Builtin) -> Result<Self, ReactionError> {
        let name = match b {
            Builtin::Fisher => "fisher".to_string(),
            Builtin::HadelerRothe { nu } => {
                if !(nu.is_finite() && nu > -1.0) {
                    return Err(ReactionError::ParameterOutOfRange {
                        name: "nu".into(),
                        value: nu,
                        expected: "nu > -1",
                    });
                }
                format!("hadeler_rothe(nu={nu})")
            }
            Builtin::BistableCubic { a } => format!("bistable_cubic(a={})", check_unit("a", a)?),
            Builtin::Ignition { a } => format!("ignition(a={})", check_unit("a", a)?),
            Builtin::DegeneratePower { m } => {
                if !(m.is_finite() && m >= 2.0) {
                    return Err(ReactionError::ParameterOutOfRange {
                        name: "m".into(),
                        value: m,
                        expected: "m >= 2",
                    });
                }
                format!("degenerate_power(m={m})")
            }
        };
        Self::validated(ReactionTerm { kind: Kind::Builtin(b), scale: 1.0, name })
    }

    /// `f = Σ c_i u^i` with `coefficients = [c_1, ..., c_n]`.
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self, ReactionError> {
        if coefficients.is_empty() {
            return Err(ReactionError::EmptySpec);
        }
        let name = format!("polynomial{coefficients:?}");
        Self::validated(ReactionTerm { kind: Kind::Polynomial(coefficients), scale: 1.0, name })
    }

    /// Contiguous polynomial pieces covering `[0, 1]`; `f` must be continuous.
    pub fn piecewise(mut segments: Vec<Segment>) -> Result<Self, ReactionError> {
        if segments.is_empty() {
            return Err(ReactionError::EmptySpec);
        }
        segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if segments[0].lo != 0.0 || segments.last().unwrap().hi != 1.0 {
            return Err(ReactionError::InvalidSegments("segments must cover [0, 1]".into()));
        }
        for s in &segments {
            if !(s.lo < s.hi) || s.coefficients.is_empty() {
                return Err(ReactionError::InvalidSegments(format!("bad segment [{}, {}]", s.lo, s.hi)));
            }
        }
        for w in segments.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(ReactionError::InvalidSegments(format!("gap or overlap at {}", w[0].hi)));
            }
            let jump = horner(&w[0].coefficients, w[0].hi) - horner(&w[1].coefficients, w[1].lo);
            if jump.abs() > 1e-9 {
                return Err(ReactionError::InvalidSegments(format!("discontinuity of {jump:e} at {}", w[0].hi)));
            }
        }
        Self::validated(ReactionTerm { kind: Kind::Piecewise(segments), scale: 1.0, name: "piecewise".into() })
    }

    fn validated(term: Self) -> Result<Self, ReactionError> {
        for at in [0.0, 1.0] {
            let value = term.f(at);
            if !(value.abs() <= ENDPOINT_TOL) {
                return Err(ReactionError::EndpointNotZero { at, value });
            }
        }
        Ok(term)
    }

    /// `κ·f`. Both speed functionals and the minimal speed scale by `√κ`.
    pub fn scaled(&self, kappa: f64) -> Self {
        let name = if self.scale * kappa == 1.0 {
            self.base_name().to_string()
        } else {
            format!("{}*{}", self.scale * kappa, self.base_name())
        };
        ReactionTerm { kind: self.kind.clone(), scale: self.scale * kappa, name }
    }

    fn base_name(&self) -> &str {
        match self.name.split_once('*') {
            Some((_, rest)) if self.scale != 1.0 => rest,
            _ => &self.name,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn builtin_kind(&self) -> Option<Builtin> {
        match self.kind {
            Kind::Builtin(b) => Some(b),
            _ => None,
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        self.scale * self.raw_f(u)
    }

    fn raw_f(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Builtin(b) => match *b {
                Builtin::Fisher => u * (1.0 - u),
                Builtin::HadelerRothe { nu } => u * (1.0 - u) * (1.0 + nu * u),
                Builtin::BistableCubic { a } => u * (1.0 - u) * (u - a),
                Builtin::Ignition { a } => {
                    if u <= a {
                        0.0
                    } else {
                        (u - a) * (1.0 - u)
                    }
                }
                Builtin::DegeneratePower { m } => u.powf(m) * (1.0 - u),
            },
            Kind::Polynomial(c) => u * horner(c, u),
            Kind::Piecewise(segs) => horner(&segs[segment_index(segs, u)].coefficients, u),
        }
    }

    /// Derivative: analytic for builtins and polynomials, centered difference
    /// (one-sided at breakpoints) for piecewise terms.
    pub fn fprime(&self, u: f64) -> f64 {
        let raw = match &self.kind {
            Kind::Builtin(b) => match *b {
                Builtin::Fisher => 1.0 - 2.0 * u,
                Builtin::HadelerRothe { nu } => 1.0 + 2.0 * (nu - 1.0) * u - 3.0 * nu * u * u,
                Builtin::BistableCubic { a } => -a + 2.0 * (1.0 + a) * u - 3.0 * u * u,
                Builtin::Ignition { a } => {
                    if u < a {
                        0.0
                    } else {
                        1.0 + a - 2.0 * u
                    }
                }
                Builtin::DegeneratePower { m } => {
                    if u == 0.0 {
                        0.0
                    } else {
                        m * u.powf(m - 1.0) - (m + 1.0) * u.powf(m)
                    }
                }
            },
            Kind::Polynomial(c) => c.iter().enumerate().map(|(i, ci)| (i + 1) as f64 * ci * u.powi(i as i32)).sum(),
            Kind::Piecewise(segs) => {
                let h = FD_STEP;
                let i = segment_index(segs, u);
                let (lo, hi) = (segs[i].lo, segs[i].hi);
                if u - h < lo {
                    (self.raw_f(u + h) - self.raw_f(u)) / h
                } else if u + h > hi {
                    (self.raw_f(u) - self.raw_f(u - h)) / h
                } else {
                    (self.raw_f(u + h) - self.raw_f(u - h)) / (2.0 * h)
                }
            }
        };
        self.scale * raw
    }

    pub fn fprime0(&self) -> f64 {
        self.fprime(0.0)
    }

    pub fn fprime1(&self) -> f64 {
        self.fprime(1.0)
    }

    /// `f(u)/u`, continuous at `u = 0` with value `f'(0)`.
    pub fn f_over_u(&self, u: f64) -> f64 {
        if u < 1e-150 {
            self.fprime0()
        } else {
            self.f(u) / u
        }
    }

    /// Potential `V(u) = ∫_0^u f`.
    pub fn potential(&self, u: f64) -> f64 {
        let raw = match &self.kind {
            Kind::Builtin(b) => match *b {
                Builtin::Fisher => u * u * (0.5 - u / 3.0),
                Builtin::HadelerRothe { nu } => u * u * (0.5 + u * ((nu - 1.0) / 3.0 - nu * u / 4.0)),
                Builtin::BistableCubic { a } => u * u * (-a / 2.0 + u * ((1.0 + a) / 3.0 - u / 4.0)),
                Builtin::Ignition { a } => {
                    if u <= a {
                        0.0
                    } else {
                        let t = u - a;
                        t * t * ((1.0 - a) / 2.0 - t / 3.0)
                    }
                }
                Builtin::DegeneratePower { m } => {
                    u.powf(m + 1.0) / (m + 1.0) - u.powf(m + 2.0) / (m + 2.0)
                }
            },
            Kind::Polynomial(c) => c
                .iter()
                .enumerate()
                .map(|(i, ci)| ci * u.powi(i as i32 + 2) / (i as f64 + 2.0))
                .sum(),
            Kind::Piecewise(segs) => {
                let mut v = 0.0;
                for s in segs {
                    if u <= s.lo {
                        break;
                    }
                    let hi = u.min(s.hi);
                    v += poly_antiderivative(&s.coefficients, hi) - poly_antiderivative(&s.coefficients, s.lo);
                }
                v
            }
        };
        self.scale * raw
    }

    /// `V(u)/u²`, continuous at `u = 0` with value `f'(0)/2`.
    pub fn potential_over_sq(&self, u: f64) -> f64 {
        if u < 1e-100 {
            0.5 * self.fprime0()
        } else {
            self.potential(u) / (u * u)
        }
    }

    /// Largest `a` with `f ≡ 0` on `[0, a]`, for ignition-type terms.
    pub fn ignition_threshold(&self) -> Option<f64> {
        match &self.kind {
            Kind::Builtin(Builtin::Ignition { a }) => Some(*a),
            Kind::Piecewise(segs) => {
                let mut a = None;
                for s in segs {
                    if s.coefficients.iter().all(|&c| c == 0.0) {
                        a = Some(s.hi);
                    } else {
                        break;
                    }
                }
                a.filter(|&a| a < 1.0)
            }
            _ => None,
        }
    }

    /// Interior breakpoints where `f` may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Builtin(Builtin::Ignition { a }) => vec![*a],
            Kind::Piecewise(segs) => segs.iter().skip(1).map(|s| s.lo).collect(),
            _ => Vec::new(),
        }
    }

    /// `∫_0^1 f du`, split at breakpoints.
    pub fn integral(&self, rel_tol: f64) -> Result<f64, ReactionError> {
        let mut knots = vec![0.0];
        knots.extend(self.breakpoints());
        knots.push(1.0);
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += integrate(|u| self.f(u), w[0], w[1], rel_tol, Endpoints::REGULAR)?.value;
        }
        Ok(total)
    }

    /// Sign pattern classification on `n_samples` uniform interior points.
    pub fn classify(&self, n_samples: usize) -> Result<ReactionClass, ReactionError> {
        let n = n_samples.max(100);
        let fp0 = self.fprime0();
        let zero_tol = 1e-14 * self.scale.abs().max(1.0);
        let sign = |u: f64| {
            let v = self.f(u);
            if v > zero_tol {
                1i8
            } else if v < -zero_tol {
                -1
            } else {
                0
            }
        };
        let samples: Vec<(f64, i8)> = (1..=n)
            .map(|i| {
                let u = i as f64 / (n + 1) as f64;
                (u, sign(u))
            })
            .collect();
        // Collapse into runs of equal sign.
        let mut runs: Vec<(i8, usize, usize)> = Vec::new();
        for (i, &(_, s)) in samples.iter().enumerate() {
            match runs.last_mut() {
                Some(r) if r.0 == s => r.2 = i,
                _ => runs.push((s, i, i)),
            }
        }
        let unclassifiable = |reason: &str| ReactionError::Unclassifiable {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        let pattern: Vec<i8> = runs.iter().map(|r| r.0).collect();
        let locate = |run: usize, pred: &dyn Fn(f64) -> bool| -> f64 {
            let left = samples[runs[run].2].0;
            let right = samples[runs[run + 1].1].0;
            let b = crate::numerics::bisect(|u| if pred(u) { 1.0 } else { -1.0 }, left, right, 1e-13)
                .expect("sign change bracketed");
            b.midpoint()
        };
        match pattern.as_slice() {
            [1] => {
                if fp0.abs() <= 1e-12 {
                    Ok(ReactionClass { tag: ClassTag::MonostableDegenerate, fprime0: 0.0, sign_change: None })
                } else if fp0 < 0.0 {
                    Err(unclassifiable("f > 0 inside but f'(0) < 0"))
                } else {
                    let kpp = samples.iter().all(|&(u, _)| self.f(u) <= fp0 * u + 1e-12 * u);
                    let tag = if kpp { ClassTag::MonostableKpp } else { ClassTag::MonostableGeneral };
                    Ok(ReactionClass { tag, fprime0: fp0, sign_change: None })
                }
            }
            [-1, 1] => {
                let total = self.integral(1e-12)?;
                if total <= 0.0 {
                    return Err(unclassifiable("bistable sign pattern with non-positive integral"));
                }
                let a = locate(0, &|u| self.f(u) > 0.0);
                Ok(ReactionClass { tag: ClassTag::Bistable, fprime0: fp0, sign_change: Some(a) })
            }
            [0, 1] => {
                let a = locate(0, &|u| self.f(u) > zero_tol);
                Ok(ReactionClass { tag: ClassTag::Combustion, fprime0: fp0, sign_change: Some(a) })
            }
            _ => Err(unclassifiable(&format!("sign pattern {pattern:?}"))),
        }
    }

    /// `2√f'(0)`.
    pub fn kpp_speed(&self) -> Result<f64, ReactionError> {
        let fp0 = self.fprime0();
        if fp0 < -1e-14 {
            return Err(ReactionError::NegativeSlope(fp0));
        }
        Ok(2.0 * fp0.max(0.0).sqrt())
    }

    /// `√(2∫f)`.
    pub fn zfk_speed(&self) -> Result<f64, ReactionError> {
        let total = self.integral(1e-10)?;
        if total <= 0.0 {
            return Err(ReactionError::NonPositiveIntegral(total));
        }
        Ok((2.0 * total).sqrt())
    }

    /// `sup_{0<u≤1} f(u)/u`, including the `u → 0` limit `f'(0)`.
    pub fn sup_ratio(&self) -> f64 {
        sup_on_unit(|u| self.f_over_u(u), self.fprime0(), 0.0)
    }

    /// `2·√(sup f/u)`: the upper member of the spreading-speed sandwich.
    pub fn aw_upper(&self) -> Result<f64, ReactionError> {
        let negative = (1..SUP_GRID).any(|i| self.f(i as f64 / SUP_GRID as f64) < -1e-14);
        if negative {
            return Err(ReactionError::NotMonostable(self.name.clone()));
        }
        Ok(2.0 * self.sup_ratio().max(0.0).sqrt())
    }
}

/// Supremum of `g` over `(0, 1)` on a 10⁴-point grid refined by golden
/// section around the grid maximizer, with the endpoint limits as candidates.
pub(crate) fn sup_on_unit<G: Fn(f64) -> f64>(g: G, limit0: f64, limit1: f64) -> f64 {
    let n = SUP_GRID;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 1..n {
        let v = g(i as f64 / n as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let (k, v) = best;
    let lo = (k - 1) as f64 / n as f64;
    let hi = (k + 1) as f64 / n as f64;
    let (_, refined) = golden_max(&g, lo.max(1e-12), hi.min(1.0 - 1e-12), 1e-12);
    v.max(refined).max(limit0).max(limit1)
}

fn poly_antiderivative(c: &[f64], u: f64) -> f64 {
    c.iter().enumerate().map(|(k, ck)| ck * u.powi(k as i32 + 1) / (k as f64 + 1.0)).sum()
}

fn segment_index(segs: &[Segment], u: f64) -> usize {
    segs.iter().position(|s| u <= s.hi).unwrap_or(segs.len() - 1)
}

/// Reaction description record used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Builtin,
    Polynomial,
    Piecewise,
}

impl ReactionSpec {
    pub fn builtin(name: &str, params: &[(&str, f64)]) -> Self {
        ReactionSpec {
            kind: SpecKind::Builtin,
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            coefficients: Vec::new(),
            segments: Vec::new(),
            scale: None,
        }
    }
}

/// Builds a reaction term from its description record.
pub fn make_reaction(spec: &ReactionSpec) -> Result<ReactionTerm, ReactionError> {
    let param = |key: &str| -> Result<f64, ReactionError> {
        spec.params.get(key).copied().ok_or_else(|| ReactionError::MissingParameter(key.into()))
    };
    let term = match spec.kind {
        SpecKind::Builtin => match spec.name.as_str() {
            "" => return Err(ReactionError::EmptySpec),
            "fisher" => ReactionTerm::fisher(),
            "hadeler_rothe" => ReactionTerm::hadeler_rothe(param("nu")?)?,
            "bistable_cubic" => ReactionTerm::bistable_cubic(param("a")?)?,
            "ignition" => ReactionTerm::ignition(param("a")?)?,
            "degenerate_power" => ReactionTerm::degenerate_power(param("m")?)?,
            other => return Err(ReactionError::UnknownBuiltin(other.to_string())),
        },
        SpecKind::Polynomial => ReactionTerm::polynomial(spec.coefficients.clone())?,
        SpecKind::Piecewise => ReactionTerm::piecewise(spec.segments.clone())?,
    };
    Ok(match spec.scale {
        Some(k) if k != 1.0 => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(ReactionError::ParameterOutOfRange { name: "scale".into(), value: k, expected: "scale > 0" });
            }
            term.scaled(k)
        }
        _ => term,
    })
}

/// Short command-line form: `fisher`, `hadeler_rothe(4)`, `bistable_cubic(a=0.3)`
/// or `poly:1,-1` for `f = u - u²`.
impl FromStr for ReactionSpec {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ReactionError::EmptySpec);
        }
        let bad = || ReactionError::Parse(s.to_string());
        if let Some(rest) = s.strip_prefix("poly:") {
            let coefficients = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(ReactionSpec {
                kind: SpecKind::Polynomial,
                name: String::new(),
                params: BTreeMap::new(),
                coefficients,
                segments: Vec::new(),
                scale: None,
            });
        }
        let (name, args) = match s.split_once('(') {
            Some((n, rest)) => (n.trim(), Some(rest.strip_suffix(')').ok_or_else(bad)?)),
            None => (s, None),
        };
        let default_key = match name {
            "hadeler_rothe" => "nu",
            "bistable_cubic" | "ignition" => "a",
            "degenerate_power" => "m",
            _ => "",
        };
        let mut params = BTreeMap::new();
        if let Some(args) = args {
            for tok in args.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (k, v) = match tok.split_once('=') {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => (default_key, tok),
                };
                if k.is_empty() {
                    return Err(bad());
                }
                params.insert(k.to_string(), v.parse::<f64>().map_err(|_| bad())?);
            }
        }
        Ok(ReactionSpec {
            kind: SpecKind::Builtin,
            name: name.to_string(),
            params,
            coefficients: Vec::new(),
            segments: Vec::new(),
            scale: None,
        })
    }
}
