//! Trial functions: `α(u)` for upper bounds and decreasing `g(u)` for lower
//! bounds.
//!
//! A `g` trial is stored as `g = u^{-β₀}·g_reg(u)` with `g_reg` bounded at
//! `u = 0`, together with the log-slope `h/g = -g'/g`. Every evaluation takes a
//! [`UnitPoint`] so that `1 - u` keeps full precision near `u = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numerics::hermite;
use crate::oracle::{DecayBranch, PhaseCurve, PhasePlaneSolution, UnitPoint};

use super::BoundsError;

/// Default size of the Chebyshev table built by [`TrialFunction::tabulate`].
pub const TABLE_POINTS: usize = 512;

const ADMISSIBILITY_GRID: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialRole {
    Alpha,
    G,
}

impl fmt::Display for TrialRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrialRole::Alpha => "alpha",
            TrialRole::G => "g",
        })
    }
}

/// Tabulated `g = u^{-β₀}(1-u)^{β₁}·e^{L}` with `L` sampled on Chebyshev
/// nodes `u = sin²(θ/2)`, uniform in `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    theta: Vec<f64>,
    l: Vec<f64>,
    dl: Vec<f64>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `(L, dL/dθ)` at angle `t`, linear beyond the end nodes.
    fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.theta.len();
        if t <= self.theta[0] {
            return (self.l[0] + self.dl[0] * (t - self.theta[0]), self.dl[0]);
        }
        if t >= self.theta[n - 1] {
            return (self.l[n - 1] + self.dl[n - 1] * (t - self.theta[n - 1]), self.dl[n - 1]);
        }
        let k = self.theta.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.theta[k], self.theta[k + 1]);
        let v = hermite(x0, x1, self.l[k], self.l[k + 1], self.dl[k], self.dl[k + 1], t);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let d = 6.0 * (s * s - s) * (self.l[k] - self.l[k + 1]) / h
            + (3.0 * s * s - 4.0 * s + 1.0) * self.dl[k]
            + (3.0 * s * s - 2.0 * s) * self.dl[k + 1];
        (v, d)
    }
}

fn angle(q: UnitPoint) -> f64 {
    2.0 * q.u.sqrt().atan2(q.w.sqrt())
}

#[derive(Debug, Clone)]
enum Shape {
    /// `α = a·u·(1 - b·u)`.
    AlphaPower { a: f64, b: f64 },
    /// `α = u·(a₀ + a₁u + a₂u²)`.
    AlphaPoly { a: [f64; 3] },
    /// `α = p(u)` from a phase-plane trajectory.
    AlphaPhase(Arc<PhaseCurve>),
    /// `g = (1 - u)^k`.
    GOneMinusPow { k: f64 },
    /// `g = ((1 - u)/u)^λ`.
    GPowerRatio { lambda: f64 },
    /// `g = u^{-λ₀}(1 - u)^{λ₁}`.
    GBeta { lambda0: f64, lambda1: f64 },
    /// `g = e^{c·z(u)}`, i.e. `h/g = c/p`.
    GOptimal(Arc<PhaseCurve>),
    /// `g = e^{-W(u)}`, i.e. `h/g = f/p²`.
    GBalanced(Arc<PhaseCurve>),
    GTabulated(Arc<Table>),
}

/// An admissible-or-not trial with its endpoint exponents `(β₀, β₁)`:
/// `g ~ u^{-β₀}` as `u → 0` and `g ~ (1-u)^{β₁}` as `u → 1`.
#[derive(Debug, Clone)]
pub struct TrialFunction {
    shape: Shape,
    beta0: f64,
    beta1: f64,
}

impl TrialFunction {
    pub fn alpha_power(a: f64, b: f64) -> Self {
        TrialFunction { shape: Shape::AlphaPower { a, b }, beta0: 0.0, beta1: 0.0 }
    }

    pub fn alpha_poly(a0: f64, a1: f64, a2: f64) -> Self {
        TrialFunction { shape: Shape::AlphaPoly { a: [a0, a1, a2] }, beta0: 0.0, beta1: 0.0 }
    }

    /// `α = p`, the trajectory of `sol`.
    pub fn alpha_phase(sol: &PhasePlaneSolution) -> Self {
        TrialFunction { shape: Shape::AlphaPhase(sol.shared_curve()), beta0: 0.0, beta1: 1.0 }
    }

    pub fn one_minus_pow(k: f64) -> Self {
        TrialFunction { shape: Shape::GOneMinusPow { k }, beta0: 0.0, beta1: k }
    }

    pub fn power_ratio(lambda: f64) -> Self {
        TrialFunction { shape: Shape::GPowerRatio { lambda }, beta0: lambda, beta1: lambda }
    }

    pub fn beta(lambda0: f64, lambda1: f64) -> Self {
        TrialFunction { shape: Shape::GBeta { lambda0, lambda1 }, beta0: lambda0, beta1: lambda1 }
    }

    /// `ĝ` built from `sol` with `ĝ(1/2) = 1`.
    pub fn optimal(sol: &PhasePlaneSolution) -> Result<Self, BoundsError> {
        if sol.decay_branch != DecayBranch::Steep {
            return Err(BoundsError::NoOptimalTrial(sol.decay_branch));
        }
        let curve = sol.shared_curve();
        let lam = curve.lambda_bottom();
        if !(lam > 0.0 && lam.is_finite() && curve.mu1() > 0.0) {
            return Err(BoundsError::Exponent { slope: lam });
        }
        let c = curve.c();
        let beta1 = c / curve.mu1();
        Ok(TrialFunction { beta0: c / lam, beta1, shape: Shape::GOptimal(curve) })
    }

    /// The trial for which every step of the lower-bound chain is an
    /// equality when `α = p`: `h/g = f/p²`, normalized at `u = 1/2`.
    pub fn balanced(sol: &PhasePlaneSolution) -> Result<Self, BoundsError> {
        let curve = sol.shared_curve();
        let lam = curve.lambda_bottom();
        let mu1 = curve.mu1();
        if !(lam > 0.0 && lam.is_finite() && mu1 > 0.0) {
            return Err(BoundsError::Exponent { slope: lam });
        }
        let f = curve.reaction();
        let beta0 = f.fprime0().max(0.0) / (lam * lam);
        let beta1 = -f.fprime1() / (mu1 * mu1);
        Ok(TrialFunction { shape: Shape::GBalanced(curve), beta0, beta1 })
    }

    /// Samples a `g` trial on `n` Chebyshev nodes, keeping its exponents.
    pub fn tabulate(&self, n: usize) -> Result<Self, BoundsError> {
        self.expect_role(TrialRole::G, "tabulate")?;
        let n = n.max(8);
        let (b0, b1) = (self.beta0, self.beta1);
        let mut theta = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        let mut dl = Vec::with_capacity(n);
        for k in 0..n {
            let t = PI * (2 * k + 1) as f64 / (2 * n) as f64;
            let (s, c) = (0.5 * t).sin_cos();
            let q = UnitPoint { u: s * s, w: c * c };
            let lv = self.ln_g(q) + b0 * q.ln_u() - b1 * q.ln_w();
            // dL/du = β₀/u + β₁/w - h/g, and du/dθ = √(u·w).
            let dldu_u = b0 + b1 * q.u / q.w - self.hg_reg(q);
            theta.push(t);
            l.push(lv);
            dl.push(dldu_u * (q.w / q.u).sqrt());
        }
        let table = Table { theta, l, dl };
        Ok(TrialFunction { shape: Shape::GTabulated(Arc::new(table)), beta0: b0, beta1: b1 })
    }

    pub fn role(&self) -> TrialRole {
        match self.shape {
            Shape::AlphaPower { .. } | Shape::AlphaPoly { .. } | Shape::AlphaPhase(_) => TrialRole::Alpha,
            _ => TrialRole::G,
        }
    }

    /// `(β₀, β₁)`.
    pub fn exponents(&self) -> (f64, f64) {
        (self.beta0, self.beta1)
    }

    pub(crate) fn expect_role(&self, role: TrialRole, op: &'static str) -> Result<(), BoundsError> {
        if self.role() == role {
            Ok(())
        } else {
            Err(BoundsError::WrongRole { op, expected: role, trial: self.to_string() })
        }
    }

    /// `α(u)`.
    pub fn alpha(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::AlphaPhase(curve) => curve.p_at(q),
            _ => q.u * self.alpha_over_u(q),
        }
    }

    /// `α(u)/u`, bounded at `u = 0`.
    pub fn alpha_over_u(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::AlphaPower { a, b } => a * (1.0 - b * q.u),
            Shape::AlphaPoly { a } => a[0] + q.u * (a[1] + q.u * a[2]),
            Shape::AlphaPhase(curve) => curve.r_at(q),
            _ => f64::NAN,
        }
    }

    /// `α'(u)`.
    pub fn alpha_prime(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::AlphaPower { a, b } => a * (1.0 - 2.0 * b * q.u),
            Shape::AlphaPoly { a } => a[0] + q.u * (2.0 * a[1] + 3.0 * q.u * a[2]),
            Shape::AlphaPhase(curve) => curve.dp_at(q),
            _ => f64::NAN,
        }
    }

    /// `ln g(u)`.
    pub fn ln_g(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::GOneMinusPow { k } => {
                if *k == 0.0 {
                    0.0
                } else {
                    k * q.ln_w()
                }
            }
            Shape::GPowerRatio { lambda } => lambda * (q.ln_w() - q.ln_u()),
            Shape::GBeta { lambda0, lambda1 } => {
                let top = if *lambda1 == 0.0 { 0.0 } else { lambda1 * q.ln_w() };
                top - lambda0 * q.ln_u()
            }
            Shape::GOptimal(curve) => curve.c() * curve.z_at(q),
            Shape::GBalanced(curve) => -curve.w_at(q),
            Shape::GTabulated(t) => {
                let (l, _) = t.eval(angle(q));
                l - self.beta0 * q.ln_u() + self.beta1 * q.ln_w()
            }
            _ => f64::NAN,
        }
    }

    /// `g(u)`.
    pub fn g(&self, q: UnitPoint) -> f64 {
        self.ln_g(q).exp()
    }

    /// `u^{β₀}·g(u)`, bounded at `u = 0`.
    pub fn g_reg(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::GOneMinusPow { .. } | Shape::GPowerRatio { .. } | Shape::GBeta { .. } => {
                let top = self.beta1;
                if top == 0.0 {
                    1.0
                } else {
                    q.w.powf(top)
                }
            }
            _ => (self.ln_g(q) + self.beta0 * q.ln_u()).exp(),
        }
    }

    /// `u·h/g` with `h = -g'`, bounded at `u = 0`.
    pub fn hg_reg(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::GOneMinusPow { k } => k * q.u / q.w,
            Shape::GPowerRatio { lambda } => lambda / q.w,
            Shape::GBeta { lambda0, lambda1 } => lambda0 + lambda1 * q.u / q.w,
            Shape::GOptimal(curve) => curve.c() / curve.r_at(q),
            Shape::GBalanced(curve) => {
                let r = curve.r_at(q);
                curve.reaction().f_over_u(q.u) / (r * r)
            }
            Shape::GTabulated(t) => {
                let (_, d) = t.eval(angle(q));
                let dldu_u = d * (q.u / q.w).sqrt();
                self.beta0 + self.beta1 * q.u / q.w - dldu_u
            }
            _ => f64::NAN,
        }
    }

    /// `g/h`, bounded at `u = 0` even when `β₀ = 0`.
    pub fn g_over_h(&self, q: UnitPoint) -> f64 {
        match &self.shape {
            Shape::GOneMinusPow { k } => q.w / k,
            Shape::GPowerRatio { lambda } => q.u * q.w / lambda,
            Shape::GBeta { lambda0, lambda1 } => q.u * q.w / (lambda0 * q.w + lambda1 * q.u),
            Shape::GOptimal(curve) => curve.p_at(q) / curve.c(),
            _ => q.u / self.hg_reg(q),
        }
    }

    /// `h = -g'`.
    pub fn h(&self, q: UnitPoint) -> f64 {
        self.g(q) / self.g_over_h(q)
    }

    /// `g(1)`, the value that decides which integration by parts applies.
    pub fn g_at_one(&self) -> f64 {
        match &self.shape {
            Shape::GOneMinusPow { k } if *k == 0.0 => 1.0,
            Shape::GBeta { lambda1, .. } if *lambda1 == 0.0 => 1.0,
            _ if self.role() == TrialRole::G => 0.0,
            _ => f64::NAN,
        }
    }

    /// `g(0⁺)`: infinite when `β₀ > 0`.
    pub fn g_at_zero(&self) -> f64 {
        if self.beta0 > 0.0 {
            f64::INFINITY
        } else {
            self.g_reg(UnitPoint::new(0.0))
        }
    }

    /// Checks the role invariants on a uniform interior grid.
    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |reason: String| BoundsError::Inadmissible { trial: self.to_string(), reason };
        let grid = (1..ADMISSIBILITY_GRID).map(|i| UnitPoint::new(i as f64 / ADMISSIBILITY_GRID as f64));
        match self.role() {
            TrialRole::Alpha => {
                let d0 = self.alpha_prime(UnitPoint::new(0.0));
                if !(d0 > 0.0) {
                    return Err(bad(format!("alpha'(0) = {d0} is not positive")));
                }
                for q in grid {
                    let v = self.alpha_over_u(q);
                    if !(v > 0.0) {
                        return Err(bad(format!("alpha <= 0 at u = {}", q.u)));
                    }
                }
                let end = self.alpha(UnitPoint::from_complement(0.0));
                if end < -1e-14 {
                    return Err(bad(format!("alpha(1) = {end} < 0")));
                }
            }
            TrialRole::G => {
                if !(self.beta0 >= 0.0 && self.beta1 >= 0.0) {
                    return Err(bad(format!("negative endpoint exponents ({}, {})", self.beta0, self.beta1)));
                }
                for q in grid {
                    let g = self.g_reg(q);
                    let s = self.hg_reg(q);
                    if !(g > 0.0 && g.is_finite()) {
                        return Err(bad(format!("g <= 0 at u = {}", q.u)));
                    }
                    if !(s > 0.0) {
                        return Err(bad(format!("g is not strictly decreasing at u = {}", q.u)));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for TrialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::AlphaPower { a, b } => write!(f, "alpha={a}*u*(1-{b}*u)"),
            Shape::AlphaPoly { a } => write!(f, "alpha=u*({}+{}*u+{}*u^2)", a[0], a[1], a[2]),
            Shape::AlphaPhase(c) => write!(f, "alpha=p[c={}]", c.c()),
            Shape::GOneMinusPow { k } => write!(f, "g=(1-u)^{k}"),
            Shape::GPowerRatio { lambda } => write!(f, "g=((1-u)/u)^{lambda}"),
            Shape::GBeta { lambda0, lambda1 } => write!(f, "g=u^-{lambda0}*(1-u)^{lambda1}"),
            Shape::GOptimal(c) => write!(f, "g=optimal[c={}]", c.c()),
            Shape::GBalanced(c) => write!(f, "g=balanced[c={}]", c.c()),
            Shape::GTabulated(t) => write!(f, "g=table[n={};beta0={};beta1={}]", t.len(), self.beta0, self.beta1),
        }
    }
}

/// Trial mini-language: `alpha=u`, `alpha=A*u*(1-u)`, `alpha=A*u*(1-B*u)`,
/// `alpha=u*(A0+A1*u+A2*u^2)`, `g=1`, `g=1-u`, `g=(1-u)^K`,
/// `g=((1-u)/u)^L`, `g=u^-L0*(1-u)^L1`, with literal numbers only.
impl FromStr for TrialFunction {
    type Err = BoundsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || BoundsError::Parse(s.to_string());
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
        if let Some(rest) = t.strip_prefix("alpha=") {
            if rest == "u" {
                return Ok(Self::alpha_power(1.0, 0.0));
            }
            if rest == "u*(1-u)" {
                return Ok(Self::alpha_power(1.0, 1.0));
            }
            if let Some(body) = rest.strip_prefix("u*(").and_then(|b| b.strip_suffix("*u^2)")) {
                // A0+A1*u+A2
                let (head, a2) = split_last_sign(body).ok_or_else(bad)?;
                let head = head.strip_suffix("*u").ok_or_else(bad)?;
                let (a0, a1) = split_last_sign(head).ok_or_else(bad)?;
                return Ok(Self::alpha_poly(num(a0)?, num(a1)?, num(a2)?));
            }
            if let Some((a, tail)) = rest.split_once("*u*(1-") {
                let a = num(a)?;
                if tail == "u)" {
                    return Ok(Self::alpha_power(a, 1.0));
                }
                let b = tail.strip_suffix("*u)").ok_or_else(bad)?;
                return Ok(Self::alpha_power(a, num(b)?));
            }
            if let Some(a) = rest.strip_suffix("*u") {
                return Ok(Self::alpha_power(num(a)?, 0.0));
            }
            return Err(bad());
        }
        if let Some(rest) = t.strip_prefix("g=") {
            if rest == "1" {
                return Ok(Self::one_minus_pow(0.0));
            }
            if rest == "1-u" {
                return Ok(Self::one_minus_pow(1.0));
            }
            if let Some(l) = rest.strip_prefix("((1-u)/u)^") {
                return Ok(Self::power_ratio(num(strip_parens(l))?));
            }
            if rest == "(1-u)/u" {
                return Ok(Self::power_ratio(1.0));
            }
            if let Some(k) = rest.strip_prefix("(1-u)^") {
                return Ok(Self::one_minus_pow(num(strip_parens(k))?));
            }
            if let Some((l0, l1)) = rest.strip_prefix("u^-").and_then(|r| r.split_once("*(1-u)^")) {
                return Ok(Self::beta(num(strip_parens(l0))?, num(strip_parens(l1))?));
            }
        }
        Err(bad())
    }
}

fn strip_parens(s: &str) -> &str {
    s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(s)
}

/// Splits `"X+Y"` or `"X-Y"` at the last sign that is not an exponent sign,
/// keeping the sign on `Y`.
fn split_last_sign(s: &str) -> Option<(&str, &str)> {
    let bytes = s.as_bytes();
    for i in (1..bytes.len()).rev() {
        let ch = bytes[i];
        if (ch == b'+' || ch == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'+' | b'-' | b'*') {
            let y = &s[i..];
            return Some((&s[..i], y.strip_prefix('+').unwrap_or(y)));
        }
    }
    None
}
