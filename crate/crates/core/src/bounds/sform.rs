//! The lower bound in the variable `s = 1/g`, and its reciprocal action.
//!
//! Both integrals run over `s ∈ (s₀, ∞)`, where `u(s) = 0` for `s ≤ s₀`.
//! The part beyond `s = 1` is mapped to `τ = 1/s ∈ (0, 1]`:
//!
//! ```text
//! ∫ V/s² ds      = ∫ V(u(1/τ)) dτ
//! ∫ (du/ds)² ds  = ∫ (s·du/ds)² dτ
//! ```

use crate::numerics::{integrate, Endpoints};
use crate::oracle::UnitPoint;
use crate::reaction::ReactionTerm;

use super::{BoundsError, TrialFunction, TrialRole};

const LOGIT_SPAN: f64 = 745.0;

/// A monotone map `s ↦ u(s)` from `(s₀, ∞)` onto `(0, 1)`.
pub trait SProfile {
    /// `u(s)` with its complement.
    fn point(&self, s: f64) -> UnitPoint;
    /// `du/ds`.
    fn slope(&self, s: f64) -> f64;
    /// `s·du/ds`, overridable where the product is better conditioned.
    fn s_slope(&self, s: f64) -> f64 {
        s * self.slope(s)
    }
    /// `s₀`: `u = 0` below it.
    fn support_start(&self) -> f64 {
        0.0
    }
}

/// An s-profile given by closures.
pub struct FnProfile<U, D> {
    pub u: U,
    pub slope: D,
}

impl<U, D> SProfile for FnProfile<U, D>
where
    U: Fn(f64) -> UnitPoint,
    D: Fn(f64) -> f64,
{
    fn point(&self, s: f64) -> UnitPoint {
        (self.u)(s)
    }

    fn slope(&self, s: f64) -> f64 {
        (self.slope)(s)
    }
}

/// The image of a `g` trial under `s = 1/g(u)`, found by safeguarded Newton
/// iteration in `y = ln(u/(1-u))`.
pub struct TrialImage<'a> {
    g: &'a TrialFunction,
    s0: f64,
}

impl<'a> TrialImage<'a> {
    pub fn new(g: &'a TrialFunction) -> Result<Self, BoundsError> {
        g.expect_role(TrialRole::G, "s-profile")?;
        let g0 = g.g_at_zero();
        let s0 = if g0.is_infinite() { 0.0 } else { 1.0 / g0 };
        Ok(TrialImage { g, s0 })
    }

    fn solve(&self, s: f64) -> UnitPoint {
        let target = -s.ln();
        let phi = |y: f64| self.g.ln_g(UnitPoint::from_logit(y)) - target;
        let (mut lo, mut hi) = (-LOGIT_SPAN, LOGIT_SPAN);
        if phi(hi) >= 0.0 {
            return UnitPoint::from_logit(hi);
        }
        if phi(lo) <= 0.0 {
            return UnitPoint::from_logit(lo);
        }
        // φ is decreasing in y.
        let mut y = 0.0;
        for _ in 0..200 {
            let q = UnitPoint::from_logit(y);
            let v = self.g.ln_g(q) - target;
            if v > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            // dφ/dy = -(h/g)·u·(1-u) = -hg_reg·w.
            let d = -self.g.hg_reg(q) * q.w;
            let mut next = y - v / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * y.abs().max(1.0) {
                return UnitPoint::from_logit(next);
            }
            y = next;
        }
        UnitPoint::from_logit(y)
    }
}

impl SProfile for TrialImage<'_> {
    fn point(&self, s: f64) -> UnitPoint {
        self.solve(s)
    }

    /// `du/ds = g²/h`, with `g = 1/s`.
    fn slope(&self, s: f64) -> f64 {
        self.g.g_over_h(self.solve(s)) / s
    }

    fn s_slope(&self, s: f64) -> f64 {
        self.g.g_over_h(self.solve(s))
    }

    fn support_start(&self) -> f64 {
        self.s0
    }
}

/// Which constant multiplies the potential integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SForm {
    /// `2∫V/s² ds / ∫(du/ds)² ds`, consistent with the `u`-form bound.
    Corrected,
    /// The same quotient without the factor 2.
    Printed,
}

/// `∫V/s² ds` and `∫(du/ds)² ds` with their error estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SIntegrals {
    pub potential: f64,
    pub kinetic: f64,
    pub error: f64,
}

impl SIntegrals {
    pub fn compute<P: SProfile + ?Sized>(f: &ReactionTerm, profile: &P, rel_tol: f64) -> Result<Self, BoundsError> {
        let s0 = profile.support_start().max(0.0);
        let quad = |name| move |source| BoundsError::Quadrature { name, source };
        let mut pot = 0.0;
        let mut kin = 0.0;
        let mut err = 0.0;
        if s0 < 1.0 {
            let p = integrate(
                |s| {
                    let q = profile.point(s);
                    f.potential_over_sq(q.u) * (q.u / s).powi(2)
                },
                s0,
                1.0,
                rel_tol,
                Endpoints::BOTH,
            )
            .map_err(quad("V/s^2 on s < 1"))?;
            let k = integrate(|s| profile.slope(s).powi(2), s0, 1.0, rel_tol, Endpoints::BOTH)
                .map_err(quad("(du/ds)^2 on s < 1"))?;
            pot += p.value;
            kin += k.value;
            err += p.error_estimate + k.error_estimate;
        }
        let t1 = 1.0 / s0.max(1.0);
        let p = integrate(|t| f.potential(profile.point(1.0 / t).u), 0.0, t1, rel_tol, Endpoints::BOTH)
            .map_err(quad("V/s^2 on s > 1"))?;
        let k = integrate(|t| profile.s_slope(1.0 / t).powi(2), 0.0, t1, rel_tol, Endpoints::BOTH)
            .map_err(quad("(du/ds)^2 on s > 1"))?;
        pot += p.value;
        kin += k.value;
        err += p.error_estimate + k.error_estimate;
        if !(pot.is_finite() && kin.is_finite() && kin > 0.0) {
            return Err(BoundsError::Divergent { name: "s-form", exponent: f64::NAN });
        }
        Ok(SIntegrals { potential: pot, kinetic: kin, error: err })
    }
}

/// Speed-squared candidate from an s-profile.
pub fn vp4s_value<P: SProfile + ?Sized>(
    f: &ReactionTerm,
    profile: &P,
    form: SForm,
    rel_tol: f64,
) -> Result<f64, BoundsError> {
    let ints = SIntegrals::compute(f, profile, rel_tol)?;
    let k = match form {
        SForm::Corrected => 2.0,
        SForm::Printed => 1.0,
    };
    Ok(k * ints.potential / ints.kinetic)
}

/// `∫½(du/dξ)² dξ / ∫V/ξ² dξ`, the reciprocal of the corrected s-form.
pub fn vp5_action<P: SProfile + ?Sized>(f: &ReactionTerm, profile: &P, rel_tol: f64) -> Result<f64, BoundsError> {
    let ints = SIntegrals::compute(f, profile, rel_tol)?;
    if !(ints.potential > 0.0) {
        return Err(BoundsError::NonPositiveNumerator(2.0 * ints.potential));
    }
    Ok(0.5 * ints.kinetic / ints.potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{vp4_lower, QUAD_TOL};

    fn rational(kappa: f64) -> FnProfile<impl Fn(f64) -> UnitPoint, impl Fn(f64) -> f64> {
        FnProfile {
            u: move |s: f64| UnitPoint { u: kappa * s / (1.0 + kappa * s), w: 1.0 / (1.0 + kappa * s) },
            slope: move |s: f64| kappa / (1.0 + kappa * s).powi(2),
        }
    }

    #[test]
    fn rational_profile_matches_u_form() {
        // u = s/(1+s) is the image of g = (1-u)/u.
        let fisher = ReactionTerm::fisher();
        let s_side = vp4s_value(&fisher, &rational(1.0), SForm::Corrected, QUAD_TOL).unwrap();
        let u_side = vp4_lower(&fisher, &TrialFunction::power_ratio(1.0), QUAD_TOL).unwrap().squared.unwrap();
        assert!((s_side - u_side).abs() < 1e-9 * u_side, "{s_side} vs {u_side}");
        // Same check with the profile obtained by inverting the trial.
        let g = TrialFunction::power_ratio(1.0);
        let img = TrialImage::new(&g).unwrap();
        let s_img = vp4s_value(&fisher, &img, SForm::Corrected, QUAD_TOL).unwrap();
        assert!((s_img - u_side).abs() < 1e-9 * u_side);
    }

    #[test]
    fn scaling_invariance_and_reciprocity() {
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let a = vp4s_value(&f, &rational(1.0), SForm::Corrected, QUAD_TOL).unwrap();
        let b = vp4s_value(&f, &rational(7.5), SForm::Corrected, QUAD_TOL).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        let l = vp5_action(&f, &rational(7.5), QUAD_TOL).unwrap();
        assert!((l * b - 1.0).abs() < 1e-10);
        let p = vp4s_value(&f, &rational(1.0), SForm::Printed, QUAD_TOL).unwrap();
        assert!((a / p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trial_image_inverts_g() {
        let g = TrialFunction::one_minus_pow(2.0);
        let img = TrialImage::new(&g).unwrap();
        assert_eq!(img.support_start(), 1.0);
        for s in [1.5, 3.0, 1e3, 1e12] {
            let q = img.point(s);
            assert!((g.g(q) * s - 1.0).abs() < 1e-12, "s = {s}");
        }
        let g = TrialFunction::power_ratio(0.7);
        let img = TrialImage::new(&g).unwrap();
        assert_eq!(img.support_start(), 0.0);
        for s in [1e-8, 0.3, 2.0, 1e9] {
            let q = img.point(s);
            assert!((g.g(q) * s - 1.0).abs() < 1e-12, "s = {s}");
            let d = 1e-6 * s;
            let (a, b) = (img.point(s - d), img.point(s + d));
            let fd = if q.u < 0.5 { b.u - a.u } else { a.w - b.w } / (2.0 * d);
            assert!((img.slope(s) - fd).abs() < 1e-6 * fd.abs().max(1e-300), "s = {s}");
        }
    }
}
