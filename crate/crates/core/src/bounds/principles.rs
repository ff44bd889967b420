//! The sup-form upper bound and the two integral lower bounds.

use crate::oracle::UnitPoint;
use crate::reaction::{sup_on_unit, ReactionTerm};

use super::{unit_integral, BoundResult, BoundsError, Principle, TrialFunction, TrialRole};

fn require_monostable(f: &ReactionTerm, principle: Principle) -> Result<(), BoundsError> {
    if f.classify(200)?.tag.is_monostable() {
        Ok(())
    } else {
        Err(BoundsError::NotMonostable { principle, name: f.name().to_string() })
    }
}

/// Integrals over `(0, 1)` built from a reaction term, a `g` trial and
/// optionally an `α` trial. Each returns `(value, error estimate)`.
pub struct PartIntegrals<'a> {
    f: &'a ReactionTerm,
    g: &'a TrialFunction,
    rel_tol: f64,
    breaks: Vec<f64>,
}

type Part = Result<(f64, f64), BoundsError>;

impl<'a> PartIntegrals<'a> {
    pub fn new(f: &'a ReactionTerm, g: &'a TrialFunction, rel_tol: f64) -> Result<Self, BoundsError> {
        g.expect_role(TrialRole::G, "lower-bound integral")?;
        Ok(PartIntegrals { f, g, rel_tol, breaks: f.breakpoints() })
    }

    fn b0(&self) -> f64 {
        self.g.exponents().0
    }

    fn run<P: Fn(UnitPoint) -> f64>(&self, name: &'static str, e: f64, psi: P) -> Part {
        unit_integral(name, e, psi, &self.breaks, self.rel_tol)
    }

    /// `∫ g`.
    pub fn g(&self) -> Part {
        self.run("g", -self.b0(), |q| self.g.g_reg(q))
    }

    /// `∫ √(f·g·h)`.
    pub fn sqrt_fgh(&self) -> Part {
        self.run("sqrt(f g h)", -self.b0(), |q| {
            let v = self.f.f_over_u(q.u) * self.g.hg_reg(q);
            self.g.g_reg(q) * v.max(0.0).sqrt()
        })
    }

    /// `∫ f·g`.
    pub fn fg(&self) -> Part {
        self.run("f g", 1.0 - self.b0(), |q| self.f.f_over_u(q.u) * self.g.g_reg(q))
    }

    /// `∫ g²/h`.
    pub fn g2_over_h(&self) -> Part {
        let b0 = self.b0();
        if b0 > 0.0 {
            self.run("g^2/h", 1.0 - b0, |q| self.g.g_reg(q) / self.g.hg_reg(q))
        } else {
            self.run("g^2/h", 0.0, |q| self.g.g_reg(q) * self.g.g_over_h(q))
        }
    }

    /// `∫ V·h`.
    pub fn potential_h(&self) -> Part {
        self.run("V h", 1.0 - self.b0(), |q| {
            self.f.potential_over_sq(q.u) * self.g.g_reg(q) * self.g.hg_reg(q)
        })
    }

    /// `∫ α·h`.
    pub fn alpha_h(&self, alpha: &TrialFunction) -> Part {
        alpha.expect_role(TrialRole::Alpha, "alpha integral")?;
        self.run("alpha h", -self.b0(), |q| alpha.alpha_over_u(q) * self.g.g_reg(q) * self.g.hg_reg(q))
    }

    /// `∫ α'·g`.
    pub fn alpha_prime_g(&self, alpha: &TrialFunction) -> Part {
        alpha.expect_role(TrialRole::Alpha, "alpha integral")?;
        self.run("alpha' g", -self.b0(), |q| alpha.alpha_prime(q) * self.g.g_reg(q))
    }

    /// `∫ (f/α)·g`.
    pub fn f_over_alpha_g(&self, alpha: &TrialFunction) -> Part {
        alpha.expect_role(TrialRole::Alpha, "alpha integral")?;
        self.run("f g / alpha", -self.b0(), |q| {
            self.f.f_over_u(q.u) / alpha.alpha_over_u(q) * self.g.g_reg(q)
        })
    }
}

fn ratio_error(n: (f64, f64), d: (f64, f64), value: f64) -> f64 {
    value.abs() * (n.1 / n.0.abs().max(f64::MIN_POSITIVE) + d.1 / d.0.abs().max(f64::MIN_POSITIVE))
}

/// `sup_{0<u<1} (α' + f/α)`.
pub fn vp1_upper(f: &ReactionTerm, alpha: &TrialFunction) -> Result<BoundResult, BoundsError> {
    alpha.expect_role(TrialRole::Alpha, "vp1_upper")?;
    require_monostable(f, Principle::VP1)?;
    alpha.validate()?;
    let top = UnitPoint::from_complement(0.0);
    let d0 = alpha.alpha_prime(UnitPoint::new(0.0));
    let limit0 = d0 + f.fprime0() / d0;
    let d1 = alpha.alpha_prime(top);
    let limit1 = if alpha.alpha(top).abs() <= 1e-14 && d1 != 0.0 { d1 + f.fprime1() / d1 } else { d1 };
    let value = sup_on_unit(
        |u| {
            let q = UnitPoint::new(u);
            alpha.alpha_prime(q) + f.f_over_u(u) / alpha.alpha_over_u(q)
        },
        limit0,
        limit1,
    );
    Ok(BoundResult {
        principle: Principle::VP1,
        direction: Principle::VP1.direction(),
        value,
        squared: None,
        trial: alpha.to_string(),
        quad_error: 1e-12 * value.abs().max(1.0),
    })
}

/// `2∫√(f·g·h) / ∫g`.
pub fn vp2_lower(f: &ReactionTerm, g: &TrialFunction, rel_tol: f64) -> Result<BoundResult, BoundsError> {
    g.expect_role(TrialRole::G, "vp2_lower")?;
    require_monostable(f, Principle::VP2)?;
    g.validate()?;
    let parts = PartIntegrals::new(f, g, rel_tol)?;
    let n = parts.sqrt_fgh()?;
    let d = parts.g()?;
    let value = 2.0 * n.0 / d.0;
    Ok(BoundResult {
        principle: Principle::VP2,
        direction: Principle::VP2.direction(),
        value,
        squared: None,
        trial: g.to_string(),
        quad_error: ratio_error(n, d, value),
    })
}

/// `√(2∫f·g / ∫g²/h)`.
pub fn vp4_lower(f: &ReactionTerm, g: &TrialFunction, rel_tol: f64) -> Result<BoundResult, BoundsError> {
    g.expect_role(TrialRole::G, "vp4_lower")?;
    g.validate()?;
    let parts = PartIntegrals::new(f, g, rel_tol)?;
    let n = parts.fg()?;
    if !(n.0 > 0.0) {
        return Err(BoundsError::NonPositiveNumerator(2.0 * n.0));
    }
    let d = parts.g2_over_h()?;
    let squared = 2.0 * n.0 / d.0;
    let value = squared.sqrt();
    Ok(BoundResult {
        principle: Principle::VP4,
        direction: Principle::VP4.direction(),
        value,
        squared: Some(squared),
        trial: g.to_string(),
        quad_error: 0.5 * ratio_error(n, d, value),
    })
}

/// `√(2∫f)` as a lower bound (monostable terms).
pub fn zfk_bound(f: &ReactionTerm) -> Result<BoundResult, BoundsError> {
    require_monostable(f, Principle::ZFK)?;
    let value = f.zfk_speed()?;
    Ok(BoundResult {
        principle: Principle::ZFK,
        direction: Principle::ZFK.direction(),
        value,
        squared: Some(value * value),
        trial: "none".into(),
        quad_error: 1e-10 * value,
    })
}

/// `2√(sup f/u)` as an upper bound.
pub fn aw_bound(f: &ReactionTerm) -> Result<BoundResult, BoundsError> {
    let value = f.aw_upper()?;
    Ok(BoundResult {
        principle: Principle::AW,
        direction: Principle::AW.direction(),
        value,
        squared: None,
        trial: "none".into(),
        quad_error: 1e-12 * value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::QUAD_TOL;

    fn hadeler() -> ReactionTerm {
        ReactionTerm::hadeler_rothe(4.0).unwrap()
    }

    #[test]
    fn vp1_golden_values() {
        let fisher = ReactionTerm::fisher();
        let b = vp1_upper(&fisher, &TrialFunction::alpha_power(1.0, 0.0)).unwrap();
        assert!((b.value - 2.0).abs() < 1e-12);
        let b = vp1_upper(&fisher, &TrialFunction::alpha_power(1.0, 1.0)).unwrap();
        assert!((b.value - 2.0).abs() < 1e-12);
        let exact = 2f64.sqrt() + 1.0 / 2f64.sqrt();
        let b = vp1_upper(&hadeler(), &TrialFunction::alpha_power(2f64.sqrt(), 1.0)).unwrap();
        assert!((b.value - exact).abs() < 1e-12, "{}", b.value);
        // Constant in u for the exact trial.
        let t = TrialFunction::alpha_power(2f64.sqrt(), 1.0);
        for i in 1..20 {
            let q = UnitPoint::new(i as f64 / 20.0);
            let v = t.alpha_prime(q) + hadeler().f(q.u) / t.alpha(q);
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn vp2_golden_values() {
        let fisher = ReactionTerm::fisher();
        let b = vp2_lower(&fisher, &TrialFunction::one_minus_pow(1.0), QUAD_TOL).unwrap();
        assert!((b.value - 16.0 / 15.0).abs() < 1e-9 * 16.0 / 15.0, "{}", b.value);
        let b = vp2_lower(&fisher, &TrialFunction::one_minus_pow(2.0), QUAD_TOL).unwrap();
        let exact = 3.0 * 32.0 * 2f64.sqrt() / 105.0;
        assert!((b.value - exact).abs() < 1e-9 * exact, "{}", b.value);
        assert!(b.quad_error < 1e-8);
    }

    #[test]
    fn vp2_power_ratio_is_two_root_lambda() {
        // f = u(1-u), g = ((1-u)/u)^λ: f·g·h = λ g², so the bound is 2√λ.
        let fisher = ReactionTerm::fisher();
        for lam in [0.2, 0.5, 0.9, 0.999] {
            let b = vp2_lower(&fisher, &TrialFunction::power_ratio(lam), QUAD_TOL).unwrap();
            assert!((b.value - 2.0 * lam.sqrt()).abs() < 1e-8, "λ={lam}: {}", b.value);
        }
        assert!(matches!(
            vp2_lower(&fisher, &TrialFunction::power_ratio(1.2), QUAD_TOL),
            Err(BoundsError::Divergent { .. })
        ));
    }

    #[test]
    fn vp4_golden_values() {
        let fisher = ReactionTerm::fisher();
        let b = vp4_lower(&fisher, &TrialFunction::one_minus_pow(1.0), QUAD_TOL).unwrap();
        assert!((b.value - 0.5f64.sqrt()).abs() < 1e-10, "{}", b.value);
        assert!((b.squared.unwrap() - 0.5).abs() < 1e-10);
        // The exact optimizer of the ansatz family.
        let b = vp4_lower(&hadeler(), &TrialFunction::power_ratio(1.5), QUAD_TOL).unwrap();
        assert!((b.squared.unwrap() - 4.5).abs() < 1e-8, "{}", b.value);
        let bi = ReactionTerm::bistable_cubic(0.3).unwrap();
        let b = vp4_lower(&bi, &TrialFunction::power_ratio(0.4), QUAD_TOL).unwrap();
        assert!((b.squared.unwrap() - 0.08).abs() < 1e-10, "{}", b.value);
    }

    #[test]
    fn vp4_rejects_negative_numerator() {
        let bi = ReactionTerm::bistable_cubic(0.45).unwrap();
        // Weight concentrated where f < 0.
        let r = vp4_lower(&bi, &TrialFunction::one_minus_pow(40.0), QUAD_TOL);
        assert!(matches!(r, Err(BoundsError::NonPositiveNumerator(_))), "{r:?}");
    }

    #[test]
    fn role_and_class_errors() {
        let fisher = ReactionTerm::fisher();
        let g = TrialFunction::one_minus_pow(1.0);
        let a = TrialFunction::alpha_power(1.0, 0.0);
        assert!(matches!(vp1_upper(&fisher, &g), Err(BoundsError::WrongRole { .. })));
        assert!(matches!(vp2_lower(&fisher, &a, QUAD_TOL), Err(BoundsError::WrongRole { .. })));
        let bi = ReactionTerm::bistable_cubic(0.3).unwrap();
        assert!(matches!(vp1_upper(&bi, &a), Err(BoundsError::NotMonostable { .. })));
        assert!(matches!(
            vp1_upper(&fisher, &TrialFunction::alpha_poly(1.0, -3.0, 0.0)),
            Err(BoundsError::Inadmissible { .. })
        ));
    }

    #[test]
    fn integration_by_parts_for_alpha() {
        // ∫α h = ∫α' g when g(1) = 0 and α(0) = 0.
        let fisher = ReactionTerm::fisher();
        let a = TrialFunction::alpha_power(1.3, 0.4);
        for g in [TrialFunction::one_minus_pow(2.0), TrialFunction::power_ratio(0.6), TrialFunction::beta(0.3, 0.7)] {
            let parts = PartIntegrals::new(&fisher, &g, 1e-12).unwrap();
            let (l, _) = parts.alpha_h(&a).unwrap();
            let (r, _) = parts.alpha_prime_g(&a).unwrap();
            assert!((l - r).abs() < 1e-10 * r.abs(), "{g}: {l} vs {r}");
        }
    }

    #[test]
    fn classical_bounds() {
        let fisher = ReactionTerm::fisher();
        let z = zfk_bound(&fisher).unwrap();
        assert!((z.value - (1.0f64 / 3.0).sqrt()).abs() < 1e-10);
        let a = aw_bound(&fisher).unwrap();
        assert!((a.value - 2.0).abs() < 1e-12);
    }
}
