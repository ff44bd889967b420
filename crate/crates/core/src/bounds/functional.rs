//! Weighted profile integrals `∫e^{cz}·½u_z² dz` and `∫e^{cz}·V(u) dz` with
//! exponential tail corrections beyond the truncated grid.

use crate::oracle::FrontProfile;
use crate::reaction::ReactionTerm;

use super::BoundsError;

/// Tail share above which a result is flagged.
pub const TAIL_FLAG: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileIntegrals {
    pub c: f64,
    /// `∫e^{cz}·½u_z²`.
    pub kinetic: f64,
    /// `∫e^{cz}·V(u)`.
    pub potential: f64,
    /// Largest share of either integral contributed by the tails.
    pub tail_share: f64,
}

impl ProfileIntegrals {
    pub fn flagged(&self) -> bool {
        self.tail_share > TAIL_FLAG
    }

    /// `Φ_c = kinetic - potential`.
    pub fn phi(&self) -> f64 {
        self.kinetic - self.potential
    }

    /// `X_c = potential / kinetic`.
    pub fn ratio(&self) -> f64 {
        self.potential / self.kinetic
    }
}

/// Both weighted integrals of `profile` at speed `c`.
pub fn profile_integrals(f: &ReactionTerm, profile: &FrontProfile, c: f64) -> Result<ProfileIntegrals, BoundsError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(BoundsError::Oracle(crate::oracle::OracleError::InvalidSpeed(c)));
    }
    let n = profile.len();
    if n < 2 {
        return Err(BoundsError::Divergent { name: "profile", exponent: f64::NAN });
    }
    let (zl, zr) = (profile.z[0], profile.z[n - 1]);
    let (ul, ur) = (profile.u[0], profile.u[n - 1]);
    let (dl, dr) = (profile.uz[0], profile.uz[n - 1]);

    // Right end: u ~ e^{-λz}, so the integrand decays like e^{(c-2λ)z}.
    let (kin_r, pot_r) = if ur == 0.0 && dr == 0.0 {
        (0.0, 0.0)
    } else {
        let rate = profile.right_rate();
        if !(c < 2.0 * rate) {
            return Err(BoundsError::DivergentWeight { c, rate });
        }
        let k = (c * zr).exp() / (2.0 * rate - c);
        (k * 0.5 * dr * dr, k * f.potential(ur))
    };
    // Left end: V → V(u_L) and u_z ~ e^{μz}.
    let el = (c * zl).exp();
    let kin_l = if dl == 0.0 { 0.0 } else { el * 0.5 * dl * dl / (c + 2.0 * profile.left_rate()) };
    let pot_l = el * f.potential(ul) / c;

    let kin_in = profile.integrate(|z, _, uz| (c * z).exp() * 0.5 * uz * uz);
    let pot_in = profile.integrate(|z, u, _| (c * z).exp() * f.potential(u));
    let kinetic = kin_in + kin_l + kin_r;
    let potential = pot_in + pot_l + pot_r;
    let share = |tail: f64, total: f64| if total == 0.0 { 0.0 } else { (tail / total).abs() };
    let tail_share = share(kin_l + kin_r, kinetic).max(share(pot_l + pot_r, potential));
    Ok(ProfileIntegrals { c, kinetic, potential, tail_share })
}

/// `Φ_c[u] = ∫e^{cz}(½u_z² - V(u)) dz`.
pub fn vp3_functional(f: &ReactionTerm, profile: &FrontProfile, c: f64) -> Result<f64, BoundsError> {
    Ok(profile_integrals(f, profile, c)?.phi())
}

/// `X_c = ∫e^{cz}V / ∫e^{cz}·½u_z²`.
pub fn xc_ratio(f: &ReactionTerm, profile: &FrontProfile, c: f64) -> Result<f64, BoundsError> {
    Ok(profile_integrals(f, profile, c)?.ratio())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{departure_slope, front_profile, DecayBranch, PhaseCurve, PhasePlaneSolution, EPS};

    fn hadeler_profile() -> (ReactionTerm, FrontProfile) {
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let c = 1.5 * 2f64.sqrt();
        let k = 2f64.sqrt();
        let mu1 = departure_slope(c, f.fprime1()).unwrap();
        let curve = PhaseCurve::from_closed_form(&f, c, mu1, |u| k * u * (1.0 - u), |u| k * (1.0 - 2.0 * u), 1e-6, EPS);
        let sol = PhasePlaneSolution::from_curve(curve, DecayBranch::Steep).unwrap();
        let prof = front_profile(&sol, 1e-6).unwrap();
        (f, prof)
    }

    /// `X_c` for the logistic profile `u = 1/(1+e^{√2 z})` of the `ν = 4`
    /// term, in closed form through Beta functions with `k = c/√2`.
    fn xc_exact(c: f64) -> f64 {
        use statrs::function::beta::beta;
        let k = c / 2f64.sqrt();
        (0.5 * beta(2.0 - k, k) + beta(3.0 - k, k) - beta(4.0 - k, k)) / beta(2.0 - k, k + 2.0)
    }

    #[test]
    fn xc_matches_beta_function_oracle() {
        let (f, prof) = hadeler_profile();
        let frozen = [
            (2.0, 1.121_320_343_559_642_8),
            (2.05, 1.069_580_822_985_017_2),
            (2.1, 1.020_305_089_104_421_6),
            (1.5 * 2f64.sqrt(), 1.0),
            (2.5, 0.697_056_274_847_714_3),
        ];
        for (c, x) in frozen {
            assert!((xc_exact(c) - x).abs() < 1e-12, "oracle drift at c = {c}");
            let got = xc_ratio(&f, &prof, c).unwrap();
            assert!((got - x).abs() < 1e-6, "c = {c}: {got} vs {x}");
        }
    }

    #[test]
    fn phi_sign_tracks_ratio() {
        use rand::{Rng, SeedableRng};
        let (f, prof) = hadeler_profile();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = rng.gen_range(0.3..2.7);
            let p = profile_integrals(&f, &prof, c).unwrap();
            assert_eq!((1.0 - p.ratio()).signum(), p.phi().signum(), "c = {c}");
        }
        let p = profile_integrals(&f, &prof, 1.5 * 2f64.sqrt()).unwrap();
        assert!(p.phi().abs() < 1e-6);
        assert!(!p.flagged());
        assert!(vp3_functional(&f, &prof, 2.05).unwrap() < 0.0);
    }

    #[test]
    fn zero_profile_and_divergence() {
        let f = ReactionTerm::fisher();
        let z: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let zero = FrontProfile::from_samples(1.0, z.clone(), vec![0.0; 11], vec![0.0; 11], vec![0.0; 11]);
        assert_eq!(vp3_functional(&f, &zero, 1.3).unwrap(), 0.0);
        let (f, prof) = hadeler_profile();
        assert!(matches!(xc_ratio(&f, &prof, 3.0), Err(BoundsError::DivergentWeight { .. })));
    }
}
