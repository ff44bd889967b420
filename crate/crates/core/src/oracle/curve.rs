//! Continuous representation of a phase-plane trajectory `p(u)`.
//!
//! Knots live in `σ = ln u` and carry `r = p/u` and `dr/dσ`; between knots
//! `r` is a cubic Hermite interpolant. Two integrals along the curve are
//! accumulated knot by knot with 5-point Gauss-Legendre panels:
//!
//! - `z(σ) = -∫ dσ/r`, the front coordinate (`dz = -du/p`);
//! - `W(σ) = ∫ F/r² dσ` with `F = f/u`, i.e. `W = ∫ f/p² du`.
//!
//! Outside the knot range the curve is continued by its linearizations:
//! `p = mu1·(1-u)` above the top knot and `p = λ·u` below the bottom knot.
//! Both integrals are gauged to vanish at `u = 1/2`.

use crate::numerics::{gauss_legendre5, hermite};
use crate::reaction::ReactionTerm;

/// A point of `(0, 1)` stored with its complement so that both `u` and
/// `1 - u` keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub u: f64,
    pub w: f64,
}

impl UnitPoint {
    pub fn new(u: f64) -> Self {
        UnitPoint { u, w: 1.0 - u }
    }

    /// From the complement `w = 1 - u`.
    pub fn from_complement(w: f64) -> Self {
        UnitPoint { u: 1.0 - w, w }
    }

    /// `u = 1/(1 + e^{-y})`.
    pub fn from_logit(y: f64) -> Self {
        if y >= 0.0 {
            let e = (-y).exp();
            UnitPoint { u: 1.0 / (1.0 + e), w: e / (1.0 + e) }
        } else {
            let e = y.exp();
            UnitPoint { u: e / (1.0 + e), w: 1.0 / (1.0 + e) }
        }
    }

    pub fn ln_u(&self) -> f64 {
        if self.u > 0.5 {
            (-self.w).ln_1p()
        } else {
            self.u.ln()
        }
    }

    pub fn ln_w(&self) -> f64 {
        if self.w > 0.5 {
            (-self.u).ln_1p()
        } else {
            self.w.ln()
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseCurve {
    f: ReactionTerm,
    c: f64,
    mu1: f64,
    sig: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
    z: Vec<f64>,
    wint: Vec<f64>,
    w_top: f64,
    lam_bot: f64,
    f0: f64,
    f1_lin: f64,
}

enum Region {
    Top,
    Bottom,
    Interior(usize, f64),
}

impl PhaseCurve {
    /// Builds the curve from knots `(σ, r, dr/dσ)` in any monotone order.
    ///
    /// # Panics
    /// If fewer than two knots are supplied or `r` is not positive.
    pub fn from_knots(
        f: &ReactionTerm,
        c: f64,
        mu1: f64,
        mut sig: Vec<f64>,
        mut r: Vec<f64>,
        mut dr: Vec<f64>,
    ) -> Self {
        assert!(sig.len() >= 2 && sig.len() == r.len() && sig.len() == dr.len());
        if sig[0] > sig[sig.len() - 1] {
            sig.reverse();
            r.reverse();
            dr.reverse();
        }
        // Drop repeated abscissae (a stop event can coincide with a step end).
        let mut keep = vec![true; sig.len()];
        for i in 1..sig.len() {
            if sig[i] <= sig[i - 1] {
                keep[i] = false;
            }
        }
        let filter = |v: Vec<f64>| -> Vec<f64> { v.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect() };
        let sig = filter(sig);
        let r = filter(r);
        let dr = filter(dr);
        assert!(r.iter().all(|&x| x > 0.0), "phase curve requires p > 0");

        let n = sig.len();
        let w_top = -sig[n - 1].exp_m1();
        let lam_bot = r[0];
        let f0 = f.fprime0();
        let u_bot = sig[0].exp();
        let f1_lin = (f.f_over_u(u_bot) - f0) / u_bot;
        let mut curve = PhaseCurve {
            f: f.clone(),
            c,
            mu1,
            sig,
            r,
            dr,
            z: vec![0.0; n],
            wint: vec![0.0; n],
            w_top,
            lam_bot,
            f0,
            f1_lin,
        };
        for k in 1..n {
            let (a, b) = (curve.sig[k - 1], curve.sig[k]);
            let dz = curve.z_increment(k - 1, a, b);
            let dw = curve.w_increment(k - 1, a, b);
            curve.z[k] = curve.z[k - 1] - dz;
            curve.wint[k] = curve.wint[k - 1] + dw;
        }
        let half = UnitPoint::new(0.5);
        let z_half = curve.z_at(half);
        let w_half = curve.w_at(half);
        for k in 0..n {
            curve.z[k] -= z_half;
            curve.wint[k] -= w_half;
        }
        curve
    }

    /// Samples a closed-form trajectory `p`, `dp/du` on a uniform `σ` grid.
    pub fn from_closed_form<P, D>(f: &ReactionTerm, c: f64, mu1: f64, p: P, dp: D, u_bot: f64, eps: f64) -> Self
    where
        P: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        // Knots uniform in logit(u) so both ends are resolved.
        let y0 = UnitPoint::new(u_bot).ln_u() - UnitPoint::new(u_bot).ln_w();
        let y1 = UnitPoint::from_complement(eps).ln_u() - UnitPoint::from_complement(eps).ln_w();
        let n = (((y1 - y0) / 0.005).ceil() as usize).max(2);
        let mut sig = Vec::with_capacity(n + 1);
        let mut r = Vec::with_capacity(n + 1);
        let mut dr = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let q = UnitPoint::from_logit(y0 + (y1 - y0) * i as f64 / n as f64);
            let ri = p(q.u) / q.u;
            sig.push(q.ln_u());
            r.push(ri);
            dr.push(dp(q.u) - ri);
        }
        Self::from_knots(f, c, mu1, sig, r, dr)
    }

    pub fn reaction(&self) -> &ReactionTerm {
        &self.f
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    /// Slope `p/u` used below the bottom knot.
    pub fn lambda_bottom(&self) -> f64 {
        self.lam_bot
    }

    pub fn u_bottom(&self) -> f64 {
        self.sig[0].exp()
    }

    /// `1 - u` at the top knot.
    pub fn w_top(&self) -> f64 {
        self.w_top
    }

    pub fn knot_count(&self) -> usize {
        self.sig.len()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.sig.iter().zip(&self.r).map(|(&s, &r)| (s, r))
    }

    fn f_ratio(&self, s: f64) -> f64 {
        self.f.f_over_u(s.exp())
    }

    fn r_interval(&self, k: usize, s: f64) -> f64 {
        hermite(self.sig[k], self.sig[k + 1], self.r[k], self.r[k + 1], self.dr[k], self.dr[k + 1], s)
    }

    /// `∫_a^b g dσ` inside knot interval `k`. Where `r` changes by a large
    /// factor across the interval (next to `u = 1`, where `r → 0`), panels are
    /// graded geometrically away from the small end.
    fn interval_integral<G: Fn(f64) -> f64>(&self, k: usize, a: f64, b: f64, g: G) -> f64 {
        if a == b {
            return 0.0;
        }
        let (ra, rb) = (self.r_interval(k, a), self.r_interval(k, b));
        if ra.max(rb) <= 1.25 * ra.min(rb) {
            return gauss_legendre5(g, a, b);
        }
        let (e, far, re) = if ra < rb { (a, b, ra) } else { (b, a, rb) };
        let slope = self.dr_interval(k, e).abs().max(1e-300);
        let span = (far - e).abs();
        let dir = (far - e).signum();
        let mut d = (re / slope).min(span);
        let mut total = gauss_legendre5(&g, e.min(e + dir * d), e.max(e + dir * d));
        while d < span {
            let next = (1.25 * d).min(span);
            let (x0, x1) = (e + dir * d, e + dir * next);
            total += gauss_legendre5(&g, x0.min(x1), x0.max(x1));
            d = next;
        }
        if a < b {
            total
        } else {
            -total
        }
    }

    fn z_increment(&self, k: usize, a: f64, b: f64) -> f64 {
        self.interval_integral(k, a, b, |s| 1.0 / self.r_interval(k, s))
    }

    fn w_increment(&self, k: usize, a: f64, b: f64) -> f64 {
        self.interval_integral(k, a, b, |s| self.f_ratio(s) / self.r_interval(k, s).powi(2))
    }

    fn dr_interval(&self, k: usize, s: f64) -> f64 {
        let (x0, x1) = (self.sig[k], self.sig[k + 1]);
        let h = x1 - x0;
        let t = (s - x0) / h;
        let (y0, y1, d0, d1) = (self.r[k], self.r[k + 1], self.dr[k], self.dr[k + 1]);
        ((6.0 * t * t - 6.0 * t) * (y0 - y1)) / h
            + (3.0 * t * t - 4.0 * t + 1.0) * d0
            + (3.0 * t * t - 2.0 * t) * d1
    }

    fn region(&self, q: UnitPoint) -> Region {
        if q.w < self.w_top {
            return Region::Top;
        }
        let s = q.ln_u();
        if s < self.sig[0] {
            return Region::Bottom;
        }
        let n = self.sig.len();
        let k = self.sig.partition_point(|&x| x <= s).clamp(1, n - 1) - 1;
        Region::Interior(k, s)
    }

    /// `p/u`.
    pub fn r_at(&self, q: UnitPoint) -> f64 {
        match self.region(q) {
            Region::Top => self.mu1 * q.w / q.u,
            Region::Bottom => self.lam_bot,
            Region::Interior(k, s) => self.r_interval(k, s),
        }
    }

    pub fn p_at(&self, q: UnitPoint) -> f64 {
        match self.region(q) {
            Region::Top => self.mu1 * q.w,
            Region::Bottom => self.lam_bot * q.u,
            Region::Interior(k, s) => self.r_interval(k, s) * q.u,
        }
    }

    pub fn p(&self, u: f64) -> f64 {
        self.p_at(UnitPoint::new(u))
    }

    /// `dp/du = dr/dσ + r`.
    pub fn dp_at(&self, q: UnitPoint) -> f64 {
        match self.region(q) {
            Region::Top => -self.mu1,
            Region::Bottom => self.lam_bot,
            Region::Interior(k, s) => self.dr_interval(k, s) + self.r_interval(k, s),
        }
    }

    pub fn dp(&self, u: f64) -> f64 {
        self.dp_at(UnitPoint::new(u))
    }

    /// Front coordinate with `z(1/2) = 0`.
    pub fn z_at(&self, q: UnitPoint) -> f64 {
        let n = self.sig.len();
        match self.region(q) {
            Region::Top => self.z[n - 1] + (q.w / self.w_top).ln() / self.mu1,
            Region::Bottom => self.z[0] - (q.ln_u() - self.sig[0]) / self.lam_bot,
            Region::Interior(k, s) => {
                self.z[k] - self.z_increment(k, self.sig[k], s)
            }
        }
    }

    pub fn z(&self, u: f64) -> f64 {
        self.z_at(UnitPoint::new(u))
    }

    /// `W(u) = ∫_{1/2}^u f/p² du`.
    pub fn w_at(&self, q: UnitPoint) -> f64 {
        let n = self.sig.len();
        match self.region(q) {
            Region::Top => {
                let a = -self.f.fprime1() / (self.mu1 * self.mu1);
                self.wint[n - 1] + a * (self.w_top / q.w).ln()
            }
            Region::Bottom => {
                let ds = self.sig[0] - q.ln_u();
                let du = self.u_bottom() - q.u;
                self.wint[0] - (self.f0 * ds + self.f1_lin * du) / (self.lam_bot * self.lam_bot)
            }
            Region::Interior(k, s) => {
                self.wint[k] + self.w_increment(k, self.sig[k], s)
            }
        }
    }

    /// Inverts `z` (decreasing in `u`).
    pub fn point_at_z(&self, z: f64) -> UnitPoint {
        let n = self.sig.len();
        if z <= self.z[n - 1] {
            let w = self.w_top * (self.mu1 * (z - self.z[n - 1])).exp();
            return UnitPoint::from_complement(w);
        }
        if z >= self.z[0] {
            let s = self.sig[0] - self.lam_bot * (z - self.z[0]);
            let u = s.exp();
            return UnitPoint { u, w: -s.exp_m1() };
        }
        // z is decreasing along the knots.
        let k = self.z.partition_point(|&x| x > z).clamp(1, n - 1) - 1;
        let (mut a, mut b) = (self.sig[k], self.sig[k + 1]);
        let zk = self.z[k];
        let zeta = |s: f64| zk - self.z_increment(k, self.sig[k], s) - z;
        // Newton from linear interpolation, safeguarded by the bracket.
        let mut s = a + (b - a) * (zk - z) / (zk - self.z[k + 1]);
        for _ in 0..60 {
            let v = zeta(s);
            if v > 0.0 {
                a = s;
            } else {
                b = s;
            }
            let step = v * self.r_interval(k, s);
            let next = s + step;
            let next = if next > a && next < b { next } else { 0.5 * (a + b) };
            if (next - s).abs() <= 1e-15 * s.abs().max(1.0) {
                s = next;
                break;
            }
            s = next;
        }
        UnitPoint { u: s.exp(), w: -s.exp_m1() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bistable_curve() -> (PhaseCurve, f64) {
        let a = 0.3;
        let f = ReactionTerm::bistable_cubic(a).unwrap();
        let c = (1.0 - 2.0 * a) / 2f64.sqrt();
        let k = 1.0 / 2f64.sqrt();
        let mu1 = (-c + (c * c + 4.0 * (1.0 - a)).sqrt()) / 2.0;
        let curve = PhaseCurve::from_closed_form(&f, c, mu1, |u| k * u * (1.0 - u), |u| k * (1.0 - 2.0 * u), 1e-6, 1e-8);
        (curve, k)
    }

    #[test]
    fn logit_points_keep_both_sides() {
        let q = UnitPoint::from_logit(50.0);
        assert!((q.w - (-50f64).exp()).abs() < 1e-30);
        let q = UnitPoint::from_logit(-50.0);
        assert!((q.u - (-50f64).exp()).abs() < 1e-30);
        assert!((UnitPoint::new(0.25).ln_w() - 0.75f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn closed_form_curve_reproduces_p_and_z() {
        let (curve, k) = bistable_curve();
        for i in 1..200 {
            let u = i as f64 / 200.0;
            assert!((curve.p(u) - k * u * (1.0 - u)).abs() < 1e-12);
            assert!((curve.dp(u) - k * (1.0 - 2.0 * u)).abs() < 1e-9);
            // z = √2 · ln((1-u)/u)
            let z = 2f64.sqrt() * ((1.0 - u) / u).ln();
            assert!((curve.z(u) - z).abs() < 1e-9, "u={u}: {} vs {z}", curve.z(u));
        }
        assert!(curve.z(0.5).abs() < 1e-14);
    }

    #[test]
    fn z_inversion_round_trips() {
        let (curve, _) = bistable_curve();
        for i in -40..=40 {
            let z = i as f64 * 0.5;
            let q = curve.point_at_z(z);
            let back = curve.z_at(q);
            assert!((back - z).abs() < 1e-9, "z={z} back={back}");
        }
    }

    #[test]
    fn balanced_integral_matches_closed_form() {
        // hadeler_rothe(4): p = √2 u(1-u), f/p² = (1+4u)/(2u(1-u))
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let c = 1.5 * 2f64.sqrt();
        let s = 2f64.sqrt();
        let mu1 = (-c + (c * c + 20.0).sqrt()) / 2.0;
        let curve = PhaseCurve::from_closed_form(&f, c, mu1, |u| s * u * (1.0 - u), |u| s * (1.0 - 2.0 * u), 1e-6, 1e-8);
        let exact = |u: f64| 0.5 * (u.ln() - 5.0 * (1.0 - u).ln()) - 0.5 * (0.5f64.ln() - 5.0 * 0.5f64.ln());
        for u in [1e-9, 1e-4, 0.1, 0.5, 0.9, 1.0 - 1e-6, 1.0 - 1e-10] {
            let got = curve.w_at(UnitPoint::new(u));
            assert!((got - exact(u)).abs() < 1e-5 * exact(u).abs().max(1.0), "u={u}: {got} vs {}", exact(u));
        }
    }
}
