//! The spatial front `u(z)` reconstructed from `p(u)` through `dz = -du/p`.

use crate::numerics::gauss_legendre5;

use super::{OracleError, PhasePlaneSolution, UnitPoint};

const TARGET_DZ: f64 = 0.01;

/// Front samples on a uniform `z` grid with the gauge `u(0) = 1/2`.
///
/// `uzz` is the second derivative `c·p - f`, so every cell carries a quintic
/// Hermite interpolant of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontProfile {
    pub c: f64,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    /// `1 - u`, kept separately for precision near the left end.
    pub w: Vec<f64>,
    pub uz: Vec<f64>,
    pub uzz: Vec<f64>,
}

/// Builds the front on `u ∈ [δ, 1 - δ]`.
pub fn front_profile(sol: &PhasePlaneSolution, delta: f64) -> Result<FrontProfile, OracleError> {
    if !(1e-8..=1e-3).contains(&delta) {
        return Err(OracleError::InvalidDelta(delta));
    }
    if let Some(i) = sol.p.iter().position(|&p| !(p > 0.0)) {
        return Err(OracleError::NonPositive(sol.u_grid[i]));
    }
    let curve = sol.curve();
    let f = curve.reaction();
    let z_left = curve.z_at(UnitPoint::from_complement(delta));
    let z_right = curve.z_at(UnitPoint::new(delta));
    let n = ((z_right - z_left) / TARGET_DZ).ceil().max(2.0) as usize;
    let mut prof = FrontProfile {
        c: sol.c,
        z: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        w: Vec::with_capacity(n + 1),
        uz: Vec::with_capacity(n + 1),
        uzz: Vec::with_capacity(n + 1),
    };
    for i in 0..=n {
        let (z, q) = if i == 0 {
            (z_left, UnitPoint::from_complement(delta))
        } else if i == n {
            (z_right, UnitPoint::new(delta))
        } else {
            let z = z_left + (z_right - z_left) * i as f64 / n as f64;
            (z, curve.point_at_z(z))
        };
        let p = curve.p_at(q);
        if !(p > 0.0) {
            return Err(OracleError::NonPositive(q.u));
        }
        prof.z.push(z);
        prof.u.push(q.u);
        prof.w.push(q.w);
        prof.uz.push(-p);
        prof.uzz.push(sol.c * p - f.f(q.u));
    }
    Ok(prof)
}

impl FrontProfile {
    /// Builds a profile from raw samples (uniform or not).
    pub fn from_samples(c: f64, z: Vec<f64>, u: Vec<f64>, uz: Vec<f64>, uzz: Vec<f64>) -> Self {
        let w = u.iter().map(|&x| 1.0 - x).collect();
        FrontProfile { c, z, u, w, uz, uzz }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `(u, u_z)` at `z` inside the grid by quintic Hermite interpolation.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let n = self.z.len();
        let k = self.z.partition_point(|&x| x <= z).clamp(1, n - 1) - 1;
        self.eval_cell(k, z)
    }

    fn eval_cell(&self, k: usize, z: f64) -> (f64, f64) {
        let h = self.z[k + 1] - self.z[k];
        let t = (z - self.z[k]) / h;
        quintic(
            t,
            h,
            [self.u[k], self.uz[k], self.uzz[k]],
            [self.u[k + 1], self.uz[k + 1], self.uzz[k + 1]],
        )
    }

    /// `∫ g(z, u, u_z) dz` over the grid, cell by cell with 5-point
    /// Gauss-Legendre on the quintic interpolant.
    pub fn integrate<G: Fn(f64, f64, f64) -> f64>(&self, g: G) -> f64 {
        let mut total = 0.0;
        for k in 0..self.z.len().saturating_sub(1) {
            total += gauss_legendre5(
                |z| {
                    let (u, uz) = self.eval_cell(k, z);
                    g(z, u, uz)
                },
                self.z[k],
                self.z[k + 1],
            );
        }
        total
    }

    /// Decay rate of `u` at the right end, `-u_z/u`.
    pub fn right_rate(&self) -> f64 {
        let n = self.z.len() - 1;
        -self.uz[n] / self.u[n]
    }

    /// Decay rate of `1 - u` at the left end, `-u_z/(1 - u)`.
    pub fn left_rate(&self) -> f64 {
        -self.uz[0] / self.w[0]
    }
}

/// Quintic Hermite value and derivative on one cell from `(y, y', y'')` at
/// both ends; `t ∈ [0, 1]`, `h` the cell width.
fn quintic(t: f64, h: f64, a: [f64; 3], b: [f64; 3]) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let d3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let hh = h * h;
    let y = h0 * a[0] + h1 * h * a[1] + h2 * hh * a[2] + h3 * hh * b[2] + h4 * h * b[1] + h5 * b[0];
    let dy = (d0 * a[0] + d1 * h * a[1] + d2 * hh * a[2] + d3 * hh * b[2] + d4 * h * b[1] + d5 * b[0]) / h;
    (y, dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{departure_slope, DecayBranch, PhaseCurve, EPS};
    use crate::reaction::ReactionTerm;

    fn ansatz(f: &ReactionTerm, c: f64, k: f64) -> PhasePlaneSolution {
        let mu1 = departure_slope(c, f.fprime1()).unwrap();
        let curve = PhaseCurve::from_closed_form(f, c, mu1, |u| k * u * (1.0 - u), |u| k * (1.0 - 2.0 * u), 1e-6, EPS);
        PhasePlaneSolution::from_curve(curve, DecayBranch::Steep).unwrap()
    }

    #[test]
    fn quintic_reproduces_polynomials() {
        let y = |x: f64| 1.0 + 2.0 * x - x.powi(3) + 0.5 * x.powi(5);
        let dy = |x: f64| 2.0 - 3.0 * x * x + 2.5 * x.powi(4);
        let d2 = |x: f64| -6.0 * x + 10.0 * x.powi(3);
        let (x0, x1) = (0.3, 0.8);
        let h = x1 - x0;
        for i in 0..=10 {
            let x = x0 + h * i as f64 / 10.0;
            let (v, d) = quintic((x - x0) / h, h, [y(x0), dy(x0), d2(x0)], [y(x1), dy(x1), d2(x1)]);
            assert!((v - y(x)).abs() < 1e-13);
            assert!((d - dy(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn bistable_profile_is_logistic() {
        let f = ReactionTerm::bistable_cubic(0.3).unwrap();
        let sol = ansatz(&f, 0.4 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        let prof = front_profile(&sol, 1e-6).unwrap();
        for (&z, &u) in prof.z.iter().zip(&prof.u) {
            let exact = 1.0 / (1.0 + (z / 2f64.sqrt()).exp());
            assert!((u - exact).abs() < 1e-4, "z={z}: {u} vs {exact}");
        }
        assert!(prof.u.windows(2).all(|w| w[1] < w[0]));
        assert!((prof.u[0] - (1.0 - 1e-6)).abs() < 1e-12);
        assert!((prof.u[prof.len() - 1] - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn gauge_and_slope_at_origin() {
        let f = ReactionTerm::hadeler_rothe(4.0).unwrap();
        let sol = ansatz(&f, 1.5 * 2f64.sqrt(), 2f64.sqrt());
        let prof = front_profile(&sol, 1e-6).unwrap();
        let (u0, uz0) = prof.eval(0.0);
        assert!((u0 - 0.5).abs() < 1e-12);
        assert!((uz0 + 2f64.sqrt() / 4.0).abs() < 1e-9);
        for i in 0..prof.len() {
            assert!((prof.uz[i] + sol.p_at(prof.u[i])).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        let f = ReactionTerm::bistable_cubic(0.3).unwrap();
        let sol = ansatz(&f, 0.4 / 2f64.sqrt(), 1.0 / 2f64.sqrt());
        assert!(matches!(front_profile(&sol, 0.1), Err(OracleError::InvalidDelta(_))));
    }
}
