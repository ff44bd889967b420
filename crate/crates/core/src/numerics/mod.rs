//! Shared numerical kernels: quadrature, bisection and an adaptive ODE stepper.

mod ode;
mod quadrature;
mod roots;

pub use ode::{hermite, ode_solve, OdeError, StepControl, Termination, Trajectory};
pub use quadrature::{
    integrate, integrate_left_power, Endpoints, QuadratureError, QuadratureResult, NODE_BUDGET,
};
pub use roots::{bisect, BisectError, Bracket};

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// 5-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    X.iter().zip(W.iter()).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r
}

/// A number with 12 significant digits.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    // Prefer plain notation in the usual range, trimmed of trailing zeros.
    let mag = v.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let plain = format!("{:.*}", decimals, v);
        if plain.contains('.') {
            plain.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            plain
        }
    } else {
        format!("{:.*e}", 11, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.375) * (x - 0.375) + 1.5625, 0.0, 1.0, 1e-12);
        assert!((x - 0.375).abs() < 1e-6);
        assert!((fx - 1.5625).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre5(|x| x.powi(9) + x.powi(4), 0.0, 1.0);
        assert!((v - (0.1 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn twelve_digit_formatting() {
        assert_eq!(fmt12(2.0), "2");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(16.0 / 15.0), "1.06666666667");
        assert_eq!(fmt12(-0.5), "-0.5");
        assert_eq!(fmt12(1.5e-9), "1.50000000000e-9");
        assert_eq!(fmt12(0.0), "0");
    }
}
