//! Scalar Dormand-Prince 5(4) integrator with dense output and stop events.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `None` picks 1% of the span.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Resolution in `x` for locating a stop event.
    pub x_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 200_000,
            x_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at x = {x} (y = {y})")]
    StepUnderflow { x: f64, y: f64 },
    #[error("step budget exhausted at x = {x} (y = {y})")]
    TooManySteps { x: f64, y: f64 },
    #[error("non-finite derivative at the initial point x = {x}")]
    NonFiniteStart { x: f64 },
}

impl OdeError {
    /// Last accepted state before the failure.
    pub fn last_state(&self) -> (f64, f64) {
        match *self {
            OdeError::StepUnderflow { x, y } | OdeError::TooManySteps { x, y } => (x, y),
            OdeError::NonFiniteStart { x } => (x, f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    Stopped,
}

/// Accepted samples `(x, y, dy/dx)` in integration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> (f64, f64) {
        (*self.x.last().unwrap(), *self.y.last().unwrap())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Fourth-order continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
struct Dense {
    x0: f64,
    h: f64,
    r: [f64; 5],
}

impl Dense {
    fn eval(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        let s = 1.0 - t;
        self.r[0] + t * (self.r[1] + s * (self.r[2] + t * (self.r[3] + s * self.r[4])))
    }
}

/// Integrates `dy/dx = rhs(x, y)` from `x0` toward `x1` (either direction).
///
/// After each accepted step `stop(x, y)` is tested; when it first turns true
/// the crossing is located on the dense output to within `x_tol` and becomes
/// the final sample. A non-finite derivative inside a trial step is treated as
/// a rejected step.
pub fn ode_solve<R, S>(
    mut rhs: R,
    x0: f64,
    y0: f64,
    x1: f64,
    ctl: &StepControl,
    mut stop: S,
) -> Result<Trajectory, OdeError>
where
    R: FnMut(f64, f64) -> f64,
    S: FnMut(f64, f64) -> bool,
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, y);
    if !k1.is_finite() {
        return Err(OdeError::NonFiniteStart { x });
    }
    let mut traj = Trajectory { x: vec![x], y: vec![y], dy: vec![k1], termination: Termination::ReachedEnd };
    if span == 0.0 || stop(x, y) {
        traj.termination = if span == 0.0 { Termination::ReachedEnd } else { Termination::Stopped };
        return Ok(traj);
    }
    let mut h = ctl.h_init.unwrap_or(0.01 * span).min(ctl.h_max).min(span).max(ctl.h_min);
    let mut steps = 0usize;
    loop {
        if steps >= ctl.max_steps {
            return Err(OdeError::TooManySteps { x, y });
        }
        steps += 1;
        let remaining = (x1 - x).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;
        let k2 = rhs(x + C2 * hs, y + hs * A21 * k1);
        let k3 = rhs(x + C3 * hs, y + hs * (A31 * k1 + A32 * k2));
        let k4 = rhs(x + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = rhs(x + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = rhs(x + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = rhs(x + hs, y_new);
        let err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = ctl.atol + ctl.rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if !ratio.is_finite() || !y_new.is_finite() || !k7.is_finite() {
            h *= 0.25;
            if h < ctl.h_min {
                return Err(OdeError::StepUnderflow { x, y });
            }
            continue;
        }
        if ratio > 1.0 {
            h *= (0.9 * ratio.powf(-0.2)).max(0.2);
            if h < ctl.h_min {
                return Err(OdeError::StepUnderflow { x, y });
            }
            continue;
        }
        let x_new = if last { x1 } else { x + hs };
        if stop(x_new, y_new) {
            let ydiff = y_new - y;
            let bspl = hs * k1 - ydiff;
            let dense = Dense {
                x0: x,
                h: hs,
                r: [
                    y,
                    ydiff,
                    bspl,
                    ydiff - hs * k7 - bspl,
                    hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
                ],
            };
            let (mut a, mut b) = (x, x_new);
            while (b - a).abs() > ctl.x_tol {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if stop(m, dense.eval(m)) {
                    b = m;
                } else {
                    a = m;
                }
            }
            let ys = dense.eval(b);
            traj.x.push(b);
            traj.y.push(ys);
            traj.dy.push(rhs(b, ys));
            traj.termination = Termination::Stopped;
            return Ok(traj);
        }
        x = x_new;
        y = y_new;
        k1 = k7;
        traj.x.push(x);
        traj.y.push(y);
        traj.dy.push(k1);
        if last {
            return Ok(traj);
        }
        let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(ctl.h_max);
    }
}

/// Cubic Hermite interpolation on one interval.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ctl = StepControl::default();
        let t = ode_solve(|_, y| -y, 0.0, 1.0, 1.0, &ctl, |_, _| false).unwrap();
        let (x, y) = t.last();
        assert_eq!(x, 1.0);
        assert!((y - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(t.termination, Termination::ReachedEnd);
    }

    #[test]
    fn backward_direction() {
        let ctl = StepControl::default();
        let t = ode_solve(|_, y| y, 1.0, 1.0, 0.0, &ctl, |_, _| false).unwrap();
        assert!((t.last().1 - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn stop_event_is_located() {
        let ctl = StepControl { x_tol: 1e-12, ..StepControl::default() };
        let t = ode_solve(|_, _| -1.0, 0.0, 0.5, 10.0, &ctl, |_, y| y <= 0.0).unwrap();
        assert_eq!(t.termination, Termination::Stopped);
        assert!((t.last().0 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        let ctl = StepControl { rtol: 1e-12, atol: 1e-14, x_tol: 1e-14, ..StepControl::default() };
        let t = ode_solve(|x, _| x.cos(), 0.0, 0.0, 10.0, &ctl, |_, y| y >= 0.9).unwrap();
        assert!((t.last().0 - 0.9f64.asin()).abs() < 1e-9);
    }

    #[test]
    fn underflow_reports_last_state() {
        let ctl = StepControl { h_min: 1e-10, ..StepControl::default() };
        // y' = 1/(1-x) blows up at x = 1.
        let err = ode_solve(|x, _| 1.0 / (1.0 - x).sqrt(), 0.0, 0.0, 2.0, &ctl, |_, _| false).unwrap_err();
        let (x, y) = err.last_state();
        assert!(x < 1.0 && x > 0.9 && y.is_finite());
    }

    #[test]
    fn linear_growth_matches_exponential() {
        let ctl = StepControl::default();
        for lambda in [-10.0, -3.0, -0.5, 0.5, 3.0, 10.0] {
            let t = ode_solve(move |_, y| lambda * y, 0.0, 1.0, 1.0, &ctl, |_, _| false).unwrap();
            let exact = f64::exp(lambda);
            assert!(((t.last().1 - exact) / exact).abs() < 1e-7, "lambda={lambda}");
        }
    }
}
