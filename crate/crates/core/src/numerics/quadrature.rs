//! Adaptive quadrature.
//!
//! Two engines sit behind [`integrate`]:
//!
//! - a globally adaptive 7/15-point Gauss-Kronrod rule for integrands that are
//!   smooth up to both endpoints, and
//! - tanh-sinh (double exponential) quadrature when either endpoint is flagged
//!   singular. The substitution `x = tanh(π/2 · sinh t)` makes the transformed
//!   integrand decay double-exponentially, so algebraic endpoint singularities
//!   such as `u^{-1/2}` converge quickly.
//!
//! Node distances from the endpoints are computed directly rather than as
//! `mid ± half·x`, so the nodes closest to `lo` can reach far below machine
//! epsilon relative to the interval length.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

/// Maximum number of integrand evaluations for a single integral.
pub const NODE_BUDGET: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Which endpoints of the interval carry an integrable singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Endpoints {
    pub lo: bool,
    pub hi: bool,
}

impl Endpoints {
    pub const REGULAR: Endpoints = Endpoints { lo: false, hi: false };
    pub const LO: Endpoints = Endpoints { lo: true, hi: false };
    pub const HI: Endpoints = Endpoints { lo: false, hi: true };
    pub const BOTH: Endpoints = Endpoints { lo: true, hi: true };

    fn any(self) -> bool {
        self.lo || self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("relative tolerance {0} outside [1e-14, 1e-2]")]
    InvalidTolerance(f64),
    #[error("singular exponent {0} outside [0, 1): integral diverges")]
    Divergent(f64),
    #[error("quadrature did not converge within {budget} evaluations (best {best:?})")]
    NonConvergence { best: QuadratureResult, budget: usize },
}

impl QuadratureError {
    /// Best available estimate when the failure is a budget exhaustion.
    pub fn best_estimate(&self) -> Option<QuadratureResult> {
        match self {
            QuadratureError::NonConvergence { best, .. } => Some(*best),
            _ => None,
        }
    }
}

/// Integrates `f` over `[lo, hi]` to relative tolerance `rel_tol`.
///
/// With any endpoint flagged singular the tanh-sinh rule is used (it clusters
/// nodes at both ends, which is harmless for a regular end). Otherwise an
/// adaptive Gauss-Kronrod rule is used.
pub fn integrate<F>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    singular: Endpoints,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_args(lo, hi, rel_tol)?;
    if lo == hi {
        return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    if singular.any() {
        tanh_sinh(&f, lo, hi, rel_tol)
    } else {
        gauss_kronrod(&f, lo, hi, rel_tol)
    }
}

/// Integrates `(x - lo)^(-gamma) · psi(x)` over `[lo, hi]` for `gamma ∈ [0, 1)`.
///
/// The substitution `x = lo + (hi - lo)·v^q` with `q = 1/(1 - gamma)` absorbs
/// the algebraic factor exactly, so `psi` is only ever evaluated as a regular
/// function. This stays accurate for `gamma` close to 1, where plain
/// tanh-sinh on `x` would lose the mass hidden below the smallest node.
pub fn integrate_left_power<F>(
    psi: F,
    lo: f64,
    hi: f64,
    gamma: f64,
    rel_tol: f64,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    check_args(lo, hi, rel_tol)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(QuadratureError::Divergent(gamma));
    }
    let q = 1.0 / (1.0 - gamma);
    let width = hi - lo;
    let scale = q * width.powf(1.0 - gamma);
    let g = |v: f64| psi(lo + width * v.powf(q));
    let mut res = tanh_sinh(&g, 0.0, 1.0, rel_tol).map_err(|e| match e {
        QuadratureError::NonConvergence { best, budget } => QuadratureError::NonConvergence {
            best: QuadratureResult {
                value: best.value * scale,
                error_estimate: best.error_estimate * scale,
                evaluations: best.evaluations,
            },
            budget,
        },
        other => other,
    })?;
    res.value *= scale;
    res.error_estimate *= scale;
    Ok(res)
}

fn check_args(lo: f64, hi: f64, rel_tol: f64) -> Result<(), QuadratureError> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(QuadratureError::InvalidInterval { lo, hi });
    }
    if !(1e-14..=1e-2).contains(&rel_tol) {
        return Err(QuadratureError::InvalidTolerance(rel_tol));
    }
    Ok(())
}

fn target(rel_tol: f64, value: f64, l1: f64) -> f64 {
    // Integrals that cancel to (near) zero are judged against the L1 mass.
    rel_tol * value.abs().max(1e-8 * l1)
}

fn tanh_sinh<F>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    const T_MAX: f64 = 6.5;
    const MIN_LEVEL: usize = 3;
    let half = 0.5 * (hi - lo);
    let mid = lo + half;

    // Weighted sum over nodes ±t, plus the |w f| mass.
    let eval_pair = |t: f64, evals: &mut usize| -> (f64, f64, bool) {
        let v = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * v).exp();
        let delta = half * 2.0 * e / (1.0 + e);
        let w = half * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let x_lo = lo + delta;
        let x_hi = hi - delta;
        if x_lo <= lo && x_hi >= hi {
            return (0.0, 0.0, false);
        }
        let mut s = 0.0;
        let mut a = 0.0;
        for x in [x_lo, x_hi] {
            if x > lo && x < hi {
                *evals += 1;
                let y = f(x);
                if y.is_finite() {
                    s += w * y;
                    a += (w * y).abs();
                }
            }
        }
        (s, a, true)
    };

    let mut evals = 1;
    let f_mid = f(mid);
    let mut sum = if f_mid.is_finite() { half * FRAC_PI_2 * f_mid } else { 0.0 };
    let mut abs_sum = sum.abs();
    let mut h = 1.0;
    let mut k = 1usize;
    while k as f64 * h <= T_MAX {
        let (s, a, live) = eval_pair(k as f64 * h, &mut evals);
        if !live {
            break;
        }
        sum += s;
        abs_sum += a;
        k += 1;
    }
    let mut estimate = h * sum;
    let mut error;
    let mut level = 0;
    loop {
        level += 1;
        h *= 0.5;
        let mut k = 1usize;
        loop {
            let t = (2 * k - 1) as f64 * h;
            if t > T_MAX {
                break;
            }
            let (s, a, live) = eval_pair(t, &mut evals);
            if !live {
                break;
            }
            sum += s;
            abs_sum += a;
            k += 1;
        }
        let next = h * sum;
        let l1 = h * abs_sum;
        error = (next - estimate).abs().max(4.0 * f64::EPSILON * l1);
        estimate = next;
        if level >= MIN_LEVEL && error <= target(rel_tol, estimate, l1) {
            return Ok(QuadratureResult { value: estimate, error_estimate: error, evaluations: evals });
        }
        if evals >= NODE_BUDGET {
            break;
        }
    }
    Err(QuadratureError::NonConvergence {
        best: QuadratureResult { value: estimate, error_estimate: error, evaluations: evals },
        budget: NODE_BUDGET,
    })
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut a = (WGK[7] * fc).abs();
    for j in 0..7 {
        let dx = r * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += WGK[j] * (f1 + f2);
        a += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Segment { lo, hi, value: k * r, error: ((k - g) * r).abs(), abs: a * r.abs() }
}

fn gauss_kronrod<F>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let first = kronrod15(f, lo, hi);
    let mut evals = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut l1 = first.abs;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let floor = 50.0 * f64::EPSILON * l1;
        if error <= target(rel_tol, value, l1).max(floor) {
            return Ok(QuadratureResult { value, error_estimate: error.max(floor), evaluations: evals });
        }
        if evals + 30 > NODE_BUDGET {
            break;
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let m = 0.5 * (worst.lo + worst.hi);
        if m <= worst.lo || m >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = kronrod15(f, worst.lo, m);
        let right = kronrod15(f, m, worst.hi);
        evals += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        l1 += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value_sum: f64 = heap.iter().map(|s| s.value).sum();
    let error_sum: f64 = heap.iter().map(|s| s.error).sum();
    Err(QuadratureError::NonConvergence {
        best: QuadratureResult { value: value_sum, error_estimate: error_sum, evaluations: evals },
        budget: NODE_BUDGET,
    })
}
