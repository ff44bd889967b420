use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisectError {
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid bracket [{lo}, {hi}] or tolerance {x_tol}")]
    InvalidBracket { lo: f64, hi: f64, x_tol: f64 },
}

/// Final bracket of a bisection. `sign_lo` and `sign_hi` are the (opposite)
/// signs observed at the two ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub sign_lo: f64,
    pub sign_hi: f64,
    pub iterations: usize,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection on a sign-valued map.
///
/// Only the sign of `s` matters; an exact zero collapses the bracket onto that
/// point. The returned bracket has width `<= x_tol` (or is as narrow as
/// floating point allows).
pub fn bisect<S>(mut s: S, lo: f64, hi: f64, x_tol: f64) -> Result<Bracket, BisectError>
where
    S: FnMut(f64) -> f64,
{
    if !(lo < hi) || !(x_tol > 0.0) {
        return Err(BisectError::InvalidBracket { lo, hi, x_tol });
    }
    let sign_lo = s(lo).signum();
    let sign_hi = s(hi).signum();
    if sign_lo == sign_hi {
        return Err(BisectError::NoSignChange { lo, hi });
    }
    let mut b = Bracket { lo, hi, sign_lo, sign_hi, iterations: 0 };
    while b.width() > x_tol {
        let mid = b.midpoint();
        if mid <= b.lo || mid >= b.hi {
            break;
        }
        b.iterations += 1;
        let sm = s(mid);
        if sm == 0.0 {
            b.lo = mid;
            b.hi = mid;
            break;
        }
        if sm.signum() == b.sign_lo {
            b.lo = mid;
        } else {
            b.hi = mid;
        }
    }
    Ok(b)
}
