//! Regularized incomplete beta function and the lower credible bound used
//! by the conservative measures.
//!
//! The bound for `k` successes in `n` trials is the `alpha`-quantile of the
//! Beta(k + 1, n - k + 1) posterior under a uniform prior.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const CF_MAX_ITERS: usize = 500;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

const INVERSE_MAX_ITERS: usize = 200;
const INVERSE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    k: u64,
    n: u64,
    alpha: f64,
}

impl BoundParams {
    pub fn new(k: u64, n: u64, alpha: f64) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter(format!(
                "successes {k} exceed trials {n}"
            )));
        }
        check_alpha(alpha)?;
        Ok(BoundParams { k, n, alpha })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITERS {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `I_x(a, b)`, the regularized incomplete beta function.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in [0, 1], got {x}"
        )));
    }
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "shape parameters must be positive and finite, got a={a} b={b}"
        )));
    }
    Ok(reg_inc_beta_unchecked(x, a, b))
}

fn reg_inc_beta_unchecked(x: f64, a: f64, b: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        // I_x(a, b) = 1 - I_{1-x}(b, a); the fraction converges fast on this side.
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_density(x: f64, a: f64, b: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

/// Solves `I_x(a, b) = p` for `x` with a bracketed Newton iteration that
/// falls back to bisection whenever a step leaves the bracket.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = a / (a + b);
    for _ in 0..INVERSE_MAX_ITERS {
        let f = reg_inc_beta_unchecked(x, a, b) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = beta_density(x, a, b);
        let newton = x - f / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= INVERSE_TOL * x.max(INVERSE_TOL) || hi - lo <= INVERSE_TOL {
            return next;
        }
        x = next;
    }
    x
}

/// Lower credible bound `L(k, n, alpha)`: the unique `L` with
/// `I_L(k + 1, n - k + 1) = alpha`. For `n = 0` this is `alpha` itself.
pub fn lower_credible_bound(p: &BoundParams) -> f64 {
    let a = p.k as f64 + 1.0;
    let b = (p.n - p.k) as f64 + 1.0;
    beta_quantile(p.alpha, a, b)
}

/// Convenience wrapper validating `(k, n, alpha)` first.
pub fn lower_bound(k: u64, n: u64, alpha: f64) -> Result<f64> {
    Ok(lower_credible_bound(&BoundParams::new(k, n, alpha)?))
}
