//! Bessel functions of the first kind, real order, and their zeros.
//!
//! Small arguments use the power series. Everywhere else the value comes
//! from Miller's backward recurrence normalized by the Neumann sum
//! `(x/2)^ν / Γ(ν+1) = Σ_k d_k J_{ν+2k}(x)`, which is accurate for every
//! order and argument in the supported range without an asymptotic branch.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest supported order.
pub const MAX_ORDER: f64 = 50.0;
/// Largest supported zero index (exclusive).
pub const MAX_ZERO_INDEX: usize = 100;

const SERIES_LIMIT: f64 = 5.0;
const RESCALE: f64 = 1e200;

/// `J_ν(x)` for `ν ≥ 0`, `x ≥ 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j needs nu >= 0 and x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        series(nu, x)
    } else {
        miller(nu, x)
    }
}

/// `(x/2)^ν / Γ(ν+1)`.
fn leading(nu: f64, x: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else {
        (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp()
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    leading(nu, x) * sum
}

fn miller(nu: f64, x: f64) -> f64 {
    // Starting order well beyond the turning point so the minimal solution dominates.
    let top = (x.max(nu) + 30.0 + 12.0 * x.cbrt()).ceil() as usize;
    let top = top + top % 2;

    let mut above = 0.0; // J_{ν+k+1}
    let mut cur = 1e-30; // J_{ν+k}
    let mut norm = 0.0;
    // Neumann coefficients d_{k/2} for even k, built upward then used downward.
    let mut d = Vec::with_capacity(top / 2 + 1);
    d.push(1.0);
    let mut g = 1.0;
    for i in 1..=top / 2 {
        let i_f = i as f64;
        if i > 1 {
            g *= (nu + i_f - 1.0) / i_f;
        }
        d.push(if nu == 0.0 { 2.0 } else { (nu + 2.0 * i_f) * g });
    }
    for k in (0..=top).rev() {
        if k % 2 == 0 {
            norm += d[k / 2] * cur;
        }
        if k == 0 {
            break;
        }
        let below = 2.0 * (nu + k as f64) / x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            above /= RESCALE;
            norm /= RESCALE;
        }
    }
    leading(nu, x) * cur / norm
}

/// The `n`-th positive zero of `J_ν`, to better than 1e−12 absolute.
pub fn bessel_nu_zero(nu: f64, n: usize) -> Result<f64> {
    if !(nu.is_finite() && (0.0..MAX_ORDER).contains(&nu)) {
        return Err(Error::invalid("nu", format!("must lie in [0, {MAX_ORDER}), got {nu}")));
    }
    if !(1..MAX_ZERO_INDEX).contains(&n) {
        return Err(Error::invalid("n", format!("must lie in [1, {MAX_ZERO_INDEX}), got {n}")));
    }
    // Zeros are more than 2 apart and the first lies beyond ν, so a unit
    // scan starting at ν sees every sign change.
    const STEP: f64 = 0.5;
    let limit = nu + std::f64::consts::PI * (n as f64 + 0.5 * nu + 2.0) + 10.0;
    let mut a = nu.max(0.5);
    let mut fa = bessel_j(nu, a);
    let mut found = 0;
    while a < limit {
        let b = a + STEP;
        let fb = bessel_j(nu, b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == n {
                return Ok(bisect(|t| bessel_j(nu, t), a, b, fa));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::numeric("bessel_nu_zero", format!("no bracket for zero {n} of J_{nu} below x = {limit}")))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
