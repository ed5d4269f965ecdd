//! Real-argument special functions used by the lattice-sum closed forms.
//!
//! `gamma` and `q_func` delegate to `libm`; `bessel_k` evaluates the modified
//! Bessel function of the second kind for real order with Temme's series for
//! small arguments and the Steed (Thompson-Barnett) continued fraction for
//! large ones, followed by forward recurrence in the order.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Values of `K_nu` below this are flushed to zero.
pub const BESSEL_K_FLUSH: f64 = 1e-300;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const SERIES_SWITCH: f64 = 2.0;

/// Taylor coefficients of `1/Gamma(z)` around zero, `c[k]` multiplies `z^(k+1)`.
const RECIP_GAMMA_TAYLOR: [f64; 12] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_34,
    -0.009_621_971_527_876_974,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065,
    -0.000_215_241_674_114_951,
    0.000_128_050_282_388_116_2,
    -0.000_020_134_854_780_788_24,
];

/// Euler gamma function for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "gamma",
            format!("x = {x} must be finite and > 0"),
        ));
    }
    Ok(libm::tgamma(x))
}

/// Gaussian tail probability `Q(x) = P[N(0,1) > x]`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Modified Bessel function of the second kind `K_nu(y)` for real `nu >= 0`, `y > 0`.
pub fn bessel_k(nu: f64, y: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::domain(
            "bessel_k",
            format!("order nu = {nu} must be >= 0"),
        ));
    }
    if !(y > 0.0) || y.is_nan() {
        return Err(Error::domain(
            "bessel_k",
            format!("argument y = {y} must be > 0"),
        ));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }

    // nu = steps + frac with frac in [-1/2, 1/2)
    let steps = (nu + 0.5).floor();
    let frac = nu - steps;
    let (mut k_lo, mut k_hi) = if y < SERIES_SWITCH {
        temme_series(frac, y)
    } else {
        steed_fraction(frac, y)
    };

    let two_over_y = 2.0 / y;
    for i in 1..=(steps as u32) {
        let next = (frac + f64::from(i)) * two_over_y * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
    }
    Ok(if k_lo < BESSEL_K_FLUSH { 0.0 } else { k_lo })
}

/// Returns `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` for `|mu| <= 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    if mu.abs() < 0.05 {
        // 1/Gamma(1+mu) = sum_k c[k] mu^k; split into even/odd parts to avoid
        // the cancellation in (1/Gamma(1-mu) - 1/Gamma(1+mu)) / 2mu.
        let mu2 = mu * mu;
        let mut even = 0.0;
        let mut odd = 0.0;
        for k in (0..RECIP_GAMMA_TAYLOR.len()).rev() {
            if k % 2 == 0 {
                even = even * mu2 + RECIP_GAMMA_TAYLOR[k];
            } else {
                odd = odd * mu2 + RECIP_GAMMA_TAYLOR[k];
            }
        }
        let plus = even + mu * odd;
        let minus = even - mu * odd;
        (-odd, even, plus, minus)
    } else {
        let plus = 1.0 / libm::tgamma(1.0 + mu);
        let minus = 1.0 / libm::tgamma(1.0 - mu);
        (
            (minus - plus) / (2.0 * mu),
            0.5 * (minus + plus),
            plus,
            minus,
        )
    }
}

/// `(K_mu(y), K_{mu+1}(y))` for `|mu| <= 1/2` and small `y`.
fn temme_series(mu: f64, y: f64) -> (f64, f64) {
    let half_y = 0.5 * y;
    let pi_mu = PI * mu;
    let fact = if pi_mu.abs() < EPS {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let d = -half_y.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, recip_plus, recip_minus) = temme_gammas(mu);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let e = e.exp();
    let mut p = 0.5 * e / recip_plus;
    let mut q = 0.5 / (e * recip_minus);
    let mut c = 1.0;
    let d = half_y * half_y;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= d / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / y)
}

/// `(K_mu(y), K_{mu+1}(y))` for `|mu| <= 1/2` and `y >= 2`.
fn steed_fraction(mu: f64, y: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + y);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k_mu = (PI / (2.0 * y)).sqrt() * (-y).exp() / s;
    let k_mu1 = k_mu * (mu + y + 0.5 - h) / y;
    (k_mu, k_mu1)
}
