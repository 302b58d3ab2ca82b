//! Modified Bessel functions `I_nu`, `K_nu` of real order and positive
//! real argument.
//!
//! * `I_nu`, `nu > -1`: the positive-term power series up to
//!   `x = max(30, nu^2)`, the Hankel expansion of `e^{-x} I_nu(x)` above it.
//!   Every series term is positive for `nu > -1`, so there is no
//!   cancellation, and the neglected exponentially small part of the
//!   expansion is `O(e^{-2x})`.
//! * `K_nu`: Temme's series for `x < 2` and Steed's continued fraction
//!   above, followed by forward recurrence in the order. The integral
//!   `int_0^inf e^{-x cosh t} cosh(nu t) dt` by adaptive quadrature is kept
//!   as [`bessel_k_integral`] to check it against.
//!
//! Scaled variants return `e^{-x} I_nu(x)` and `e^{x} K_nu(x)`; kernel code
//! works with them exclusively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_points, Tolerance};

/// Argument above which unscaled exponentials are no longer safe to form.
pub const OVERFLOW_CAP: f64 = 600.0;

/// A Bessel value, possibly stored with its exponential factor removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselEval {
    pub order: f64,
    pub value: f64,
    /// `value` holds `e^{-x} I_nu(x)` (or `e^{x} K_nu(x)`).
    pub log_scaled: bool,
}

impl BesselEval {
    /// `I_nu(x)`, scaled automatically above [`OVERFLOW_CAP`].
    pub fn i(nu: f64, x: f64) -> Result<Self> {
        let log_scaled = x > OVERFLOW_CAP;
        Ok(Self { order: nu, value: bessel_i(nu, x, log_scaled)?, log_scaled })
    }

    /// `K_nu(x)`, scaled automatically above [`OVERFLOW_CAP`].
    pub fn k(nu: f64, x: f64) -> Result<Self> {
        let log_scaled = x > OVERFLOW_CAP;
        Ok(Self { order: nu, value: bessel_k(nu, x, log_scaled)?, log_scaled })
    }
}

fn series_limit(nu: f64) -> f64 {
    (nu * nu).max(30.0)
}

fn check_i_args(nu: f64, x: f64) -> Result<()> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("I_nu needs nu > -1, got {nu}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("I_nu needs finite x >= 0, got {x}")));
    }
    Ok(())
}

/// `I_nu(x)` (or `e^{-x} I_nu(x)` when `scaled`).
pub fn bessel_i(nu: f64, x: f64, scaled: bool) -> Result<f64> {
    check_i_args(nu, x)?;
    if x == 0.0 {
        return match nu {
            0.0 => Ok(1.0),
            n if n > 0.0 => Ok(0.0),
            _ => Err(Error::Domain(format!("I_nu(0) is infinite for nu = {nu} < 0"))),
        };
    }
    let s = i_scaled(nu, x);
    Ok(if scaled { s } else { s * x.exp() })
}

/// `ln I_nu(x)` for `x > 0`; finite for every representable argument.
pub fn ln_bessel_i(nu: f64, x: f64) -> Result<f64> {
    check_i_args(nu, x)?;
    if x == 0.0 {
        return bessel_i(nu, x, false).map(f64::ln);
    }
    if x <= series_limit(nu) {
        let (ln_t0, sum) = i_series_parts(nu, x);
        Ok(ln_t0 + sum.ln())
    } else {
        Ok(i_scaled(nu, x).ln() + x)
    }
}

/// `e^{-x} I_nu(x)` for `x > 0`, `nu > -1`.
fn i_scaled(nu: f64, x: f64) -> f64 {
    if x <= series_limit(nu) {
        let (ln_t0, sum) = i_series_parts(nu, x);
        if nu + 1.0 < 170.0 {
            // direct powers keep the last few bits that ln/exp would lose
            let t0 = (0.5 * x).powf(nu) / libm::tgamma(nu + 1.0);
            if t0.is_finite() && t0 > 0.0 {
                return t0 * sum * (-x).exp();
            }
        }
        (ln_t0 - x + sum.ln()).exp()
    } else {
        i_hankel_scaled(nu, x)
    }
}

/// `(ln t0, sum_k t_k / t0)` for the power series of `I_nu`.
fn i_series_parts(nu: f64, x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum && k > 0.5 * x {
            break;
        }
    }
    (nu * (0.5 * x).ln() - libm::lgamma(nu + 1.0), sum)
}

/// Hankel expansion of `e^{-x} I_nu(x)`, truncated at its smallest term.
fn i_hankel_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() && kf > nu.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `e^{x} K_nu(x)` from `int_0^inf exp(-2x sinh^2(t/2)) cosh(nu t) dt`.
fn k_integral_scaled(nu: f64, x: f64) -> Result<f64> {
    let nu = nu.abs();
    let phase = |t: f64| {
        let s = (0.5 * t).sinh();
        -2.0 * x * s * s
    };
    // Peak of -x(cosh t - 1) + nu t sits at sinh t = nu / x.
    let t_peak = if nu > 0.0 { (nu / x).asinh() } else { 0.0 };
    let peak = phase(t_peak) + nu * t_peak;
    let mut t_end = t_peak.max(1.0);
    while phase(t_end) + nu * t_end > peak - 60.0 {
        t_end *= 1.5;
    }
    let integrand = |t: f64| {
        let ph = phase(t);
        0.5 * ((ph + nu * t).exp() + (ph - nu * t).exp())
    };
    let mut points = vec![0.0];
    if t_peak > 0.0 && t_peak < t_end {
        points.push(t_peak);
    }
    // Help the adaptive scheme with the width of the peak region.
    let width = 1.0 / (x * t_peak.cosh()).sqrt().max(1e-300);
    for m in [1.0, 4.0, 16.0] {
        let t = t_peak + m * width;
        if t < t_end && t > *points.last().unwrap() {
            points.push(t);
        }
    }
    points.push(t_end);
    let tol = Tolerance { rel: 2e-14, abs: 0.0, max_panels: 20_000 };
    integrate_points(integrand, &points, tol).map(|e| e.value)
}

/// `K_nu(x)` straight from the integral representation by adaptive
/// quadrature. Slow; kept as an independent reference for [`bessel_k`].
pub fn bessel_k_integral(nu: f64, x: f64, scaled: bool) -> Result<f64> {
    check_k_args(nu, x)?;
    let s = k_integral_scaled(nu, x)?;
    Ok(if scaled { s } else { s * (-x).exp() })
}

fn check_k_args(nu: f64, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_nu needs finite x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain(format!("K_nu needs finite order, got {nu}")));
    }
    Ok(())
}

// Taylor coefficients of 1/Gamma(z) = sum c_k z^k, k = 1..10.
const RGAMMA: [f64; 10] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_48,
    -0.042_197_734_555_544_33,
    -0.009_621_971_527_876_973,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065_1,
    -0.000_215_241_674_114_951,
];

/// `(1/Gamma(1+mu), 1/Gamma(1-mu), gam1, gam2)` as used by Temme's series,
/// with `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` free of cancellation.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    if mu.abs() < 0.01 {
        let rg = |z: f64| RGAMMA.iter().rev().fold(0.0, |acc, &c| acc * z + c);
        let gampl = rg(mu);
        let gammi = rg(-mu);
        let m2 = mu * mu;
        let gam1 = -(RGAMMA[1] + m2 * (RGAMMA[3] + m2 * (RGAMMA[5] + m2 * (RGAMMA[7] + m2 * RGAMMA[9]))));
        (gampl, gammi, gam1, 0.5 * (gammi + gampl))
    } else {
        let gampl = 1.0 / libm::tgamma(1.0 + mu);
        let gammi = 1.0 / libm::tgamma(1.0 - mu);
        (gampl, gammi, (gammi - gampl) / (2.0 * mu), 0.5 * (gammi + gampl))
    }
}

/// `(e^x K_nu(x), e^x K_{nu+1}(x))` for `nu >= 0`: Temme's series below
/// `x = 2`, Steed's continued fraction above, then upward recurrence from
/// `mu = nu - round(nu)` in `[-1/2, 1/2]`.
fn k_pair_scaled(nu: f64, x: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    const EPS: f64 = 1e-16;
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut k_mu, mut k_mu1) = if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gampl, gammi, gam1, gam2) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..500 {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let scale = x.exp();
        (sum * scale, sum1 * 2.0 / x * scale)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let (mut q1, mut q2) = (0.0, 1.0);
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..10_000 {
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
        let k_mu = (PI / (2.0 * x)).sqrt() / s;
        (k_mu, k_mu * (mu + x + 0.5 - h) / x)
    };
    for i in 1..=nl as usize {
        let next = (mu + i as f64) * 2.0 / x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    (k_mu, k_mu1)
}

/// `K_nu(x)` (or `e^{x} K_nu(x)` when `scaled`); even in `nu`.
pub fn bessel_k(nu: f64, x: f64, scaled: bool) -> Result<f64> {
    check_k_args(nu, x)?;
    let s = k_pair_scaled(nu.abs(), x).0;
    Ok(if scaled { s } else { s * (-x).exp() })
}

/// `K_{nu+1}(x) / K_nu(x)`.
pub fn bessel_k_ratio(nu: f64, x: f64) -> Result<f64> {
    check_k_args(nu, x)?;
    if nu >= 0.0 {
        let (k0, k1) = k_pair_scaled(nu, x);
        Ok(k1 / k0)
    } else {
        Ok(bessel_k(nu + 1.0, x, true)? / bessel_k(nu, x, true)?)
    }
}

/// `I_{nu+1}(x) / I_nu(x)` for `x > 0`.
///
/// Small and moderate arguments use the Gauss continued fraction
/// `1 / (2(nu+1)/x + 1 / (2(nu+2)/x + ...))`, whose partial denominators are
/// all positive for `nu > -1`; large arguments divide scaled values.
pub fn bessel_i_ratio(nu: f64, x: f64) -> Result<f64> {
    check_i_args(nu, x)?;
    if x == 0.0 {
        return Err(Error::Domain("I_{nu+1}/I_nu needs x > 0".into()));
    }
    if x > 50.0 {
        return Ok(i_scaled(nu + 1.0, x) / i_scaled(nu, x));
    }
    const TINY: f64 = 1e-300;
    let b = |k: f64| 2.0 * (nu + k) / x;
    let mut f = b(1.0).max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for k in 2..100_000 {
        let bk = b(k as f64);
        d += bk;
        d = if d.abs() < TINY { 1.0 / TINY } else { 1.0 / d };
        c = bk + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok(1.0 / f)
}

/// Constant `C` in `|I_{nu+1}(x)/I_nu(x) - 1| <= C (1 ∧ 1/x)`, measured on a
/// logarithmic sample of `x` in `[1e-3, 1e6]` and padded by 5%.
pub fn ratio_deviation_constant(nu: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=180 {
        let x = 10f64.powf(-3.0 + 9.0 * i as f64 / 180.0);
        let r = bessel_i_ratio(nu, x)?;
        worst = worst.max((r - 1.0).abs() * x.max(1.0));
    }
    Ok(1.05 * worst)
}

/// Relative residual of `I_nu' = I_{nu+1} + (nu/x) I_nu` with the
/// derivative taken by a centred difference of step `min(1e-5, x/10)`.
pub fn derivative_identity_residual(nu: f64, x: f64) -> Result<f64> {
    let h = 1e-5_f64.min(0.1 * x);
    let fd = (bessel_i(nu, x + h, false)? - bessel_i(nu, x - h, false)?) / (2.0 * h);
    let exact = bessel_i(nu + 1.0, x, false)? + nu / x * bessel_i(nu, x, false)?;
    Ok((fd - exact).abs() / fd.abs())
}
