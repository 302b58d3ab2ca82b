//! Heat kernels, their `y`-gradients and resolvent Green functions.
//!
//! All four kernels share one shape. With `a = (1-c)/2`, `z = y rho / 2t`
//! and an order `nu` fixed by the realization,
//!
//! ```text
//! p(t, y, rho) = y^a rho^(1+c)/2 (2t)^-1 exp(-(y-rho)^2/4t) e^-z I_nu(z)
//! ```
//!
//! against Lebesgue `d rho`. Neumann uses `nu = (c-1)/2`, Dirichlet
//! `nu = (1-c)/2`, the standard realization of `L` uses `sqrt(D)` and the
//! alternate one `-sqrt(D)`. The scaled Bessel factor means nothing overflows.
//!
//! The Green function of `(lambda - A)^-1` is
//! `y^a rho^(1+c)/2 I_nu(k min(y,rho)) K_nu(k max(y,rho))` with `k = sqrt(lambda)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::OperatorParams;
use crate::quad::{integrate_from_zero, integrate_half_line, integrate_points, Tolerance};
use crate::report::{CheckRecord, ProbeReport};
use crate::sampling::{geomspace, halton, log_uniform};
use crate::specfun::{bessel_i, bessel_i_ratio, bessel_k, bessel_k_ratio, OVERFLOW_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Pure Bessel operator `D_yy + (c/y) D_y`.
    Bessel(BoundaryCondition),
    /// The realization of `L` built on the root `s1`.
    Standard,
    /// The second realization for `0 < D < 1`, built on `s2`.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub op: OperatorParams,
    pub kind: KernelKind,
    /// Log-magnitude above which factors are combined in log space.
    pub overflow_cap: f64,
}

impl KernelSpec {
    pub fn neumann(c: f64) -> Result<Self> {
        Self::new(OperatorParams::bessel(c), KernelKind::Bessel(BoundaryCondition::Neumann))
    }

    pub fn dirichlet(c: f64) -> Result<Self> {
        Self::new(OperatorParams::bessel(c), KernelKind::Bessel(BoundaryCondition::Dirichlet))
    }

    pub fn standard(op: OperatorParams) -> Result<Self> {
        Self::new(op, KernelKind::Standard)
    }

    pub fn alternate(op: OperatorParams) -> Result<Self> {
        Self::new(op, KernelKind::Alternate)
    }

    pub fn new(op: OperatorParams, kind: KernelKind) -> Result<Self> {
        let spec = Self { op, kind, overflow_cap: OVERFLOW_CAP };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_overflow_cap(self, cap: f64) -> Self {
        Self { overflow_cap: cap, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let OperatorParams { b, c } = self.op;
        if !(b.is_finite() && c.is_finite()) {
            return Err(Error::Admissibility(format!("non-finite coefficients b = {b}, c = {c}")));
        }
        match self.kind {
            KernelKind::Bessel(_) if b != 0.0 => {
                Err(Error::Admissibility(format!("Bessel kernels need b = 0, got {b}")))
            }
            KernelKind::Bessel(BoundaryCondition::Neumann) if !(c > -1.0) => {
                Err(Error::Admissibility(format!("Neumann condition needs c > -1, got {c}")))
            }
            KernelKind::Bessel(BoundaryCondition::Dirichlet) if !(c < 1.0) => {
                Err(Error::Admissibility(format!("Dirichlet condition needs c < 1, got {c}")))
            }
            KernelKind::Bessel(_) => Ok(()),
            KernelKind::Standard => self.op.indicial_roots().map(|_| ()),
            KernelKind::Alternate => {
                let d = self.op.indicial_roots()?.d;
                if d > 0.0 && d < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Admissibility(format!("alternate realization needs 0 < D < 1, got {d}")))
                }
            }
        }
    }

    /// Bessel order `nu` of the kernel.
    pub fn order(&self) -> f64 {
        let c = self.op.c;
        match self.kind {
            KernelKind::Bessel(BoundaryCondition::Neumann) => (c - 1.0) / 2.0,
            KernelKind::Bessel(BoundaryCondition::Dirichlet) => (1.0 - c) / 2.0,
            KernelKind::Standard => self.op.discriminant().sqrt(),
            KernelKind::Alternate => -self.op.discriminant().sqrt(),
        }
    }

    fn y_power(&self) -> f64 {
        (1.0 - self.op.c) / 2.0
    }

    fn rho_power(&self) -> f64 {
        (1.0 + self.op.c) / 2.0
    }

    /// `e` with `p(t, y, rho) ~ y^e` as `y -> 0`.
    pub fn boundary_exponent(&self) -> f64 {
        self.y_power() + self.order()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `y^a rho^b g exp(-e)` with `g > 0`, in log space when a factor is huge.
fn assemble(cap: f64, y: f64, a: f64, rho: f64, b: f64, g: f64, e: f64) -> f64 {
    let ly = a * y.ln();
    let lr = b * rho.ln();
    if ly.abs() < cap && lr.abs() < cap && e < cap {
        y.powf(a) * rho.powf(b) * g * (-e).exp()
    } else {
        (ly + lr + g.ln() - e).exp()
    }
}

/// Heat kernel `p(t, y, rho)`. `y = 0` returns the limit as `y -> 0+`.
pub fn heat_kernel(spec: &KernelSpec, t: f64, y: f64, rho: f64) -> Result<f64> {
    spec.validate()?;
    check_positive("t", t)?;
    check_positive("rho", rho)?;
    let nu = spec.order();
    if y == 0.0 {
        let e0 = spec.boundary_exponent();
        return Ok(if e0 > 0.0 {
            0.0
        } else if e0 < 0.0 {
            f64::INFINITY
        } else {
            let b = spec.rho_power() + nu;
            let lead = -nu * (4.0 * t).ln() - libm::lgamma(nu + 1.0) - (2.0 * t).ln();
            assemble(spec.overflow_cap, 1.0, 0.0, rho, b, lead.exp(), rho * rho / (4.0 * t))
        });
    }
    check_positive("y", y)?;
    let z = y * rho / (2.0 * t);
    let i_hat = bessel_i(nu, z, true)?;
    let d = y - rho;
    Ok(assemble(spec.overflow_cap, y, spec.y_power(), rho, spec.rho_power(), i_hat / (2.0 * t), d * d / (4.0 * t)))
}

/// `ln p(t, y, rho)` for `y, rho > 0`; finite where `p` itself underflows.
pub fn ln_heat_kernel(spec: &KernelSpec, t: f64, y: f64, rho: f64) -> Result<f64> {
    spec.validate()?;
    check_positive("t", t)?;
    check_positive("y", y)?;
    check_positive("rho", rho)?;
    let z = y * rho / (2.0 * t);
    let d = y - rho;
    Ok(spec.y_power() * y.ln() + spec.rho_power() * rho.ln() - (2.0 * t).ln() - d * d / (4.0 * t)
        + bessel_i(spec.order(), z, true)?.ln())
}

/// Logarithmic derivative `D_y p / p`.
pub fn log_derivative_y(spec: &KernelSpec, t: f64, y: f64, rho: f64) -> Result<f64> {
    spec.validate()?;
    check_positive("t", t)?;
    check_positive("y", y)?;
    check_positive("rho", rho)?;
    let nu = spec.order();
    let z = y * rho / (2.0 * t);
    let r = bessel_i_ratio(nu, z)?;
    Ok(spec.boundary_exponent() / y - y / (2.0 * t) + rho / (2.0 * t) * r)
}

/// `D_y p(t, y, rho)`.
pub fn heat_kernel_dy(spec: &KernelSpec, t: f64, y: f64, rho: f64) -> Result<f64> {
    Ok(log_derivative_y(spec, t, y, rho)? * heat_kernel(spec, t, y, rho)?)
}

/// `(4 pi t)^{-N/2} exp(-|x1 - x2|^2 / 4t) p(t, y1, y2)` with `N = x1.len()`.
pub fn product_kernel(spec: &KernelSpec, t: f64, x1: &[f64], y1: f64, x2: &[f64], y2: f64) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::Domain(format!("x dimensions differ: {} vs {}", x1.len(), x2.len())));
    }
    let p = heat_kernel(spec, t, y1, y2)?;
    if x1.is_empty() {
        return Ok(p);
    }
    let n = x1.len() as f64;
    let r2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((4.0 * std::f64::consts::PI * t).powf(-n / 2.0) * (-r2 / (4.0 * t)).exp() * p)
}

/// Kernel of `(lambda - A)^{-1}` against `d rho`.
pub fn green_function(spec: &KernelSpec, lambda: f64, y: f64, rho: f64) -> Result<f64> {
    spec.validate()?;
    check_positive("lambda", lambda)?;
    check_positive("y", y)?;
    check_positive("rho", rho)?;
    let k = lambda.sqrt();
    let nu = spec.order();
    let (lo, hi) = if y <= rho { (y, rho) } else { (rho, y) };
    let g = bessel_i(nu, k * lo, true)? * bessel_k(nu, k * hi, true)?;
    Ok(assemble(spec.overflow_cap, y, spec.y_power(), rho, spec.rho_power(), g, k * (hi - lo)))
}

/// `D_y` of [`green_function`]; one-sided at `y = rho`, where the
/// derivative jumps by `-1`.
pub fn green_function_dy(spec: &KernelSpec, lambda: f64, y: f64, rho: f64, upper: bool) -> Result<f64> {
    let g = green_function(spec, lambda, y, rho)?;
    let k = lambda.sqrt();
    let nu = spec.order();
    let e0 = spec.boundary_exponent();
    let below = y < rho || (y == rho && !upper);
    let log_dy = if below {
        // d/dy [y^a I_nu(k y)] = y^a [(a + nu)/y I_nu + k I_{nu+1}]
        e0 / y + k * bessel_i_ratio(nu, k * y)?
    } else {
        // d/dy [y^a K_nu(k y)] = y^a [(a + nu)/y K_nu - k K_{nu+1}]
        e0 / y - k * bessel_k_ratio(nu, k * y)?
    };
    Ok(g * log_dy)
}

/// Centred-difference residual of `p_t - (p_yy + (c/y) p_y - (b/y^2) p)`
/// with relative step `h` in both `t` and `y`.
pub fn pde_residual(spec: &KernelSpec, t: f64, y: f64, rho: f64, h: f64) -> Result<f64> {
    let OperatorParams { b, c } = spec.op;
    let p = |t: f64, y: f64| heat_kernel(spec, t, y, rho);
    let (ht, hy) = (h * t, h * y);
    let pt = (p(t + ht, y)? - p(t - ht, y)?) / (2.0 * ht);
    let p0 = p(t, y)?;
    let (pp, pm) = (p(t, y + hy)?, p(t, y - hy)?);
    let py = (pp - pm) / (2.0 * hy);
    let pyy = (pp - 2.0 * p0 + pm) / (hy * hy);
    Ok(pt - (pyy + c / y * py - b / (y * y) * p0))
}

/// Half-width of the window outside which `exp(-(y-rho)^2/4t) < e^{-40}`.
pub fn gaussian_window(t: f64) -> f64 {
    (160.0 * t).sqrt()
}

/// `int_0^inf p(t, y, rho) d rho`.
pub fn kernel_mass(spec: &KernelSpec, t: f64, y: f64, tol: Tolerance) -> Result<f64> {
    let f = |rho: f64| heat_kernel(spec, t, y, rho).unwrap_or(f64::NAN);
    Ok(integrate_half_line(f, &[y], gaussian_window(t), tol)?.value)
}

/// `int_0^inf p(t, y, rho) p(s, rho, w) d rho`.
pub fn chapman_kolmogorov(spec: &KernelSpec, t: f64, s: f64, y: f64, w: f64, tol: Tolerance) -> Result<f64> {
    let f = |rho: f64| {
        let a = heat_kernel(spec, t, y, rho).unwrap_or(f64::NAN);
        let b = heat_kernel(spec, s, rho, w).unwrap_or(f64::NAN);
        a * b
    };
    Ok(integrate_half_line(f, &[y, w], gaussian_window(t.max(s)), tol)?.value)
}

/// `int_0^inf e^{-lambda t} p(t, y, rho) dt`.
pub fn laplace_transform(spec: &KernelSpec, lambda: f64, y: f64, rho: f64, tol: Tolerance) -> Result<f64> {
    check_positive("lambda", lambda)?;
    let f = |t: f64| (-lambda * t).exp() * heat_kernel(spec, t, y, rho).unwrap_or(f64::NAN);
    let t0 = 1.0 / lambda;
    let head = integrate_from_zero(f, t0, tol)?;
    let mut points = vec![t0];
    while *points.last().unwrap() < 80.0 * t0 {
        points.push(2.0 * points.last().unwrap());
    }
    let tail = integrate_points(f, &points, tol)?;
    Ok(head.value + tail.value)
}

/// Pointwise upper bound
/// `C t^tp (y/sqrt t ∧ 1)^a_y (rho/sqrt t ∧ 1)^a_rho exp(-(y-rho)^2/(kappa t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub c: f64,
    pub kappa: f64,
    pub a_y: f64,
    pub a_rho: f64,
    /// `-1/2` for kernels, `-1` for gradients.
    pub time_power: f64,
}

pub const DEFAULT_KAPPA: f64 = 4.5;

impl EnvelopeParams {
    pub fn value(&self, t: f64, y: f64, rho: f64) -> f64 {
        self.ln_value(t, y, rho).exp()
    }

    pub fn ln_value(&self, t: f64, y: f64, rho: f64) -> f64 {
        let s = t.sqrt();
        let d = y - rho;
        self.c.ln() + self.time_power * t.ln() + self.a_y * (y / s).min(1.0).ln() + self.a_rho * (rho / s).min(1.0).ln()
            - d * d / (self.kappa * t)
    }
}

/// `ln p` or `ln |D_y p|`.
fn ln_magnitude(spec: &KernelSpec, gradient: bool, t: f64, y: f64, rho: f64) -> Result<f64> {
    let lp = ln_heat_kernel(spec, t, y, rho)?;
    Ok(if gradient { lp + log_derivative_y(spec, t, y, rho)?.abs().ln() } else { lp })
}

/// Exponents `(a_y, a_rho)` of the kernel (or gradient) envelope.
pub fn envelope_exponents(spec: &KernelSpec, gradient: bool) -> (f64, f64) {
    let c = spec.op.c;
    let (a_y, a_rho) = match spec.kind {
        KernelKind::Bessel(BoundaryCondition::Dirichlet) => (1.0 - c, 1.0),
        KernelKind::Bessel(BoundaryCondition::Neumann) => (0.0, c),
        KernelKind::Standard | KernelKind::Alternate => {
            // s1 for the standard kernel, s2 for the alternate one
            let s = -spec.boundary_exponent();
            (-s, c - s)
        }
    };
    if !gradient {
        return (a_y, a_rho);
    }
    match spec.kind {
        // the kernel is even in y at the boundary: its gradient vanishes linearly
        _ if spec.boundary_exponent() == 0.0 => (1.0, a_rho),
        _ => (a_y - 1.0, a_rho),
    }
}

/// Smallest `C` for which the envelope dominates the kernel (or gradient) on
/// a `n x n` logarithmic grid of the scale-invariant variables
/// `y/sqrt t, rho/sqrt t` in `[3e-5, 3e3]`.
pub fn envelope(spec: &KernelSpec, kappa: f64, gradient: bool, n: usize) -> Result<EnvelopeParams> {
    spec.validate()?;
    let (a_y, a_rho) = envelope_exponents(spec, gradient);
    let unit = EnvelopeParams { c: 1.0, kappa, a_y, a_rho, time_power: if gradient { -1.0 } else { -0.5 } };
    let grid = geomspace(3e-5, 3e3, n);
    let mut worst = f64::NEG_INFINITY;
    for &xi in &grid {
        for &eta in &grid {
            let lv = ln_magnitude(spec, gradient, 1.0, xi, eta)?;
            if lv.is_nan() || lv == f64::INFINITY || (!gradient && lv == f64::NEG_INFINITY) {
                return Err(Error::FitFailure(format!("log kernel value {lv} at y = {xi}, rho = {eta}")));
            }
            worst = worst.max(lv - unit.ln_value(1.0, xi, eta));
        }
    }
    Ok(EnvelopeParams { c: worst.exp(), ..unit })
}

/// Compare kernel and envelope on `n` Halton points of
/// `t in [1e-3, 1e3]`, `y, rho in [1e-3, 1e2]`.
pub fn envelope_check(spec: &KernelSpec, env: &EnvelopeParams, gradient: bool, n: usize) -> Result<ProbeReport> {
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0, 0.0);
    for i in 1..=n as u64 {
        let t = log_uniform(halton(i, 2), 1e-3, 1e3);
        let y = log_uniform(halton(i, 3), 1e-3, 1e2);
        let rho = log_uniform(halton(i, 5), 1e-3, 1e2);
        let r = (ln_magnitude(spec, gradient, t, y, rho)? - env.ln_value(t, y, rho)).exp();
        if !(r <= worst) {
            worst = r;
            at = (t, y, rho);
        }
    }
    let mut report = ProbeReport::new("envelope");
    report.push(
        CheckRecord::at_most(if gradient { "gradient/envelope" } else { "kernel/envelope" }, worst, 1.0)
            .param("C", env.c)
            .param("kappa", env.kappa)
            .param("t", at.0)
            .param("y", at.1)
            .param("rho", at.2)
            .param("samples", n as f64),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn admissibility() {
        assert!(KernelSpec::neumann(-1.0).is_err());
        assert!(KernelSpec::dirichlet(1.0).is_err());
        assert!(KernelSpec::standard(OperatorParams::new(-1.0, 1.0)).is_err());
        assert!(KernelSpec::alternate(OperatorParams::new(1.0, 0.0)).is_err());
        assert!(KernelSpec::alternate(OperatorParams::new(0.0, 0.0)).is_ok());
    }

    #[test]
    fn closed_form_examples() {
        let n = KernelSpec::neumann(0.0).unwrap();
        let d = KernelSpec::dirichlet(0.0).unwrap();
        let e = (-1f64).exp();
        let v = heat_kernel(&n, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(v, (1.0 + e) / (2.0 * PI.sqrt())) < 1e-13 && (v - 0.385_871_666_129).abs() < 1e-11);
        let v = heat_kernel(&d, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(v, (1.0 - e) / (2.0 * PI.sqrt())) < 1e-13 && (v - 0.178_317_917_419).abs() < 1e-11);
        let v = heat_kernel_dy(&n, 1.0, 1.0, 1.0).unwrap();
        assert!((v + e / (2.0 * PI.sqrt())).abs() < 1e-13 && (v + 0.103_776_9).abs() < 1e-7);
        let v = heat_kernel_dy(&d, 1.0, 1e-9, 1.0).unwrap();
        // (rho/t) (4 pi t)^{-1/2} e^{-rho^2/4t} at t = rho = 1
        let limit = (-0.25f64).exp() / (2.0 * PI.sqrt());
        assert!(rel(v, limit) < 1e-6 && (v - 0.219_695_6).abs() < 1e-6, "{v}");
        let g = green_function(&d, 1.0, 1.0, 2.0).unwrap();
        assert!(rel(g, 1f64.sinh() * (-2f64).exp()) < 1e-12 && (g - 0.159_046_186_402).abs() < 1e-11);
    }

    #[test]
    fn boundary_values() {
        let n = KernelSpec::neumann(0.0).unwrap();
        let at0 = heat_kernel(&n, 1.0, 0.0, 1.0).unwrap();
        let near = heat_kernel(&n, 1.0, 1e-8, 1.0).unwrap();
        assert!(rel(at0, near) < 1e-7);
        let d = KernelSpec::dirichlet(0.0).unwrap();
        assert_eq!(heat_kernel(&d, 1.0, 0.0, 1.0).unwrap(), 0.0);
        let alt = KernelSpec::alternate(OperatorParams::new(0.1, 0.0)).unwrap();
        assert!(heat_kernel(&alt, 1.0, 0.0, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn standard_reduces_to_bessel_kernels() {
        // b = 0, c < 1: standard = Dirichlet, alternate = Neumann
        let c = 0.3;
        let op = OperatorParams::bessel(c);
        let st = KernelSpec::standard(op).unwrap();
        let alt = KernelSpec::alternate(op).unwrap();
        let d = KernelSpec::dirichlet(c).unwrap();
        let n = KernelSpec::neumann(c).unwrap();
        for &(t, y, r) in &[(0.5, 0.2, 1.3), (2.0, 3.0, 0.1)] {
            assert!(rel(heat_kernel(&st, t, y, r).unwrap(), heat_kernel(&d, t, y, r).unwrap()) < 1e-14);
            assert!(rel(heat_kernel(&alt, t, y, r).unwrap(), heat_kernel(&n, t, y, r).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        let st = KernelSpec::standard(OperatorParams::new(2.0, 0.5)).unwrap();
        let v = heat_kernel(&st, 1e-4, 50.0, 50.001).unwrap();
        let gauss = 1.0 / (4.0 * PI * 1e-4).sqrt() * (-(0.001f64).powi(2) / 4e-4).exp();
        assert!(v.is_finite() && rel(v, gauss) < 1e-3);
    }

    #[test]
    fn product_kernel_reductions() {
        let n = KernelSpec::neumann(0.5).unwrap();
        let p = heat_kernel(&n, 0.7, 0.4, 1.1).unwrap();
        assert_eq!(product_kernel(&n, 0.7, &[], 0.4, &[], 1.1).unwrap(), p);
        let q = product_kernel(&n, 0.7, &[0.3], 0.4, &[0.3], 1.1).unwrap();
        assert!(rel(q, p / (4.0 * PI * 0.7).sqrt()) < 1e-15);
    }

    #[test]
    fn green_dy_jump() {
        let d = KernelSpec::dirichlet(0.2).unwrap();
        let y = 0.8;
        let up = green_function_dy(&d, 1.5, y, y, true).unwrap();
        let down = green_function_dy(&d, 1.5, y, y, false).unwrap();
        // the Wronskian fixes the jump of D_y G at y = rho to -1
        assert!((up - down + 1.0).abs() < 1e-10, "{}", up - down);
    }
}
