//! Adaptive Gauss-Kronrod quadrature and finite-difference weights.
//!
//! The integrator is a globally adaptive G10/K21 scheme in the spirit of
//! QUADPACK's `qag`: the panel with the largest error estimate is bisected
//! until the summed estimate meets `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tolerances and panel budget of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs, max_panels: 4000 }
    }

    pub const fn relative(rel: f64) -> Self {
        Self::new(rel, 0.0)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-300)
    }
}

/// One 21-point Kronrod panel: (value, error estimate).
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate { value, error: err }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Integrate over the union of panels `[points[i], points[i+1]]`.
///
/// `points` must be non-decreasing and finite; empty panels are skipped.
pub fn integrate_points<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        debug_assert!(a <= b, "integration points out of order: {a} > {b}");
        if b > a {
            heap.push(Panel { a, b, est: gauss_kronrod21(&f, a, b) });
        }
    }
    let mut total = Estimate { value: 0.0, error: 0.0 };
    for p in heap.iter() {
        total.value += p.est.value;
        total.error += p.est.error;
    }
    let target = |v: f64| tol.abs.max(tol.rel * v.abs());
    while total.error > target(total.value) {
        if heap.len() >= tol.max_panels {
            let worst = heap.peek().map_or(f64::NAN, |p| 0.5 * (p.a + p.b));
            return Err(Error::QuadratureFailure { node: worst, error: total.error });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel below floating-point resolution: accept as is
            heap.push(Panel { est: Estimate { error: 0.0, ..worst.est }, ..worst });
            total.error -= worst.est.error;
            continue;
        }
        let left = Panel { a: worst.a, b: mid, est: gauss_kronrod21(&f, worst.a, mid) };
        let right = Panel { a: mid, b: worst.b, est: gauss_kronrod21(&f, mid, worst.b) };
        total.value += left.est.value + right.est.value - worst.est.value;
        total.error += left.est.error + right.est.error - worst.est.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically so that cancellation in the running totals
        // cannot stall convergence.
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(Estimate { value: 0.0, error: 0.0 }, |acc, p| Estimate {
                value: acc.value + p.est.value,
                error: acc.error + p.est.error,
            });
        }
    }
    Ok(total)
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_points(f, &[a, b], tol)
}

/// `int_0^b f` through `rho = b e^{-s}`, which turns integrable power
/// singularities at the origin into exponentially decaying tails.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(b > 0.0) {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let g = |s: f64| {
        let rho = b * (-s).exp();
        if rho == 0.0 {
            0.0
        } else {
            f(rho) * rho
        }
    };
    integrate_points(g, &[0.0, 1.0, 4.0, 16.0, 64.0, 256.0, 700.0], tol)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `int_0^inf f` for an integrand concentrated within `halfwidth` of the
/// `centers` (Gaussian-type decay away from them).
///
/// Mass farther than `halfwidth` from every centre is dropped; a window
/// reaching down to the origin is treated with [`integrate_from_zero`].
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    centers: &[f64],
    halfwidth: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    let lo_c = centers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_c = centers.iter().copied().fold(0.0, f64::max);
    let hi = hi_c + halfwidth;
    let lo = lo_c - halfwidth;
    let mut total = Estimate { value: 0.0, error: 0.0 };
    let start = if lo > 0.0 {
        lo
    } else {
        let split = if lo_c > 0.0 { 0.5 * lo_c } else { 0.5 * halfwidth };
        let e = integrate_from_zero(&f, split, tol)?;
        total.value += e.value;
        total.error += e.error;
        split
    };
    let mut points = vec![start, hi];
    for &c in centers {
        for d in [0.0, -0.1, 0.1, -0.3, 0.3] {
            let x = c + d * halfwidth;
            if x > start && x < hi {
                points.push(x);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let e = integrate_points(&f, &points, tol)?;
    total.value += e.value;
    total.error += e.error;
    Ok(total)
}

/// Weights of the `order`-th derivative at `z` from values at `x`
/// (Fornberg's recursion). Returns one weight per node.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::new(1e-12, 1e-13)).unwrap();
        assert!((e.value - 0.0).abs() < 1e-14);
        let e = integrate(|x| x.powi(4), -1.0, 1.0, Tolerance::default()).unwrap();
        assert!((e.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gaussian_peak_is_resolved() {
        let s = 1e-3;
        let f = |x: f64| (-(x - 0.3) * (x - 0.3) / (s * s)).exp();
        let e = integrate(f, 0.0, 1.0, Tolerance::new(1e-12, 0.0)).unwrap();
        let exact = s * std::f64::consts::PI.sqrt();
        assert!((e.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn endpoint_singularity_from_zero() {
        // int_0^1 x^{-0.9} dx = 10
        let e = integrate_from_zero(|x| x.powf(-0.9), 1.0, Tolerance::new(1e-12, 0.0)).unwrap();
        assert!((e.value - 10.0).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn panel_budget_exhaustion_reports_failure() {
        let tol = Tolerance { rel: 1e-15, abs: 0.0, max_panels: 4 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, tol);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn fornberg_weights_reproduce_derivatives() {
        let x = [0.1, 0.25, 0.3, 0.5, 0.8];
        let w1 = fd_weights(0.3, &x, 1);
        let w2 = fd_weights(0.3, &x, 2);
        // exact on quartics
        let f = |t: f64| t.powi(4) - t * t + 3.0;
        let d1: f64 = w1.iter().zip(&x).map(|(w, &t)| w * f(t)).sum();
        let d2: f64 = w2.iter().zip(&x).map(|(w, &t)| w * f(t)).sum();
        assert!((d1 - (4.0 * 0.027 - 0.6)).abs() < 1e-10);
        assert!((d2 - (12.0 * 0.09 - 2.0)).abs() < 1e-9);
    }
}
