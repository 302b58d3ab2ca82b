//! Half-line grids, piecewise-linear grid functions and weighted norms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Something that can be integrated against a kernel on the half-line.
pub trait Profile: Sync {
    fn value(&self, y: f64) -> f64;
    /// The function vanishes outside `[lo, hi]`.
    fn support(&self) -> (f64, f64);
    /// Interior points where the function is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Rough `sup |f|`, from the kinks and a uniform sample of the support.
    fn sup_estimate(&self) -> f64 {
        let (lo, hi) = self.support();
        let kinks = self.kinks();
        let n = 256;
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .chain(kinks)
            .map(|y| self.value(y).abs())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

/// A closure with a declared support and breakpoints.
pub struct FnProfile<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnProfile<F> {
    pub fn new(f: F, lo: f64, hi: f64) -> Self {
        Self { f, lo, hi, kinks: Vec::new() }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl<F: Fn(f64) -> f64 + Sync> Profile for FnProfile<F> {
    fn value(&self, y: f64) -> f64 {
        if y < self.lo || y > self.hi {
            0.0
        } else {
            (self.f)(y)
        }
    }
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// `n_geo` geometric nodes on `[y_min, y_split]` followed by `n_uni`
/// uniform nodes up to `y_max`.
pub fn hybrid_grid(y_min: f64, y_split: f64, y_max: f64, n_geo: usize, n_uni: usize) -> Result<Vec<f64>> {
    if !(0.0 < y_min && y_min < y_split && y_split < y_max) || n_geo < 2 || n_uni < 1 {
        return Err(Error::InvalidGrid(format!(
            "need 0 < y_min < y_split < y_max and enough nodes, got {y_min}, {y_split}, {y_max}, {n_geo}, {n_uni}"
        )));
    }
    let mut g = crate::sampling::geomspace(y_min, y_split, n_geo);
    let h = (y_max - y_split) / n_uni as f64;
    g.extend((1..=n_uni).map(|i| y_split + h * i as f64));
    Ok(g)
}

/// 512 geometric nodes on `[1e-6, 1]`, 512 uniform ones up to 50.
pub fn default_grid() -> Vec<f64> {
    hybrid_grid(1e-6, 1.0, 50.0, 512, 512).expect("valid default grid")
}

/// Values on a strictly increasing positive grid, linear in between and
/// zero outside, with the weight `y^m` attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    pub m: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !(grid[0] > 0.0) {
        return Err(Error::InvalidGrid(format!("first node {} is not positive", grid[0])));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidGrid(format!("nodes {} and {} are not increasing", w[0], w[1])));
    }
    Ok(())
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, m: f64) -> Result<Self> {
        check_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!("{} nodes but {} values", grid.len(), values.len())));
        }
        Ok(Self { grid, values, m })
    }

    pub fn from_fn(grid: Vec<f64>, m: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&y| f(y)).collect();
        Self::new(grid, values, m)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Same grid and weight, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.m)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.grid.iter().zip(&self.values).map(|(&y, &v)| f(y, v)).collect();
        Self { grid: self.grid.clone(), values, m: self.m }
    }

    /// `(I_s f)(y) = f(s y)`, represented on the grid `y_i / s`.
    pub fn dilate(&self, s: f64) -> Self {
        Self { grid: self.grid.iter().map(|y| y / s).collect(), values: self.values.clone(), m: self.m }
    }

    /// `L^p_m` norm, trapezoid rule in `y` on `|f|^p y^m`; `p = inf` is the max.
    pub fn weighted_norm(&self, p: f64) -> Result<f64> {
        self.norm_with(p, self.m, false)
    }

    /// As [`weighted_norm`](Self::weighted_norm), with the trapezoid rule
    /// applied in `ln y`. Much more accurate for power-law data on
    /// geometric grids.
    pub fn weighted_norm_log(&self, p: f64) -> Result<f64> {
        self.norm_with(p, self.m, true)
    }

    pub fn norm_with(&self, p: f64, m: f64, log_rule: bool) -> Result<f64> {
        if self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("norm exponent p = {p} must be at least 1")));
        }
        if p.is_infinite() {
            return Ok(self.values.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
        // logs keep y^m finite on grids spanning hundreds of decades
        let h: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&y, &v)| if v == 0.0 { 0.0 } else { (p * v.abs().ln() + m * y.ln()).exp() })
            .collect();
        Ok(trapezoid(&self.grid, &h, log_rule).powf(1.0 / p))
    }

    /// Piecewise-linear interpolant, zero outside the grid.
    pub fn value_at(&self, y: f64) -> f64 {
        let g = &self.grid;
        if y < g[0] || y > g[g.len() - 1] {
            return 0.0;
        }
        let j = g.partition_point(|&x| x <= y);
        if j == 0 {
            return self.values[0];
        }
        if j == g.len() {
            return self.values[g.len() - 1];
        }
        let (a, b) = (g[j - 1], g[j]);
        let w = (y - a) / (b - a);
        self.values[j - 1] * (1.0 - w) + self.values[j] * w
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "y,value")?;
        for (y, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{y:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, m: f64) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "y,value" => {}
            _ => return Err(Error::Config("expected header `y,value`".into())),
        }
        let (mut grid, mut values) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || -> Result<f64> {
                it.next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad number on data line {}", i + 1)))
            };
            grid.push(next()?);
            values.push(next()?);
        }
        Self::new(grid, values, m)
    }
}

impl Profile for GridFunction {
    fn value(&self, y: f64) -> f64 {
        self.value_at(y)
    }
    fn support(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }
    fn kinks(&self) -> Vec<f64> {
        self.grid.clone()
    }
    fn sup_estimate(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Trapezoid rule for `int h dy` on a positive grid, in `y` or in `ln y`.
pub fn trapezoid(y: &[f64], h: &[f64], log_rule: bool) -> f64 {
    y.windows(2)
        .zip(h.windows(2))
        .map(|(y, h)| {
            if log_rule {
                0.5 * (h[0] * y[0] + h[1] * y[1]) * (y[1] / y[0]).ln()
            } else {
                0.5 * (h[0] + h[1]) * (y[1] - y[0])
            }
        })
        .sum()
}

/// Surface measure of the unit sphere in R^M.
pub fn sphere_area(dim: u32) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / libm::tgamma(half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        let g: Vec<f64> = (0..=99).map(|i| 0.01 + 0.01 * i as f64).collect();
        let one = GridFunction::from_fn(g, 0.0, |_| 1.0).unwrap();
        assert!((one.weighted_norm(1.0).unwrap() - 0.99).abs() < 1e-12);
        let g: Vec<f64> = (1..=2000).map(|i| i as f64 / 2000.0).collect();
        let lin = GridFunction::from_fn(g, 0.0, |y| y).unwrap();
        assert!((lin.weighted_norm(2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert_eq!(lin.weighted_norm(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn dilation_scales_norm() {
        let g = crate::sampling::geomspace(1e-4, 30.0, 3000);
        let f = GridFunction::from_fn(g, 0.7, |y| (-(y - 1.0) * (y - 1.0)).exp()).unwrap();
        let s = 2.5_f64;
        let ratio = f.dilate(s).weighted_norm_log(3.0).unwrap() / f.weighted_norm_log(3.0).unwrap();
        assert!((ratio - s.powf(-(1.0 + 0.7) / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(GridFunction::new(vec![], vec![], 0.0), Err(Error::EmptyGrid));
        assert!(GridFunction::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![0.0, 0.0], 0.0).is_err());
        assert!(GridFunction::new(vec![1.0], vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn interpolation() {
        let f = GridFunction::new(vec![1.0, 2.0, 4.0], vec![1.0, 3.0, -1.0], 0.0).unwrap();
        assert_eq!(f.value_at(1.5), 2.0);
        assert_eq!(f.value_at(3.0), 1.0);
        assert_eq!(f.value_at(4.0), -1.0);
        assert_eq!(f.value_at(0.5), 0.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = GridFunction::from_fn(vec![0.1, 0.2, 0.7], 1.0, |y| (y * 3.0).sin() / 7.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("y,value\n"));
        let back = GridFunction::read_csv(buf.as_slice(), 1.0).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
