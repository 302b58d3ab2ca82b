//! Elliptic and parabolic problems on `R^N x (0, inf)` with `N <= 2`.
//!
//! The `x` variables live on a periodic box and are handled by the discrete
//! Fourier transform; each frequency `xi` leaves a half-line problem for
//! `lambda + |xi|^2 - L_y`, solved by [`resolvent_sweep_multi`]. Frequencies
//! with the same `|xi|` share one sweep.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{hybrid_grid, trapezoid, FnProfile, GridFunction};
use crate::halfline::{apply_operator_fd, apply_semigroup, resolvent_sweep_multi, SemigroupMatrix};
use crate::kernels::KernelSpec;
use crate::params::SpaceParams;
use crate::report::{CheckRecord, ProbeReport};
use crate::sampling::{log_uniform, rng};

use rand::Rng;

pub const MAX_X_DIMS: usize = 2;

/// Periodic box `prod [-L_d/2, L_d/2)` with `n_d` equispaced nodes per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XBox {
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

impl XBox {
    /// No `x` variables: the half-line.
    pub fn none() -> Self {
        Self { lengths: vec![], counts: vec![] }
    }

    pub fn new(lengths: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lengths.len() != counts.len() {
            return Err(Error::InvalidGrid(format!("{} side lengths for {} node counts", lengths.len(), counts.len())));
        }
        if lengths.len() > MAX_X_DIMS {
            return Err(Error::InvalidGrid(format!("at most {MAX_X_DIMS} x dimensions")));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) || counts.contains(&0) {
            return Err(Error::InvalidGrid("box sides and node counts must be positive".into()));
        }
        Ok(Self { lengths, counts })
    }

    pub fn cube(dims: usize, length: f64, count: usize) -> Result<Self> {
        Self::new(vec![length; dims], vec![count; dims])
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }

    /// Number of `x` nodes (1 when there are none).
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.lengths.iter().zip(&self.counts).map(|(l, &n)| l / n as f64).product()
    }

    fn index(&self, flat: usize) -> [usize; MAX_X_DIMS] {
        let mut out = [0; MAX_X_DIMS];
        let mut rest = flat;
        for d in (0..self.dims()).rev() {
            out[d] = rest % self.counts[d];
            rest /= self.counts[d];
        }
        out
    }

    fn wavenumber(&self, d: usize, j: usize) -> i64 {
        let n = self.counts[d];
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let idx = self.index(flat);
        (0..self.dims())
            .map(|d| -0.5 * self.lengths[d] + idx[d] as f64 * self.lengths[d] / self.counts[d] as f64)
            .collect()
    }

    /// Angular frequency of mode `flat` in FFT ordering.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let idx = self.index(flat);
        (0..self.dims())
            .map(|d| 2.0 * std::f64::consts::PI * self.wavenumber(d, idx[d]) as f64 / self.lengths[d])
            .collect()
    }

    // first derivatives of the Nyquist mode are dropped to keep real data real
    fn derivative_symbol(&self, flat: usize) -> Vec<f64> {
        let idx = self.index(flat);
        let xi = self.frequency(flat);
        (0..self.dims())
            .map(|d| {
                let n = self.counts[d];
                if n.is_multiple_of(2) && idx[d] == n / 2 {
                    0.0
                } else {
                    xi[d]
                }
            })
            .collect()
    }

    fn radial_key(&self, flat: usize) -> [u64; MAX_X_DIMS] {
        let idx = self.index(flat);
        let mut key = [0; MAX_X_DIMS];
        for d in 0..self.dims() {
            key[d] = self.wavenumber(d, idx[d]).unsigned_abs();
        }
        key
    }
}

/// Real samples on (periodic `x` box) x (half-line grid), `x` index major.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField {
    pub x_box: XBox,
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub m: f64,
}

impl HalfSpaceField {
    pub fn new(x_box: XBox, y_grid: Vec<f64>, values: Vec<f64>, m: f64) -> Result<Self> {
        if y_grid.len() < 2 {
            return Err(Error::EmptyGrid);
        }
        if y_grid.windows(2).any(|w| !(w[1] > w[0])) || !(y_grid[0] > 0.0) {
            return Err(Error::InvalidGrid("y nodes must be positive and increasing".into()));
        }
        if values.len() != x_box.len() * y_grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} x nodes and {} y nodes",
                values.len(),
                x_box.len(),
                y_grid.len()
            )));
        }
        Ok(Self { x_box, y_grid, values, m })
    }

    pub fn from_fn(x_box: XBox, y_grid: Vec<f64>, m: f64, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(x_box.len() * y_grid.len());
        for i in 0..x_box.len() {
            let x = x_box.node(i);
            values.extend(y_grid.iter().map(|&y| f(&x, y)));
        }
        Self::new(x_box, y_grid, values, m)
    }

    pub fn ny(&self) -> usize {
        self.y_grid.len()
    }

    /// Values on the half-line above the `i`-th `x` node.
    pub fn slice(&self, i: usize) -> &[f64] {
        let ny = self.ny();
        &self.values[i * ny..(i + 1) * ny]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.x_box.clone(), self.y_grid.clone(), values, self.m)
    }

    /// `L^p_m` norm by tensor quadrature: rectangle rule in `x`, trapezoid in `y`.
    pub fn norm(&self, p: f64) -> f64 {
        field_norm(&self.x_box, &self.y_grid, &self.values, p, self.m)
    }

    /// Rows `x_1, .., x_N, y, value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header: Vec<String> = (0..self.x_box.dims()).map(|d| format!("x{d}")).collect();
        header.push("y".into());
        header.push("value".into());
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.x_box.len() {
            let x = self.x_box.node(i);
            for (j, &y) in self.y_grid.iter().enumerate() {
                for xd in &x {
                    write!(w, "{xd:.16e},")?;
                }
                writeln!(w, "{y:.16e},{:.16e}", self.values[i * self.ny() + j])?;
            }
        }
        Ok(())
    }

    /// Reads values written by [`write_csv`](Self::write_csv) onto a known box.
    pub fn read_csv<R: BufRead>(r: R, x_box: XBox, m: f64) -> Result<Self> {
        let mut lines = r.lines();
        lines.next().ok_or(Error::EmptyGrid)??;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Io(format!("line {}: {e}", k + 2))))
                .collect::<Result<_>>()?;
            if cols.len() != x_box.dims() + 2 {
                return Err(Error::Io(format!("line {}: expected {} columns", k + 2, x_box.dims() + 2)));
            }
            rows.push((cols[cols.len() - 2], cols[cols.len() - 1]));
        }
        let ny = rows.len() / x_box.len();
        let ys = rows[..ny].iter().map(|r| r.0).collect();
        Self::new(x_box, ys, rows.into_iter().map(|r| r.1).collect(), m)
    }

    /// Little-endian binary: `u32 N`, then `(u64 count, f64 side)` per
    /// dimension, `u64 ny`, the `y` nodes, `f64 m`, then the values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.x_box.dims() as u32).to_le_bytes())?;
        for (n, l) in self.x_box.counts.iter().zip(&self.x_box.lengths) {
            w.write_all(&(*n as u64).to_le_bytes())?;
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&(self.ny() as u64).to_le_bytes())?;
        for y in &self.y_grid {
            w.write_all(&y.to_le_bytes())?;
        }
        w.write_all(&self.m.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dims = u32::from_le_bytes(b4) as usize;
        if dims > MAX_X_DIMS {
            return Err(Error::Io(format!("header declares {dims} x dimensions")));
        }
        let mut counts = Vec::with_capacity(dims);
        let mut lengths = Vec::with_capacity(dims);
        for _ in 0..dims {
            r.read_exact(&mut b8)?;
            counts.push(u64::from_le_bytes(b8) as usize);
            r.read_exact(&mut b8)?;
            lengths.push(f64::from_le_bytes(b8));
        }
        let x_box = XBox::new(lengths, counts)?;
        r.read_exact(&mut b8)?;
        let ny = u64::from_le_bytes(b8) as usize;
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
        };
        let y_grid = read_f64s(ny)?;
        let m = read_f64s(1)?[0];
        let values = read_f64s(x_box.len() * ny)?;
        Self::new(x_box, y_grid, values, m)
    }
}

/// `L^p_m` norm of values laid out like a [`HalfSpaceField`].
pub fn field_norm(x_box: &XBox, y: &[f64], values: &[f64], p: f64, m: f64) -> f64 {
    let ny = y.len();
    let s: f64 = values
        .chunks(ny)
        .map(|v| {
            let h: Vec<f64> = y
                .iter()
                .zip(v)
                .map(|(&y, &v)| if v == 0.0 { 0.0 } else { (p * v.abs().ln() + m * y.ln()).exp() })
                .collect();
            trapezoid(y, &h, false)
        })
        .sum();
    (s * x_box.cell_volume()).powf(1.0 / p)
}

/// In-place DFT over the `x` axes of an `(x, y)` array; the inverse is normalized.
fn fft_x(x_box: &XBox, ny: usize, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let nx = x_box.len();
    for d in 0..x_box.dims() {
        let n = x_box.counts[d];
        if n == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        // stride of axis d in units of x nodes
        let stride: usize = x_box.counts[d + 1..].iter().product();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in (0..nx).filter(|&i| (i / stride).is_multiple_of(n)) {
            for j in 0..ny {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[(start + k * stride) * ny + j];
                }
                fft.process(&mut line);
                let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
                for (k, v) in line.iter().enumerate() {
                    data[(start + k * stride) * ny + j] = v * scale;
                }
            }
        }
    }
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn real_inverse(x_box: &XBox, ny: usize, mut hat: Vec<Complex64>) -> Vec<f64> {
    fft_x(x_box, ny, &mut hat, true);
    hat.into_iter().map(|z| z.re).collect()
}

/// `u = (lambda - Δ_x - L_y)^{-1} f` with the derivatives needed by the
/// closedness estimates.
#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: HalfSpaceField,
    pub u_y: Vec<f64>,
    pub lap_x: Vec<f64>,
    pub l_y: Vec<f64>,
    pub grad_x: Vec<Vec<f64>>,
    pub dy_grad_x: Vec<Vec<f64>>,
}

pub fn elliptic_solve(spec: &KernelSpec, lambda: f64, f: &HalfSpaceField) -> Result<HalfSpaceField> {
    let mut out = elliptic_solve_batch(spec, lambda, std::slice::from_ref(f))?;
    Ok(out.pop().expect("one field").u)
}

/// Solves for several fields on the same grids with shared half-line sweeps.
pub fn elliptic_solve_batch(spec: &KernelSpec, lambda: f64, fs: &[HalfSpaceField]) -> Result<Vec<EllipticSolution>> {
    let Some(first) = fs.first() else {
        return Ok(vec![]);
    };
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be non-negative")));
    }
    if fs.iter().any(|f| f.x_box != first.x_box || f.y_grid != first.y_grid) {
        return Err(Error::InvalidGrid("batched fields must share their grids".into()));
    }
    let (xb, y) = (&first.x_box, &first.y_grid);
    let (nx, ny) = (xb.len(), y.len());
    let hats: Vec<Vec<Complex64>> = fs
        .iter()
        .map(|f| {
            let mut h = to_complex(&f.values);
            fft_x(xb, ny, &mut h, false);
            h
        })
        .collect();
    let scale: Vec<f64> = hats.iter().map(|h| h.iter().fold(0.0f64, |a, z| a.max(z.norm()))).collect();

    let mut groups: BTreeMap<[u64; MAX_X_DIMS], Vec<usize>> = BTreeMap::new();
    for i in 0..nx {
        groups.entry(xb.radial_key(i)).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();

    // (x mode, field) -> (u hat, u_y hat)
    type Solved = Vec<(usize, usize, Vec<Complex64>, Vec<Complex64>)>;
    let solved: Vec<Solved> = groups
        .par_iter()
        .map(|modes| -> Result<Solved> {
            let xi2: f64 = xb.frequency(modes[0]).iter().map(|x| x * x).sum();
            let mu = lambda + xi2;
            let mut slots = Vec::new();
            let mut rhs: Vec<Vec<f64>> = Vec::new();
            for &i in modes {
                for (r, h) in hats.iter().enumerate() {
                    let col = &h[i * ny..(i + 1) * ny];
                    let size = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                    if size <= 1e-15 * scale[r] || size == 0.0 {
                        continue;
                    }
                    if mu == 0.0 {
                        if size > 1e-12 * scale[r] {
                            return Err(Error::SingularFrequency(size));
                        }
                        continue;
                    }
                    slots.push((i, r));
                    rhs.push(col.iter().map(|z| z.re).collect());
                    rhs.push(col.iter().map(|z| z.im).collect());
                }
            }
            if rhs.is_empty() {
                return Ok(vec![]);
            }
            let refs: Vec<&[f64]> = rhs.iter().map(|v| v.as_slice()).collect();
            let out = resolvent_sweep_multi(spec, mu, y, &refs)?;
            Ok(slots
                .into_iter()
                .enumerate()
                .map(|(s, (i, r))| {
                    let (ur, dr) = &out[2 * s];
                    let (ui, di) = &out[2 * s + 1];
                    let u = ur.iter().zip(ui).map(|(&a, &b)| Complex64::new(a, b)).collect();
                    let du = dr.iter().zip(di).map(|(&a, &b)| Complex64::new(a, b)).collect();
                    (i, r, u, du)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let zero = Complex64::new(0.0, 0.0);
    let dims = xb.dims();
    let mut u_hat = vec![vec![zero; nx * ny]; fs.len()];
    let mut uy_hat = vec![vec![zero; nx * ny]; fs.len()];
    for (i, r, u, du) in solved.into_iter().flatten() {
        u_hat[r][i * ny..(i + 1) * ny].copy_from_slice(&u);
        uy_hat[r][i * ny..(i + 1) * ny].copy_from_slice(&du);
    }
    let mut out = Vec::with_capacity(fs.len());
    for (r, f) in fs.iter().enumerate() {
        let (uh, dh) = (&u_hat[r], &uy_hat[r]);
        let mut lap = vec![zero; nx * ny];
        let mut ly = vec![zero; nx * ny];
        let mut grad = vec![vec![zero; nx * ny]; dims];
        let mut dgrad = vec![vec![zero; nx * ny]; dims];
        for i in 0..nx {
            let xi2: f64 = xb.frequency(i).iter().map(|x| x * x).sum();
            let sym = xb.derivative_symbol(i);
            for j in i * ny..(i + 1) * ny {
                lap[j] = -xi2 * uh[j];
                ly[j] = (lambda + xi2) * uh[j] - hats[r][j];
                for d in 0..dims {
                    let ixi = Complex64::new(0.0, sym[d]);
                    grad[d][j] = ixi * uh[j];
                    dgrad[d][j] = ixi * dh[j];
                }
            }
        }
        // the zero mode is undetermined for lambda = 0; L_y u = -f there
        out.push(EllipticSolution {
            u: f.with_values(real_inverse(xb, ny, uh.clone()))?,
            u_y: real_inverse(xb, ny, dh.clone()),
            lap_x: real_inverse(xb, ny, lap),
            l_y: real_inverse(xb, ny, ly),
            grad_x: grad.into_iter().map(|g| real_inverse(xb, ny, g)).collect(),
            dy_grad_x: dgrad.into_iter().map(|g| real_inverse(xb, ny, g)).collect(),
        });
    }
    Ok(out)
}

/// Max over nodes with `window.0 <= y <= window.1` of
/// `|lambda u - Δ_x u - L_y u - f|` with `L_y` by finite differences,
/// relative to `max |f|`. Near `y = 0` a geometric grid makes the
/// three-point stencil divide rounding error by `h^2`; keep the window
/// away from there.
pub fn elliptic_residual(
    spec: &KernelSpec,
    lambda: f64,
    f: &HalfSpaceField,
    sol: &EllipticSolution,
    window: (f64, f64),
) -> Result<f64> {
    let ny = f.ny();
    let lo = f.y_grid.partition_point(|&y| y < window.0).max(1);
    let hi = f.y_grid.partition_point(|&y| y <= window.1).min(ny - 1);
    if lo >= hi {
        return Err(Error::InvalidGrid(format!("no interior nodes in [{}, {}]", window.0, window.1)));
    }
    let fmax = f.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..f.x_box.len() {
        let slice = GridFunction::new(f.y_grid.clone(), sol.u.slice(i).to_vec(), f.m)?;
        let ly = apply_operator_fd(spec, &slice);
        for j in lo..hi {
            let k = i * ny + j;
            let r = lambda * sol.u.values[k] - sol.lap_x[k] - ly[j] - f.values[k];
            worst = worst.max(r.abs());
        }
    }
    Ok(worst / fmax)
}

/// `e^{t(Δ_x + L_y)} f` for data that is piecewise linear in `y`.
pub fn parabolic_step(spec: &KernelSpec, t: f64, f: &HalfSpaceField) -> Result<HalfSpaceField> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    let matrix = SemigroupMatrix::new(spec, t, &f.y_grid)?;
    let (xb, ny) = (&f.x_box, f.ny());
    let mut hat = to_complex(&f.values);
    fft_x(xb, ny, &mut hat, false);
    let cols: Vec<Vec<Complex64>> = (0..xb.len())
        .into_par_iter()
        .map(|i| {
            let xi2: f64 = xb.frequency(i).iter().map(|x| x * x).sum();
            let col = &hat[i * ny..(i + 1) * ny];
            if col.iter().all(|z| z.norm() == 0.0) {
                return col.to_vec();
            }
            let damp = (-xi2 * t).exp();
            let re = matrix.apply(&col.iter().map(|z| z.re).collect::<Vec<_>>());
            let im = matrix.apply(&col.iter().map(|z| z.im).collect::<Vec<_>>());
            re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b) * damp).collect()
        })
        .collect();
    f.with_values(real_inverse(xb, ny, cols.concat()))
}

/// Gaussian in `x` times a smooth bump in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableBump {
    pub x0: [f64; MAX_X_DIMS],
    pub width: f64,
    pub y0: f64,
    pub half: f64,
}

impl SeparableBump {
    pub fn random<R: Rng>(r: &mut R) -> Self {
        let x0 = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let width = r.gen_range(1.0..2.0);
        let y0 = r.gen_range(1.0..3.0);
        let half = r.gen_range(0.3..0.9);
        Self { x0, width, y0, half }
    }

    pub fn y_part(&self, y: f64) -> f64 {
        let s = (y - self.y0) / self.half;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(4)
        }
    }

    pub fn value(&self, x: &[f64], y: f64) -> f64 {
        let g: f64 = x.iter().zip(&self.x0).map(|(x, x0)| (-((x - x0) / self.width).powi(2)).exp()).product();
        g * self.y_part(y)
    }
}

/// Grids and test set of [`closedness_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosednessConfig {
    pub x_dims: usize,
    pub x_length: f64,
    pub x_count: usize,
    pub n_geo: usize,
    pub n_uni: usize,
    pub y_max: f64,
    pub lambdas: Vec<f64>,
    pub n_bumps: usize,
    pub seed: u64,
}

impl Default for ClosednessConfig {
    fn default() -> Self {
        Self {
            x_dims: 1,
            x_length: 16.0,
            x_count: 64,
            n_geo: 128,
            n_uni: 256,
            y_max: 25.0,
            lambdas: vec![0.5, 1.0, 2.0],
            n_bumps: 8,
            seed: 7,
        }
    }
}

impl ClosednessConfig {
    pub fn refined(&self) -> Self {
        Self { x_count: 2 * self.x_count, n_geo: 2 * self.n_geo, n_uni: 2 * self.n_uni, ..self.clone() }
    }

    pub fn x_box(&self) -> Result<XBox> {
        XBox::cube(self.x_dims, self.x_length, self.x_count)
    }

    pub fn y_grid(&self) -> Result<Vec<f64>> {
        hybrid_grid(1e-6, 1.0, self.y_max, self.n_geo, self.n_uni)
    }

    pub fn bumps(&self) -> Vec<SeparableBump> {
        let mut r = rng(self.seed);
        (0..self.n_bumps).map(|_| SeparableBump::random(&mut r)).collect()
    }
}

/// Largest ratio of each closedness quantity to `‖𝓛u‖_p` over the test set.
pub fn closedness_ratios(
    spec: &KernelSpec,
    sp: SpaceParams,
    cfg: &ClosednessConfig,
) -> Result<BTreeMap<&'static str, f64>> {
    let (p, m) = (sp.p, sp.m);
    let roots = spec.op.indicial_roots()?;
    let q = sp.homogeneity();
    let mixed = q > roots.s1 + 1.0 && q < roots.s2 + 2.0;
    let rellich = q > roots.s1 + 2.0 && q < roots.s2 + 2.0;
    let xb = cfg.x_box()?;
    let y = cfg.y_grid()?;
    let fields: Vec<HalfSpaceField> = cfg
        .bumps()
        .iter()
        .map(|b| HalfSpaceField::from_fn(xb.clone(), y.clone(), m, |x, y| b.value(x, y)))
        .collect::<Result<_>>()?;
    let norm = |v: &[f64]| field_norm(&xb, &y, v, p, m);
    let ny = y.len();
    let mut best: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut bump = |k: &'static str, v: f64| {
        let e = best.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    for &lambda in &cfg.lambdas {
        for (sol, f) in elliptic_solve_batch(spec, lambda, &fields)?.iter().zip(&fields) {
            // 𝓛u = lambda u - f
            let lu: Vec<f64> = sol.u.values.iter().zip(&f.values).map(|(u, f)| lambda * u - f).collect();
            let base = norm(&lu);
            bump("l_y", norm(&sol.l_y) / base);
            if xb.dims() > 0 {
                bump("lap_x", norm(&sol.lap_x) / base);
            }
            if mixed && xb.dims() > 0 {
                let mag = |parts: &[Vec<f64>], over_y: bool| -> Vec<f64> {
                    (0..parts[0].len())
                        .map(|k| {
                            let s: f64 = parts.iter().map(|g| g[k] * g[k]).sum::<f64>().sqrt();
                            if over_y {
                                s / y[k % ny]
                            } else {
                                s
                            }
                        })
                        .collect()
                };
                bump("dy_grad_x", norm(&mag(&sol.dy_grad_x, false)) / base);
                bump("grad_x_over_y", norm(&mag(&sol.grad_x, true)) / base);
            }
            if rellich {
                let v: Vec<f64> = sol.u.values.iter().enumerate().map(|(k, u)| u / (y[k % ny] * y[k % ny])).collect();
                bump("u_over_y2", norm(&v) / base);
            }
        }
    }
    Ok(best)
}

/// Closedness ratios on a grid and on its 2x refinement; each passes when
/// finite and drifting by less than 10%.
pub fn closedness_probe(spec: &KernelSpec, sp: SpaceParams, cfg: &ClosednessConfig) -> Result<ProbeReport> {
    let coarse = closedness_ratios(spec, sp, cfg)?;
    let fine = closedness_ratios(spec, sp, &cfg.refined())?;
    let mut rep = ProbeReport::new("closedness");
    for (name, &c) in &coarse {
        let f = fine[name];
        let drift = (f / c - 1.0).abs();
        rep.push(
            CheckRecord::new(*name, f, f.is_finite() && drift < 0.1)
                .param("b", spec.op.b)
                .param("c", spec.op.c)
                .param("m", sp.m)
                .param("p", sp.p)
                .param("coarse", c)
                .param("drift", drift)
                .tolerance(0.1),
        );
    }
    Ok(rep)
}

/// `‖A u‖ / ‖f‖` for `u = (lambda - A)^{-1} f` and bumps `f` squeezed onto
/// `[2^-j, 2^(1-j)]`, one value per level `j`, on the half-line.
pub fn concentration_ratios(spec: &KernelSpec, sp: SpaceParams, lambda: f64, levels: &[u32]) -> Result<Vec<f64>> {
    let deepest = levels.iter().copied().max().unwrap_or(0) as i32;
    let y_min = 2f64.powi(-deepest - 8);
    let n_geo = (48.0 * (1.0 / y_min).log10()).ceil() as usize;
    let y = hybrid_grid(y_min, 1.0, 30.0, n_geo, 256)?;
    let fs: Vec<Vec<f64>> = levels
        .iter()
        .map(|&j| {
            let lo = 2f64.powi(-(j as i32));
            y.iter()
                .map(|&y| {
                    let s = 2.0 * (y - 1.5 * lo) / lo;
                    if s.abs() >= 1.0 {
                        0.0
                    } else {
                        (1.0 - s * s).powi(4)
                    }
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = fs.iter().map(|v| v.as_slice()).collect();
    let sols = resolvent_sweep_multi(spec, lambda, &y, &refs)?;
    let norm = |v: Vec<f64>| -> Result<f64> { GridFunction::new(y.clone(), v, sp.m)?.weighted_norm_log(sp.p) };
    sols.into_iter()
        .zip(&fs)
        .map(|((u, _), f)| {
            let au: Vec<f64> = u.iter().zip(f).map(|(u, f)| lambda * u - f).collect();
            Ok(norm(au)? / norm(f.clone())?)
        })
        .collect()
}

/// `‖Au‖/‖f‖` ratio growth over bumps concentrating at `y = 0`.
pub fn concentration_check(
    spec: &KernelSpec,
    sp: SpaceParams,
    levels: &[u32],
    expect_growth: bool,
) -> Result<ProbeReport> {
    let r = concentration_ratios(spec, sp, 1.0, levels)?;
    let growth = r[r.len() - 1] / r[0];
    let mut rep = ProbeReport::new("concentration");
    let rec = if expect_growth {
        CheckRecord::at_least("growth", growth, 10.0)
    } else {
        CheckRecord::at_most("growth", growth, 2.0)
    };
    rep.push(rec.param("q", sp.homogeneity()).param("b", spec.op.b).param("c", spec.op.c));
    Ok(rep)
}

/// `‖y^-2 u‖_2 / ‖𝓛u‖_2` for `u = φ(x) y^{3/2} g(ln y)` on `R^N x (0, inf)`
/// with `φ` a Gaussian of width `sigma` (ignored for `N = 0`) and `g` a
/// bump of half-width `w` in `ln y`, centred at `ln y = -w`.
pub fn rellich_near_extremal(b: f64, c: f64, x_dims: usize, sigma: f64, w: f64) -> f64 {
    use crate::quad::gauss_legendre;
    let (xg, wg) = gauss_legendre(16);
    let gl = |a: f64, bnd: f64, panels: usize, f: &dyn Fn(f64) -> f64| -> f64 {
        let h = (bnd - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
                xg.iter().zip(&wg).map(|(x, wt)| wt * 0.5 * h * f(0.5 * (lo + hi) + 0.5 * h * x)).sum::<f64>()
            })
            .sum()
    };
    // g(s) = (1 - z^2)^4 with z = (s + w) / w
    let g = |s: f64| -> [f64; 3] {
        let z = (s + w) / w;
        let e = 1.0 - z * z;
        [e.powi(4), -8.0 * z * e.powi(3) / w, (-8.0 * e.powi(3) + 48.0 * z * z * e * e) / (w * w)]
    };
    let c0 = 0.75 + 1.5 * c - b;
    // in s = ln y: y^-2 u = y^{-1/2} g, L_y v = y^{-1/2} (c0 g + (2 + c) g' + g'')
    let lv = |s: f64| {
        let [g0, g1, g2] = g(s);
        c0 * g0 + (2.0 + c) * g1 + g2
    };
    let panels = 400;
    let (a, e) = (-2.0 * w, 0.0);
    let rellich = gl(a, e, panels, &|s| g(s)[0].powi(2));
    let lsq = gl(a, e, panels, &|s| lv(s).powi(2));
    if x_dims == 0 {
        return (rellich / lsq).sqrt();
    }
    // dy = e^s ds; ∫v^2 dy = ∫ e^{4s} g^2 ds and ∫ v Lv dy = ∫ e^{2s} g Lv ds
    let vv = gl(a, e, panels, &|s| (4.0 * s).exp() * g(s)[0].powi(2));
    let vlv = gl(a, e, panels, &|s| (2.0 * s).exp() * g(s)[0] * lv(s));
    let phi = |x: f64| (-(x / sigma).powi(2)).exp();
    let phi2 = |x: f64| (4.0 * x * x / sigma.powi(4) - 2.0 / (sigma * sigma)) * phi(x);
    let xr = 12.0 * sigma;
    let pp = gl(-xr, xr, 200, &|x| phi(x).powi(2)).powi(x_dims as i32);
    let p2p2 = gl(-xr, xr, 200, &|x| phi2(x).powi(2));
    let p2p = gl(-xr, xr, 200, &|x| phi2(x) * phi(x));
    let p1 = gl(-xr, xr, 200, &|x| phi(x).powi(2));
    // ‖Δ_x φ‖^2 and <Δ_x φ, φ> for the product Gaussian
    let lap_sq = x_dims as f64 * p2p2 * p1.powi(x_dims as i32 - 1)
        + (x_dims * (x_dims - 1)) as f64 * p2p * p2p * p1.powi(x_dims as i32 - 2);
    let lap_dot = x_dims as f64 * p2p * p1.powi(x_dims as i32 - 1);
    (pp * rellich / (lap_sq * vv + 2.0 * lap_dot * vlv + pp * lsq)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    Semigroup,
    Resolvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RademacherConfig {
    pub family_size: usize,
    pub n_signs: usize,
    pub n_draws: usize,
    pub mode: FamilyMode,
    pub seed: u64,
}

impl Default for RademacherConfig {
    fn default() -> Self {
        Self { family_size: 16, n_signs: 64, n_draws: 4, mode: FamilyMode::Resolvent, seed: 11 }
    }
}

/// Square-function and Rademacher-average ratios for family sizes
/// `1, 2, 4, ..`. One pool of `n_draws * family_size` pairs `(T_i, f_i)` is
/// drawn; the value for size `s` is the max over all disjoint blocks of `s`
/// consecutive pairs, so size 1 is the uniform bound of the pool.
pub fn rademacher_ratios(spec: &KernelSpec, sp: SpaceParams, cfg: &RademacherConfig) -> Result<Vec<(usize, f64, f64)>> {
    if cfg.family_size == 0 || cfg.family_size > 16 {
        return Err(Error::Config(format!("family size {} must lie in 1..=16", cfg.family_size)));
    }
    let y = hybrid_grid(1e-6, 1.0, 30.0, 128, 256)?;
    let mut sizes = vec![1];
    while 2 * sizes[sizes.len() - 1] <= cfg.family_size {
        sizes.push(2 * sizes[sizes.len() - 1]);
    }
    let mut r = rng(cfg.seed);
    let pool = cfg.n_draws.max(1) * cfg.family_size;
    let mut fam = Vec::with_capacity(pool);
    let mut images = Vec::with_capacity(pool);
    for _ in 0..pool {
        let y0 = log_uniform(r.gen::<f64>(), 0.05, 5.0);
        let half = y0 * r.gen_range(0.2..0.8);
        let amp = r.gen_range(0.5..2.0);
        let bump = move |s: f64| {
            let z = (s - y0) / half;
            if z.abs() >= 1.0 {
                0.0
            } else {
                amp * (1.0 - z * z).powi(4)
            }
        };
        let f: Vec<f64> = y.iter().map(|&s| bump(s)).collect();
        let tf = match cfg.mode {
            FamilyMode::Resolvent => {
                let lambda = log_uniform(r.gen::<f64>(), 0.05, 20.0);
                let (u, _) = resolvent_sweep_multi(spec, lambda, &y, &[&f])?.pop().expect("one");
                u.into_iter().map(|v| lambda * v).collect::<Vec<_>>()
            }
            FamilyMode::Semigroup => {
                let t = log_uniform(r.gen::<f64>(), 0.01, 10.0);
                let prof = FnProfile::new(bump, y0 - half, y0 + half);
                apply_semigroup(spec, t, &prof, &y, sp.m)?.values().to_vec()
            }
        };
        fam.push(f);
        images.push(tf);
    }
    let signs: Vec<Vec<f64>> = (0..cfg.n_signs)
        .map(|_| (0..cfg.family_size).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect())
        .collect();
    let norm = |v: Vec<f64>| GridFunction::new(y.clone(), v, sp.m).and_then(|g| g.weighted_norm(sp.p));
    let mut out = Vec::with_capacity(sizes.len());
    for &s in &sizes {
        let (mut sq_best, mut avg_best) = (0.0f64, 0.0f64);
        for start in (0..pool).step_by(s) {
            let block = start..start + s;
            let square = |vs: &[Vec<f64>]| -> Vec<f64> {
                (0..y.len()).map(|j| vs[block.clone()].iter().map(|v| v[j] * v[j]).sum::<f64>().sqrt()).collect()
            };
            sq_best = sq_best.max(norm(square(&images))? / norm(square(&fam))?);
            let (mut num, mut den) = (0.0, 0.0);
            for eps in &signs {
                let comb = |vs: &[Vec<f64>]| -> Vec<f64> {
                    (0..y.len()).map(|j| vs[block.clone()].iter().zip(eps).map(|(v, e)| e * v[j]).sum()).collect()
                };
                num += norm(comb(&images))?;
                den += norm(comb(&fam))?;
            }
            avg_best = avg_best.max(num / den);
        }
        out.push((s, sq_best, avg_best));
    }
    Ok(out)
}

/// Necessary consequences of R-boundedness: the square-function ratio of
/// the family grows by less than 15% per doubling of its size.
pub fn rademacher_probe(spec: &KernelSpec, sp: SpaceParams, cfg: &RademacherConfig) -> Result<ProbeReport> {
    let rows = rademacher_ratios(spec, sp, cfg)?;
    let mut rep = ProbeReport::new("rademacher");
    for (k, &(s, sq, avg)) in rows.iter().enumerate() {
        let rec = if k == 0 {
            CheckRecord::new(format!("size-{s}"), sq, sq.is_finite())
        } else {
            let growth = sq / rows[k - 1].1 - 1.0;
            CheckRecord::at_most(format!("size-{s}"), growth, 0.15).param("ratio", sq)
        };
        rep.push(rec.param("p", sp.p).param("m", sp.m).param("rademacher_average", avg));
    }
    Ok(rep)
}
