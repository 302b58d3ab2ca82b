//! Parameter algebra for `L = D_yy + (c/y) D_y - b/y^2`.
//!
//! Everything here is a pure function of plain-data parameter structs.
//! Conditions are evaluated with exact IEEE comparisons: callers that want
//! slack must perturb the inputs themselves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the one-dimensional operator `D_yy + (c/y) D_y - b/y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    /// Inverse-square potential coefficient.
    pub b: f64,
    /// Drift coefficient.
    pub c: f64,
}

/// `D` together with the roots `s1 <= s2` of `-s^2 + (c-1)s + b = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicialRoots {
    pub d: f64,
    pub s1: f64,
    pub s2: f64,
}

impl IndicialRoots {
    pub fn sqrt_d(&self) -> f64 {
        self.d.sqrt()
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

impl OperatorParams {
    pub fn new(b: f64, c: f64) -> Self {
        Self { b, c }
    }

    /// Pure Bessel operator `D_yy + (c/y) D_y`.
    pub fn bessel(c: f64) -> Self {
        Self { b: 0.0, c }
    }

    pub fn discriminant(&self) -> f64 {
        let h = (self.c - 1.0) / 2.0;
        self.b + h * h
    }

    pub fn indicial_roots(&self) -> Result<IndicialRoots> {
        let d = self.discriminant();
        if d < 0.0 {
            return Err(Error::NegativeDiscriminant(d));
        }
        let h = (self.c - 1.0) / 2.0;
        let r = d.sqrt();
        Ok(IndicialRoots { d, s1: h - r, s2: h + r })
    }

    /// Window `(s1, s2 + 2)` of homogeneity indices for which the
    /// Dirichlet-type realization generates a semigroup.
    pub fn generation_interval(&self) -> Result<Interval> {
        let r = self.indicial_roots()?;
        Ok(Interval { lo: r.s1, hi: r.s2 + 2.0 })
    }
}

/// Ambient dimension, weight power and Lebesgue exponent of `L^p_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    /// Ambient dimension `M` (1 for the half-line, `N + 1` for the half-space).
    pub dim: u32,
    /// Power of the weight `y^m`.
    pub m: f64,
    pub p: f64,
}

impl SpaceParams {
    pub fn new(dim: u32, m: f64, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("exponent p = {p} must lie in (1, inf)")));
        }
        if !m.is_finite() {
            return Err(Error::Domain(format!("weight power m = {m} must be finite")));
        }
        Ok(Self { dim, m, p })
    }

    pub fn half_line(m: f64, p: f64) -> Result<Self> {
        Self::new(1, m, p)
    }

    /// Homogeneity index `(m + 1) / p` of the weight in the normal variable.
    pub fn homogeneity(&self) -> f64 {
        (self.m + 1.0) / self.p
    }

    /// `(M + m) / p`, the index that matters for radial problems on R^M.
    pub fn radial_homogeneity(&self) -> f64 {
        (self.dim as f64 + self.m) / self.p
    }

    pub fn conjugate_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// Outcome of [`classify_realization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    /// The maximal realization generates a semigroup.
    pub maximal: bool,
    /// The closure of `(L, C_c^inf)` generates a semigroup.
    pub minimal: bool,
    /// Exactly one realization between minimal and maximal generates.
    pub unique: bool,
    /// The second (s2-based) realization generates as well.
    pub alternate_exists: bool,
}

/// Classify the realizations of `L` in `L^p_m` by the homogeneity index.
///
/// Endpoints: `(s1, s2]` for the maximal and `[s1 + 2, s2 + 2)` for the
/// minimal realization.
pub fn classify_realization(op: OperatorParams, sp: SpaceParams) -> Result<Realization> {
    let r = op.indicial_roots()?;
    let q = sp.homogeneity();
    let window = Interval { lo: r.s1, hi: r.s2 + 2.0 };
    if !window.contains(q) {
        return Err(Error::OutsideGenerationWindow { q, lo: window.lo, hi: window.hi });
    }
    let maximal = r.s1 < q && q <= r.s2;
    let minimal = r.s1 + 2.0 <= q && q < r.s2 + 2.0;
    let gap = r.s2 < q && q < r.s1 + 2.0;
    let small_d = r.d >= 0.0 && r.d < 1.0;
    Ok(Realization { maximal, minimal, unique: !(small_d && gap), alternate_exists: r.d > 0.0 && r.d < 1.0 && gap })
}

/// Conjugation `y^{-k} L y^{k}` together with the isometry `L^p_{m+kp} -> L^p_m`.
pub fn similarity_shift(op: OperatorParams, sp: SpaceParams, k: f64) -> (OperatorParams, SpaceParams) {
    let b = op.b - k * (op.c + k - 1.0);
    let c = op.c + 2.0 * k;
    (OperatorParams { b, c }, SpaceParams { m: sp.m + k * sp.p, ..sp })
}

/// `gamma_p`, the parabola of exceptional potentials and, where known, the
/// sharp Rellich constant on the Lebesgue half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RellichParams {
    pub gamma_p: f64,
    pub parabola_vertex: f64,
    /// `3 - 2/p + c == 0`: the parabola degenerates to a half-axis.
    pub degenerate_axis: bool,
    /// `b` lies on the exceptional set (the inequality fails).
    pub in_parabola: bool,
    /// `1 / (b + gamma_p)`, available when `s1 + 2 < 1/p < s2 + 2`.
    pub best_constant: Option<f64>,
}

pub fn gamma_p(c: f64, p: f64) -> f64 {
    let inv_p = 1.0 / p;
    (inv_p - 2.0) * ((1.0 - inv_p) + c)
}

pub fn rellich_constants(op: OperatorParams, sp: SpaceParams) -> RellichParams {
    let inv_p = 1.0 / sp.p;
    let g = gamma_p(op.c, sp.p);
    let axis = 3.0 - 2.0 * inv_p + op.c;
    let degenerate_axis = axis == 0.0;
    let (in_parabola, best_constant) = match op.indicial_roots() {
        Ok(r) => {
            let lo = r.s1 + 2.0;
            let hi = r.s2 + 2.0;
            let inside = lo < inv_p && inv_p < hi;
            let on = if degenerate_axis { !inside } else { inv_p == lo || inv_p == hi };
            (on, inside.then(|| 1.0 / (op.b + g)))
        }
        // Complex roots: read membership straight off the parabola. A real
        // point forces xi * axis = 0.
        Err(_) => {
            let on = if degenerate_axis { op.b + g <= 0.0 } else { op.b + g == 0.0 };
            (on, None)
        }
    };
    RellichParams { gamma_p: g, parabola_vertex: -g, degenerate_axis, in_parabola, best_constant }
}

/// Membership of `|y|^k` in `A_p(mu_m)` and, optionally, `RH_r(mu_m)` on R^M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuckenhouptClass {
    pub in_ap: bool,
    pub in_rh: Option<bool>,
}

pub fn muckenhoupt_radial(dim: u32, m: f64, k: f64, p: f64, r: Option<f64>) -> Result<MuckenhouptClass> {
    let hom = dim as f64 + m;
    if !(hom > 0.0) {
        return Err(Error::InvalidMeasure(hom));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    let upper = if p.is_infinite() { f64::INFINITY } else { hom * (p - 1.0) };
    let in_ap = -hom < k && k < upper;
    let in_rh = match r {
        Some(r) if !(r >= 1.0) => return Err(Error::Domain(format!("r = {r} must be at least 1"))),
        Some(r) => Some(-hom / r < k && k < upper),
        None => None,
    };
    Ok(MuckenhouptClass { in_ap, in_rh })
}

/// Which Hardy averaging operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyKind {
    /// `y^{-c-1} int_0^y f(s) s^c ds`
    H1,
    /// `y^{-c-1} int_y^inf f(s) s^c ds`
    H2,
}

/// Norm bound of `H1`/`H2` on `L^p_m` obtained from Minkowski's inequality.
pub fn hardy_constant(c: f64, sp: SpaceParams, which: HardyKind) -> Result<f64> {
    let q = sp.homogeneity();
    match which {
        HardyKind::H1 if c + 1.0 > q => Ok(1.0 / ((c + 1.0) - q)),
        HardyKind::H2 if c + 1.0 < q => Ok(1.0 / (q - (c + 1.0))),
        _ => Err(Error::Unbounded(format!("{which:?} with c + 1 = {} and (m+1)/p = {q}", c + 1.0))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(m: f64, p: f64) -> SpaceParams {
        SpaceParams::half_line(m, p).unwrap()
    }

    #[test]
    fn indicial_roots_pure_bessel() {
        let r = OperatorParams::bessel(0.0).indicial_roots().unwrap();
        assert_eq!((r.d, r.s1, r.s2), (0.25, -1.0, 0.0));
        let r = OperatorParams::bessel(3.0).indicial_roots().unwrap();
        assert_eq!((r.d, r.s1, r.s2), (1.0, 0.0, 2.0));
    }

    #[test]
    fn negative_discriminant_is_an_error() {
        assert_eq!(OperatorParams::new(-1.0, 1.0).indicial_roots(), Err(Error::NegativeDiscriminant(-1.0)));
    }

    #[test]
    fn generation_windows() {
        let w = OperatorParams::bessel(0.0).generation_interval().unwrap();
        assert_eq!((w.lo, w.hi), (-1.0, 2.0));
        let w = OperatorParams::bessel(3.0).generation_interval().unwrap();
        assert_eq!((w.lo, w.hi), (0.0, 4.0));
        let w = OperatorParams::new(2.0, 3.0).generation_interval().unwrap();
        assert!((w.lo - (1.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!(w.contains(0.0));
    }

    #[test]
    fn classify_examples() {
        let op = OperatorParams::bessel(0.0);
        let r = classify_realization(op, sp(0.0, 2.0)).unwrap();
        assert!(!r.unique && r.alternate_exists);
        assert!(!r.maximal && !r.minimal);

        let r = classify_realization(op, sp(0.0, 4.0)).unwrap();
        assert!(!r.maximal && !r.minimal);

        // q = s2 = 0 exactly: closed endpoint of the maximal interval
        let r = classify_realization(op, sp(-1.0, 2.0)).unwrap();
        assert!(r.maximal);

        // q = s1 + 2 = 1: closed endpoint of the minimal interval
        let r = classify_realization(op, sp(1.0, 2.0)).unwrap();
        assert!(r.minimal && r.unique);

        assert!(matches!(classify_realization(op, sp(5.0, 2.0)), Err(Error::OutsideGenerationWindow { .. })));
        // open lower endpoint
        assert!(classify_realization(op, sp(-3.0, 2.0)).is_err());
    }

    #[test]
    fn similarity_examples() {
        let op = OperatorParams::new(1.0, 0.0);
        let (t, s) = similarity_shift(op, sp(0.0, 2.0), 1.0);
        assert_eq!((t.b, t.c, s.m), (1.0, 2.0, 2.0));
        assert_eq!(t.discriminant(), 1.25);
        assert_eq!(op.discriminant(), 1.25);

        let s1 = op.indicial_roots().unwrap().s1;
        let (t, _) = similarity_shift(op, sp(0.0, 2.0), -s1);
        assert!(t.b.abs() < 1e-14);

        let (t, s) = similarity_shift(op, sp(0.3, 3.0), 0.0);
        assert_eq!((t, s), (op, sp(0.3, 3.0)));
    }

    #[test]
    fn rellich_examples() {
        let r = rellich_constants(OperatorParams::new(1.0, 0.0), sp(0.0, 2.0));
        assert_eq!(r.gamma_p, -0.75);
        assert_eq!(r.best_constant, Some(4.0));
        assert!(!r.in_parabola && !r.degenerate_axis);

        // c = -3, b = -3.75: s2 + 2 = 1/2 = 1/p exactly
        let op = OperatorParams::new(-3.75, -3.0);
        let roots = op.indicial_roots().unwrap();
        assert_eq!(roots.s2 + 2.0, 0.5);
        let r = rellich_constants(op, sp(0.0, 2.0));
        assert!(r.in_parabola);
        assert_eq!(r.best_constant, None);
    }

    #[test]
    fn rellich_degenerate_axis() {
        // 3 - 2/p + c = 0 with p = 2 needs c = -2
        let op = OperatorParams::new(0.0, -2.0);
        let r = rellich_constants(op, sp(0.0, 2.0));
        assert!(r.degenerate_axis);
        // s1 = -3, s2 = 0: 1/2 in (-1, 2), so b is off the half-axis
        assert!(!r.in_parabola);
        let r = rellich_constants(OperatorParams::new(-2.5, -2.0), sp(0.0, 2.0));
        // D = -0.25: complex roots, b + gamma = -2.5 + 2.25 < 0 lies on the axis
        assert!(r.in_parabola);
    }

    #[test]
    fn muckenhoupt_examples() {
        assert!(muckenhoupt_radial(1, 0.0, 0.0, 2.0, None).unwrap().in_ap);
        assert!(!muckenhoupt_radial(1, 0.0, 1.0, 2.0, None).unwrap().in_ap);
        let w = muckenhoupt_radial(1, 0.0, -0.4, 2.0, Some(2.0)).unwrap();
        assert_eq!(w, MuckenhouptClass { in_ap: true, in_rh: Some(true) });
        let w = muckenhoupt_radial(1, 0.0, -0.6, 2.0, Some(2.0)).unwrap();
        assert_eq!(w, MuckenhouptClass { in_ap: true, in_rh: Some(false) });
        assert_eq!(muckenhoupt_radial(1, -1.0, 0.0, 2.0, None), Err(Error::InvalidMeasure(0.0)));
    }

    #[test]
    fn hardy_examples() {
        assert_eq!(hardy_constant(0.0, sp(0.0, 2.0), HardyKind::H1), Ok(2.0));
        assert!(matches!(hardy_constant(0.0, sp(0.0, 2.0), HardyKind::H2), Err(Error::Unbounded(_))));
        assert!(hardy_constant(1.0, sp(1.0, 2.0), HardyKind::H2).is_err());
        assert_eq!(hardy_constant(0.0, sp(3.0, 2.0), HardyKind::H2), Ok(1.0));
    }

    #[test]
    fn space_params_validation() {
        assert!(SpaceParams::new(1, 0.0, 1.0).is_err());
        assert!(SpaceParams::new(0, 0.0, 2.0).is_err());
        assert!(SpaceParams::new(2, 0.0, f64::INFINITY).is_err());
        assert_eq!(sp(1.0, 4.0).homogeneity(), 0.5);
    }
}
