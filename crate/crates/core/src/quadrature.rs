//! Globally adaptive Gauss–Kronrod (7/15) integration over finite intervals.
//!
//! The integrand may return any [`Quantity`]: a real number, a complex number,
//! or a fixed-size vector of complex numbers that are integrated together so
//! that a single set of abscissae serves every component. Convergence is
//! checked per component.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], [3], [5], [7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: a real vector space with a notion of
/// per-component magnitude.
pub trait Quantity: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn dim(&self) -> usize;
    /// Magnitude of component `i`.
    fn component_abs(&self, i: usize) -> f64;
    /// Same shape with every component replaced by its magnitude.
    fn abs_each(&self) -> Self;
    fn is_finite(&self) -> bool;
}

impl Quantity for f64 {
    fn zero() -> Self {
        0.0
    }
    fn dim(&self) -> usize {
        1
    }
    fn component_abs(&self, _: usize) -> f64 {
        self.abs()
    }
    fn abs_each(&self) -> Self {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Quantity for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn dim(&self) -> usize {
        1
    }
    fn component_abs(&self, _: usize) -> f64 {
        self.norm()
    }
    fn abs_each(&self) -> Self {
        Complex64::new(self.norm(), 0.0)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Fixed-length complex vector integrated as one quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CVec<const N: usize>(pub [Complex64; N]);

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for CVec<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> Quantity for CVec<N> {
    fn zero() -> Self {
        CVec([Complex64::new(0.0, 0.0); N])
    }
    fn dim(&self) -> usize {
        N
    }
    fn component_abs(&self, i: usize) -> f64 {
        self.0[i].norm()
    }
    fn abs_each(&self) -> Self {
        CVec(self.0.map(|z| Complex64::new(z.norm(), 0.0)))
    }
    fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error(
        "no convergence: subinterval [{lo:.6e}, {hi:.6e}] has error estimate {error:.3e} \
         after {depth} bisections"
    )]
    NotConverged {
        lo: f64,
        hi: f64,
        error: f64,
        depth: u32,
    },
    #[error("integrand is not finite at x = {x:.6e}")]
    NonFinite { x: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationSpec {
    pub a: f64,
    pub b: f64,
    /// Interior points where the integrand has kinks or sharp peaks. Points
    /// outside `(a, b)` are ignored.
    pub split_points: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Components smaller than this fraction of the largest one are only
    /// resolved to `rel_tol * scale_floor * max_j |v_j|`.
    pub scale_floor: f64,
    /// Maximum number of bisections of any initial panel.
    pub max_depth: u32,
}

impl IntegrationSpec {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            split_points: Vec::new(),
            rel_tol: 1e-8,
            abs_tol: 0.0,
            scale_floor: 0.0,
            max_depth: 40,
        }
    }

    pub fn with_splits(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.split_points.extend(pts);
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_scale_floor(mut self, floor: f64) -> Self {
        self.scale_floor = floor;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    /// Per-component error bound, same shape as `value`.
    pub err_estimate: T,
}

struct Panel<T> {
    lo: f64,
    hi: f64,
    value: T,
    err: T,
    depth: u32,
}

fn gk15<T: Quantity>(
    f: &mut impl FnMut(f64) -> T,
    lo: f64,
    hi: f64,
) -> Result<(T, T), QuadratureError> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<T, QuadratureError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fc = eval(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = eval(c - dx)? + eval(c + dx)?;
        kron = kron + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    Ok((kron, (kron - gauss).abs_each()))
}

/// Worst ratio of error to allowed tolerance over all components.
fn excess<T: Quantity>(err: &T, total: &T, rel: f64, abs: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..total.dim() {
        let tol = (rel * total.component_abs(i)).max(abs);
        let e = err.component_abs(i);
        let r = if tol > 0.0 {
            e / tol
        } else if e > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(r);
    }
    worst
}

/// Integrate `f` over `[spec.a, spec.b]`; `a > b` gives the negated integral.
pub fn integrate<T, F>(mut f: F, spec: &IntegrationSpec) -> Result<Estimate<T>, QuadratureError>
where
    T: Quantity,
    F: FnMut(f64) -> T,
{
    let (a, b) = (spec.a, spec.b);
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            err_estimate: T::zero(),
        });
    }
    if a > b {
        let flipped = IntegrationSpec { a: b, b: a, ..spec.clone() };
        let est = integrate(f, &flipped)?;
        return Ok(Estimate {
            value: est.value * -1.0,
            err_estimate: est.err_estimate,
        });
    }

    let mut edges: Vec<f64> = Vec::with_capacity(spec.split_points.len() + 2);
    edges.push(a);
    edges.extend(spec.split_points.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut panels: Vec<Panel<T>> = Vec::with_capacity(edges.len() * 4);
    for w in edges.windows(2) {
        let (value, err) = gk15(&mut f, w[0], w[1])?;
        panels.push(Panel {
            lo: w[0],
            hi: w[1],
            value,
            err,
            depth: 0,
        });
    }

    loop {
        let mut total = T::zero();
        let mut err = T::zero();
        for p in &panels {
            total = total + p.value;
            err = err + p.err;
        }
        let largest = (0..total.dim()).map(|i| total.component_abs(i)).fold(0.0, f64::max);
        let abs_tol = spec.abs_tol.max(spec.rel_tol * spec.scale_floor * largest);
        if excess(&err, &total, spec.rel_tol, abs_tol) <= 1.0 {
            return Ok(Estimate {
                value: total,
                err_estimate: err,
            });
        }

        // Bisect the panel that contributes most to the remaining excess.
        let (worst, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, excess(&p.err, &total, spec.rel_tol, abs_tol)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = &panels[worst];
        let mid = 0.5 * (p.lo + p.hi);
        if p.depth >= spec.max_depth || mid <= p.lo || mid >= p.hi {
            let e = (0..p.err.dim()).map(|i| p.err.component_abs(i)).fold(0.0, f64::max);
            return Err(QuadratureError::NotConverged {
                lo: p.lo,
                hi: p.hi,
                error: e,
                depth: p.depth,
            });
        }
        let (lo, hi, depth) = (p.lo, p.hi, p.depth + 1);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        panels[worst] = Panel {
            lo,
            hi: mid,
            value: v1,
            err: e1,
            depth,
        };
        panels.push(Panel {
            lo: mid,
            hi,
            value: v2,
            err: e2,
            depth,
        });
    }
}
