//! Complex scalar fields, grids, finite-difference derivatives and residual scans.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Location, Result};
use crate::real::{cx, Real, C};

/// Default finite-difference step on every continuous axis.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Truncation order of every stencil in [`diff`].
pub const STENCIL_ORDER: u32 = 4;

/// A sample location: up to three continuous coordinates and a lattice site.
///
/// KP fields use `axes = [x, Y, T]`; lattice fields use `axes = [X, Y, 0]` with `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T = f64> {
    pub axes: [T; 3],
    pub n: i64,
}

impl<T: Real> Point<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Point { axes: [a, b, c], n: 0 }
    }

    pub fn lattice(a: T, b: T, n: i64) -> Self {
        Point {
            axes: [a, b, T::zero()],
            n,
        }
    }

    pub fn lift(p: &Point<f64>) -> Self {
        Point {
            axes: p.axes.map(T::from_f64),
            n: p.n,
        }
    }

    pub fn lower(&self) -> Point<f64> {
        Point {
            axes: self.axes.map(Real::to_f64),
            n: self.n,
        }
    }

    pub fn with_n(&self, n: i64) -> Self {
        Point { n, ..*self }
    }

    pub fn location(&self) -> Location {
        Location {
            axes: self.axes.map(Real::to_f64),
            n: self.n,
        }
    }
}

impl fmt::Display for Point<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.location().fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arity {
    pub continuous: usize,
    pub lattice: bool,
}

impl Arity {
    pub const CONTINUOUS3: Arity = Arity {
        continuous: 3,
        lattice: false,
    };
    pub const LATTICE2: Arity = Arity {
        continuous: 2,
        lattice: true,
    };
}

/// A deterministic complex-valued field, evaluable at any [`Real`] precision.
pub trait ScalarField: Sync {
    fn arity(&self) -> Arity;
    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>>;
}

impl<F: ScalarField> ScalarField for &F {
    fn arity(&self) -> Arity {
        (**self).arity()
    }
    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        (**self).eval(p)
    }
}

/// Field backed by an `f64` closure. Higher-precision evaluation rounds the
/// point to `f64` first, so stencils over it see ordinary `f64` noise.
pub struct FnField<F> {
    f: F,
    arity: Arity,
}

impl<F> FnField<F>
where
    F: Fn(&Point) -> Result<Complex64> + Sync,
{
    pub fn new(arity: Arity, f: F) -> Self {
        FnField { f, arity }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&Point) -> Result<Complex64> + Sync,
{
    fn arity(&self) -> Arity {
        self.arity
    }
    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        (self.f)(&p.lower()).map(cx::lift)
    }
}

/// A solution `(u, w)` in the sense of a pair of fields over the same coordinates.
#[derive(Clone, Debug)]
pub struct FieldPair<U, W> {
    pub u: U,
    pub w: W,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        AxisRange { min, max, count }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

/// Region a stencil or grid point must avoid.
#[derive(Clone)]
pub enum Exclusion {
    /// `|axis| < bound`
    AbsBelow {
        axis: usize,
        bound: f64,
    },
    Custom(Arc<dyn Fn(&Point) -> bool + Send + Sync>),
}

impl Exclusion {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Exclusion::AbsBelow { axis, bound } => p.axes[*axis].abs() < *bound,
            Exclusion::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::AbsBelow { axis, bound } => write!(f, "|axis{axis}| < {bound}"),
            Exclusion::Custom(_) => write!(f, "custom"),
        }
    }
}

fn excluded(exclusions: &[Exclusion], p: &Point) -> bool {
    exclusions.iter().any(|e| e.contains(p))
}

/// Tensor grid over the continuous axes, optionally times a range of lattice sites.
#[derive(Clone, Debug)]
pub struct GridSpec {
    axes: Vec<AxisRange>,
    lattice: Option<(i64, i64)>,
    exclusions: Vec<Exclusion>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisRange>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "need 1 to 3 continuous axes, got {}",
                axes.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.count == 0 {
                return Err(Error::InvalidGrid(format!("axis {i}: count must be at least 1")));
            }
            if !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: bounds must be finite, got [{}, {}]",
                    a.min, a.max
                )));
            }
            if a.count == 1 && a.min != a.max {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: a single point needs min = max, got [{}, {}]",
                    a.min, a.max
                )));
            }
            if a.count > 1 && !(a.min < a.max) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: need min < max, got [{}, {}]",
                    a.min, a.max
                )));
            }
        }
        Ok(GridSpec {
            axes,
            lattice: None,
            exclusions: Vec::new(),
        })
    }

    pub fn with_lattice(mut self, lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidGrid(format!("lattice range {lo}..={hi} is empty")));
        }
        self.lattice = Some((lo, hi));
        Ok(self)
    }

    pub fn excluding(mut self, e: Exclusion) -> Self {
        self.exclusions.push(e);
        self
    }

    pub fn axes(&self) -> &[AxisRange] {
        &self.axes
    }

    pub fn lattice(&self) -> Option<(i64, i64)> {
        self.lattice
    }

    pub fn exclusions(&self) -> &[Exclusion] {
        &self.exclusions
    }

    /// All non-excluded points in row-major order (first axis slowest, lattice last).
    pub fn points(&self) -> Result<Vec<Point>> {
        let (nlo, nhi) = self.lattice.unwrap_or((0, 0));
        let counts: Vec<usize> = self.axes.iter().map(|a| a.count).collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::new();
        for flat in 0..total {
            let mut axes = [0.0; 3];
            let mut rem = flat;
            for k in (0..self.axes.len()).rev() {
                axes[k] = self.axes[k].value(rem % counts[k]);
                rem /= counts[k];
            }
            for n in nlo..=nhi {
                let p = Point { axes, n };
                if !excluded(&self.exclusions, &p) {
                    out.push(p);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(out)
    }
}

/// Per-axis derivative orders, each at most 3.
pub type Orders = [u8; 3];

const FIRST: (&[i64], i64) = (&[1, -8, 0, 8, -1], 12);
const SECOND: (&[i64], i64) = (&[-1, 16, -30, 16, -1], 12);
const THIRD: (&[i64], i64) = (&[1, -8, 13, 0, -13, 8, -1], 8);

/// Central fourth-order weights `(offset, numerator)` and the common denominator.
fn stencil(order: u8) -> (Vec<(i64, i64)>, i64) {
    let (w, den) = match order {
        0 => return (vec![(0, 1)], 1),
        1 => FIRST,
        2 => SECOND,
        _ => THIRD,
    };
    let half = (w.len() / 2) as i64;
    let taps = w
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| (i as i64 - half, c))
        .collect();
    (taps, den)
}

/// Mixed partial derivative of `field` at `at`, sampled at precision `T`.
///
/// Fourth-order central stencils per axis, composed as a tensor product for
/// mixed partials. Weights are applied as integers and the denominator
/// `den · h^k` is divided out in `T`, so no rounding enters through the weights.
pub fn diff<T: Real, F: ScalarField>(field: &F, at: &Point, orders: Orders, h: f64) -> Result<C<T>> {
    diff_within(field, at, orders, h, &[])
}

/// [`diff`] that refuses stencils touching any of `exclusions`.
pub fn diff_within<T: Real, F: ScalarField>(
    field: &F,
    at: &Point,
    orders: Orders,
    h: f64,
    exclusions: &[Exclusion],
) -> Result<C<T>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("step must be positive and finite, got {h}")));
    }
    if orders.iter().any(|&o| o > 3) {
        return Err(invalid(
            "orders",
            format!("per-axis order must be <= 3, got {orders:?}"),
        ));
    }
    let axes: Vec<(usize, Vec<(i64, i64)>, i64)> = orders
        .iter()
        .enumerate()
        .filter(|(_, &o)| o > 0)
        .map(|(axis, &o)| {
            let (taps, den) = stencil(o);
            (axis, taps, den)
        })
        .collect();

    if axes.is_empty() {
        return sample(field, &Point::lift(at), exclusions);
    }

    let mut combos: Vec<([i64; 3], i64)> = vec![([0; 3], 1)];
    let mut den: i64 = 1;
    let mut total_order = 0i32;
    for (axis, taps, d) in &axes {
        den *= d;
        total_order += orders[*axis] as i32;
        combos = combos
            .into_iter()
            .flat_map(|(off, w)| {
                taps.iter().map(move |&(k, c)| {
                    let mut o = off;
                    o[*axis] = k;
                    (o, w * c)
                })
            })
            .collect();
    }

    let ht = T::from_f64(h);
    let base = Point::<T>::lift(at);
    let mut acc = C::<T>::new(T::zero(), T::zero());
    for (off, w) in combos {
        let mut p = base;
        for k in 0..3 {
            if off[k] != 0 {
                p.axes[k] = p.axes[k] + T::from_i64(off[k]) * ht;
            }
        }
        let v = sample(field, &p, exclusions)?;
        acc = acc + v * T::from_i64(w);
    }
    let mut scale = T::from_i64(den);
    for _ in 0..total_order {
        scale = scale * ht;
    }
    Ok(acc / scale)
}

fn sample<T: Real, F: ScalarField>(field: &F, p: &Point<T>, exclusions: &[Exclusion]) -> Result<C<T>> {
    if !exclusions.is_empty() {
        let lo = p.lower();
        if excluded(exclusions, &lo) {
            return Err(Error::StencilOutOfDomain(lo.location()));
        }
    }
    let v = field.eval(p)?;
    if !cx::is_finite(v) {
        return Err(Error::NonFiniteSample(p.location()));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRecord {
    pub at: Location,
    pub code: &'static str,
    pub message: String,
}

/// Summary of a residual over a point set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub rms: f64,
    pub argmax: Location,
    pub h: Option<f64>,
    pub stencil_order: Option<u32>,
    pub n_points: usize,
    pub failures: Vec<FailureRecord>,
}

impl ResidualReport {
    pub fn with_step(mut self, h: f64) -> Self {
        self.h = Some(h);
        self.stencil_order = Some(STENCIL_ORDER);
        self
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluate `residual` at every point and summarize.
///
/// Points are evaluated in parallel; the summary is reduced in point order so
/// the report is identical regardless of scheduling. Points whose evaluation
/// fails are listed in `failures` and excluded from the norms.
pub fn scan_points<F>(points: &[Point], residual: F) -> Result<ResidualReport>
where
    F: Fn(&Point) -> Result<Complex64> + Sync,
{
    scan_items(points, Point::location, residual)
}

/// [`scan_points`] over arbitrary samples, each reported at `locate(sample)`.
pub fn scan_items<S, L, F>(items: &[S], locate: L, residual: F) -> Result<ResidualReport>
where
    S: Sync,
    L: Fn(&S) -> Location,
    F: Fn(&S) -> Result<Complex64> + Sync,
{
    if items.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let values: Vec<Result<Complex64>> = items.par_iter().map(&residual).collect();
    let mut max_abs = 0.0f64;
    let mut argmax = locate(&items[0]);
    let mut sum_sq = 0.0f64;
    let mut n_ok = 0usize;
    let mut failures = Vec::new();
    for (p, v) in items.iter().zip(values) {
        match v {
            Ok(z) if z.re.is_finite() && z.im.is_finite() => {
                let a = z.norm();
                if a > max_abs {
                    max_abs = a;
                    argmax = locate(p);
                }
                sum_sq += a * a;
                n_ok += 1;
            }
            Ok(_) => failures.push(FailureRecord {
                at: locate(p),
                code: "non-finite-sample",
                message: format!("non-finite residual at {}", locate(p)),
            }),
            Err(e) => failures.push(FailureRecord {
                at: e.location().unwrap_or_else(|| locate(p)),
                code: e.code(),
                message: e.to_string(),
            }),
        }
    }
    let rms = if n_ok > 0 { (sum_sq / n_ok as f64).sqrt() } else { 0.0 };
    Ok(ResidualReport {
        max_abs,
        rms: rms.min(max_abs),
        argmax,
        h: None,
        stencil_order: None,
        n_points: items.len(),
        failures,
    })
}

/// Scan a residual field over every non-excluded grid point.
pub fn residual_scan<F: ScalarField>(residual: &F, grid: &GridSpec) -> Result<ResidualReport> {
    let points = grid.points()?;
    scan_points(&points, |p| residual.eval::<f64>(p))
}

/// `log2(coarse / fine)` for a step halving.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
