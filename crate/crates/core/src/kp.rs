//! Closed-form KP objects on the hyperbolic boundary `Y·T = y0²`.
//!
//! Coordinates are `Point { axes: [x, Y, T], .. }`. Every evaluator is generic
//! over [`Real`] so residual checks can sample in double-double precision.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{Arity, FieldPair, Point, ScalarField};
use crate::jacobian::Jacobian;
use crate::real::{cx, Real, C};
use crate::wave::WaveSum;

/// Relative tolerance for "point lies on `Y·T = y0²`".
pub const CONTOUR_TOL: f64 = 1e-10;
/// Smallest `|T|` admitted by the default grids (the formulas carry `T⁻⁶`).
pub const T_MIN: f64 = 0.25;
/// Denominators below this (relative) are treated as poles.
const POLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Alpha {
    One,
    I,
}

impl Alpha {
    pub fn value<T: Real>(self) -> C<T> {
        match self {
            Alpha::One => C::new(T::one(), T::zero()),
            Alpha::I => C::new(T::zero(), T::one()),
        }
    }

    pub fn inv<T: Real>(self) -> C<T> {
        match self {
            Alpha::One => C::new(T::one(), T::zero()),
            Alpha::I => C::new(T::zero(), -T::one()),
        }
    }

    /// `α²`, which is `±1`.
    pub fn squared<T: Real>(self) -> T {
        match self {
            Alpha::One => T::one(),
            Alpha::I => -T::one(),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alpha::One => "1",
            Alpha::I => "i",
        })
    }
}

impl FromStr for Alpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "one" => Ok(Alpha::One),
            "i" | "I" => Ok(Alpha::I),
            other => Err(invalid("alpha", format!("must be 1 or i, got {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KpParams {
    pub alpha: Alpha,
    pub y0: f64,
    pub p: Complex64,
    pub q: Complex64,
    pub d: Complex64,
    pub l: Complex64,
    pub g_const: Complex64,
}

impl Default for KpParams {
    fn default() -> Self {
        KpParams::new(Alpha::One, 1.0, Complex64::new(0.5, 0.0))
    }
}

impl KpParams {
    /// One-soliton parameters with `q = p`, `d = l = 1`, `g = 1`.
    pub fn new(alpha: Alpha, y0: f64, p: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        KpParams {
            alpha,
            y0,
            p,
            q: p,
            d: one,
            l: one,
            g_const: one,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.y0.is_finite() {
            return Err(invalid("y0", "must be finite"));
        }
        for (name, v) in [
            ("p", self.p),
            ("q", self.q),
            ("d", self.d),
            ("l", self.l),
            ("g", self.g_const),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Invariants of the closed one-soliton kernel: `q = p`, `d·l = 1`, `Re p > 0`.
    pub fn validate_dressed(&self) -> Result<()> {
        self.validate()?;
        let scale = 1.0 + self.p.norm();
        if (self.q - self.p).norm() > 1e-14 * scale {
            return Err(invalid(
                "q",
                format!("dressed pipeline needs q = p, got q = {}", self.q),
            ));
        }
        if (self.d * self.l - 1.0).norm() > 1e-14 {
            return Err(invalid(
                "d*l",
                format!("dressed pipeline needs d*l = 1, got {}", self.d * self.l),
            ));
        }
        if !(self.p.re > 0.0) {
            return Err(invalid("p", format!("dressed pipeline needs Re p > 0, got {}", self.p)));
        }
        Ok(())
    }

    pub fn wave(&self) -> WaveSum {
        WaveSum::single(self.d, self.p)
    }

    pub fn wave_hat(&self) -> WaveSum {
        WaveSum::single(self.l, self.q)
    }
}

/// A map `(y, t) -> (Y, T)` whose line `y = y0` is the boundary contour.
pub trait ContourMap: Sync {
    fn forward<T: Real>(&self, y: T, t: T) -> Result<(T, T)>;
    fn jacobian<T: Real>(&self, y: T, t: T) -> Result<Jacobian<T>>;
    /// `∂_t (f21 / f11)` at `(y, t)`.
    fn ratio_dt<T: Real>(&self, y: T, t: T) -> Result<T>;
}

/// `Y = y·t`, `T = y/t`; the line `y = y0` maps onto the hyperbola `Y·T = y0²`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperbolicMap;

fn check_yt<T: Real>(y: T, t: T) -> Result<()> {
    if y.is_zero() || t.is_zero() {
        return Err(Error::DegenerateTransform(format!(
            "hyperbolic map needs y, t != 0, got ({:?}, {:?})",
            y.to_f64(),
            t.to_f64()
        )));
    }
    Ok(())
}

impl ContourMap for HyperbolicMap {
    fn forward<T: Real>(&self, y: T, t: T) -> Result<(T, T)> {
        check_yt(y, t)?;
        Ok((y * t, y / t))
    }

    fn jacobian<T: Real>(&self, y: T, t: T) -> Result<Jacobian<T>> {
        check_yt(y, t)?;
        let two = T::from_f64(2.0);
        let c = |v: T| C::new(v, T::zero());
        Jacobian::new(
            c(T::one() / (two * t)),
            c(T::one() / (two * y)),
            c(t / two),
            c(-(t * t) / (two * y)),
        )
    }

    fn ratio_dt<T: Real>(&self, y: T, t: T) -> Result<T> {
        check_yt(y, t)?;
        Ok(T::from_f64(2.0) * t)
    }
}

/// `(Y, T)` and the inverse-map Jacobian at `(y, t)`.
pub fn hyperbolic_transform(y: f64, t: f64) -> Result<(f64, f64, Jacobian)> {
    let (yy, tt) = HyperbolicMap.forward(y, t)?;
    Ok((yy, tt, HyperbolicMap.jacobian(y, t)?))
}

/// `B = g · exp(x f21 / (6 α f11))`.
pub fn multiplier_b<T: Real>(x: T, jac: &Jacobian<T>, params: &KpParams) -> C<T> {
    let six = T::from_f64(6.0);
    let e = jac.ratio() * params.alpha.inv::<T>() * (x / six);
    cx::lift::<T>(params.g_const) * cx::exp(e)
}

/// Left side of the generic boundary constraint at `(x, y, t)`, to be
/// evaluated with `y = y0`. `log_g_dt` is `(log g)_t`, zero for constant `g`.
pub fn generic_boundary_residual<T, U, W, M>(
    x: T,
    y: T,
    t: T,
    fields: &FieldPair<U, W>,
    map: &M,
    params: &KpParams,
    log_g_dt: Complex64,
) -> Result<C<T>>
where
    T: Real,
    U: ScalarField,
    W: ScalarField,
    M: ContourMap,
{
    let (yy, tt) = map.forward(y, t)?;
    let j = map.jacobian(y, t)?;
    let rdt = map.ratio_dt(y, t)?;
    let pt = Point::new(x, yy, tt);
    let u = fields.u.eval(&pt)?;
    let w = fields.w.eval(&pt)?;
    let a = params.alpha.value::<T>();
    let ai = params.alpha.inv::<T>();
    let six = T::from_f64(6.0);
    let a3i = ai * ai * ai;
    Ok(
        j.delta * cx::lift::<T>(log_g_dt) + j.delta * ai * (x * rdt / six) + j.f21 * u * ai + a * j.f11 * w * six
            - j.f21 * j.f21 * j.f21 * a3i / (j.f11 * j.f11 * T::from_f64(108.0)),
    )
}

fn contour_defect<T: Real>(pt: &Point<T>, y0: f64) -> f64 {
    let yt = (pt.axes[1] * pt.axes[2]).to_f64();
    (yt - y0 * y0).abs() / (y0 * y0).max(1.0)
}

/// The hyperbolic boundary constraint
/// `-x/(3T) + u + 6α²(T/Y) w - (α²/108)(Y/T)²`, required on `Y·T = y0²`.
pub fn kp_boundary_residual<T, U, W>(pt: &Point<T>, fields: &FieldPair<U, W>, params: &KpParams) -> Result<C<T>>
where
    T: Real,
    U: ScalarField,
    W: ScalarField,
{
    let defect = contour_defect(pt, params.y0);
    if defect > CONTOUR_TOL {
        return Err(Error::OffContour {
            at: pt.location(),
            defect,
        });
    }
    kp_boundary_expression(pt, fields, params)
}

/// The boundary expression without the contour check, for probing off the contour.
pub fn kp_boundary_expression<T, U, W>(pt: &Point<T>, fields: &FieldPair<U, W>, params: &KpParams) -> Result<C<T>>
where
    T: Real,
    U: ScalarField,
    W: ScalarField,
{
    let [x, yy, tt] = pt.axes;
    if tt.is_zero() {
        return Err(Error::SingularT(pt.location()));
    }
    if yy.is_zero() {
        return Err(Error::DegenerateSample(pt.location()));
    }
    let u = fields.u.eval(pt)?;
    let w = fields.w.eval(pt)?;
    let a2 = params.alpha.squared::<T>();
    let r = yy / tt;
    Ok(u + w * (T::from_f64(6.0) * a2 * tt / yy)
        - C::new(x / (T::from_f64(3.0) * tt) + a2 * r * r / T::from_f64(108.0), T::zero()))
}

fn require_t<T: Real>(pt: &Point<T>) -> Result<T> {
    let t = pt.axes[2];
    if t.is_zero() {
        return Err(Error::SingularT(pt.location()));
    }
    Ok(t)
}

/// Elementary solution `(u⁰, w⁰)`.
pub fn kp_seed<T: Real>(pt: &Point<T>, params: &KpParams) -> Result<(C<T>, C<T>)> {
    let t = require_t(pt)?;
    let [x, yy, _] = pt.axes;
    let y0 = T::from_f64(params.y0);
    let a2 = params.alpha.squared::<T>();
    let y02 = y0 * y0;
    let t3 = t * t * t;
    let u = a2 * yy * y02 / (T::from_f64(18.0) * t3);
    let w = a2 * x * y02 / (T::from_f64(18.0) * t3) + yy * yy * y02 / (T::from_f64(36.0) * t3 * t)
        - T::from_f64(23.0) * y02 * y02 * y02 / (T::from_f64(648.0) * t3 * t3);
    Ok((C::new(u, T::zero()), C::new(w, T::zero())))
}

/// Time dependence of the wavefunction exponent. `Cubic` is the correct
/// dispersion; `PrintedSquare` (`-4Tp²`) is kept only as a regression probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TimeExponent {
    Cubic,
    PrintedSquare,
}

fn checked<T: Real>(v: C<T>, pt: &Point<T>) -> Result<C<T>> {
    if cx::is_finite(v) {
        Ok(v)
    } else {
        Err(Error::NonFiniteSample(pt.location()))
    }
}

/// Solution of the transformed linear system with seed coefficients.
pub fn kp_psi<T: Real>(pt: &Point<T>, waves: &WaveSum, params: &KpParams, time: TimeExponent) -> Result<C<T>> {
    let t = require_t(pt)?;
    let [x, yy, _] = pt.axes;
    let a = params.alpha.value::<T>();
    let ai = params.alpha.inv::<T>();
    let a2 = params.alpha.squared::<T>();
    let y0 = T::from_f64(params.y0);
    let y02 = y0 * y0;
    let t3 = t * t * t;
    let s = ai * (y02 / (T::from_f64(12.0) * t * t));
    let fixed =
        a * (-(yy * yy * y02) / (T::from_f64(36.0) * t3)) + a * (y02 * y02 * y02 / (T::from_f64(48.0) * t3 * t * t));
    let mut acc = C::new(T::zero(), T::zero());
    for &(amp, spec) in waves.terms() {
        let p = cx::lift::<T>(spec);
        let k = p - s;
        let disp = match time {
            TimeExponent::Cubic => p * p * p,
            TimeExponent::PrintedSquare => p * p,
        };
        let e = k * x + k * k * ai * yy + fixed + p * (a2 * y02 * y02 / (T::from_f64(36.0) * t3))
            - p * p * ai * (y02 / t)
            - disp * (T::from_f64(4.0) * t);
        acc = acc + cx::lift::<T>(amp) * cx::exp(e);
    }
    checked(acc, pt)
}

/// Solution of the transformed conjugate system with seed coefficients.
pub fn kp_psi_hat<T: Real>(pt: &Point<T>, waves: &WaveSum, params: &KpParams) -> Result<C<T>> {
    let t = require_t(pt)?;
    let [x, yy, _] = pt.axes;
    let a = params.alpha.value::<T>();
    let ai = params.alpha.inv::<T>();
    let a2 = params.alpha.squared::<T>();
    let y0 = T::from_f64(params.y0);
    let y02 = y0 * y0;
    let t3 = t * t * t;
    let s = ai * (y02 / (T::from_f64(12.0) * t * t));
    let fixed =
        a * (yy * yy * y02 / (T::from_f64(36.0) * t3)) - a * (y02 * y02 * y02 / (T::from_f64(48.0) * t3 * t * t));
    let mut acc = C::new(T::zero(), T::zero());
    for &(amp, spec) in waves.terms() {
        let q = cx::lift::<T>(spec);
        let k = q + s;
        let e =
            k * x - k * k * ai * yy + fixed + q * (a2 * y02 * y02 / (T::from_f64(36.0) * t3)) + q * q * ai * (y02 / t)
                - q * q * q * (T::from_f64(4.0) * t);
        acc = acc + cx::lift::<T>(amp) * cx::exp(e);
    }
    checked(acc, pt)
}

/// `log χ`, the exponent in the closed kernel.
pub fn kp_log_chi<T: Real>(pt: &Point<T>, params: &KpParams) -> Result<C<T>> {
    let t = require_t(pt)?;
    let [x, yy, _] = pt.axes;
    let p = cx::lift::<T>(params.p);
    let a2 = params.alpha.squared::<T>();
    let y02 = T::from_f64(params.y0) * T::from_f64(params.y0);
    let r = -x * T::from_f64(2.0) + a2 * yy * y02 / (T::from_f64(3.0) * t * t)
        - a2 * y02 * y02 / (T::from_f64(18.0) * t * t * t);
    Ok(p * r + p * p * p * (T::from_f64(8.0) * t))
}

/// Closed one-soliton kernel `K(x,x) = -(1/(2p) + χ)⁻¹`.
pub fn kp_kernel_closed<T: Real>(pt: &Point<T>, params: &KpParams) -> Result<C<T>> {
    params.validate_dressed()?;
    let lc = kp_log_chi(pt, params)?;
    let p = cx::lift::<T>(params.p);
    let inv2p = C::new(T::one(), T::zero()) / (p * T::from_f64(2.0));
    let one = C::new(T::one(), T::zero());
    // for Re log χ > 0 rescale by χ⁻¹ so χ → ∞ gives K → 0 without overflow
    let (num, den) = if lc.re > T::zero() {
        let ichi = cx::exp(-lc);
        (-ichi, inv2p * ichi + one)
    } else {
        let chi = cx::exp(lc);
        (-one, inv2p + chi)
    };
    let scale = cx::abs(num) + cx::abs(inv2p);
    if cx::abs(den).to_f64() <= POLE_TOL * scale.to_f64() {
        return Err(Error::KernelPole(pt.location()));
    }
    checked(num / den, pt)
}

/// Phase of the dressed solution. `Printed` carries the misprinted
/// `α²Yy0²p/(4T²)` coefficient and exists only as a regression probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    Corrected,
    Printed,
}

/// Phase `τ` of the dressed solution.
pub fn kp_tau<T: Real>(pt: &Point<T>, params: &KpParams, phase: Phase) -> Result<C<T>> {
    let t = require_t(pt)?;
    let [x, yy, _] = pt.axes;
    let p = cx::lift::<T>(params.p);
    let a2 = params.alpha.squared::<T>();
    let y02 = T::from_f64(params.y0) * T::from_f64(params.y0);
    let den = match phase {
        Phase::Corrected => 6.0,
        Phase::Printed => 4.0,
    };
    let r = -x + a2 * yy * y02 / (T::from_f64(den) * t * t) - a2 * y02 * y02 / (T::from_f64(36.0) * t * t * t);
    let half = T::from_f64(0.5);
    Ok(p * r + p * p * p * (T::from_f64(4.0) * t) + cx::ln(p * T::from_f64(2.0)) * half)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KpDressed<T> {
    pub u: C<T>,
    pub w: C<T>,
    pub tau: C<T>,
}

/// Dressed one-soliton solution `(u¹, w¹, τ)` on the seed background.
pub fn kp_dressed<T: Real>(pt: &Point<T>, params: &KpParams, phase: Phase) -> Result<KpDressed<T>> {
    params.validate_dressed()?;
    let (u0, w0) = kp_seed(pt, params)?;
    let tau = kp_tau(pt, params, phase)?;
    let (s, den) = cx::sech2(tau);
    if cx::abs(den).to_f64() < POLE_TOL {
        return Err(Error::SolutionPole(pt.location()));
    }
    let t = pt.axes[2];
    let p = cx::lift::<T>(params.p);
    let p2s = p * p * s;
    let a2 = params.alpha.squared::<T>();
    let y02 = T::from_f64(params.y0) * T::from_f64(params.y0);
    let u = u0 - p2s * T::from_f64(2.0);
    let w = w0 + p2s * (a2 * y02 / (T::from_f64(3.0) * t * t));
    Ok(KpDressed {
        u: checked(u, pt)?,
        w: checked(w, pt)?,
        tau,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KpSolution {
    Seed,
    Dressed,
    /// Dressed solution with the misprinted phase.
    DressedPrintedPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    U,
    W,
    Tau,
}

/// One component of a built-in KP solution as a field over `(x, Y, T)`.
#[derive(Clone, Copy, Debug)]
pub struct KpField {
    pub params: KpParams,
    pub solution: KpSolution,
    pub component: Component,
}

impl ScalarField for KpField {
    fn arity(&self) -> Arity {
        Arity::CONTINUOUS3
    }

    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        match self.solution {
            KpSolution::Seed => {
                let (u, w) = kp_seed(p, &self.params)?;
                match self.component {
                    Component::U => Ok(u),
                    Component::W => Ok(w),
                    Component::Tau => Err(invalid("component", "seed has no phase")),
                }
            }
            KpSolution::Dressed | KpSolution::DressedPrintedPhase => {
                let phase = if self.solution == KpSolution::Dressed {
                    Phase::Corrected
                } else {
                    Phase::Printed
                };
                let d = kp_dressed(p, &self.params, phase)?;
                Ok(match self.component {
                    Component::U => d.u,
                    Component::W => d.w,
                    Component::Tau => d.tau,
                })
            }
        }
    }
}

/// `(u, w)` of a built-in solution.
pub fn kp_fields(params: &KpParams, solution: KpSolution) -> FieldPair<KpField, KpField> {
    let f = |component| KpField {
        params: *params,
        solution,
        component,
    };
    FieldPair {
        u: f(Component::U),
        w: f(Component::W),
    }
}

/// Wavefunction `Ψ` or conjugate `Ψ̂` as a field over `(x, Y, T)`.
#[derive(Clone, Debug)]
pub struct KpWave {
    pub params: KpParams,
    pub waves: WaveSum,
    pub conjugate: bool,
    pub time: TimeExponent,
}

impl KpWave {
    pub fn psi(params: &KpParams, time: TimeExponent) -> Self {
        KpWave {
            params: *params,
            waves: params.wave(),
            conjugate: false,
            time,
        }
    }

    pub fn psi_hat(params: &KpParams) -> Self {
        KpWave {
            params: *params,
            waves: params.wave_hat(),
            conjugate: true,
            time: TimeExponent::Cubic,
        }
    }
}

impl ScalarField for KpWave {
    fn arity(&self) -> Arity {
        Arity::CONTINUOUS3
    }

    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        if self.conjugate {
            kp_psi_hat(p, &self.waves, &self.params)
        } else {
            kp_psi(p, &self.waves, &self.params, self.time)
        }
    }
}

/// A field over `(x, Y, T)` viewed in the transformed coordinates `(x, y, t)`.
#[derive(Clone, Copy, Debug)]
pub struct OnMap<F, M> {
    pub field: F,
    pub map: M,
}

impl<F: ScalarField, M: ContourMap> ScalarField for OnMap<F, M> {
    fn arity(&self) -> Arity {
        Arity::CONTINUOUS3
    }

    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        let [x, y, t] = p.axes;
        let (yy, tt) = self.map.forward(y, t)?;
        self.field.eval(&Point::new(x, yy, tt))
    }
}

/// Point on the contour `y = y0` at parameter `t`, in `(x, Y, T)`.
///
/// Built at precision `T` so the contour defect is at that precision's rounding.
pub fn contour_point<T: Real>(x: T, t: T, y0: f64) -> Result<Point<T>> {
    let (yy, tt) = HyperbolicMap.forward(T::from_f64(y0), t)?;
    Ok(Point::new(x, yy, tt))
}

/// Real `(x, T)` where the `y0 = 0` dressed solution has its pole, i.e. where
/// `τ = -px + 4p³T + ½log 2p` equals `iπ/2`. `None` when `p` is real (no real pole).
pub fn kp_pole_location(p: Complex64) -> Option<(f64, f64)> {
    let c3 = p * p * p * 4.0;
    let l = (p * 2.0).ln() * 0.5;
    let (a11, a12, b1) = (-p.re, c3.re, -l.re);
    let (a21, a22, b2) = (-p.im, c3.im, std::f64::consts::FRAC_PI_2 - l.im);
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-14 * (1.0 + p.norm_sqr() * p.norm_sqr()) {
        return None;
    }
    Some(((b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::jacobian_fd;
    use crate::real::Dd;
    use proptest::prelude::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn transform_values() {
        let (yy, tt, _) = hyperbolic_transform(2.0, 3.0).unwrap();
        assert_eq!(yy, 6.0);
        assert!((tt - 2.0 / 3.0).abs() < 1e-16);
        let (yy, tt, _) = hyperbolic_transform(1.0, 1.0).unwrap();
        assert_eq!((yy, tt), (1.0, 1.0));
        assert_eq!(
            hyperbolic_transform(0.0, 1.0).unwrap_err().code(),
            "degenerate-transform"
        );
        assert_eq!(
            hyperbolic_transform(1.0, 0.0).unwrap_err().code(),
            "degenerate-transform"
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (_, _, j) = hyperbolic_transform(1.0, 2.0).unwrap();
        let fd = jacobian_fd(|y, t| HyperbolicMap.forward(y, t), 1.0, 2.0, 1e-3).unwrap();
        for (a, b) in [
            (j.f11, fd.f11),
            (j.f12, fd.f12),
            (j.f21, fd.f21),
            (j.f22, fd.f22),
            (j.delta, fd.delta),
        ] {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn ratio_derivative_matches_finite_differences() {
        let r = |t: f64| HyperbolicMap.jacobian(1.3, t).unwrap().ratio().re;
        let h = 1e-4;
        let fd = (r(0.7 + h) - r(0.7 - h)) / (2.0 * h);
        assert!((fd - HyperbolicMap.ratio_dt(1.3, 0.7).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn multiplier_values() {
        let mut prm = KpParams::default();
        prm.g_const = c(2.5);
        let (_, _, j) = hyperbolic_transform(1.0, 1.7).unwrap();
        assert_eq!(multiplier_b(0.0, &j, &prm), c(2.5));

        let prm = KpParams::default();
        let (_, _, j) = hyperbolic_transform(1.0, 1.0).unwrap();
        assert!((multiplier_b(1.0, &j, &prm) - c((1.0f64 / 6.0).exp())).norm() < 1e-15);

        let mut prm = KpParams::new(Alpha::I, 1.0, c(0.5));
        prm.g_const = Complex64::new(0.3, -0.4);
        let (_, _, j) = hyperbolic_transform(1.0, 1.4).unwrap();
        assert!((multiplier_b(2.3, &j, &prm).norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multiplier_on_contour_is_exp_xt2() {
        for alpha in [Alpha::One, Alpha::I] {
            let prm = KpParams::new(alpha, 1.2, c(0.5));
            for (x, t) in [(0.3, 0.8), (-1.5, 1.6)] {
                let (_, _, j) = hyperbolic_transform(prm.y0, t).unwrap();
                let want = cx::exp(c(x * t * t / 6.0) * alpha.inv::<f64>());
                assert!((multiplier_b(x, &j, &prm) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn seed_values() {
        let prm = KpParams::default();
        let (u, w) = kp_seed(&Point::new(0.0, 0.0, 1.0), &prm).unwrap();
        assert_eq!(u, c(0.0));
        assert!((w.re + 23.0 / 648.0).abs() < 1e-16);
        let prm0 = KpParams::new(Alpha::One, 0.0, c(0.5));
        let (u, w) = kp_seed(&Point::new(0.7, 1.3, 0.9), &prm0).unwrap();
        assert_eq!((u, w), (c(0.0), c(0.0)));
        assert_eq!(
            kp_seed(&Point::new(0.0, 1.0, 0.0), &prm).unwrap_err().code(),
            "singular-T"
        );
    }

    #[test]
    fn vacuum_wavefunctions_without_boundary() {
        let prm = KpParams::new(Alpha::One, 0.0, c(0.4));
        let pt = Point::new(0.3, -0.7, 1.1);
        let p = 0.4f64;
        let psi = kp_psi(&pt, &prm.wave(), &prm, TimeExponent::Cubic).unwrap();
        assert!((psi.re - (0.3 * p + -0.7 * p * p - 4.0 * 1.1 * p.powi(3)).exp()).abs() < 1e-14);
        let hat = kp_psi_hat(&pt, &prm.wave_hat(), &prm).unwrap();
        assert!((hat.re - (0.3 * p - -0.7 * p * p - 4.0 * 1.1 * p.powi(3)).exp()).abs() < 1e-14);
    }

    #[test]
    fn wave_sum_is_linear() {
        let prm = KpParams::default();
        let a = (Complex64::new(0.3, 0.1), c(0.5));
        let b = (c(-1.2), c(0.9));
        let pt = Point::new(0.2, 1.1, 0.8);
        let two = WaveSum::new(vec![a, b]).unwrap();
        let sum = kp_psi(&pt, &two, &prm, TimeExponent::Cubic).unwrap();
        let sep = kp_psi(&pt, &WaveSum::single(a.0, a.1), &prm, TimeExponent::Cubic).unwrap()
            + kp_psi(&pt, &WaveSum::single(b.0, b.1), &prm, TimeExponent::Cubic).unwrap();
        assert!((sum - sep).norm() < 1e-14 * sum.norm());
    }

    #[test]
    fn kernel_limits() {
        let prm = KpParams::default();
        let far_right = kp_kernel_closed(&Point::new(80.0, 0.5, 1.0), &prm).unwrap();
        assert!((far_right - c(-1.0)).norm() < 1e-14);
        let far_left = kp_kernel_closed(&Point::new(-2000.0, 0.5, 1.0), &prm).unwrap();
        assert_eq!(far_left.norm(), 0.0);
        let mut bad = prm;
        bad.q = c(0.6);
        assert_eq!(
            kp_kernel_closed(&Point::new(0.0, 1.0, 1.0), &bad).unwrap_err().code(),
            "invalid-parameter"
        );
        bad = KpParams::new(Alpha::One, 1.0, c(-0.5));
        assert!(kp_kernel_closed(&Point::new(0.0, 1.0, 1.0), &bad).is_err());
    }

    #[test]
    fn soliton_crest_without_boundary() {
        let prm = KpParams::new(Alpha::One, 0.0, c(0.5));
        for t in [0.5, 1.0, 1.7] {
            let d = kp_dressed(&Point::new(t, 0.4, t), &prm, Phase::Corrected).unwrap();
            assert!((d.u - c(-0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn kernel_and_phase_agree() {
        // 2p·χ = e^{2τ}
        let prm = KpParams::new(Alpha::One, 1.3, Complex64::new(0.6, 0.2));
        let pt = Point::new(0.4, 1.2, 0.9);
        let lc = kp_log_chi(&pt, &prm).unwrap();
        let tau = kp_tau(&pt, &prm, Phase::Corrected).unwrap();
        let lhs = cx::exp(lc) * prm.p * 2.0;
        assert!((lhs - cx::exp(tau * 2.0)).norm() < 1e-13 * lhs.norm());
    }

    /// Real `(x, T)` with `τ = iπ/2` for `y0 = 0` and complex `p`.
    #[test]
    fn complex_phase_pole_is_reported() {
        let p = Complex64::new(0.5, 0.5);
        let prm = KpParams::new(Alpha::One, 0.0, p);
        let (x, t) = kp_pole_location(p).unwrap();
        assert!(kp_pole_location(c(0.5)).is_none());
        let err = kp_dressed(&Point::new(x, 0.3, t), &prm, Phase::Corrected).unwrap_err();
        assert_eq!(err.code(), "solution-pole");
        assert!(kp_dressed(&Point::new(x + 0.5, 0.3, t), &prm, Phase::Corrected).is_ok());
    }

    #[test]
    fn definition_one_on_contour() {
        for alpha in [Alpha::One, Alpha::I] {
            let prm = KpParams::new(alpha, 1.0, c(0.5));
            for (x, t) in [(0.0, 1.0), (1.3, 0.8), (-2.0, 1.5)] {
                let pt = contour_point(Dd::from(x), Dd::from(t), prm.y0).unwrap();
                let j = HyperbolicMap.jacobian(Dd::from(prm.y0), Dd::from(t)).unwrap();
                let psi = kp_psi(&pt, &prm.wave(), &prm, TimeExponent::Cubic).unwrap();
                let hat = kp_psi_hat(&pt, &prm.wave_hat(), &prm).unwrap();
                let b = multiplier_b(Dd::from(x), &j, &prm);
                let rel = cx::abs(hat - b * psi).to_f64() / cx::abs(psi).to_f64();
                assert!(rel < 1e-25, "{rel}");
            }
        }
    }

    #[test]
    fn seed_boundary_cancels_on_contour() {
        let prm = KpParams::default();
        let f = kp_fields(&prm, KpSolution::Seed);
        let r = kp_boundary_residual(&Point::new(0.37, 1.0, 1.0), &f, &prm).unwrap();
        assert!(r.norm() < 1e-15);
        let off = kp_boundary_residual(&Point::new(0.37, 2.0, 1.0), &f, &prm).unwrap_err();
        assert_eq!(off.code(), "off-contour");
        let flat = KpParams::new(Alpha::One, 0.0, c(0.5));
        let e = kp_boundary_residual(&Point::new(0.0, 1.0, 1.0), &kp_fields(&flat, KpSolution::Seed), &flat);
        assert_eq!(e.unwrap_err().code(), "off-contour");
    }

    #[test]
    fn generic_constraint_is_scaled_specialized_one() {
        for alpha in [Alpha::One, Alpha::I] {
            let prm = KpParams::new(alpha, 1.0, c(0.5));
            for sol in [KpSolution::Seed, KpSolution::Dressed] {
                let f = kp_fields(&prm, sol);
                for (x, t) in [(0.2, 0.8), (-1.0, 1.3)] {
                    let g = generic_boundary_residual(x, prm.y0, t, &f, &HyperbolicMap, &prm, c(0.0)).unwrap();
                    let pt = contour_point(x, t, prm.y0).unwrap();
                    let s = kp_boundary_expression(&pt, &f, &prm).unwrap();
                    let scaled = g * alpha.value::<f64>() * (2.0 / t);
                    assert!((scaled - s).norm() < 1e-12, "{scaled} vs {s}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn dressed_boundary_vanishes_on_contour(x in -4.0f64..4.0, t in 0.7f64..1.4,
                                                p in 0.2f64..1.5, y0 in 0.5f64..1.5) {
            let prm = KpParams::new(Alpha::One, y0, c(p));
            let f = kp_fields(&prm, KpSolution::Dressed);
            let pt = contour_point(Dd::from(x), Dd::from(t), y0).unwrap();
            let r = kp_boundary_residual(&pt, &f, &prm).unwrap();
            prop_assert!(cx::abs(r).to_f64() < 1e-24);
        }

        #[test]
        fn generic_matches_specialized(x in -4.0f64..4.0, t in 0.6f64..1.6, p in 0.2f64..1.2) {
            let prm = KpParams::new(Alpha::One, 1.0, c(p));
            let f = kp_fields(&prm, KpSolution::Dressed);
            let g = generic_boundary_residual(x, 1.0, t, &f, &HyperbolicMap, &prm, c(0.0)).unwrap();
            let s = kp_boundary_expression(&contour_point(x, t, 1.0).unwrap(), &f, &prm).unwrap();
            prop_assert!((g * (2.0 / t) - s).norm() < 1e-12);
        }

        #[test]
        fn kernel_stays_between_limits_for_real_p(x in -10.0f64..10.0, yy in -2.0f64..2.0,
                                                  tt in 0.5f64..2.0, p in 0.1f64..2.0) {
            let prm = KpParams::new(Alpha::One, 1.0, c(p));
            let k = kp_kernel_closed(&Point::new(x, yy, tt), &prm).unwrap();
            prop_assert!(k.im == 0.0 && k.re <= 0.0 && k.re >= -2.0 * p * (1.0 + 1e-15));
        }
    }
}
