//! Pass/fail checks over residuals, and the named suites.
//!
//! A [`Check`] measures one number (usually the maximum of a residual over a
//! point set) and compares it with a pinned threshold. Finite-difference checks
//! are also re-run at `h/2` and must show the stencil's convergence order.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{
    convergence_order, diff, scan_items, scan_points, Arity, AxisRange, FieldPair, FnField, GridSpec, Point,
    ResidualReport, ScalarField, DEFAULT_STEP,
};
use crate::glm::{
    glm_continuous_residual, glm_continuous_solve, glm_discrete_residual, glm_discrete_solve, ContinuousKernel,
    DiscreteKernel, QuadratureSpec, TruncationSpec,
};
use crate::jacobian::{Affine, Jacobian};
use crate::kp::{
    contour_point, kp_boundary_expression, kp_boundary_residual, kp_dressed, kp_fields, kp_kernel_closed, kp_psi,
    kp_psi_hat, kp_seed, multiplier_b, Alpha, ContourMap, HyperbolicMap, KpParams, KpSolution, KpWave, OnMap, Phase,
    TimeExponent,
};
use crate::real::{cx, Dd, Real, C};
use crate::toda::{
    toda_boundary_residual, toda_dressed, toda_kernel_closed, toda_lattice_residual, toda_multiplier_b,
    toda_multiplier_b_ex1, toda_psi, toda_psi_hat, toda_regularity_scan, toda_seed, Example, OnTransform, TodaField,
    TodaParams, TodaSolution, TodaTransform, TodaWave, BOUNDARY_STEP,
};

/// Residuals below this at both steps count as exact; no order is measured.
pub const NOISE_FLOOR: f64 = 1e-18;
/// Required observed order for fourth-order stencils under step halving.
pub const MIN_ORDER: f64 = 3.5;

/// Pinned `C` in the `C·h⁴` thresholds.
pub const KP_LAX_C: f64 = 1e6;
pub const TODA_LAX_C: f64 = 1e4;

/// Pinned `C` of the lattice equation on each example's desk box.
pub fn toda_lattice_c(ex: Example) -> f64 {
    match ex {
        Example::Ex1 | Example::Ex3 => 1e2,
        Example::Ex1c1 => 1e7,
        Example::Ex2 => 1e4,
    }
}

/// Threshold of the KP equation on the desk grid.
pub const KP_EQUATION_TOL: f64 = 1e-8;
pub const KP_BOUNDARY_TOL: f64 = 1e-9;
pub const KP_OFF_CONTOUR_MIN: f64 = 1e-3;
pub const DEFINITION_TOL: f64 = 1e-12;
pub const GLM_TOL: f64 = 1e-8;
pub const CONTINUOUS_CLOSURE_TOL: f64 = 1e-6;
pub const DISCRETE_CLOSURE_TOL: f64 = 1e-8;
pub const REDUCTION_TOL: f64 = 1e-12;
pub const REDUCTION_FLATNESS_TOL: f64 = 1e-10;
pub const TODA_DRESSED_BOUNDARY_TOL: f64 = 1e-8;
pub const TODA_SEED_BOUNDARY_TOL: f64 = 1e-12;
pub const REGULARITY_MIN: f64 = 0.1;
/// A misprinted form must miss by at least this factor over the corrected one.
pub const TYPO_FACTOR: f64 = 1e6;

pub const SUITE_NAMES: [&str; 14] = [
    "kp-seed",
    "kp-dressed",
    "kp-lax",
    "kp-boundary",
    "kp-glm",
    "kp-reduction",
    "toda-ex1",
    "toda-ex1c1",
    "toda-ex2",
    "toda-ex3",
    "toda-lax",
    "toda-glm",
    "negative-typos",
    "all",
];

/// One evaluated quantity, with the residual summary it came from if any.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub value: f64,
    pub report: Option<ResidualReport>,
}

impl Measurement {
    pub fn scalar(value: f64) -> Self {
        Measurement { value, report: None }
    }

    fn is_clean(&self) -> bool {
        self.report.as_ref().map_or(true, ResidualReport::is_clean)
    }
}

impl From<ResidualReport> for Measurement {
    fn from(r: ResidualReport) -> Self {
        Measurement {
            value: r.max_abs,
            report: Some(r),
        }
    }
}

type Eval = Arc<dyn Fn(f64) -> Result<Measurement> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Criterion {
    Below {
        threshold: f64,
        min_order: Option<f64>,
    },
    Above {
        threshold: f64,
    },
    /// `value ≥ factor · max(baseline, NOISE_FLOOR)`.
    Contrast {
        factor: f64,
    },
}

#[derive(Clone)]
pub struct Check {
    pub name: String,
    pub tag: &'static str,
    pub description: String,
    pub h: Option<f64>,
    pub criterion: Criterion,
    /// `C` of a `C·h⁴` threshold, rescaled when the step changes.
    pub c_h4: Option<f64>,
    eval: Eval,
    baseline: Option<Eval>,
}

impl fmt::Debug for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Check")
            .field("name", &self.name)
            .field("tag", &self.tag)
            .field("h", &self.h)
            .field("criterion", &self.criterion)
            .finish()
    }
}

impl Check {
    pub fn below<F>(
        name: impl Into<String>,
        tag: &'static str,
        description: impl Into<String>,
        threshold: f64,
        eval: F,
    ) -> Self
    where
        F: Fn(f64) -> Result<Measurement> + Send + Sync + 'static,
    {
        Check {
            name: name.into(),
            tag,
            description: description.into(),
            h: None,
            criterion: Criterion::Below {
                threshold,
                min_order: None,
            },
            c_h4: None,
            eval: Arc::new(eval),
            baseline: None,
        }
    }

    pub fn above<F>(
        name: impl Into<String>,
        tag: &'static str,
        description: impl Into<String>,
        threshold: f64,
        eval: F,
    ) -> Self
    where
        F: Fn(f64) -> Result<Measurement> + Send + Sync + 'static,
    {
        Check {
            criterion: Criterion::Above { threshold },
            ..Check::below(name, tag, description, threshold, eval)
        }
    }

    pub fn contrast<F, G>(
        name: impl Into<String>,
        tag: &'static str,
        description: impl Into<String>,
        factor: f64,
        eval: F,
        baseline: G,
    ) -> Self
    where
        F: Fn(f64) -> Result<Measurement> + Send + Sync + 'static,
        G: Fn(f64) -> Result<Measurement> + Send + Sync + 'static,
    {
        Check {
            criterion: Criterion::Contrast { factor },
            baseline: Some(Arc::new(baseline)),
            ..Check::below(name, tag, description, 0.0, eval)
        }
    }

    /// Finite-difference check with threshold `C·h⁴`, probed at the default step.
    pub fn truncation<F>(
        name: impl Into<String>,
        tag: &'static str,
        description: impl Into<String>,
        c: f64,
        eval: F,
    ) -> Self
    where
        F: Fn(f64) -> Result<Measurement> + Send + Sync + 'static,
    {
        Check {
            c_h4: Some(c),
            ..Check::below(name, tag, description, c4(c, DEFAULT_STEP), eval)
        }
        .probed(DEFAULT_STEP)
    }

    /// Moves a probed check to step `h`; `C·h⁴` thresholds follow. Other checks are unchanged.
    pub fn with_step(mut self, h: f64) -> Self {
        if let Criterion::Below {
            min_order: Some(min), ..
        } = self.criterion
        {
            self.h = Some(h);
            if let Some(c) = self.c_h4 {
                self.criterion = Criterion::Below {
                    threshold: c4(c, h),
                    min_order: Some(min),
                };
            }
        }
        self
    }

    /// Evaluate at step `h`.
    pub fn at_step(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }

    /// Evaluate at `h` and `h/2`, requiring `min_order` above the noise floor.
    pub fn probed(mut self, h: f64) -> Self {
        self.h = Some(h);
        if let Criterion::Below { threshold, .. } = self.criterion {
            self.criterion = Criterion::Below {
                threshold,
                min_order: Some(MIN_ORDER),
            };
        }
        self
    }

    pub fn run(&self) -> CheckOutcome {
        let h = self.h.unwrap_or(DEFAULT_STEP);
        let mut out = CheckOutcome {
            name: self.name.clone(),
            tag: self.tag,
            description: self.description.clone(),
            criterion: self.criterion,
            h: self.h,
            value: None,
            threshold: match self.criterion {
                Criterion::Below { threshold, .. } | Criterion::Above { threshold } => Some(threshold),
                Criterion::Contrast { .. } => None,
            },
            value_half_step: None,
            order: None,
            baseline: None,
            report: None,
            pass: false,
            error: None,
        };
        let m = match (self.eval)(h) {
            Ok(m) => m,
            Err(e) => {
                out.error = Some(e.to_string());
                return out;
            }
        };
        out.value = Some(m.value);
        let clean = m.is_clean();
        out.report = m.report.clone();
        out.pass = match self.criterion {
            Criterion::Below { threshold, min_order } => {
                let mut ok = clean && m.value < threshold;
                if let Some(min) = min_order {
                    match (self.eval)(h / 2.0) {
                        Ok(fine) => {
                            out.value_half_step = Some(fine.value);
                            ok &= fine.is_clean();
                            if m.value > NOISE_FLOOR || fine.value > NOISE_FLOOR {
                                let order = convergence_order(m.value, fine.value);
                                out.order = Some(order);
                                ok &= order >= min;
                            }
                        }
                        Err(e) => {
                            out.error = Some(e.to_string());
                            ok = false;
                        }
                    }
                }
                ok
            }
            Criterion::Above { threshold } => clean && m.value > threshold,
            Criterion::Contrast { factor } => {
                let base = self.baseline.as_ref().expect("contrast check has a baseline");
                match base(h) {
                    Ok(b) => {
                        out.baseline = Some(b.value);
                        out.threshold = Some(factor * b.value.max(NOISE_FLOOR));
                        b.is_clean() && m.value >= factor * b.value.max(NOISE_FLOOR)
                    }
                    Err(e) => {
                        out.error = Some(e.to_string());
                        false
                    }
                }
            }
        };
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub tag: &'static str,
    pub description: String,
    pub criterion: Criterion,
    pub h: Option<f64>,
    pub value: Option<f64>,
    /// Effective threshold; for contrasts, `factor · baseline`.
    pub threshold: Option<f64>,
    pub value_half_step: Option<f64>,
    pub order: Option<f64>,
    pub baseline: Option<f64>,
    pub report: Option<ResidualReport>,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct CheckSuite {
    pub name: String,
    pub checks: Vec<Check>,
}

impl CheckSuite {
    pub fn run(&self) -> Vec<CheckOutcome> {
        run_checks(&self.checks)
    }
}

/// Runs checks in parallel; outcomes come back in check order.
pub fn run_checks(checks: &[Check]) -> Vec<CheckOutcome> {
    checks.par_iter().map(Check::run).collect()
}

fn d<F: ScalarField>(f: &F, pt: &Point, orders: [u8; 3], h: f64) -> Result<C<Dd>> {
    diff::<Dd, F>(f, pt, orders, h)
}

fn rel(r: C<Dd>, scale: C<Dd>, pt: &Point) -> Result<Complex64> {
    let s = cx::abs(scale).to_f64();
    if !(s > 0.0) {
        return Err(Error::DegenerateSample(pt.location()));
    }
    Ok(cx::lower(r) / s)
}

fn larger(a: Complex64, b: Complex64) -> Complex64 {
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KpLine {
    /// `u_T + u_xxx - 6 u u_x + 3α² w_Y`
    Evolution,
    /// `w_x - u_Y`
    Compatibility,
}

/// One line of the KP equation for `(u, w)` over `(x, Y, T)`.
pub fn kp_equation_residual<U, W>(
    fields: &FieldPair<U, W>,
    alpha: Alpha,
    line: KpLine,
    pt: &Point,
    h: f64,
) -> Result<Complex64>
where
    U: ScalarField,
    W: ScalarField,
{
    let r = match line {
        KpLine::Evolution => {
            let u = fields.u.eval(&Point::<Dd>::lift(pt))?;
            let ut = d(&fields.u, pt, [0, 0, 1], h)?;
            let ux = d(&fields.u, pt, [1, 0, 0], h)?;
            let uxxx = d(&fields.u, pt, [3, 0, 0], h)?;
            let wy = d(&fields.w, pt, [0, 1, 0], h)?;
            ut + uxxx - u * ux * Dd::from(6.0) + wy * (Dd::from(3.0) * alpha.squared::<Dd>())
        }
        KpLine::Compatibility => d(&fields.w, pt, [1, 0, 0], h)? - d(&fields.u, pt, [0, 1, 0], h)?,
    };
    Ok(cx::lower(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaxSystem {
    Original,
    Conjugate,
    /// The system pulled back to the boundary chart.
    Transformed,
    TransformedConjugate,
}

struct KpSample {
    psi: C<Dd>,
    l: C<Dd>,
    a: C<Dd>,
    p1: C<Dd>,
    p2: C<Dd>,
}

fn kp_sample<P, U, W>(psi: &P, u: &U, w: &W, alpha: Alpha, conjugate: bool, pt: &Point, h: f64) -> Result<KpSample>
where
    P: ScalarField,
    U: ScalarField,
    W: ScalarField,
{
    let at = Point::<Dd>::lift(pt);
    let ps = psi.eval(&at)?;
    let px = d(psi, pt, [1, 0, 0], h)?;
    let pxx = d(psi, pt, [2, 0, 0], h)?;
    let pxxx = d(psi, pt, [3, 0, 0], h)?;
    let uu = u.eval(&at)?;
    let ux = d(u, pt, [1, 0, 0], h)?;
    let ww = w.eval(&at)?;
    let aw = if conjugate {
        -(alpha.value::<Dd>() * ww)
    } else {
        alpha.value::<Dd>() * ww
    };
    Ok(KpSample {
        psi: ps,
        l: pxx - uu * ps,
        a: pxxx * Dd::from(-4.0) + uu * px * Dd::from(6.0) + (ux + aw) * ps * Dd::from(3.0),
        p1: d(psi, pt, [0, 1, 0], h)?,
        p2: d(psi, pt, [0, 0, 1], h)?,
    })
}

/// Both lines of a KP linear system, relative to `|Ψ|`.
///
/// `psi` and `fields` are given over `(x, Y, T)`. For the transformed systems
/// `pt` is `(x, y, t)` and the fields are pulled back through `map`.
pub fn kp_lax_residual<P, U, W, M>(
    psi: &P,
    fields: &FieldPair<U, W>,
    alpha: Alpha,
    system: LaxSystem,
    map: &M,
    pt: &Point,
    h: f64,
) -> Result<[Complex64; 2]>
where
    P: ScalarField,
    U: ScalarField,
    W: ScalarField,
    M: ContourMap + Copy,
{
    let a = alpha.value::<Dd>();
    let (r1, r2, s) = match system {
        LaxSystem::Original | LaxSystem::Conjugate => {
            let conj = system == LaxSystem::Conjugate;
            let s = kp_sample(psi, &fields.u, &fields.w, alpha, conj, pt, h)?;
            let ay = if conj { -(a * s.p1) } else { a * s.p1 };
            (ay - s.l, s.p2 - s.a, s)
        }
        LaxSystem::Transformed | LaxSystem::TransformedConjugate => {
            let conj = system == LaxSystem::TransformedConjugate;
            let s = kp_sample(
                &OnMap { field: psi, map: *map },
                &OnMap {
                    field: &fields.u,
                    map: *map,
                },
                &OnMap {
                    field: &fields.w,
                    map: *map,
                },
                alpha,
                conj,
                pt,
                h,
            )?;
            let j: Jacobian<Dd> = map.jacobian(Dd::from(pt.axes[1]), Dd::from(pt.axes[2]))?;
            let la = s.l / a;
            if conj {
                (
                    s.p1 + (j.f22 * la + j.f12 * s.a) / j.delta,
                    s.p2 - (j.f21 * la + j.f11 * s.a) / j.delta,
                    s,
                )
            } else {
                (
                    s.p1 - (j.f22 * la - j.f12 * s.a) / j.delta,
                    s.p2 + (j.f21 * la - j.f11 * s.a) / j.delta,
                    s,
                )
            }
        }
    };
    Ok([rel(r1, s.psi, pt)?, rel(r2, s.psi, pt)?])
}

/// Residual of `Ψ̂ = BΨ`, relative to `max(|Ψ|, |Ψ̂|)`.
pub fn definition_residual<T: Real>(psi: C<T>, psi_hat: C<T>, b: C<T>, pt: &Point) -> Result<f64> {
    let scale = cx::abs(psi).to_f64().max(cx::abs(psi_hat).to_f64());
    if !(scale > 1e-300) {
        return Err(Error::DegenerateSample(pt.location()));
    }
    Ok(cx::abs(psi_hat - b * psi).to_f64() / scale)
}

/// `Ψ̂ = BΨ` for the KP wavefunctions at contour parameter `(x, t)`.
pub fn kp_definition_residual(params: &KpParams, x: f64, t: f64) -> Result<f64> {
    let (xd, td) = (Dd::from(x), Dd::from(t));
    let pt = contour_point(xd, td, params.y0)?;
    let j = HyperbolicMap.jacobian(Dd::from(params.y0), td)?;
    let psi = kp_psi(&pt, &params.wave(), params, TimeExponent::Cubic)?;
    let hat = kp_psi_hat(&pt, &params.wave_hat(), params)?;
    definition_residual(psi, hat, multiplier_b(xd, &j, params), &pt.lower())
}

/// `Ψ̂ = BΨ` for the lattice wavefunctions at boundary parameter `y`, site `n`.
pub fn toda_definition_residual(params: &TodaParams, y: f64, n: i64) -> Result<f64> {
    let pt = params.contour_point(Dd::from(y), n);
    let psi = toda_psi(&pt, &params.wave(), params)?;
    let hat = toda_psi_hat(&pt, &params.wave_hat(), params)?;
    let j = params.transform().jacobian(Dd::from(params.x0), Dd::from(y))?;
    let b = toda_multiplier_b(n, &j, toda_seed(&pt, params)?, Complex64::new(1.0, 0.0));
    definition_residual(psi, hat, b, &pt.lower())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TodaSystem {
    Lax(LaxSystem),
    /// The transformed system written out for the exponential example.
    Explicit,
    ExplicitConjugate,
}

/// Which coefficient form of a lattice system to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coefficients {
    Corrected,
    /// Sign of the `U_X` term flipped in the transformed conjugate system,
    /// or `u` in place of `w` in the explicit systems.
    Printed,
}

struct TodaSample {
    psi: C<Dd>,
    up: C<Dd>,
    down: C<Dd>,
    p1: C<Dd>,
    p2: C<Dd>,
    u1: C<Dd>,
    u2: C<Dd>,
    /// `w(n-1)`, `w(n)`
    w_down: C<Dd>,
    w_here: C<Dd>,
    u_down: C<Dd>,
    u_here: C<Dd>,
}

fn toda_sample<P: ScalarField, U: ScalarField>(psi: &P, u: &U, pt: &Point, h: f64) -> Result<TodaSample> {
    let at = Point::<Dd>::lift(pt);
    let u_here = u.eval(&at)?;
    let u_down = u.eval(&at.with_n(pt.n - 1))?;
    let u_up = u.eval(&at.with_n(pt.n + 1))?;
    Ok(TodaSample {
        psi: psi.eval(&at)?,
        up: psi.eval(&at.with_n(pt.n + 1))?,
        down: psi.eval(&at.with_n(pt.n - 1))?,
        p1: d(psi, pt, [1, 0, 0], h)?,
        p2: d(psi, pt, [0, 1, 0], h)?,
        u1: d(u, pt, [1, 0, 0], h)?,
        u2: d(u, pt, [0, 1, 0], h)?,
        w_down: cx::exp(u_down - u_here),
        w_here: cx::exp(u_here - u_up),
        u_down,
        u_here,
    })
}

/// Both lines of a lattice linear system, relative to `|Ψ(n)|`.
///
/// `psi` and `u` are given over `(X, Y, n)`. The original and conjugate
/// systems are evaluated at `pt = (X, Y, n)`; the others at chart points
/// `(x, y, n)` with the fields pulled back through `transform`.
pub fn toda_lax_residual<P, U>(
    psi: &P,
    u: &U,
    system: TodaSystem,
    coefficients: Coefficients,
    transform: &TodaTransform,
    pt: &Point,
    h: f64,
) -> Result<[Complex64; 2]>
where
    P: ScalarField,
    U: ScalarField,
{
    let (r1, r2, scale) = match system {
        TodaSystem::Lax(LaxSystem::Original) => {
            let s = toda_sample(psi, u, pt, h)?;
            (s.p1 + s.u1 * s.psi - s.up, s.p2 + s.w_down * s.down, s.psi)
        }
        TodaSystem::Lax(LaxSystem::Conjugate) => {
            let s = toda_sample(psi, u, pt, h)?;
            (s.p1 - s.u1 * s.psi + s.down, s.p2 - s.w_here * s.up, s.psi)
        }
        _ => {
            let t = *transform;
            let s = toda_sample(
                &OnTransform {
                    field: psi,
                    transform: t,
                },
                &OnTransform { field: u, transform: t },
                pt,
                h,
            )?;
            let (x, y) = (Dd::from(pt.axes[0]), Dd::from(pt.axes[1]));
            let j = transform.jacobian(x, y)?;
            let u_xx = j.f11 * s.u1 + j.f12 * s.u2;
            match system {
                TodaSystem::Lax(LaxSystem::Transformed) => {
                    let a = s.up - u_xx * s.psi;
                    let b = s.w_down * s.down;
                    (
                        s.p1 - (j.f22 * a + j.f12 * b) / j.delta,
                        s.p2 + (j.f21 * a + j.f11 * b) / j.delta,
                        s.psi,
                    )
                }
                TodaSystem::Lax(LaxSystem::TransformedConjugate) => {
                    let sign = match coefficients {
                        Coefficients::Corrected => Dd::one(),
                        Coefficients::Printed => -Dd::one(),
                    };
                    let a = u_xx * s.psi * sign - s.down;
                    let b = s.w_here * s.up;
                    (
                        s.p1 - (j.f22 * a - j.f12 * b) / j.delta,
                        s.p2 + (j.f21 * a - j.f11 * b) / j.delta,
                        s.psi,
                    )
                }
                TodaSystem::Explicit | TodaSystem::ExplicitConjugate => {
                    let TodaTransform::Exponential { c, a, b } = *transform else {
                        return Err(invalid("system", "explicit forms need the exponential transform"));
                    };
                    let (xx, yy) = transform.forward(x, y);
                    let (ap, bp, c) = (Dd::from(a.slope()), Dd::from(b.slope()), Dd::from(c));
                    let half = Dd::from(0.5);
                    let sv = (s.u1 + s.u2 * (ap / bp)) * half;
                    let printed = coefficients == Coefficients::Printed;
                    if system == TodaSystem::Explicit {
                        let wm = if printed { s.u_down } else { s.w_down };
                        let cy = c * yy;
                        (
                            s.p1 - (s.up * (ap * xx) - sv * s.psi - wm * s.down * (cy * ap)),
                            s.p2 - (s.up * (bp * xx) - sv * s.psi * (bp / ap) + wm * s.down * (cy * bp)),
                            s.psi,
                        )
                    } else {
                        let wn = if printed { s.u_here } else { s.w_here };
                        let cy = c * yy;
                        (
                            s.p1 - (wn * s.up * (cy * ap) + sv * s.psi - s.down * (ap * xx)),
                            s.p2 - (-(wn * s.up * (cy * bp)) + sv * s.psi * (bp / ap) - s.down * (bp * xx)),
                            s.psi,
                        )
                    }
                }
                _ => unreachable!(),
            }
        }
    };
    Ok([rel(r1, scale, pt)?, rel(r2, scale, pt)?])
}

// ---------------------------------------------------------------------------
// Desk grids and sample sets

pub fn kp_desk_grid() -> GridSpec {
    GridSpec::new(vec![
        AxisRange::new(-4.0, 4.0, 21),
        AxisRange::new(-2.0, 2.0, 21),
        AxisRange::new(0.5, 2.0, 21),
    ])
    .expect("valid grid")
}

/// `(X, Y)` box of each lattice example on which `1 + K` stays away from zero.
pub fn toda_desk_box(ex: Example) -> (AxisRange, AxisRange) {
    match ex {
        Example::Ex1 => (AxisRange::new(0.5, 2.0, 11), AxisRange::new(0.5, 2.0, 11)),
        Example::Ex1c1 => (AxisRange::new(0.3, 0.6, 11), AxisRange::new(1.6, 3.4, 11)),
        Example::Ex2 => (AxisRange::new(0.3, 0.7, 11), AxisRange::new(2.8, 3.2, 11)),
        Example::Ex3 => (AxisRange::new(-2.0, 2.0, 11), AxisRange::new(-2.0, 2.0, 11)),
    }
}

pub fn toda_desk_grid(ex: Example) -> GridSpec {
    let (x, y) = toda_desk_box(ex);
    GridSpec::new(vec![x, y])
        .and_then(|g| g.with_lattice(-5, 5))
        .expect("valid grid")
}

/// Boundary parameters whose contour images stay inside the desk box.
pub fn toda_contour_range(ex: Example) -> (f64, f64) {
    match ex {
        Example::Ex1 => (-0.3, 0.3),
        Example::Ex1c1 => (-1.1, -0.55),
        Example::Ex2 => (0.12, 0.22),
        Example::Ex3 => (-0.6, 0.7),
    }
}

fn spread(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (count - 1) as f64
}

/// `count` contour samples `(x, t)` with `t ∈ [0.5, 2]` and `x` spread over `[-4, 4]`.
pub fn kp_contour_samples(count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| (spread(-4.0, 4.0, count, (i * 37) % count), spread(0.5, 2.0, count, i)))
        .collect()
}

/// `count` contour samples `(y, n)` for a lattice example, `n ∈ [-5, 5]`.
pub fn toda_contour_samples(ex: Example, count: usize) -> Vec<(f64, i64)> {
    let (lo, hi) = toda_contour_range(ex);
    (0..count)
        .map(|i| (spread(lo, hi, count, i), (i % 11) as i64 - 5))
        .collect()
}

fn kp_glm_points() -> Vec<Point> {
    let mut v = Vec::new();
    for &x in &[-3.0, -1.2, 0.0, 0.9, 2.5] {
        for k in 0..10 {
            v.push(Point::new(
                x,
                spread(-1.8, 1.8, 10, k),
                spread(0.5, 2.0, 10, (k * 3) % 10),
            ));
        }
    }
    v
}

fn toda_glm_points(ex: Example) -> Vec<Point> {
    let xy: [(f64, f64); 5] = match ex {
        Example::Ex3 => [(-1.5, 0.3), (0.0, 0.0), (0.7, -1.1), (1.2, 1.9), (-0.4, -1.8)],
        _ => [(0.6, 0.7), (1.0, 1.0), (1.9, 0.55), (0.8, 1.7), (1.4, 1.3)],
    };
    let mut v = Vec::new();
    for (x, y) in xy {
        for n in -5..5 {
            v.push(Point::lattice(x, y, n));
        }
    }
    v
}

fn lift_scan<F>(points: Arc<Vec<Point>>, residual: F) -> impl Fn(f64) -> Result<Measurement> + Send + Sync + 'static
where
    F: Fn(&Point, f64) -> Result<Complex64> + Send + Sync + 'static,
{
    move |h| Ok(scan_points(&points, |p| residual(p, h))?.with_step(h).into())
}

fn c4(c: f64, h: f64) -> f64 {
    c * h.powi(4)
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

// ---------------------------------------------------------------------------
// KP suites

fn kp_equation_checks(prefix: &str, params: KpParams, solution: KpSolution) -> Vec<Check> {
    let points = Arc::new(kp_desk_grid().points().expect("desk grid"));
    let fields = Arc::new(kp_fields(&params, solution));
    [
        (KpLine::Evolution, "kp-evolution"),
        (KpLine::Compatibility, "kp-compatibility"),
    ]
    .into_iter()
    .map(|(line, tag)| {
        let f = fields.clone();
        Check::below(
            format!("{prefix}-{tag}"),
            tag,
            format!("{tag} residual on the 21³ desk grid"),
            KP_EQUATION_TOL,
            lift_scan(points.clone(), move |p, h| {
                kp_equation_residual(&*f, params.alpha, line, p, h)
            }),
        )
        .probed(DEFAULT_STEP)
    })
    .collect()
}

fn kp_seed_suite() -> Vec<Check> {
    kp_equation_checks("kp-seed", KpParams::default(), KpSolution::Seed)
}

fn kp_dressed_suite() -> Vec<Check> {
    let params = KpParams::default();
    let mut v = vec![Check::below(
        "kp-dressed-pole-free",
        "kp-regularity",
        "solution poles of the dressed field on the desk grid",
        0.5,
        move |_| {
            let pts = kp_desk_grid().points()?;
            let rep = scan_points(&pts, |p| Ok(kp_dressed(p, &params, Phase::Corrected)?.u))?;
            Ok(Measurement::scalar(rep.failures.len() as f64))
        },
    )];
    v.extend(kp_equation_checks("kp-dressed", params, KpSolution::Dressed));
    v
}

fn kp_lax_points() -> Vec<Point> {
    GridSpec::new(vec![
        AxisRange::new(-2.0, 2.0, 9),
        AxisRange::new(-1.0, 1.0, 9),
        AxisRange::new(0.5, 2.0, 9),
    ])
    .and_then(|g| g.points())
    .expect("lax grid")
}

/// Chart grid whose image lies in the desk box (`T ∈ [0.5, 2]`).
fn kp_chart_points() -> Vec<Point> {
    GridSpec::new(vec![
        AxisRange::new(-2.0, 2.0, 9),
        AxisRange::new(0.8, 1.2, 9),
        AxisRange::new(0.6, 1.6, 9),
    ])
    .and_then(|g| g.points())
    .expect("chart grid")
}

fn kp_lax_eval(
    params: KpParams,
    solution: KpSolution,
    system: LaxSystem,
    time: TimeExponent,
) -> impl Fn(f64) -> Result<Measurement> + Send + Sync + 'static {
    let points = Arc::new(match system {
        LaxSystem::Original | LaxSystem::Conjugate => kp_lax_points(),
        _ => kp_chart_points(),
    });
    let fields = kp_fields(&params, solution);
    let conj = matches!(system, LaxSystem::Conjugate | LaxSystem::TransformedConjugate);
    let psi = if conj {
        KpWave::psi_hat(&params)
    } else {
        KpWave::psi(&params, time)
    };
    lift_scan(points, move |p, h| {
        let [a, b] = kp_lax_residual(&psi, &fields, params.alpha, system, &HyperbolicMap, p, h)?;
        Ok(larger(a, b))
    })
}

const LAX_SYSTEMS: [(LaxSystem, &str); 4] = [
    (LaxSystem::Original, "original"),
    (LaxSystem::Conjugate, "conjugate"),
    (LaxSystem::Transformed, "transformed"),
    (LaxSystem::TransformedConjugate, "transformed-conjugate"),
];

fn kp_lax_suite() -> Vec<Check> {
    let mut v = Vec::new();
    for alpha in [Alpha::One, Alpha::I] {
        let params = KpParams::new(alpha, 1.0, re(0.5));
        let a = if alpha == Alpha::One { "real" } else { "imaginary" };
        for (system, name) in LAX_SYSTEMS {
            v.push(Check::truncation(
                format!("kp-lax-{name}-{a}"),
                "kp-lax",
                format!("{name} linear system, both lines, relative to |Ψ|"),
                KP_LAX_C,
                kp_lax_eval(params, KpSolution::Seed, system, TimeExponent::Cubic),
            ));
        }
    }
    let vacuum = KpParams::new(Alpha::One, 0.0, re(0.5));
    v.push(Check::truncation(
        "kp-lax-vacuum",
        "kp-lax",
        "vertex function with u = w = 0 under the untransformed system",
        KP_LAX_C,
        kp_lax_eval(vacuum, KpSolution::Seed, LaxSystem::Original, TimeExponent::Cubic),
    ));
    v
}

fn kp_boundary_suite() -> Vec<Check> {
    let params = KpParams::default();
    let samples = Arc::new(kp_contour_samples(100));
    let mut v = Vec::new();
    for (solution, name) in [(KpSolution::Seed, "seed"), (KpSolution::Dressed, "dressed")] {
        let s = samples.clone();
        v.push(Check::below(
            format!("kp-boundary-{name}"),
            "kp-boundary",
            "hyperbolic boundary constraint at 100 points of Y·T = 1",
            KP_BOUNDARY_TOL,
            move |_| {
                let f = kp_fields(&params, solution);
                Ok(scan_items(
                    &s,
                    |&(x, t)| Point::new(x, t, 1.0 / t).location(),
                    |&(x, t)| {
                        let pt = contour_point(Dd::from(x), Dd::from(t), params.y0)?;
                        Ok(cx::lower(kp_boundary_residual(&pt, &f, &params)?))
                    },
                )?
                .into())
            },
        ));
    }
    let s = samples.clone();
    v.push(Check::above(
        "kp-boundary-off-contour",
        "kp-boundary",
        "dressed boundary expression at 100 points of Y·T = 2",
        KP_OFF_CONTOUR_MIN,
        move |_| {
            let f = kp_fields(&params, KpSolution::Dressed);
            let r = std::f64::consts::SQRT_2;
            Ok(scan_items(
                &s,
                |&(x, t)| Point::new(x, r * t, r / t).location(),
                |&(x, t)| kp_boundary_expression(&Point::new(x, r * t, r / t), &f, &params),
            )?
            .into())
        },
    ));
    let s = samples;
    v.push(Check::below(
        "kp-definition",
        "kp-definition",
        "Ψ̂ = BΨ at 100 contour points",
        DEFINITION_TOL,
        move |_| {
            Ok(scan_items(
                &s,
                |&(x, t)| Point::new(x, t, 1.0 / t).location(),
                |&(x, t)| kp_definition_residual(&params, x, t).map(re),
            )?
            .into())
        },
    ));
    v
}

fn kp_glm_suite() -> Vec<Check> {
    let params = KpParams::default();
    let psi = KpWave::psi(&params, TimeExponent::Cubic);
    let hat = KpWave::psi_hat(&params);
    let quad = QuadratureSpec::default();
    let mut v = Vec::new();
    {
        let (psi, hat) = (psi.clone(), hat.clone());
        v.push(Check::below(
            "kp-glm-oracle",
            "kp-glm",
            "quadrature K(x, x) against the closed kernel at 50 points",
            GLM_TOL,
            move |_| {
                let pts = kp_glm_points();
                Ok(scan_points(&pts, |p| {
                    Ok(
                        (glm_continuous_solve(&psi, &hat, p, &quad)? - kp_kernel_closed(p, &params)?)
                            / kp_kernel_closed(p, &params)?.norm().max(1.0),
                    )
                })?
                .into())
            },
        ));
    }
    {
        let (psi, hat) = (psi.clone(), hat.clone());
        v.push(Check::below(
            "kp-glm-off-diagonal",
            "kp-glm",
            "full integral equation for K(x, z) = K(x, x)Ψ̂(z)/Ψ̂(x) at 50 (x, z) pairs",
            GLM_TOL,
            move |_| {
                let candidate = |p: &Point, z: f64| {
                    let mut q = *p;
                    q.axes[0] = z;
                    Ok(kp_kernel_closed(p, &params)? * hat.eval::<f64>(&q)? / hat.eval::<f64>(p)?)
                };
                let samples: Vec<(Point, f64)> = kp_glm_points()
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p, p.axes[0] + 0.2 + 0.1 * (i % 7) as f64))
                    .collect();
                Ok(glm_continuous_residual(&psi, &hat, candidate, &samples, &quad)?.into())
            },
        ));
    }
    v.push(Check::below(
        "kp-glm-closure",
        "kp-closure",
        "u⁰ + 2∂ₓK(x, x) with quadrature K against the dressed field",
        CONTINUOUS_CLOSURE_TOL,
        move |_| {
            let kern = ContinuousKernel {
                psi: psi.clone(),
                psi_hat: hat.clone(),
                quad,
            };
            let pts: Vec<Point> = kp_glm_points().into_iter().step_by(5).collect();
            Ok(scan_points(&pts, |p| {
                let kx = diff::<f64, _>(&kern, p, [1, 0, 0], 1e-2)?;
                let (u0, _) = kp_seed(p, &params)?;
                Ok(u0 + kx * 2.0 - kp_dressed(p, &params, Phase::Corrected)?.u)
            })?
            .with_step(1e-2)
            .into())
        },
    ));
    v
}

fn kp_reduction_suite() -> Vec<Check> {
    let params = KpParams::new(Alpha::One, 0.0, re(0.5));
    let points = || {
        GridSpec::new(vec![
            AxisRange::new(-4.0, 4.0, 11),
            AxisRange::new(-2.0, 2.0, 11),
            AxisRange::new(0.5, 2.0, 11),
        ])
        .and_then(|g| g.points())
    };
    vec![
        Check::below(
            "kp-reduction-soliton",
            "kp-reduction",
            "flat-boundary dressed field against -2p²sech²(px - 4p³T - ½ln 2p)",
            REDUCTION_TOL,
            move |_| {
                let p = params.p;
                Ok(scan_points(&points()?, |pt| {
                    let [x, _, t] = pt.axes;
                    let arg = p * x - p * p * p * 4.0 * t - (p * 2.0).ln() * 0.5;
                    let want = -p * p * 2.0 / arg.cosh().powi(2);
                    Ok(kp_dressed(pt, &params, Phase::Corrected)?.u - want)
                })?
                .into())
            },
        ),
        Check::below(
            "kp-reduction-flat",
            "kp-reduction",
            "|∂_Y u| of the flat-boundary dressed field",
            REDUCTION_FLATNESS_TOL,
            move |h| {
                let f = kp_fields(&params, KpSolution::Dressed);
                Ok(scan_points(&points()?, |pt| Ok(cx::lower(d(&f.u, pt, [0, 1, 0], h)?)))?
                    .with_step(h)
                    .into())
            },
        )
        .at_step(DEFAULT_STEP),
    ]
}

// ---------------------------------------------------------------------------
// Lattice suites

fn toda_example_suite(ex: Example) -> Vec<Check> {
    let params = TodaParams::desk(ex);
    let key = ex.name();
    let points = Arc::new(toda_desk_grid(ex).points().expect("desk grid"));
    let samples = Arc::new(toda_contour_samples(ex, 100));
    let mut v = Vec::new();
    for (solution, name) in [(TodaSolution::Seed, "seed"), (TodaSolution::Dressed, "dressed")] {
        let u = TodaField::new(&params, solution);
        v.push(Check::truncation(
            format!("toda-{key}-lattice-{name}"),
            "toda-lattice",
            "u_XY - w(n-1) + w(n) on the desk box, n ∈ [-5, 5]",
            toda_lattice_c(ex),
            lift_scan(points.clone(), move |p, h| toda_lattice_residual(&u, p, h)),
        ));
        let s = samples.clone();
        let tol = match solution {
            TodaSolution::Seed => TODA_SEED_BOUNDARY_TOL,
            TodaSolution::Dressed => TODA_DRESSED_BOUNDARY_TOL,
        };
        v.push(
            Check::below(
                format!("toda-{key}-boundary-{name}"),
                "toda-boundary",
                "boundary constraint at 100 contour points",
                tol,
                move |h| {
                    Ok(scan_items(
                        &s,
                        |&(y, n)| params.contour_point(y, n).location(),
                        |&(y, n)| toda_boundary_residual(&params.contour_point(y, n), &u, &params, h),
                    )?
                    .with_step(h)
                    .into())
                },
            )
            .at_step(BOUNDARY_STEP),
        );
    }
    let grid = toda_desk_grid(ex);
    v.push(Check::below(
        format!("toda-{key}-pole-free"),
        "toda-regularity",
        "zeros and sign changes of 1 + K on the desk box",
        0.5,
        move |_| {
            Ok(Measurement::scalar(
                toda_regularity_scan(&params, &grid)?.poles.len() as f64
            ))
        },
    ));
    match ex {
        Example::Ex1 => {
            let s = samples.clone();
            v.push(Check::below(
                "toda-ex1-definition",
                "toda-definition",
                "Ψ̂ = BΨ at 100 contour points",
                DEFINITION_TOL,
                move |_| {
                    Ok(scan_items(
                        &s,
                        |&(y, n)| params.contour_point(y, n).location(),
                        |&(y, n)| toda_definition_residual(&params, y, n).map(re),
                    )?
                    .into())
                },
            ));
            v.push(Check::below(
                "toda-ex1-multiplier",
                "toda-multiplier",
                "generic multiplier against the explicit one at 100 contour points",
                DEFINITION_TOL,
                move |_| {
                    let t = params.transform();
                    Ok(scan_items(
                        &samples,
                        |&(y, n)| params.contour_point(y, n).location(),
                        |&(y, n)| {
                            let pt = params.contour_point(y, n);
                            let j = t.jacobian(params.x0, y)?;
                            let g = toda_multiplier_b(n, &j, toda_seed(&pt, &params)?, re(1.0));
                            let e = toda_multiplier_b_ex1(n, y, &params);
                            Ok((g - e) / e.norm().max(1.0))
                        },
                    )?
                    .into())
                },
            ));
        }
        Example::Ex3 => {
            let grid = GridSpec::new(vec![AxisRange::new(-2.0, 2.0, 41), AxisRange::new(-2.0, 2.0, 41)])
                .and_then(|g| g.with_lattice(-5, 5))
                .expect("valid grid");
            let g2 = grid.clone();
            v.push(Check::above(
                "toda-ex3-regularity",
                "toda-regularity",
                "min |1 + K| over [-2, 2]², n ∈ [-5, 5]",
                REGULARITY_MIN,
                move |_| {
                    let r = toda_regularity_scan(&params, &grid)?;
                    let min = if r.is_regular() { r.min_abs } else { 0.0 };
                    Ok(Measurement::scalar(min))
                },
            ));
            v.push(Check::above(
                "toda-ex3-pole-detected",
                "toda-regularity",
                "poles found for ν = 2 on the same grid",
                0.5,
                move |_| {
                    let sing = TodaParams::ex3(0.5, re(1.0))?;
                    Ok(Measurement::scalar(toda_regularity_scan(&sing, &g2)?.poles.len() as f64))
                },
            ));
        }
        _ => {}
    }
    v
}

/// Chart grid `(x, y, n)` mapping into the first example's desk box.
fn toda_chart_points() -> Vec<Point> {
    GridSpec::new(vec![AxisRange::new(-0.2, 0.2, 7), AxisRange::new(-0.2, 0.2, 7)])
        .and_then(|g| g.with_lattice(-3, 3))
        .and_then(|g| g.points())
        .expect("chart grid")
}

fn toda_box_points(ex: Example) -> Vec<Point> {
    let (x, y) = toda_desk_box(ex);
    GridSpec::new(vec![AxisRange::new(x.min, x.max, 7), AxisRange::new(y.min, y.max, 7)])
        .and_then(|g| g.with_lattice(-3, 3))
        .and_then(|g| g.points())
        .expect("box grid")
}

/// First example with non-trivial profiles, so the chart factors are exercised.
pub fn toda_profiled_params() -> TodaParams {
    TodaParams::desk(Example::Ex1)
        .with_profiles(
            Affine::new(1.3, 0.05).expect("affine"),
            Affine::new(0.8, -0.1).expect("affine"),
        )
        .expect("valid profiles")
}

fn toda_lax_eval(
    params: TodaParams,
    system: TodaSystem,
    coefficients: Coefficients,
) -> impl Fn(f64) -> Result<Measurement> + Send + Sync + 'static {
    let points = Arc::new(match system {
        TodaSystem::Lax(LaxSystem::Original | LaxSystem::Conjugate) => toda_box_points(params.example),
        _ => toda_chart_points(),
    });
    let conj = matches!(
        system,
        TodaSystem::Lax(LaxSystem::Conjugate | LaxSystem::TransformedConjugate) | TodaSystem::ExplicitConjugate
    );
    let psi = if conj {
        TodaWave::psi_hat(&params)
    } else {
        TodaWave::psi(&params)
    };
    let u = TodaField::new(&params, TodaSolution::Seed);
    let t = params.transform();
    lift_scan(points, move |p, h| {
        let [a, b] = toda_lax_residual(&psi, &u, system, coefficients, &t, p, h)?;
        Ok(larger(a, b))
    })
}

const TODA_SYSTEMS: [(TodaSystem, &str); 6] = [
    (TodaSystem::Lax(LaxSystem::Original), "original"),
    (TodaSystem::Lax(LaxSystem::Conjugate), "conjugate"),
    (TodaSystem::Lax(LaxSystem::Transformed), "transformed"),
    (
        TodaSystem::Lax(LaxSystem::TransformedConjugate),
        "transformed-conjugate",
    ),
    (TodaSystem::Explicit, "explicit"),
    (TodaSystem::ExplicitConjugate, "explicit-conjugate"),
];

fn toda_lax_suite() -> Vec<Check> {
    let mut v = Vec::new();
    for (system, name) in TODA_SYSTEMS {
        v.push(Check::truncation(
            format!("toda-lax-{name}"),
            "toda-lax",
            format!("{name} lattice linear system, both lines, relative to |Ψ(n)|"),
            TODA_LAX_C,
            toda_lax_eval(toda_profiled_params(), system, Coefficients::Corrected),
        ));
    }
    // regular example: vacuum wavefunctions under the original system
    let ex3 = TodaParams::desk(Example::Ex3);
    for (system, name) in TODA_SYSTEMS.into_iter().take(2) {
        v.push(Check::truncation(
            format!("toda-lax-ex3-{name}"),
            "toda-lax",
            format!("{name} lattice linear system for the regular example"),
            TODA_LAX_C,
            toda_lax_eval(ex3, system, Coefficients::Corrected),
        ));
    }
    v
}

fn toda_glm_suite() -> Vec<Check> {
    let trunc = TruncationSpec::default();
    let mut v = Vec::new();
    for ex in [Example::Ex1, Example::Ex3] {
        let params = TodaParams::desk(ex);
        let key = ex.name();
        v.push(Check::below(
            format!("toda-glm-{key}-oracle"),
            "toda-glm",
            "summed K(n, n) against the closed kernel at 50 points",
            GLM_TOL,
            move |_| {
                let (psi, hat) = (TodaWave::psi(&params), TodaWave::psi_hat(&params));
                Ok(scan_points(&toda_glm_points(ex), |p| {
                    let closed = toda_kernel_closed(p, &params)?;
                    Ok((glm_discrete_solve(&psi, &hat, p, &trunc)? - closed) / closed.norm().max(1.0))
                })?
                .into())
            },
        ));
        v.push(Check::below(
            format!("toda-glm-{key}-closure"),
            "toda-closure",
            "u⁰ - log(1 + K) with summed K against the dressed field",
            DISCRETE_CLOSURE_TOL,
            move |_| {
                let kern = DiscreteKernel {
                    psi: TodaWave::psi(&params),
                    psi_hat: TodaWave::psi_hat(&params),
                    trunc,
                };
                Ok(scan_points(&toda_glm_points(ex), |p| {
                    let k = kern.eval::<f64>(p)?;
                    Ok(toda_seed(p, &params)? - (k + 1.0).ln() - toda_dressed(p, &params)?)
                })?
                .into())
            },
        ));
    }
    let params = TodaParams::desk(Example::Ex1);
    v.push(Check::below(
        "toda-glm-off-diagonal",
        "toda-glm",
        "full lattice equation for K(n, m) = K(n, n)Ψ̂(m)/Ψ̂(n) at 50 (n, m) pairs",
        GLM_TOL,
        move |_| {
            let (psi, hat) = (TodaWave::psi(&params), TodaWave::psi_hat(&params));
            let candidate = |p: &Point, m: i64| {
                Ok(toda_kernel_closed(p, &params)? * hat.eval::<f64>(&p.with_n(m))? / hat.eval::<f64>(p)?)
            };
            let samples: Vec<(Point, i64)> = toda_glm_points(Example::Ex1)
                .into_iter()
                .enumerate()
                .map(|(i, p)| (p, p.n + 1 + (i % 3) as i64))
                .collect();
            Ok(glm_discrete_residual(&psi, &hat, candidate, &samples, &trunc)?.into())
        },
    ));
    v
}

// ---------------------------------------------------------------------------
// Misprinted forms

fn negative_typos_suite() -> Vec<Check> {
    let params = KpParams::default();
    let system = LaxSystem::Transformed;
    let mut v = vec![Check::contrast(
        "typo-kp-time-exponent-transformed",
        "kp-lax",
        "Ψ with -4Tp² in the exponent misses the transformed system",
        TYPO_FACTOR,
        kp_lax_eval(params, KpSolution::Seed, system, TimeExponent::PrintedSquare),
        kp_lax_eval(params, KpSolution::Seed, system, TimeExponent::Cubic),
    )];
    let grid = Arc::new(kp_lax_points());
    let phase_eval = |solution| {
        let f = kp_fields(&params, solution);
        lift_scan(grid.clone(), move |p, h| {
            kp_equation_residual(&f, params.alpha, KpLine::Evolution, p, h)
        })
    };
    v.push(Check::contrast(
        "typo-kp-phase",
        "kp-evolution",
        "dressed field with the misprinted phase misses the KP equation",
        TYPO_FACTOR,
        phase_eval(KpSolution::DressedPrintedPhase),
        phase_eval(KpSolution::Dressed),
    ));
    v.push(Check::above(
        "typo-kp-definition-link",
        "kp-definition",
        "Ψ̂ = BΨ fails when the conjugate spectral parameter breaks the link",
        1e-3,
        move |_| {
            let mut bad = params;
            bad.q = re(0.6);
            Ok(scan_items(
                &kp_contour_samples(20),
                |&(x, t)| Point::new(x, t, 1.0 / t).location(),
                |&(x, t)| kp_definition_residual(&bad, x, t).map(re),
            )?
            .into())
        },
    ));
    let prm = toda_profiled_params();
    for (system, name) in [
        (
            TodaSystem::Lax(LaxSystem::TransformedConjugate),
            "transformed-conjugate-sign",
        ),
        (TodaSystem::Explicit, "explicit-coefficient"),
        (TodaSystem::ExplicitConjugate, "explicit-conjugate-coefficient"),
    ] {
        v.push(Check::contrast(
            format!("typo-toda-{name}"),
            "toda-lax",
            format!("misprinted {name} misses the lattice linear system"),
            TYPO_FACTOR,
            toda_lax_eval(prm, system, Coefficients::Printed),
            toda_lax_eval(prm, system, Coefficients::Corrected),
        ));
    }
    v
}

/// Checks of a named suite. `all` is every other suite in order.
pub fn suite_checks(name: &str) -> Result<Vec<Check>> {
    Ok(match name {
        "kp-seed" => kp_seed_suite(),
        "kp-dressed" => kp_dressed_suite(),
        "kp-lax" => kp_lax_suite(),
        "kp-boundary" => kp_boundary_suite(),
        "kp-glm" => kp_glm_suite(),
        "kp-reduction" => kp_reduction_suite(),
        "toda-ex1" => toda_example_suite(Example::Ex1),
        "toda-ex1c1" => toda_example_suite(Example::Ex1c1),
        "toda-ex2" => toda_example_suite(Example::Ex2),
        "toda-ex3" => toda_example_suite(Example::Ex3),
        "toda-lax" => toda_lax_suite(),
        "toda-glm" => toda_glm_suite(),
        "negative-typos" => negative_typos_suite(),
        "all" => {
            let mut v = Vec::new();
            for s in SUITE_NAMES.iter().filter(|s| **s != "all") {
                v.extend(suite_checks(s)?);
            }
            v
        }
        other => return Err(invalid("suite", format!("unknown suite {other:?}"))),
    })
}

pub fn suite(name: &str) -> Result<CheckSuite> {
    Ok(CheckSuite {
        name: name.to_string(),
        checks: suite_checks(name)?,
    })
}

/// [`suite`] with every probed check moved to step `h`.
pub fn suite_with_step(name: &str, h: f64) -> Result<CheckSuite> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("step must be positive and finite, got {h}")));
    }
    let mut s = suite(name)?;
    s.checks = s.checks.into_iter().map(|c| c.with_step(h)).collect();
    Ok(s)
}

/// The zero field over three continuous axes.
pub fn zero_field() -> impl ScalarField {
    FnField::new(Arity::CONTINUOUS3, |_: &Point| Ok(Complex64::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert_eq!(suite("nope").unwrap_err().code(), "invalid-parameter");
        for s in SUITE_NAMES {
            assert!(!suite_checks(s).unwrap().is_empty(), "{s}");
        }
    }

    #[test]
    fn check_kinds() {
        let ok = Check::below("a", "t", "", 1.0, |_| Ok(Measurement::scalar(0.5))).run();
        assert!(ok.pass);
        let bad = Check::below("a", "t", "", 1.0, |_| Ok(Measurement::scalar(1.0))).run();
        assert!(!bad.pass);
        let up = Check::above("a", "t", "", 1.0, |_| Ok(Measurement::scalar(2.0))).run();
        assert!(up.pass);
        let c = Check::contrast(
            "a",
            "t",
            "",
            10.0,
            |_| Ok(Measurement::scalar(1.0)),
            |_| Ok(Measurement::scalar(0.2)),
        );
        assert!(!c.run().pass);
        let err = Check::below("a", "t", "", 1.0, |_| Err(Error::EmptyGrid)).run();
        assert!(!err.pass && err.error.is_some());
    }

    #[test]
    fn order_probe_rejects_first_order_convergence() {
        let fourth = Check::below("a", "t", "", 1.0, |h| Ok(Measurement::scalar(h.powi(4))))
            .probed(1e-2)
            .run();
        assert!(fourth.pass);
        assert!((fourth.order.unwrap() - 4.0).abs() < 1e-9);
        let first = Check::below("a", "t", "", 1.0, |h| Ok(Measurement::scalar(h)))
            .probed(1e-2)
            .run();
        assert!(!first.pass);
        let exact = Check::below("a", "t", "", 1.0, |_| Ok(Measurement::scalar(0.0)))
            .probed(1e-2)
            .run();
        assert!(exact.pass && exact.order.is_none());
    }

    #[test]
    fn vacuum_solves_the_kp_equation_exactly() {
        let f = FieldPair {
            u: zero_field(),
            w: zero_field(),
        };
        let r = kp_equation_residual(&f, Alpha::One, KpLine::Evolution, &Point::new(0.1, 0.2, 0.3), 1e-3).unwrap();
        assert_eq!(r, Complex64::zero());
    }

    #[test]
    fn lax_residuals_are_small_at_a_point() {
        let prm = KpParams::default();
        let f = kp_fields(&prm, KpSolution::Seed);
        let psi = KpWave::psi(&prm, TimeExponent::Cubic);
        let hat = KpWave::psi_hat(&prm);
        let pt = Point::new(0.3, 0.9, 1.2);
        for (sys, w) in [(LaxSystem::Transformed, &psi), (LaxSystem::TransformedConjugate, &hat)] {
            for r in kp_lax_residual(w, &f, Alpha::One, sys, &HyperbolicMap, &pt, 1e-3).unwrap() {
                assert!(r.norm() < 1e-9, "{sys:?} {r}");
            }
        }
        let prm = toda_profiled_params();
        let u = TodaField::new(&prm, TodaSolution::Seed);
        let t = prm.transform();
        let pt = Point::lattice(0.1, -0.1, 1);
        for (sys, _) in TODA_SYSTEMS.into_iter().skip(2) {
            let conj = matches!(
                sys,
                TodaSystem::Lax(LaxSystem::TransformedConjugate) | TodaSystem::ExplicitConjugate
            );
            let w = if conj {
                TodaWave::psi_hat(&prm)
            } else {
                TodaWave::psi(&prm)
            };
            for r in toda_lax_residual(&w, &u, sys, Coefficients::Corrected, &t, &pt, 1e-3).unwrap() {
                assert!(r.norm() < 1e-9, "{sys:?} {r}");
            }
        }
    }
}
