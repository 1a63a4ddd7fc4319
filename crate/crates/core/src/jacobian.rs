//! Partial derivatives of an inverse variable transform.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{cx, Real, C};

/// Partials of the inverse of a planar change of variables `(s1, s2) -> (A, B)`.
///
/// `f11 = s1_A`, `f12 = s2_A`, `f21 = s1_B`, `f22 = s2_B`, `delta = f11 f22 - f12 f21`.
/// For the KP transform `(y, t) -> (Y, T)` this is `f11 = y_Y, f12 = t_Y, f21 = y_T,
/// f22 = t_T`; for the lattice transform `(x, y) -> (X, Y)` it is `f11 = x_X,
/// f12 = y_X, f21 = x_Y, f22 = y_Y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian<T = f64> {
    pub f11: C<T>,
    pub f12: C<T>,
    pub f21: C<T>,
    pub f22: C<T>,
    pub delta: C<T>,
}

impl<T: Real> Jacobian<T> {
    /// Builds the Jacobian, recomputing `delta` and rejecting `f11 = 0`,
    /// `f21 = 0` or `delta = 0`.
    pub fn new(f11: C<T>, f12: C<T>, f21: C<T>, f22: C<T>) -> Result<Self> {
        let delta = f11 * f22 - f12 * f21;
        let zero = |z: C<T>| z.re.is_zero() && z.im.is_zero();
        if zero(f11) {
            return Err(Error::DegenerateTransform("f11 = 0".into()));
        }
        if zero(f21) {
            return Err(Error::DegenerateTransform("f21 = 0".into()));
        }
        if zero(delta) || !cx::is_finite(delta) {
            return Err(Error::DegenerateTransform(format!("delta = {:?}", cx::lower(delta))));
        }
        Ok(Jacobian {
            f11,
            f12,
            f21,
            f22,
            delta,
        })
    }

    /// Inverts the forward partials `A_s1, A_s2, B_s1, B_s2`.
    pub fn from_forward(a_s1: T, a_s2: T, b_s1: T, b_s2: T) -> Result<Self> {
        let det = a_s1 * b_s2 - a_s2 * b_s1;
        if det.is_zero() || !det.is_finite() {
            return Err(Error::DegenerateTransform("forward map is singular".into()));
        }
        let c = |v: T| C::new(v / det, T::zero());
        Self::new(c(b_s2), c(-b_s1), c(-a_s2), c(a_s1))
    }

    pub fn lower(&self) -> Jacobian<f64> {
        Jacobian {
            f11: cx::lower(self.f11),
            f12: cx::lower(self.f12),
            f21: cx::lower(self.f21),
            f22: cx::lower(self.f22),
            delta: cx::lower(self.delta),
        }
    }

    /// `f21 / f11`, the ratio entering both multipliers.
    pub fn ratio(&self) -> C<T> {
        self.f21 / self.f11
    }
}

/// Serializable view of an `f64` Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JacobianRecord {
    pub f11: [f64; 2],
    pub f12: [f64; 2],
    pub f21: [f64; 2],
    pub f22: [f64; 2],
    pub delta: [f64; 2],
}

impl From<&Jacobian<f64>> for JacobianRecord {
    fn from(j: &Jacobian<f64>) -> Self {
        let p = |z: Complex64| [z.re, z.im];
        JacobianRecord {
            f11: p(j.f11),
            f12: p(j.f12),
            f21: p(j.f21),
            f22: p(j.f22),
            delta: p(j.delta),
        }
    }
}

/// Affine coordinate profile `s -> slope * s + offset`, used for the arbitrary
/// smooth functions `a(x)`, `b(y)` in the lattice transforms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Affine {
    pub slope: f64,
    pub offset: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        slope: 1.0,
        offset: 0.0,
    };

    pub fn new(slope: f64, offset: f64) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() || !offset.is_finite() {
            return Err(crate::error::invalid(
                "profile",
                format!("need finite nonzero slope, got {slope}"),
            ));
        }
        Ok(Affine { slope, offset })
    }

    pub fn value<T: Real>(&self, s: T) -> T {
        T::from_f64(self.slope) * s + T::from_f64(self.offset)
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Preimage of `v`.
    pub fn solve(&self, v: f64) -> f64 {
        (v - self.offset) / self.slope
    }
}

impl Default for Affine {
    fn default() -> Self {
        Affine::IDENTITY
    }
}

/// Jacobian of `forward` by fourth-order central differences of the forward map.
pub fn jacobian_fd<F>(forward: F, s1: f64, s2: f64, h: f64) -> Result<Jacobian<f64>>
where
    F: Fn(f64, f64) -> Result<(f64, f64)>,
{
    let d = |dir: (f64, f64)| -> Result<(f64, f64)> {
        let mut acc = (0.0, 0.0);
        for (k, w) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let (a, b) = forward(s1 + k * h * dir.0, s2 + k * h * dir.1)?;
            acc.0 += w * a;
            acc.1 += w * b;
        }
        Ok((acc.0 / (12.0 * h), acc.1 / (12.0 * h)))
    };
    let (a_s1, b_s1) = d((1.0, 0.0))?;
    let (a_s2, b_s2) = d((0.0, 1.0))?;
    Jacobian::from_forward(a_s1, a_s2, b_s1, b_s2)
}
