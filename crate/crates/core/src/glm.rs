//! Numerical Gelfand-Levitan-Marchenko solvers for rank-one kernels.
//!
//! With `F(x, z) = Ψ(x) Ψ̂(z)` the continuous equation
//! `K(x,z) + F(x,z) + ∫_{-∞}^x K(x,s) F(s,z) ds = 0` and its lattice analogue
//! `K(n,m) + F(n,m) + Σ_{j≥n} K(n,j) F(j,m) = 0` reduce to a scalar division.
//! The integral and the sum are formed from samples here; nothing reuses a
//! closed form.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{scan_items, Arity, Point, ResidualReport, ScalarField};
use crate::real::{cx, Real, C};

const POLE_TOL: f64 = 1e-12;

/// Lower end of the integral that stands in for `-∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// A fixed lower limit.
    At(f64),
    /// `x - span`; the node set moves with `x`, so the quadrature error is smooth in `x`.
    Below(f64),
}

/// Composite Simpson rule on `[cutoff, x]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub cutoff: Cutoff,
    /// Odd, at least 3.
    pub n_nodes: usize,
    /// Bound on `|Ψ Ψ̂|` at the cutoff, relative to `max(1, |∫|)`.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            cutoff: Cutoff::Below(50.0),
            n_nodes: 8001,
            tol: 1e-13,
        }
    }
}

impl QuadratureSpec {
    pub fn new(cutoff: Cutoff, n_nodes: usize, tol: f64) -> Result<Self> {
        let q = QuadratureSpec { cutoff, n_nodes, tol };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 3 || self.n_nodes % 2 == 0 {
            return Err(invalid(
                "n_nodes",
                format!("need an odd count >= 3, got {}", self.n_nodes),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        match self.cutoff {
            Cutoff::At(c) if !c.is_finite() => Err(invalid("cutoff", "must be finite")),
            Cutoff::Below(s) if !(s > 0.0 && s.is_finite()) => Err(invalid("cutoff", "span must be positive")),
            _ => Ok(()),
        }
    }

    /// Lower limit for evaluation point `x`.
    pub fn lower(&self, x: f64) -> Result<f64> {
        let lo = match self.cutoff {
            Cutoff::At(c) => c,
            Cutoff::Below(s) => x - s,
        };
        if lo < x {
            Ok(lo)
        } else {
            Err(invalid("cutoff", format!("lower limit {lo} is not below x = {x}")))
        }
    }

    /// Halves the node spacing.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            n_nodes: 2 * self.n_nodes - 1,
            ..*self
        }
    }
}

/// Term-by-term summation of the lattice tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationSpec {
    pub max_terms: usize,
    /// Stop once the estimated remainder is below `tail_tol · |1 + partial sum|`.
    pub tail_tol: f64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec {
            max_terms: 10_000,
            tail_tol: 1e-17,
        }
    }
}

impl TruncationSpec {
    pub fn new(max_terms: usize, tail_tol: f64) -> Result<Self> {
        let t = TruncationSpec { max_terms, tail_tol };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 {
            return Err(invalid("max_terms", "must be at least 1"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(invalid("tail_tol", "must be positive"));
        }
        Ok(())
    }
}

fn along<F: ScalarField>(f: &F, at: &Point, s: f64) -> Result<Complex64> {
    let mut p = *at;
    p.axes[0] = s;
    f.eval::<f64>(&p)
}

/// `∫_{lo}^{x} g(s) ds` by composite Simpson, with the decay check at `lo`.
fn simpson<G>(g: G, at: &Point, quad: &QuadratureSpec) -> Result<Complex64>
where
    G: Fn(f64) -> Result<Complex64>,
{
    quad.validate()?;
    let x = at.axes[0];
    let lo = quad.lower(x)?;
    let m = quad.n_nodes - 1;
    let h = (x - lo) / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut first = Complex64::new(0.0, 0.0);
    for i in 0..=m {
        // sample exactly at x on the last node
        let s = if i == m { x } else { lo + h * i as f64 };
        let v = g(s)?;
        if i == 0 {
            first = v;
        }
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += v * w;
    }
    let integral = acc * (h / 3.0);
    if !(first.norm() <= quad.tol * integral.norm().max(1.0)) {
        return Err(Error::TailNotConverged(format!(
            "integrand {:e} at cutoff {lo} exceeds tolerance {:e}",
            first.norm(),
            quad.tol
        )));
    }
    Ok(integral)
}

/// `Σ_{j≥n} g(j)`, stopping on a geometric remainder estimate.
fn lattice_tail<G>(g: G, n: i64, trunc: &TruncationSpec) -> Result<Complex64>
where
    G: Fn(i64) -> Result<Complex64>,
{
    trunc.validate()?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev: Option<f64> = None;
    let mut growing = 0;
    for j in n..n + trunc.max_terms as i64 {
        let t = g(j)?;
        let a = t.norm();
        sum += t;
        match prev {
            Some(pa) if pa == 0.0 && a == 0.0 => return Ok(sum),
            Some(pa) if pa > 0.0 => {
                let r = a / pa;
                if r >= 1.0 {
                    growing += 1;
                    if growing >= 3 {
                        return Err(Error::TailNotConverged(format!(
                            "term ratio {r:.3} >= 1 for three consecutive terms at j = {j}"
                        )));
                    }
                } else {
                    growing = 0;
                    if a * r / (1.0 - r) <= trunc.tail_tol * (sum + 1.0).norm() {
                        return Ok(sum);
                    }
                }
            }
            _ => {}
        }
        prev = Some(a);
    }
    Err(Error::TailNotConverged(format!(
        "remainder above tolerance after {} terms",
        trunc.max_terms
    )))
}

fn rank_one(num: Complex64, sum: Complex64, at: &Point) -> Result<Complex64> {
    let den = sum + 1.0;
    if den.norm() <= POLE_TOL * (1.0 + sum.norm()) {
        return Err(Error::KernelPole(at.location()));
    }
    Ok(-num / den)
}

/// `K(x, x)` for `F(x,z) = Ψ(x)Ψ̂(z)`, integrating along the first axis with
/// the remaining coordinates of `at` held fixed.
pub fn glm_continuous_solve<F, G>(psi: &F, psi_hat: &G, at: &Point, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: ScalarField,
    G: ScalarField,
{
    let integral = simpson(|s| Ok(along(psi, at, s)? * along(psi_hat, at, s)?), at, quad)?;
    let num = psi.eval::<f64>(at)? * psi_hat.eval::<f64>(at)?;
    rank_one(num, integral, at)
}

/// `K(n, n)` of the lattice equation, summing `Ψ(j)Ψ̂(j)` for `j ≥ n` at the
/// continuous coordinates of `at`.
pub fn glm_discrete_solve<F, G>(psi: &F, psi_hat: &G, at: &Point, trunc: &TruncationSpec) -> Result<Complex64>
where
    F: ScalarField,
    G: ScalarField,
{
    let term = |j| Ok(psi.eval::<f64>(&at.with_n(j))? * psi_hat.eval::<f64>(&at.with_n(j))?);
    let sum = lattice_tail(term, at.n, trunc)?;
    rank_one(term(at.n)?, sum, at)
}

/// Residual of the full continuous equation at `(x, z)` samples for a candidate
/// `K(x, z)`, scaled by `max(1, |F(x, z)|)`. Each sample is a point carrying
/// `x` on the first axis and the second argument `z`.
pub fn glm_continuous_residual<F, G, K>(
    psi: &F,
    psi_hat: &G,
    kernel: K,
    samples: &[(Point, f64)],
    quad: &QuadratureSpec,
) -> Result<ResidualReport>
where
    F: ScalarField,
    G: ScalarField,
    K: Fn(&Point, f64) -> Result<Complex64> + Sync,
{
    scan_items(
        samples,
        |(p, _)| p.location(),
        |(p, z)| {
            let hz = along(psi_hat, p, *z)?;
            let f = psi.eval::<f64>(p)? * hz;
            let integral = simpson(|s| Ok(kernel(p, s)? * along(psi, p, s)?), p, quad)? * hz;
            Ok((kernel(p, *z)? + f + integral) / f.norm().max(1.0))
        },
    )
}

/// Residual of the lattice equation at `(n, m)` samples for a candidate `K(n, m)`.
pub fn glm_discrete_residual<F, G, K>(
    psi: &F,
    psi_hat: &G,
    kernel: K,
    samples: &[(Point, i64)],
    trunc: &TruncationSpec,
) -> Result<ResidualReport>
where
    F: ScalarField,
    G: ScalarField,
    K: Fn(&Point, i64) -> Result<Complex64> + Sync,
{
    scan_items(
        samples,
        |(p, _)| p.location(),
        |(p, m)| {
            let hm = psi_hat.eval::<f64>(&p.with_n(*m))?;
            let f = psi.eval::<f64>(p)? * hm;
            let sum = lattice_tail(|j| Ok(kernel(p, j)? * psi.eval::<f64>(&p.with_n(j))?), p.n, trunc)? * hm;
            Ok((kernel(p, *m)? + f + sum) / f.norm().max(1.0))
        },
    )
}

/// Numerically solved `K(x, x)` as a field. Evaluation runs in `f64` whatever `T`.
#[derive(Clone, Debug)]
pub struct ContinuousKernel<F, G> {
    pub psi: F,
    pub psi_hat: G,
    pub quad: QuadratureSpec,
}

impl<F: ScalarField, G: ScalarField> ScalarField for ContinuousKernel<F, G> {
    fn arity(&self) -> Arity {
        self.psi.arity()
    }

    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        glm_continuous_solve(&self.psi, &self.psi_hat, &p.lower(), &self.quad).map(cx::lift)
    }
}

/// Numerically summed `K(n, n)` as a field. Evaluation runs in `f64` whatever `T`.
#[derive(Clone, Debug)]
pub struct DiscreteKernel<F, G> {
    pub psi: F,
    pub psi_hat: G,
    pub trunc: TruncationSpec,
}

impl<F: ScalarField, G: ScalarField> ScalarField for DiscreteKernel<F, G> {
    fn arity(&self) -> Arity {
        self.psi.arity()
    }

    fn eval<T: Real>(&self, p: &Point<T>) -> Result<C<T>> {
        glm_discrete_solve(&self.psi, &self.psi_hat, &p.lower(), &self.trunc).map(cx::lift)
    }
}
