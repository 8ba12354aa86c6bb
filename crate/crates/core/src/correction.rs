//! The correction `α*(α, 𝒜)`: the level `γ ∈ [α, 1]` at which the limiting
//! probability that every strategy's p-value is at most `γ` equals `α`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::joint_null::{prob_max_p_leq, JointNullModel, Quadrature};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionResult {
    pub alpha: f64,
    pub alpha_star: f64,
    /// `alpha / alpha_star`, the factor applied to the largest p-value.
    pub adjustment: f64,
    /// Root function `Pr(max P ≤ alpha_star) − alpha` at the solution.
    pub residual: f64,
    pub iterations: usize,
}

impl CorrectionResult {
    pub(crate) fn from_parts(
        alpha: f64,
        alpha_star: f64,
        residual: f64,
        iterations: usize,
    ) -> Self {
        CorrectionResult {
            alpha,
            alpha_star,
            adjustment: alpha / alpha_star,
            residual,
            iterations,
        }
    }

    /// No correction: `alpha_star = alpha`.
    pub fn identity(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")));
        }
        Ok(CorrectionResult::from_parts(alpha, alpha, 0.0, 0))
    }
}

/// Solve for `α*` with the default quadrature settings and search bracket.
pub fn solve_alpha_star(model: &JointNullModel, alpha: f64, tol: f64) -> Result<CorrectionResult> {
    AlphaStarSolver::new(model).tol(tol).solve(alpha)
}

/// Configurable solver for `α*`.
#[derive(Debug, Clone)]
pub struct AlphaStarSolver<'a> {
    model: &'a JointNullModel,
    quadrature: Quadrature,
    tol: f64,
    bracket: Option<(f64, f64)>,
}

impl<'a> AlphaStarSolver<'a> {
    pub fn new(model: &'a JointNullModel) -> Self {
        AlphaStarSolver {
            model,
            quadrature: Quadrature::default(),
            tol: DEFAULT_TOL,
            bracket: None,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn quadrature(mut self, q: Quadrature) -> Self {
        self.quadrature = q;
        self
    }

    /// Override the initial bracket (default `[alpha, 1]`). Endpoints are
    /// clipped to `(0, 1]` and must still straddle the root.
    pub fn bracket(mut self, lower: f64, upper: f64) -> Self {
        self.bracket = Some((lower, upper));
        self
    }

    pub fn solve(&self, alpha: f64) -> Result<CorrectionResult> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        let q = &self.quadrature;
        let model = self.model;
        // The functional equals 1 at γ = 1, outside the domain of z_{1-γ}.
        let root_fn = |g: f64| -> Result<f64> {
            if g >= 1.0 {
                Ok(1.0 - alpha)
            } else {
                Ok(prob_max_p_leq(model, g, q)? - alpha)
            }
        };

        let (mut a, mut b) = self.bracket.unwrap_or((alpha, 1.0));
        a = a.max(f64::MIN_POSITIVE);
        b = b.min(1.0);
        let mut fa = root_fn(a)?;
        let mut fb = root_fn(b)?;
        if fa.abs() <= self.tol {
            return Ok(CorrectionResult::from_parts(alpha, a.max(alpha), fa, 0));
        }
        if fa > 0.0 || fb < 0.0 {
            return Err(Error::Numerical(format!(
                "root function does not change sign on [{a}, {b}]: f = ({fa:e}, {fb:e})"
            )));
        }

        // Brent: keep [b, c] bracketing the root with |f(b)| ≤ |f(c)|, try
        // inverse quadratic / secant steps, fall back to bisection.
        let (mut c, mut fc) = (a, fa);
        let mut d = b - a;
        let mut e = d;
        for iter in 1..=MAX_ITERATIONS {
            if fb.signum() == fc.signum() {
                c = a;
                fc = fa;
                d = b - a;
                e = d;
            }
            if fc.abs() < fb.abs() {
                a = b;
                b = c;
                c = a;
                fa = fb;
                fb = fc;
                fc = fa;
            }
            let step_tol = 2.0 * f64::EPSILON * b.abs();
            let half = 0.5 * (c - b);
            if fb.abs() <= self.tol {
                let star = b.clamp(alpha, 1.0);
                return Ok(CorrectionResult::from_parts(alpha, star, fb, iter));
            }
            if half.abs() <= step_tol {
                break;
            }
            if e.abs() >= step_tol && fa.abs() > fb.abs() {
                let s = fb / fa;
                let (mut p, mut qq);
                if a == c {
                    p = 2.0 * half * s;
                    qq = 1.0 - s;
                } else {
                    let qa = fa / fc;
                    let r = fb / fc;
                    p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                    qq = (qa - 1.0) * (r - 1.0) * (s - 1.0);
                }
                if p > 0.0 {
                    qq = -qq;
                }
                p = p.abs();
                let bound = (3.0 * half * qq - (step_tol * qq).abs()).min((e * qq).abs());
                if 2.0 * p < bound {
                    e = d;
                    d = p / qq;
                } else {
                    d = half;
                    e = d;
                }
            } else {
                d = half;
                e = d;
            }
            a = b;
            fa = fb;
            b += if d.abs() > step_tol {
                d
            } else {
                step_tol.copysign(half)
            };
            fb = root_fn(b)?;
        }
        Err(Error::Solver {
            iterations: MAX_ITERATIONS,
            lower: b.min(c),
            upper: b.max(c),
        })
    }
}
