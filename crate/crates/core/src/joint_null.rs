//! Asymptotic joint law of the strategies' statistics under the null, and the
//! two tail functionals built on it: `Pr(max_A P(A) ≤ γ)` and the maximum
//! asymptotic size `s(α, 𝒜) = Pr(min_A P(A) ≤ α)`.
//!
//! The limiting statistics are standard normal with correlation matrix
//! `corr`, and `P(A) = 1 - Φ(T(A))`, so `max_A P(A) ≤ γ` is the orthant event
//! `min_A T(A) ≥ z_{1-γ}`. Two strategies are handled by one-dimensional
//! quadrature; more are handled by randomized quasi–Monte Carlo.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{self, RngSeed};
use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Asymptotic correlation between the t and Wilcoxon signed-rank statistics
/// under a normal null, `√(3/π)`.
pub fn rho_t_wilcoxon() -> f64 {
    (3.0 / std::f64::consts::PI).sqrt()
}

const PSD_TOL: f64 = 1e-10;
const COUPLED_TOL: f64 = 1e-12;

/// Correlation matrix of the limiting standard-normal statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointNullModel {
    m: usize,
    corr: Vec<f64>,
}

impl JointNullModel {
    /// Build from a row-major `m × m` matrix.
    pub fn new(m: usize, corr: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Model("need at least one strategy".into()));
        }
        if corr.len() != m * m {
            return Err(Error::Model(format!(
                "expected {} entries for a {m}x{m} matrix, got {}",
                m * m,
                corr.len()
            )));
        }
        for i in 0..m {
            if corr[i * m + i] != 1.0 {
                return Err(Error::Model(format!(
                    "diagonal entry {i} is {}, not 1",
                    corr[i * m + i]
                )));
            }
            for j in 0..m {
                let r = corr[i * m + j];
                if !r.is_finite() || r.abs() > 1.0 {
                    return Err(Error::Model(format!(
                        "entry ({i}, {j}) = {r} outside [-1, 1]"
                    )));
                }
                if r != corr[j * m + i] {
                    return Err(Error::Model(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let model = JointNullModel { m, corr };
        model.factor()?;
        Ok(model)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Model("correlation matrix must be square".into()));
        }
        JointNullModel::new(m, rows.concat())
    }

    /// Two strategies with correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        JointNullModel::new(2, vec![1.0, rho, rho, 1.0])
    }

    /// `m` strategies with common pairwise correlation `rho`.
    pub fn equicorrelated(m: usize, rho: f64) -> Result<Self> {
        let corr = (0..m * m)
            .map(|k| if k / m == k % m { 1.0 } else { rho })
            .collect();
        JointNullModel::new(m, corr)
    }

    /// The t-test / Wilcoxon pair, `ρ = √(3/π)`.
    pub fn t_wilcoxon() -> Self {
        JointNullModel::bivariate(rho_t_wilcoxon()).expect("valid correlation")
    }

    /// Parse whitespace- or comma-separated rows, one matrix row per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::Model(format!("not a number: {t:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        JointNullModel::from_rows(&rows)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn corr(&self, i: usize, j: usize) -> f64 {
        self.corr[i * self.m + j]
    }

    /// Pivoted Cholesky factor: `m × rank` columns with `corr ≈ L Lᵀ`,
    /// stored row-major as `m` rows of length `rank`.
    pub(crate) fn factor(&self) -> Result<Factor> {
        let m = self.m;
        let mut a = self.corr.clone();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for k in 0..m {
            let (p, d) = (k..m).map(|i| (i, a[perm[i] * m + perm[i]])).fold(
                (k, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
            if d < -PSD_TOL {
                return Err(Error::Model(
                    "correlation matrix is not positive semidefinite".into(),
                ));
            }
            if d <= PSD_TOL {
                for i in k..m {
                    for j in k..m {
                        let v = a[perm[i] * m + perm[j]];
                        if v.abs() > 1e-8 || (i == j && v < -PSD_TOL) {
                            return Err(Error::Model(
                                "correlation matrix is not positive semidefinite".into(),
                            ));
                        }
                    }
                }
                break;
            }
            perm.swap(k, p);
            let pk = perm[k];
            let s = d.sqrt();
            let mut col = vec![0.0; m];
            for i in k..m {
                col[perm[i]] = a[perm[i] * m + pk] / s;
            }
            for i in k + 1..m {
                for j in k + 1..m {
                    let (pi, pj) = (perm[i], perm[j]);
                    a[pi * m + pj] -= col[pi] * col[pj];
                }
            }
            cols.push(col);
        }
        let rank = cols.len();
        let rows = (0..m)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        Ok(Factor {
            rank,
            rows,
            order: perm,
        })
    }
}

pub(crate) struct Factor {
    pub rank: usize,
    pub rows: Vec<Vec<f64>>,
    /// Pivot order: row `order[k]` is zero beyond column `k`.
    pub order: Vec<usize>,
}

/// Randomized quasi–Monte Carlo settings: `shifts` independent random shifts
/// of a Kronecker lattice with `points_per_shift` points each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QmcConfig {
    pub points_per_shift: usize,
    pub shifts: usize,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            points_per_shift: 1 << 16,
            shifts: 16,
            seed: 0x5eed_9a1e,
        }
    }
}

impl QmcConfig {
    pub fn total_points(&self) -> usize {
        self.points_per_shift * self.shifts
    }
}

/// Numerical settings for the tail functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    /// Distance beyond `max(lower, 0)` at which half-line integrals stop.
    pub upper_cut: f64,
    pub abs_tol: f64,
    /// Used when more than two coordinates remain after coupling reduction.
    pub qmc: QmcConfig,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            upper_cut: 9.0,
            abs_tol: 1e-11,
            qmc: QmcConfig::default(),
        }
    }
}

impl Quadrature {
    pub fn new(upper_cut: f64, abs_tol: f64) -> Result<Self> {
        let q = Quadrature {
            upper_cut,
            abs_tol,
            ..Quadrature::default()
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::domain(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.upper_cut >= 6.0) {
            return Err(Error::domain(format!(
                "upper_cut must be >= 6, got {}",
                self.upper_cut
            )));
        }
        if self.qmc.points_per_shift == 0 || self.qmc.shifts < 2 {
            return Err(Error::domain("QMC needs at least one point and two shifts"));
        }
        Ok(())
    }
}

/// A Monte Carlo style estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} not in (0, 1)")))
    }
}

/// `Pr(max_A P(A) ≤ γ | H0)` in the limit.
pub fn prob_max_p_leq(model: &JointNullModel, gamma: f64, q: &Quadrature) -> Result<f64> {
    check_level("gamma", gamma)?;
    q.validate()?;
    let z = dist::quantile(1.0 - gamma);
    let rho = if model.m == 2 {
        Some(model.corr(0, 1))
    } else {
        None
    };
    let v = match rho {
        Some(rho) if rho.abs() < 1.0 - COUPLED_TOL => {
            // γ − ∫_z^∞ φ(y) Φ((z − ρy)/√(1−ρ²)) dy
            let s = (1.0 - rho * rho).sqrt();
            let hi = z.max(0.0) + q.upper_cut;
            let escape = integrate(
                |y| dist::pdf(y) * dist::cdf((z - rho * y) / s),
                z,
                hi,
                q.abs_tol,
            )?;
            gamma - escape
        }
        _ => rectangle(model, &vec![z; model.m], &vec![f64::INFINITY; model.m], q)?,
    };
    Ok(v.clamp(0.0, gamma))
}

/// Maximum asymptotic size `s(α, 𝒜) = Pr(min_A P(A) ≤ α | H0)` in the limit.
pub fn max_asymptotic_size(model: &JointNullModel, alpha: f64, q: &Quadrature) -> Result<f64> {
    check_level("alpha", alpha)?;
    q.validate()?;
    let z = dist::quantile(1.0 - alpha);
    let rho = if model.m == 2 {
        Some(model.corr(0, 1))
    } else {
        None
    };
    let v = match rho {
        Some(rho) if rho.abs() < 1.0 - COUPLED_TOL => {
            // 2 ∫_z^∞ φ(y) Φ(y (1−ρ)/√(1−ρ²)) dy; the slope is √((1−ρ)/(1+ρ)).
            let slope = ((1.0 - rho) / (1.0 + rho)).sqrt();
            let hi = z.max(0.0) + q.upper_cut;
            2.0 * integrate(|y| dist::pdf(y) * dist::cdf(slope * y), z, hi, q.abs_tol)?
        }
        _ => {
            1.0 - rectangle(
                model,
                &vec![f64::NEG_INFINITY; model.m],
                &vec![z; model.m],
                q,
            )?
        }
    };
    let upper = (model.m as f64 * alpha).min(1.0);
    Ok(v.clamp(alpha, upper))
}

/// `Pr(lower ≤ T ≤ upper)` for the model's normal vector.
///
/// Coordinates coupled with correlation ±1 are merged into one coordinate
/// with the intersected interval before any numerical integration.
pub fn rectangle(
    model: &JointNullModel,
    lower: &[f64],
    upper: &[f64],
    q: &Quadrature,
) -> Result<f64> {
    let m = model.m;
    if lower.len() != m || upper.len() != m {
        return Err(Error::precondition(
            "bounds must have one entry per coordinate",
        ));
    }
    // Union coupled coordinates into their first representative.
    let mut rep: Vec<usize> = Vec::new();
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for i in 0..m {
        let found = rep
            .iter()
            .position(|&r| (model.corr(r, i).abs() - 1.0).abs() <= COUPLED_TOL);
        let (a, b) = match found.map(|k| model.corr(rep[k], i)) {
            Some(r) if r < 0.0 => (-upper[i], -lower[i]),
            _ => (lower[i], upper[i]),
        };
        match found {
            Some(k) => {
                lo[k] = lo[k].max(a);
                hi[k] = hi[k].min(b);
            }
            None => {
                rep.push(i);
                lo.push(a);
                hi.push(b);
            }
        }
    }
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Ok(0.0);
    }
    let sub = reduce(model, &rep);
    match rep.len() {
        1 => Ok(interval_prob(lo[0], hi[0])),
        2 => bivariate_rectangle(sub.corr(0, 1), [lo[0], lo[1]], [hi[0], hi[1]], q),
        _ => {
            let factor = sub.factor()?;
            if factor.rank == sub.m {
                Ok(genz_rectangle(&factor, &lo, &hi, &q.qmc).value)
            } else {
                Ok(indicator_rectangle(&factor, &lo, &hi, &q.qmc).value)
            }
        }
    }
}

fn reduce(model: &JointNullModel, keep: &[usize]) -> JointNullModel {
    let k = keep.len();
    let corr = (0..k * k)
        .map(|t| model.corr(keep[t / k], keep[t % k]))
        .collect();
    JointNullModel { m: k, corr }
}

/// `Φ(b) − Φ(a)`, computed on the tail that avoids cancellation.
fn interval_prob(a: f64, b: f64) -> f64 {
    if a >= b {
        0.0
    } else if a > 0.0 {
        dist::sf(a) - dist::sf(b)
    } else {
        dist::cdf(b) - dist::cdf(a)
    }
}

fn finite_range(a: f64, b: f64, cut: f64) -> (f64, f64) {
    let lo = if a.is_finite() { a } else { b.min(0.0) - cut };
    let hi = if b.is_finite() { b } else { a.max(0.0) + cut };
    (lo, hi)
}

fn bivariate_rectangle(rho: f64, lo: [f64; 2], hi: [f64; 2], q: &Quadrature) -> Result<f64> {
    let s = (1.0 - rho * rho).sqrt();
    let (a, b) = finite_range(lo[0], hi[0], q.upper_cut);
    let v = integrate(
        |y| dist::pdf(y) * interval_prob((lo[1] - rho * y) / s, (hi[1] - rho * y) / s),
        a,
        b,
        q.abs_tol,
    )?;
    Ok(v.clamp(0.0, 1.0))
}

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Generators `frac(√p)` of a Kronecker lattice in `dim` dimensions.
fn lattice_generators(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let p = PRIMES.get(j).copied().unwrap_or_else(|| 179 + 2 * j as u32) as f64;
            p.sqrt().fract()
        })
        .collect()
}

/// Run `f` on every point of each randomly shifted lattice and return the
/// per-shift means, in shift order.
fn rqmc_means<F>(dim: usize, cfg: &QmcConfig, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let gens = lattice_generators(dim);
    let shifts: Vec<Vec<f64>> = {
        let mut rng = RngSeed::new(cfg.seed).rng();
        (0..cfg.shifts)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    shifts
        .par_iter()
        .map(|shift| {
            let mut u = vec![0.0; dim];
            let mut acc = 0.0;
            for k in 1..=cfg.points_per_shift {
                for j in 0..dim {
                    u[j] = (k as f64 * gens[j] + shift[j]).fract();
                }
                acc += f(&u);
            }
            acc / cfg.points_per_shift as f64
        })
        .collect()
}

fn summarize(means: &[f64]) -> Estimate {
    let k = means.len() as f64;
    let value = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (k - 1.0);
    Estimate {
        value,
        std_error: (var / k).sqrt(),
    }
}

/// Draw from `N(0,1)` restricted to `[a, b]` by inversion at `w ∈ [0, 1)`.
fn truncated_inverse(a: f64, b: f64, w: f64) -> f64 {
    let x = if a > 0.0 {
        let (sa, sb) = (dist::sf(a), dist::sf(b));
        -dist::quantile(sb + (1.0 - w) * (sa - sb))
    } else {
        let (ca, cb) = (dist::cdf(a), dist::cdf(b));
        dist::quantile(ca + w * (cb - ca))
    };
    if x.is_finite() {
        x.clamp(a, b)
    } else if a.is_finite() {
        a
    } else {
        b
    }
}

/// Genz's separation-of-variables estimator for a full-rank factor.
fn genz_rectangle(f: &Factor, lo: &[f64], hi: &[f64], cfg: &QmcConfig) -> Estimate {
    let m = f.rows.len();
    let l = &f.rows;
    let means = rqmc_means(m - 1, cfg, |u| {
        let mut y = [0.0f64; 64];
        let mut y_vec;
        let y: &mut [f64] = if m <= 64 {
            &mut y[..m]
        } else {
            y_vec = vec![0.0; m];
            &mut y_vec
        };
        let mut prob = 1.0;
        for (k, &i) in f.order.iter().enumerate() {
            let shift: f64 = (0..k).map(|j| l[i][j] * y[j]).sum();
            let a = (lo[i] - shift) / l[i][k];
            let b = (hi[i] - shift) / l[i][k];
            let p = interval_prob(a, b);
            prob *= p;
            if prob <= 0.0 {
                return 0.0;
            }
            if k + 1 < m {
                y[k] = truncated_inverse(a, b, u[k]);
            }
        }
        prob
    });
    summarize(&means)
}

/// Plain randomized-QMC indicator estimator; works for any rank.
fn indicator_rectangle(f: &Factor, lo: &[f64], hi: &[f64], cfg: &QmcConfig) -> Estimate {
    let means = rqmc_means(f.rank, cfg, |u| {
        let z: Vec<f64> = u.iter().map(|&x| dist::quantile(x.max(1e-300))).collect();
        let inside = f.rows.iter().enumerate().all(|(i, row)| {
            let t: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
            t >= lo[i] && t <= hi[i]
        });
        if inside {
            1.0
        } else {
            0.0
        }
    });
    summarize(&means)
}

/// Randomized-QMC estimates of `Pr(exactly k coordinates satisfy T ≥ z)` for
/// `k = 0..=m`, using direct simulation of the normal vector.
///
/// This path shares nothing with the quadrature formulas beyond the normal
/// quantile function and is used to cross-check them.
pub fn exceedance_counts_qmc(
    model: &JointNullModel,
    z: f64,
    cfg: &QmcConfig,
) -> Result<Vec<Estimate>> {
    let f = model.factor()?;
    let m = model.m;
    let per_k: Vec<Vec<f64>> = (0..=m)
        .map(|k| {
            rqmc_means(f.rank, cfg, |u| {
                let zs: Vec<f64> = u.iter().map(|&x| dist::quantile(x.max(1e-300))).collect();
                let count = f
                    .rows
                    .iter()
                    .filter(|row| row.iter().zip(&zs).map(|(a, b)| a * b).sum::<f64>() >= z)
                    .count();
                if count == k {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(per_k.iter().map(|means| summarize(means)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn rho_value() {
        let r = rho_t_wilcoxon();
        assert_abs_diff_eq!(r, 0.977_205_02, epsilon = 1e-8);
        assert_abs_diff_eq!(r * r, 0.954_929_66, epsilon = 1e-8);
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn model_validation() {
        assert!(JointNullModel::bivariate(1.2).is_err());
        assert!(JointNullModel::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(JointNullModel::new(2, vec![0.9, 0.5, 0.5, 1.0]).is_err());
        assert!(JointNullModel::new(2, vec![1.0, 0.5]).is_err());
        // Pairwise valid but jointly indefinite.
        assert!(JointNullModel::equicorrelated(3, -0.6).is_err());
        assert!(JointNullModel::equicorrelated(3, -0.5).is_ok());
        assert!(JointNullModel::equicorrelated(4, 1.0).is_ok());
        let parsed = JointNullModel::parse("# corr\n1, 0.3\n0.3 1\n").unwrap();
        assert_eq!(parsed, JointNullModel::bivariate(0.3).unwrap());
        assert!(JointNullModel::parse("1 0.3\n0.3\n").is_err());
    }

    #[test]
    fn pivoted_factor_reproduces_matrix() {
        let m = JointNullModel::from_rows(&[
            vec![1.0, 0.5, 0.2],
            vec![0.5, 1.0, 0.3],
            vec![0.2, 0.3, 1.0],
        ])
        .unwrap();
        let f = m.factor().unwrap();
        assert_eq!(f.rank, 3);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = f.rows[i].iter().zip(&f.rows[j]).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(v, m.corr(i, j), epsilon = 1e-14);
            }
        }
        for (k, &i) in f.order.iter().enumerate() {
            assert!(f.rows[i][k] > 0.0);
            assert!(f.rows[i][k + 1..].iter().all(|v| *v == 0.0));
        }
        assert_ne!(f.order, vec![0, 1, 2]);
        assert_eq!(
            JointNullModel::equicorrelated(3, 1.0)
                .unwrap()
                .factor()
                .unwrap()
                .rank,
            1
        );
    }

    #[test]
    fn prob_max_examples() {
        let v = prob_max_p_leq(&JointNullModel::t_wilcoxon(), 0.0601, &q()).unwrap();
        // 0.0499671940744268 from 40-digit quadrature.
        assert_abs_diff_eq!(v, 0.049_967_194_074_426_8, epsilon = 1e-11);
        assert!((v - 0.05).abs() <= 2e-4);
        let ind = JointNullModel::bivariate(0.0).unwrap();
        let one = JointNullModel::bivariate(1.0).unwrap();
        for g in [0.01, 0.05, 0.3, 0.77] {
            assert_abs_diff_eq!(
                prob_max_p_leq(&ind, g, &q()).unwrap(),
                g * g,
                epsilon = 1e-11
            );
            assert_eq!(prob_max_p_leq(&one, g, &q()).unwrap(), g);
        }
        let anti = JointNullModel::bivariate(-1.0).unwrap();
        assert_eq!(prob_max_p_leq(&anti, 0.3, &q()).unwrap(), 0.0);
        assert_abs_diff_eq!(
            prob_max_p_leq(&anti, 0.8, &q()).unwrap(),
            0.6,
            epsilon = 1e-14
        );
        assert!(prob_max_p_leq(&ind, 0.0, &q()).is_err());
        assert!(prob_max_p_leq(&ind, 1.0, &q()).is_err());
    }

    #[test]
    fn prob_max_reference_values() {
        let tw = JointNullModel::t_wilcoxon();
        let r03 = JointNullModel::bivariate(0.3).unwrap();
        let cases = [
            (&tw, 0.01, 0.007_748_761_295_785_996),
            (&tw, 0.05, 0.041_243_396_491_812_35),
            (&tw, 0.1, 0.085_069_256_116_665_37),
            (&r03, 0.01, 0.000_556_328_488_863_127_6),
            (&r03, 0.05, 0.007_134_628_807_841_093),
            (&r03, 0.1, 0.021_616_480_355_787_525),
        ];
        for (model, g, expected) in cases {
            assert_abs_diff_eq!(
                prob_max_p_leq(model, g, &q()).unwrap(),
                expected,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn size_examples() {
        let s = max_asymptotic_size(&JointNullModel::t_wilcoxon(), 0.05, &q()).unwrap();
        assert_abs_diff_eq!(s, 0.058_756_603_508_187_65, epsilon = 1e-11);
        let s0 = max_asymptotic_size(&JointNullModel::bivariate(0.0).unwrap(), 0.05, &q()).unwrap();
        assert_abs_diff_eq!(s0, 0.0975, epsilon = 1e-11);
        for a in [0.01, 0.05, 0.2] {
            let s1 =
                max_asymptotic_size(&JointNullModel::bivariate(1.0).unwrap(), a, &q()).unwrap();
            assert_abs_diff_eq!(s1, a, epsilon = 1e-14);
        }
        let anti =
            max_asymptotic_size(&JointNullModel::bivariate(-1.0).unwrap(), 0.05, &q()).unwrap();
        assert_abs_diff_eq!(anti, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn identity_and_coupled_in_higher_dimensions() {
        let ind3 = JointNullModel::equicorrelated(3, 0.0).unwrap();
        let g: f64 = 0.2;
        let v = prob_max_p_leq(&ind3, g, &q()).unwrap();
        assert_abs_diff_eq!(v, g.powi(3), epsilon = 1e-6);
        let s = max_asymptotic_size(&ind3, 0.05, &q()).unwrap();
        assert_abs_diff_eq!(s, 1.0 - 0.95f64.powi(3), epsilon = 1e-6);
        let coupled = JointNullModel::equicorrelated(4, 1.0).unwrap();
        assert_abs_diff_eq!(
            prob_max_p_leq(&coupled, 0.07, &q()).unwrap(),
            0.07,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            max_asymptotic_size(&coupled, 0.07, &q()).unwrap(),
            0.07,
            epsilon = 1e-14
        );
        // Two coupled pairs with cross-correlation 0.4 reduce to a bivariate problem.
        let blocks = JointNullModel::from_rows(&[
            vec![1.0, 1.0, 0.4, 0.4],
            vec![1.0, 1.0, 0.4, 0.4],
            vec![0.4, 0.4, 1.0, 1.0],
            vec![0.4, 0.4, 1.0, 1.0],
        ])
        .unwrap();
        let pair = JointNullModel::bivariate(0.4).unwrap();
        assert_abs_diff_eq!(
            prob_max_p_leq(&blocks, 0.1, &q()).unwrap(),
            prob_max_p_leq(&pair, 0.1, &q()).unwrap(),
            epsilon = 1e-11
        );
    }

    #[test]
    fn equicorrelated_three_matches_one_dimensional_integral() {
        // Equicorrelated normals: T_i = √ρ W + √(1−ρ) E_i, so the orthant
        // probability is ∫ φ(w) [1 − Φ((z − √ρ w)/√(1−ρ))]^3 dw.
        let rho: f64 = 0.6;
        let g = 0.1;
        let z = dist::quantile(1.0 - g);
        let oracle = integrate(
            |w| dist::pdf(w) * dist::sf((z - rho.sqrt() * w) / (1.0 - rho).sqrt()).powi(3),
            -12.0,
            12.0,
            1e-13,
        )
        .unwrap();
        let model = JointNullModel::equicorrelated(3, rho).unwrap();
        let v = prob_max_p_leq(&model, g, &q()).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-5);
    }

    #[test]
    fn rank_deficient_uses_indicator_path() {
        // T3 = (T1 + T2)/√2 with T1, T2 independent.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let model =
            JointNullModel::from_rows(&[vec![1.0, 0.0, r], vec![0.0, 1.0, r], vec![r, r, 1.0]])
                .unwrap();
        assert_eq!(model.factor().unwrap().rank, 2);
        let g = 0.2;
        let z = dist::quantile(1.0 - g);
        // T1, T2 ≥ z > 0 implies T3 ≥ √2 z ≥ z, so the answer is g².
        let v = prob_max_p_leq(&model, g, &q()).unwrap();
        assert_abs_diff_eq!(v, g * g, epsilon = 2e-3);
        assert!(z > 0.0);
    }

    #[test]
    fn quadrature_settings_are_validated() {
        assert!(Quadrature::new(5.0, 1e-10).is_err());
        assert!(Quadrature::new(9.0, 0.0).is_err());
        assert!(Quadrature::new(12.0, 1e-12).is_ok());
    }
}
