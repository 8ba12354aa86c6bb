//! Normal and Student-t distributions plus reproducible random streams.
//!
//! The public functions validate their inputs and return [`Result`]; the
//! crate-internal `pdf`/`cdf`/`sf`/`quantile` helpers skip validation and are
//! used in inner loops where inputs are already known to be in range.

use libm::erfc;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Seed plus stream identifier for a reproducible random stream.
///
/// Streams with the same `seed` and different `stream_id` come from disjoint
/// ChaCha keystreams, so replication `r` of a study can use `stream_id = r`
/// regardless of which worker evaluates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream_id: 0 }
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream_id: u64) -> Self {
        RngSeed { stream_id, ..self }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

pub(crate) fn quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Two Newton steps on whichever tail is smaller keep the relative error
    // of the residual near machine precision in both tails.
    for _ in 0..2 {
        let resid = if p < 0.5 {
            cdf(x) - p
        } else {
            (1.0 - p) - sf(x)
        };
        let dens = pdf(x);
        if dens <= 0.0 || !resid.is_finite() {
            break;
        }
        x -= resid / dens;
    }
    x
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal_pdf: non-finite input {x}")));
    }
    Ok(pdf(x))
}

/// Standard normal distribution function. `±∞` map to `1`/`0`.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("normal_cdf: NaN input"));
    }
    Ok(cdf(x))
}

/// Inverse of [`normal_cdf`] on the open unit interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal_quantile: p = {p} not in (0, 1)"
        )));
    }
    Ok(quantile(p))
}

/// Upper tail of Student's t with `df` degrees of freedom, `Pr(T > x)`.
pub(crate) fn t_sf(x: f64, df: f64) -> f64 {
    let t2 = x * x;
    let a = 0.5 * df;
    let z = df / (df + t2);
    // Evaluate the continued fraction directly when it converges on this
    // side, so deep tails keep their relative accuracy.
    let tail = if z < (a + 1.0) / (a + 2.5) {
        0.5 * beta_reg(a, 0.5, z)
    } else {
        0.5 * (1.0 - beta_reg(0.5, a, t2 / (df + t2)))
    };
    if x >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student's t distribution function.
pub fn student_t_cdf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("student_t_cdf: df must be at least 1"));
    }
    if x.is_nan() {
        return Err(Error::domain("student_t_cdf: NaN input"));
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(t_sf(-x, df as f64))
}

/// Upper tail `1 - F(x)` of Student's t, computed without cancellation.
pub fn student_t_sf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("student_t_sf: df must be at least 1"));
    }
    if x.is_nan() {
        return Err(Error::domain("student_t_sf: NaN input"));
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    Ok(t_sf(x, df as f64))
}

/// Draw `n` i.i.d. Student-t variates from the stream identified by `seed`.
pub fn sample_student_t(df: u32, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    let mut rng = seed.rng();
    Ok(NoiseSampler::student_t(df)?.fill(&mut rng, n))
}

/// Noise family used by simulations.
#[derive(Debug, Clone, Copy)]
pub(crate) enum NoiseSampler {
    StudentT(StudentT<f64>),
    Normal,
}

impl NoiseSampler {
    pub(crate) fn student_t(df: u32) -> Result<Self> {
        if df == 0 {
            return Err(Error::domain(
                "Student-t degrees of freedom must be at least 1",
            ));
        }
        let dist = StudentT::new(df as f64)
            .map_err(|e| Error::domain(format!("Student-t with df = {df}: {e}")))?;
        Ok(NoiseSampler::StudentT(dist))
    }

    pub(crate) fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::StudentT(d) => d.sample(rng),
            NoiseSampler::Normal => StandardNormal.sample(rng),
        }
    }

    pub(crate) fn fill<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}
