//! Empirical null law of the strategies' p-values by nonparametric bootstrap
//! followed by permutation, for when the joint limit is not available in
//! closed form.
//!
//! Each replication draws `n` units with replacement and then imposes the
//! null within the drawn units: by permuting the variable of interest, or
//! for one-sample location data by flipping the sign of each draw
//! independently. Row `b` uses random stream `seed.stream_id + b`, so the
//! result does not depend on the number of worker threads.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correction::CorrectionResult;
use crate::data::Dataset;
use crate::dist::RngSeed;
use crate::error::{Error, Result};
use crate::gvalue::{upper_quantile, Aggregation};
use crate::hypothesis::AnalysisSet;

/// Draws allowed for a single row before the data are declared degenerate.
pub const MAX_ATTEMPTS_PER_ROW: usize = 20;
/// Largest tolerated fraction of retried rows.
pub const MAX_RETRY_FRACTION: f64 = 0.1;
/// Minimum `B · α` for [`empirical_alpha_star`].
pub const MIN_TAIL_COUNT: f64 = 20.0;

/// How the null is imposed on each bootstrap draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ResampleTarget {
    /// Independent random signs on the response (one-sample location).
    SignFlip,
    /// Permute the response across the drawn units.
    PermuteResponse,
    /// Permute one named covariate across the drawn units.
    PermuteCovariate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleConfig {
    pub replications: usize,
    pub seed: RngSeed,
    pub target: ResampleTarget,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl ResampleConfig {
    pub const DEFAULT_REPLICATIONS: usize = 10_000;

    pub fn new(seed: u64) -> Self {
        ResampleConfig {
            replications: Self::DEFAULT_REPLICATIONS,
            seed: RngSeed::new(seed),
            target: ResampleTarget::SignFlip,
            workers: None,
        }
    }

    pub fn replications(mut self, b: usize) -> Self {
        self.replications = b;
        self
    }

    pub fn target(mut self, target: ResampleTarget) -> Self {
        self.target = target;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

/// `B × m` matrix of p-values from null-resampled datasets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalNull {
    strategy_ids: Vec<String>,
    /// Row-major.
    p_matrix: Vec<f64>,
    /// Draws that had to be repeated because a strategy failed.
    retries: usize,
}

impl EmpiricalNull {
    pub fn new(strategy_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = strategy_ids.len();
        if m == 0 {
            return Err(Error::precondition("need at least one strategy column"));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Data(format!("every row must have {m} p-values")));
        }
        if rows.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data("p-values must lie in [0, 1]".into()));
        }
        Ok(EmpiricalNull {
            strategy_ids,
            p_matrix: rows.concat(),
            retries: 0,
        })
    }

    pub fn strategy_ids(&self) -> &[String] {
        &self.strategy_ids
    }

    pub fn m(&self) -> usize {
        self.strategy_ids.len()
    }

    pub fn replications(&self) -> usize {
        self.p_matrix.len() / self.m()
    }

    pub fn retries(&self) -> usize {
        self.retries
    }

    pub fn row(&self, b: usize) -> &[f64] {
        let m = self.m();
        &self.p_matrix[b * m..(b + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.p_matrix.chunks(self.m())
    }

    /// p-values of strategy `j` across replications.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Headered comma-separated text, one replication per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Data(format!("write failed: {e}"));
        wtr.write_record(&self.strategy_ids).map_err(io)?;
        for row in self.rows() {
            wtr.write_record(row.iter().map(|p| p.to_string()))
                .map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::Data(format!("write failed: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let ids: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Data(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .map(|rec| {
                let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
                rec.iter()
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|_| Error::Data(format!("bad p-value {f:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        EmpiricalNull::new(ids, rows)
    }
}

/// Run `f` on the configured worker pool.
pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::precondition("worker count must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Build the empirical null by bootstrap + permutation.
pub fn resample_null(
    data: &Dataset,
    set: &AnalysisSet,
    cfg: &ResampleConfig,
) -> Result<EmpiricalNull> {
    if set.is_empty() {
        return Err(Error::precondition("analysis set is empty"));
    }
    if cfg.replications == 0 {
        return Err(Error::precondition("need at least one replication"));
    }
    let covariate_idx = match &cfg.target {
        ResampleTarget::PermuteCovariate(name) => Some(
            data.covariates()
                .iter()
                .position(|c| &c.name == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        ),
        _ => None,
    };
    let first = data.response()[0];
    if data.response().iter().all(|&v| v == first) {
        return Err(Error::DegenerateData("response is constant".into()));
    }
    let n = data.n();
    let row = |b: usize| -> Result<(Vec<f64>, usize)> {
        let mut rng = cfg
            .seed
            .with_stream(cfg.seed.stream_id.wrapping_add(b as u64))
            .rng();
        let mut idx = vec![0usize; n];
        for attempt in 0..MAX_ATTEMPTS_PER_ROW {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            let mut draw = data.select_rows(&idx);
            match (&cfg.target, covariate_idx) {
                (ResampleTarget::SignFlip, _) => {
                    for v in draw.response_mut() {
                        if rng.random::<bool>() {
                            *v = -*v;
                        }
                    }
                }
                (ResampleTarget::PermuteResponse, _) => draw.response_mut().shuffle(&mut rng),
                (ResampleTarget::PermuteCovariate(_), Some(j)) => {
                    draw.covariate_mut(j).shuffle(&mut rng)
                }
                (ResampleTarget::PermuteCovariate(_), None) => {
                    unreachable!("covariate resolved above")
                }
            }
            if let Ok(outcomes) = set.evaluate(&draw) {
                return Ok((outcomes.into_iter().map(|o| o.p_value).collect(), attempt));
            }
        }
        Err(Error::DegenerateData(format!(
            "replication {b}: every strategy evaluation failed in {MAX_ATTEMPTS_PER_ROW} draws"
        )))
    };
    let rows: Vec<(Vec<f64>, usize)> = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(row)
            .collect::<Result<Vec<_>>>()
    })??;
    let retries: usize = rows.iter().map(|r| r.1).sum();
    if retries as f64 > MAX_RETRY_FRACTION * cfg.replications as f64 {
        return Err(Error::DegenerateData(format!(
            "{retries} retried draws in {} replications",
            cfg.replications
        )));
    }
    let ids = set.ids().into_iter().map(str::to_string).collect();
    let mut null = EmpiricalNull::new(ids, rows.into_iter().map(|r| r.0).collect())?;
    null.retries = retries;
    Ok(null)
}

/// Empirical `α*`: the level at which the empirical distribution of the
/// row-wise maximum p-value reaches `α`, interpolating linearly between
/// adjacent order statistics. The result is clipped to `[α, 1]`.
pub fn empirical_alpha_star(null: &EmpiricalNull, alpha: f64) -> Result<CorrectionResult> {
    empirical_alpha_star_for(null, alpha, Aggregation::Max)
}

/// [`empirical_alpha_star`] against the row-wise aggregate chosen by
/// `aggregation` (maximum or upper order statistic). For a quantile below
/// the maximum the result is only clipped to `(0, 1]`.
pub fn empirical_alpha_star_for(
    null: &EmpiricalNull,
    alpha: f64,
    aggregation: Aggregation,
) -> Result<CorrectionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")));
    }
    let b = null.replications();
    let target = alpha * b as f64;
    if target < MIN_TAIL_COUNT {
        return Err(Error::Resolution(format!(
            "B * alpha = {target} < {MIN_TAIL_COUNT}; use at least {} replications",
            (MIN_TAIL_COUNT / alpha).ceil()
        )));
    }
    let mut maxes: Vec<f64> = null
        .rows()
        .map(|r| match aggregation {
            Aggregation::Max => r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Quantile(g) => upper_quantile(r, g),
        })
        .collect();
    maxes.sort_by(f64::total_cmp);
    // Order statistic M_(k) sits at empirical CDF k/B.
    let k = target.floor() as usize;
    let frac = target - k as f64;
    let gamma = if frac == 0.0 || k >= b {
        maxes[k - 1]
    } else {
        maxes[k - 1] + frac * (maxes[k] - maxes[k - 1])
    };
    let alpha_star = match aggregation {
        Aggregation::Max => gamma.clamp(alpha, 1.0),
        Aggregation::Quantile(_) => gamma.min(1.0),
    };
    if alpha_star <= 0.0 {
        return Err(Error::Resolution(format!(
            "the {} smallest aggregated p-values are all 0",
            k.max(1)
        )));
    }
    let below = maxes.partition_point(|&m| m <= alpha_star);
    let residual = below as f64 / b as f64 - alpha;
    Ok(CorrectionResult::from_parts(alpha, alpha_star, residual, 0))
}
