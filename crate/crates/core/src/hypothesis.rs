//! Analysis strategies for the one-sided location problem `H0: μ = 0` vs
//! `H1: μ > 0`: the one-sample t-test, the Wilcoxon signed-rank test, and the
//! [`AnalysisStrategy`] abstraction consumed by resampling and simulation.

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::data::{Dataset, Sample};
use crate::dist;
use crate::error::{Error, Result};

pub const T_TEST_ID: &str = "t-test";
pub const WILCOXON_ID: &str = "wilcoxon";

/// Largest (zero-free) sample size for which `WilcoxonMode::Auto` uses the
/// exact null distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 50;

/// One strategy's statistic and one-sided p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisOutcome {
    pub strategy_id: String,
    pub statistic: f64,
    pub p_value: f64,
}

/// One complete analysis pipeline mapping data to an outcome.
///
/// Implementations must be deterministic.
pub trait AnalysisStrategy: Send + Sync {
    fn id(&self) -> &str;

    fn evaluate(&self, data: &Dataset) -> Result<AnalysisOutcome>;
}

/// One-sample t-test on the response, referenced to Student's t with `n - 1`
/// degrees of freedom.
#[derive(Debug, Clone, Copy, Default)]
pub struct TTest;

impl AnalysisStrategy for TTest {
    fn id(&self) -> &str {
        T_TEST_ID
    }

    fn evaluate(&self, data: &Dataset) -> Result<AnalysisOutcome> {
        t_test_statistic(data.response()).map(|(statistic, p_value)| AnalysisOutcome {
            strategy_id: T_TEST_ID.to_string(),
            statistic,
            p_value,
        })
    }
}

/// How the Wilcoxon signed-rank p-value is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMode {
    /// Exact distribution of the positive-rank sum under random signs.
    Exact,
    /// `1 - Φ(statistic)`.
    Asymptotic,
    /// Exact when at most [`WILCOXON_EXACT_MAX_N`] non-zero observations,
    /// asymptotic otherwise.
    #[default]
    Auto,
}

impl std::str::FromStr for WilcoxonMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(WilcoxonMode::Exact),
            "asymptotic" => Ok(WilcoxonMode::Asymptotic),
            "auto" => Ok(WilcoxonMode::Auto),
            other => Err(Error::domain(format!("unknown Wilcoxon mode `{other}`"))),
        }
    }
}

/// Wilcoxon signed-rank test on the response.
#[derive(Debug, Clone, Copy, Default)]
pub struct WilcoxonSignedRank {
    pub mode: WilcoxonMode,
}

impl AnalysisStrategy for WilcoxonSignedRank {
    fn id(&self) -> &str {
        WILCOXON_ID
    }

    fn evaluate(&self, data: &Dataset) -> Result<AnalysisOutcome> {
        let (statistic, p_value) = signed_rank(data.response(), self.mode);
        Ok(AnalysisOutcome {
            strategy_id: WILCOXON_ID.to_string(),
            statistic,
            p_value,
        })
    }
}

/// A strategy backed by a closure, for user-defined pipelines.
pub struct FnStrategy<F> {
    id: String,
    f: F,
}

impl<F> FnStrategy<F>
where
    F: Fn(&Dataset) -> Result<(f64, f64)> + Send + Sync,
{
    /// `f` returns `(statistic, one-sided p-value)`.
    pub fn new(id: impl Into<String>, f: F) -> Self {
        FnStrategy { id: id.into(), f }
    }
}

impl<F> AnalysisStrategy for FnStrategy<F>
where
    F: Fn(&Dataset) -> Result<(f64, f64)> + Send + Sync,
{
    fn id(&self) -> &str {
        &self.id
    }

    fn evaluate(&self, data: &Dataset) -> Result<AnalysisOutcome> {
        let (statistic, p_value) = (self.f)(data)?;
        if !(0.0..=1.0).contains(&p_value) {
            return Err(Error::domain(format!("p-value {p_value} outside [0, 1]")));
        }
        Ok(AnalysisOutcome {
            strategy_id: self.id.clone(),
            statistic,
            p_value,
        })
    }
}

/// An ordered set of strategies with distinct identifiers.
#[derive(Clone, Default)]
pub struct AnalysisSet {
    strategies: Vec<Arc<dyn AnalysisStrategy>>,
}

impl fmt::Debug for AnalysisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ids()).finish()
    }
}

impl AnalysisSet {
    pub fn new(strategies: Vec<Arc<dyn AnalysisStrategy>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &strategies {
            if !seen.insert(s.id().to_string()) {
                return Err(Error::precondition(format!(
                    "duplicate strategy id `{}`",
                    s.id()
                )));
            }
        }
        Ok(AnalysisSet { strategies })
    }

    /// Built-in strategies by identifier (`t-test`, `wilcoxon`).
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let strategies = ids
            .iter()
            .map(|id| -> Result<Arc<dyn AnalysisStrategy>> {
                match id.as_ref() {
                    T_TEST_ID => Ok(Arc::new(TTest)),
                    WILCOXON_ID => Ok(Arc::new(WilcoxonSignedRank::default())),
                    other => Err(Error::domain(format!(
                        "unknown strategy `{other}` (built-ins: {T_TEST_ID}, {WILCOXON_ID})"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        AnalysisSet::new(strategies)
    }

    /// The t-test and Wilcoxon pair.
    pub fn t_and_wilcoxon() -> Self {
        AnalysisSet::from_ids(&[T_TEST_ID, WILCOXON_ID]).expect("built-in ids are valid")
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.strategies.iter().map(|s| s.id()).collect()
    }

    pub fn strategies(&self) -> &[Arc<dyn AnalysisStrategy>] {
        &self.strategies
    }

    /// Evaluate every strategy on `data`, in order.
    pub fn evaluate(&self, data: &Dataset) -> Result<Vec<AnalysisOutcome>> {
        if self.strategies.is_empty() {
            return Err(Error::precondition("analysis set is empty"));
        }
        self.strategies
            .iter()
            .map(|s| {
                s.evaluate(data).map_err(|e| Error::Strategy {
                    id: s.id().to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// Evaluate every strategy of `set` on a one-sample problem.
pub fn evaluate_all(set: &AnalysisSet, sample: &Sample) -> Result<Vec<AnalysisOutcome>> {
    set.evaluate(&Dataset::from(sample.clone()))
}

/// One-sided one-sample t-test: `√n x̄ / σ̂` with the `n - 1` variance.
pub fn t_test_one_sided(sample: &Sample) -> Result<AnalysisOutcome> {
    let (statistic, p_value) = t_test_statistic(sample.values())?;
    Ok(AnalysisOutcome {
        strategy_id: T_TEST_ID.to_string(),
        statistic,
        p_value,
    })
}

pub(crate) fn t_test_statistic(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::precondition("t-test needs at least 2 observations"));
    }
    let first = xs[0];
    if xs.iter().all(|&v| v == first) {
        return Err(Error::DegenerateSample("all observations are equal".into()));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let ss = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let sd = (ss / (nf - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("zero sample variance".into()));
    }
    let statistic = nf.sqrt() * mean / sd;
    Ok((statistic, dist::t_sf(statistic, nf - 1.0)))
}

/// One-sided Wilcoxon signed-rank test, `√3 n^{-3/2} Σ R_i⁺ sign(X_i)`.
///
/// Zeros are dropped before ranking and ties among `|X_i|` get mid-ranks.
/// If every observation is zero the statistic is 0 and the p-value 1.
pub fn wilcoxon_signed_rank(sample: &Sample, mode: WilcoxonMode) -> AnalysisOutcome {
    let (statistic, p_value) = signed_rank(sample.values(), mode);
    AnalysisOutcome {
        strategy_id: WILCOXON_ID.to_string(),
        statistic,
        p_value,
    }
}

/// Doubled mid-ranks of `|x|` (so they are integers), the doubled
/// positive-rank sum, and whether any ties occurred.
pub(crate) struct SignedRanks {
    pub doubled_ranks: Vec<u32>,
    pub doubled_w_plus: u64,
    pub signed_doubled_sum: i64,
    pub ties: bool,
}

pub(crate) fn signed_ranks(xs: &[f64]) -> SignedRanks {
    let mut nz: Vec<f64> = xs.iter().copied().filter(|&v| v != 0.0).collect();
    nz.sort_unstable_by(|a, b| a.abs().total_cmp(&b.abs()));
    let n = nz.len();
    let mut doubled_ranks = vec![0u32; n];
    let mut ties = false;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        if j > i {
            ties = true;
        }
        // Positions i..=j (0-based) share the mid-rank ((i+1)+(j+1))/2.
        let d = (i + j + 2) as u32;
        doubled_ranks[i..=j].fill(d);
        i = j + 1;
    }
    let mut doubled_w_plus = 0u64;
    let mut signed_doubled_sum = 0i64;
    for (v, &r) in nz.iter().zip(&doubled_ranks) {
        if *v >= 0.0 {
            doubled_w_plus += r as u64;
            signed_doubled_sum += r as i64;
        } else {
            signed_doubled_sum -= r as i64;
        }
    }
    SignedRanks {
        doubled_ranks,
        doubled_w_plus,
        signed_doubled_sum,
        ties,
    }
}

pub(crate) fn signed_rank(xs: &[f64], mode: WilcoxonMode) -> (f64, f64) {
    let ranks = signed_ranks(xs);
    let n = ranks.doubled_ranks.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let statistic = 3f64.sqrt() * nf.powf(-1.5) * (ranks.signed_doubled_sum as f64 / 2.0);
    let exact = match mode {
        WilcoxonMode::Exact => true,
        WilcoxonMode::Asymptotic => false,
        WilcoxonMode::Auto => n <= WILCOXON_EXACT_MAX_N,
    };
    let p_value = if !exact {
        dist::sf(statistic)
    } else if !ranks.ties && n <= WILCOXON_EXACT_MAX_N {
        untied_tail(n)[(ranks.doubled_w_plus / 2) as usize]
    } else {
        SignRankNull::new(&ranks.doubled_ranks).tail(ranks.doubled_w_plus)
    };
    (statistic, p_value)
}

/// Null law of a weighted sign sum `Σ w_i 1{s_i = +1}` with independent fair
/// signs, tabulated by dynamic programming over the attainable sums.
///
/// Probabilities are accumulated as `(a + b) / 2`, which is exact in binary
/// floating point while `2^n` fits in the significand (`n ≤ 53`), so for those
/// sizes tail probabilities equal the sign-pattern counts divided by `2^n`.
#[derive(Debug, Clone)]
pub struct SignRankNull {
    /// `tail[w] = Pr(W ≥ w)`, with a trailing 0 at `total + 1`.
    tail: Vec<f64>,
}

impl SignRankNull {
    pub fn new(weights: &[u32]) -> Self {
        let total: usize = weights.iter().map(|&w| w as usize).sum();
        let mut mass = vec![0.0f64; total + 1];
        mass[0] = 1.0;
        let mut reach = 0usize;
        for &w in weights {
            let w = w as usize;
            reach += w;
            for s in (0..=reach).rev() {
                let with = if s >= w { mass[s - w] } else { 0.0 };
                mass[s] = 0.5 * (mass[s] + with);
            }
        }
        let mut tail = vec![0.0f64; total + 2];
        for s in (0..=total).rev() {
            tail[s] = tail[s + 1] + mass[s];
        }
        SignRankNull { tail }
    }

    /// Untied ranks `1..=n`.
    pub fn untied(n: usize) -> Self {
        let ranks: Vec<u32> = (1..=n as u32).collect();
        SignRankNull::new(&ranks)
    }

    /// `Pr(W ≥ w)`.
    pub fn tail(&self, w: u64) -> f64 {
        let w = w as usize;
        if w >= self.tail.len() {
            0.0
        } else {
            self.tail[w]
        }
    }

    pub fn max_sum(&self) -> u64 {
        (self.tail.len() - 2) as u64
    }
}

fn untied_tail(n: usize) -> &'static [f64] {
    static TABLES: [OnceLock<Vec<f64>>; WILCOXON_EXACT_MAX_N + 1] =
        [const { OnceLock::new() }; WILCOXON_EXACT_MAX_N + 1];
    TABLES[n].get_or_init(|| SignRankNull::untied(n).tail)
}
