//! The g-value: the largest (or a chosen quantile of the) strategies'
//! p-values, rescaled by `α / α*` so that rejecting when it is at most `α`
//! has asymptotic size `α`.

use serde::Serialize;

use crate::correction::CorrectionResult;
use crate::error::{Error, Result};
use crate::hypothesis::AnalysisOutcome;

pub const REJECT: &str = "reject H0";
pub const DO_NOT_REJECT: &str = "do not reject H0";

/// How the per-strategy p-values are combined before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "level", rename_all = "lowercase")]
pub enum Aggregation {
    Max,
    /// Upper empirical order statistic at level `γ ∈ (0, 1]`.
    Quantile(f64),
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregation::Max => write!(f, "max"),
            Aggregation::Quantile(g) => write!(f, "quantile:{g}"),
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    /// `max` or `quantile:<γ>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "max" {
            return Ok(Aggregation::Max);
        }
        let level = s.strip_prefix("quantile:").ok_or_else(|| {
            Error::domain(format!(
                "aggregation must be `max` or `quantile:<level>`, got `{s}`"
            ))
        })?;
        let g: f64 = level
            .parse()
            .map_err(|_| Error::domain(format!("bad quantile level `{level}`")))?;
        check_quantile_level(g)?;
        Ok(Aggregation::Quantile(g))
    }
}

fn check_quantile_level(g: f64) -> Result<()> {
    if g > 0.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile level {g} not in (0, 1]")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GValueReport {
    pub outcomes: Vec<AnalysisOutcome>,
    pub aggregation: Aggregation,
    pub aggregate_p: f64,
    pub alpha: f64,
    pub alpha_star: f64,
    pub adjustment: f64,
    /// Not truncated at 1.
    pub g_value: f64,
    pub reject: bool,
}

impl GValueReport {
    pub fn decision(&self) -> &'static str {
        if self.reject {
            REJECT
        } else {
            DO_NOT_REJECT
        }
    }

    /// Whether the (untruncated) g-value exceeds 1.
    pub fn exceeds_one(&self) -> bool {
        self.g_value > 1.0
    }

    /// Flat `key, value` pairs; numbers at full precision.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("aggregation".to_string(), self.aggregation.to_string()),
            ("alpha".to_string(), self.alpha.to_string()),
            ("alpha_star".to_string(), self.alpha_star.to_string()),
            ("adjustment".to_string(), self.adjustment.to_string()),
            ("aggregate_p".to_string(), self.aggregate_p.to_string()),
            ("g_value".to_string(), self.g_value.to_string()),
            (
                "g_value_exceeds_one".to_string(),
                self.exceeds_one().to_string(),
            ),
            ("decision".to_string(), self.decision().to_string()),
        ];
        for o in &self.outcomes {
            kv.push((format!("p_value.{}", o.strategy_id), o.p_value.to_string()));
            kv.push((
                format!("statistic.{}", o.strategy_id),
                o.statistic.to_string(),
            ));
        }
        kv
    }
}

/// `G = (α/α*) · max_A P(A)`.
pub fn g_value(
    outcomes: &[AnalysisOutcome],
    correction: &CorrectionResult,
) -> Result<GValueReport> {
    build(outcomes, Aggregation::Max, correction)
}

/// `G(γ) = (α/α*) · Quantile{γ; P(A)}`; `γ = 1` is identical to [`g_value`].
pub fn g_value_quantile(
    outcomes: &[AnalysisOutcome],
    gamma: f64,
    correction: &CorrectionResult,
) -> Result<GValueReport> {
    check_quantile_level(gamma)?;
    let agg = if gamma == 1.0 {
        Aggregation::Max
    } else {
        Aggregation::Quantile(gamma)
    };
    build(outcomes, agg, correction)
}

pub fn aggregate(
    outcomes: &[AnalysisOutcome],
    aggregation: Aggregation,
    correction: &CorrectionResult,
) -> Result<GValueReport> {
    match aggregation {
        Aggregation::Max => g_value(outcomes, correction),
        Aggregation::Quantile(g) => g_value_quantile(outcomes, g, correction),
    }
}

/// Order statistic `⌈γ m⌉` (1-based) of the ascending p-values.
pub fn upper_quantile(p_values: &[f64], gamma: f64) -> f64 {
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let x = gamma * m as f64;
    // Snap products that are integers up to rounding, e.g. 0.7 × 10.
    let k = if (x - x.round()).abs() <= 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    let k = (k as usize).clamp(1, m);
    sorted[k - 1]
}

fn build(
    outcomes: &[AnalysisOutcome],
    aggregation: Aggregation,
    correction: &CorrectionResult,
) -> Result<GValueReport> {
    if outcomes.is_empty() {
        return Err(Error::domain("no outcomes to aggregate"));
    }
    let alpha = correction.alpha;
    let alpha_star = correction.alpha_star;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidCorrection(format!(
            "alpha = {alpha} not in (0, 1)"
        )));
    }
    // Below the maximum the aggregate can be stochastically smaller than a
    // single p-value, so its alpha* may fall below alpha.
    let lower = match aggregation {
        Aggregation::Max => alpha,
        Aggregation::Quantile(_) => f64::MIN_POSITIVE,
    };
    if !(alpha_star >= lower && alpha_star <= 1.0) {
        return Err(Error::InvalidCorrection(format!(
            "alpha_star = {alpha_star} is not in [{lower}, 1] with alpha = {alpha}"
        )));
    }
    if let Some(bad) = outcomes.iter().find(|o| !(0.0..=1.0).contains(&o.p_value)) {
        return Err(Error::domain(format!(
            "p-value {} of `{}` outside [0, 1]",
            bad.p_value, bad.strategy_id
        )));
    }
    let ps: Vec<f64> = outcomes.iter().map(|o| o.p_value).collect();
    let aggregate_p = match aggregation {
        Aggregation::Max => ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregation::Quantile(g) => upper_quantile(&ps, g),
    };
    let adjustment = alpha / alpha_star;
    let g_value = adjustment * aggregate_p;
    Ok(GValueReport {
        outcomes: outcomes.to_vec(),
        aggregation,
        aggregate_p,
        alpha,
        alpha_star,
        adjustment,
        g_value,
        reject: g_value <= alpha,
    })
}
