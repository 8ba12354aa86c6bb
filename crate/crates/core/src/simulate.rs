//! Monte Carlo study of the t-test, the Wilcoxon signed-rank test and three
//! ways of combining them (liberal = min p, conservative = max p, g-value =
//! corrected max p) on `X_i = μ + noise`.
//!
//! Replication `r` draws its noise vector from stream `seed.stream_id + r`
//! and reuses it for every `μ` on the grid. Counts are integers merged by
//! addition, so reports do not depend on the worker count.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::correction::{solve_alpha_star, DEFAULT_TOL};
use crate::dist::{NoiseSampler, RngSeed};
use crate::error::{Error, Result};
use crate::hypothesis::{signed_rank, t_test_statistic, WilcoxonMode};
use crate::joint_null::JointNullModel;
use crate::resample::with_workers;

pub const MIN_REPLICATIONS: usize = 1_000;
const MAX_REDRAWS_PER_REPLICATION: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    TTest,
    Wilcoxon,
    Liberal,
    Conservative,
    GValue,
}

impl Procedure {
    pub const ALL: [Procedure; 5] = [
        Procedure::TTest,
        Procedure::Wilcoxon,
        Procedure::Liberal,
        Procedure::Conservative,
        Procedure::GValue,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Procedure::TTest => "t_test",
            Procedure::Wilcoxon => "wilcoxon",
            Procedure::Liberal => "liberal",
            Procedure::Conservative => "conservative",
            Procedure::GValue => "g_value",
        }
    }
}

impl std::fmt::Display for Procedure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Procedure::ALL
            .into_iter()
            .find(|p| {
                p.id() == s
                    || (s == "t-test" && *p == Procedure::TTest)
                    || (s == "g-value" && *p == Procedure::GValue)
            })
            .ok_or_else(|| Error::domain(format!("unknown procedure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", content = "df", rename_all = "snake_case")]
pub enum Noise {
    StudentT(u32),
    Normal,
}

impl Noise {
    fn sampler(&self) -> Result<NoiseSampler> {
        match *self {
            Noise::StudentT(df) => NoiseSampler::student_t(df),
            Noise::Normal => Ok(NoiseSampler::Normal),
        }
    }
}

/// Rejection-set inclusions checked replication by replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nesting {
    /// A base test rejects but the liberal procedure does not.
    BaseOutsideLiberal,
    /// The conservative procedure rejects but a base test does not.
    ConservativeOutsideBase,
    /// The g-value rejects but the liberal procedure does not.
    GValueOutsideLiberal,
    /// The conservative procedure rejects but the g-value does not.
    ConservativeOutsideGValue,
}

impl Nesting {
    pub const ALL: [Nesting; 4] = [
        Nesting::BaseOutsideLiberal,
        Nesting::ConservativeOutsideBase,
        Nesting::GValueOutsideLiberal,
        Nesting::ConservativeOutsideGValue,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub noise: Noise,
    pub mu_grid: Vec<f64>,
    pub replications: usize,
    pub alpha: f64,
    pub procedures: Vec<Procedure>,
    pub seed: RngSeed,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n: 20,
            noise: Noise::StudentT(15),
            mu_grid: default_mu_grid(),
            replications: 100_000,
            alpha: 0.05,
            procedures: Procedure::ALL.to_vec(),
            seed: RngSeed::new(20_240_601),
            workers: None,
        }
    }
}

/// 21 equispaced points on `[0, 1]`.
pub fn default_mu_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::precondition(format!(
                "need at least {MIN_REPLICATIONS} replications, got {}",
                self.replications
            )));
        }
        if self.n < 2 {
            return Err(Error::precondition("sample size must be at least 2"));
        }
        if self.mu_grid.is_empty() {
            return Err(Error::precondition("mu grid is empty"));
        }
        if let Some(mu) = self.mu_grid.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::precondition(format!(
                "mu values must be finite and >= 0, got {mu}"
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha = {} not in (0, 1)",
                self.alpha
            )));
        }
        if self.procedures.is_empty() {
            return Err(Error::precondition("no procedures selected"));
        }
        let mut sorted = self.procedures.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.procedures.len() {
            return Err(Error::precondition("duplicate procedure"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub procedure: Procedure,
    pub mu: f64,
    pub rejections: u64,
    pub replications: u64,
    pub rate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingRow {
    pub mu: f64,
    pub relation: Nesting,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub alpha_star: f64,
    pub adjustment: f64,
    /// One row per (procedure, μ), procedures in configured order.
    pub rows: Vec<RateRow>,
    pub nesting: Vec<NestingRow>,
    /// Noise vectors redrawn because a statistic was undefined.
    pub redraws: u64,
    pub elapsed_secs: f64,
    pub version: &'static str,
}

/// `√(r (1 − r) / R)`.
pub fn mc_std_error(rate: f64, replications: u64) -> f64 {
    (rate * (1.0 - rate) / replications as f64).sqrt()
}

#[derive(Clone)]
struct Tally {
    /// `[mu][procedure in Procedure::ALL order]`
    rejections: Vec<[u64; 5]>,
    /// `[mu][Nesting::ALL order]`
    violations: Vec<[u64; 4]>,
    redraws: u64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Tally {
            rejections: vec![[0; 5]; k],
            violations: vec![[0; 4]; k],
            redraws: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.rejections.iter_mut().zip(&other.rejections) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.violations.iter_mut().zip(&other.violations) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.redraws += other.redraws;
        self
    }
}

/// Per-replication decisions, exposed for the replication-level checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decisions {
    pub p_t: f64,
    pub p_w: f64,
    pub t_test: bool,
    pub wilcoxon: bool,
    pub liberal: bool,
    pub conservative: bool,
    pub g_value: bool,
}

impl Decisions {
    pub fn new(p_t: f64, p_w: f64, alpha: f64, adjustment: f64) -> Self {
        let lo = p_t.min(p_w);
        let hi = p_t.max(p_w);
        Decisions {
            p_t,
            p_w,
            t_test: p_t <= alpha,
            wilcoxon: p_w <= alpha,
            liberal: lo <= alpha,
            conservative: hi <= alpha,
            g_value: adjustment * hi <= alpha,
        }
    }

    fn by_procedure(&self) -> [bool; 5] {
        [
            self.t_test,
            self.wilcoxon,
            self.liberal,
            self.conservative,
            self.g_value,
        ]
    }

    pub fn violates(&self, relation: Nesting) -> bool {
        match relation {
            Nesting::BaseOutsideLiberal => (self.t_test || self.wilcoxon) && !self.liberal,
            Nesting::ConservativeOutsideBase => {
                self.conservative && !(self.t_test && self.wilcoxon)
            }
            Nesting::GValueOutsideLiberal => self.g_value && !self.liberal,
            Nesting::ConservativeOutsideGValue => self.conservative && !self.g_value,
        }
    }
}

/// Evaluate both base tests on every shifted copy of one noise vector.
/// Returns `None` when a statistic is undefined for some `μ`.
fn replicate(
    noise: &[f64],
    mu_grid: &[f64],
    alpha: f64,
    adjustment: f64,
) -> Option<Vec<Decisions>> {
    let mut xs = vec![0.0; noise.len()];
    mu_grid
        .iter()
        .map(|&mu| {
            xs.iter_mut().zip(noise).for_each(|(x, e)| *x = mu + e);
            let (_, p_t) = t_test_statistic(&xs).ok()?;
            let (_, p_w) = signed_rank(&xs, WilcoxonMode::Auto);
            Some(Decisions::new(p_t, p_w, alpha, adjustment))
        })
        .collect()
}

/// Per-replication decisions for replication `r`, as used by [`run_simulation`].
pub fn replication_decisions(
    cfg: &SimulationConfig,
    adjustment: f64,
    r: u64,
) -> Result<(Vec<Decisions>, u64)> {
    let sampler = cfg.noise.sampler()?;
    let mut rng = cfg
        .seed
        .with_stream(cfg.seed.stream_id.wrapping_add(r))
        .rng();
    for redraw in 0..MAX_REDRAWS_PER_REPLICATION {
        let noise = sampler.fill(&mut rng, cfg.n);
        if let Some(d) = replicate(&noise, &cfg.mu_grid, cfg.alpha, adjustment) {
            return Ok((d, redraw as u64));
        }
    }
    Err(Error::DegenerateData(format!(
        "replication {r}: {MAX_REDRAWS_PER_REPLICATION} degenerate noise draws"
    )))
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    cfg.noise.sampler()?;
    let started = Instant::now();
    let correction = solve_alpha_star(&JointNullModel::t_wilcoxon(), cfg.alpha, DEFAULT_TOL)?;
    let adjustment = correction.adjustment;
    let k = cfg.mu_grid.len();

    let tally = with_workers(cfg.workers, || {
        (0..cfg.replications as u64)
            .into_par_iter()
            .try_fold(
                || Tally::new(k),
                |mut acc, r| -> Result<Tally> {
                    let (decisions, redraws) = replication_decisions(cfg, adjustment, r)?;
                    acc.redraws += redraws;
                    for (i, d) in decisions.iter().enumerate() {
                        for (slot, hit) in acc.rejections[i].iter_mut().zip(d.by_procedure()) {
                            *slot += hit as u64;
                        }
                        for (slot, rel) in acc.violations[i].iter_mut().zip(Nesting::ALL) {
                            *slot += d.violates(rel) as u64;
                        }
                    }
                    Ok(acc)
                },
            )
            .try_reduce(|| Tally::new(k), |a, b| Ok(a.merge(b)))
    })??;

    let total = cfg.replications as u64;
    let mut rows = Vec::with_capacity(cfg.procedures.len() * k);
    for proc in &cfg.procedures {
        let col = Procedure::ALL
            .iter()
            .position(|p| p == proc)
            .expect("known procedure");
        for (i, &mu) in cfg.mu_grid.iter().enumerate() {
            let rejections = tally.rejections[i][col];
            let rate = rejections as f64 / total as f64;
            rows.push(RateRow {
                procedure: *proc,
                mu,
                rejections,
                replications: total,
                rate,
                std_error: mc_std_error(rate, total),
            });
        }
    }
    let nesting = cfg
        .mu_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &mu)| {
            let v = tally.violations[i];
            Nesting::ALL
                .into_iter()
                .zip(v)
                .map(move |(relation, violations)| NestingRow {
                    mu,
                    relation,
                    violations,
                })
        })
        .collect();

    Ok(SimulationReport {
        config: cfg.clone(),
        alpha_star: correction.alpha_star,
        adjustment,
        rows,
        nesting,
        redraws: tally.redraws,
        elapsed_secs: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    })
}

impl SimulationReport {
    pub fn rate(&self, procedure: Procedure, mu: f64) -> Option<&RateRow> {
        self.rows
            .iter()
            .find(|r| r.procedure == procedure && r.mu == mu)
    }

    pub fn violations(&self, relation: Nesting) -> u64 {
        self.nesting
            .iter()
            .filter(|r| r.relation == relation)
            .map(|r| r.violations)
            .sum()
    }

    /// Delimited report: `procedure,mu,rejections,replications,rate,std_error`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Data(format!("write failed: {e}"));
        wtr.write_record([
            "procedure",
            "mu",
            "rejections",
            "replications",
            "rate",
            "std_error",
        ])
        .map_err(io)?;
        for r in &self.rows {
            wtr.write_record([
                r.procedure.id().to_string(),
                r.mu.to_string(),
                r.rejections.to_string(),
                r.replications.to_string(),
                r.rate.to_string(),
                r.std_error.to_string(),
            ])
            .map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::Data(format!("write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativePower {
    pub procedure: Procedure,
    pub mu: f64,
    /// `(rate − baseline) / baseline`; `None` when the baseline rate is 0.
    pub relative: Option<f64>,
}

/// Relative rejection-rate difference against `baseline` for every `μ > 0`.
pub fn relative_power(
    report: &SimulationReport,
    baseline: Procedure,
) -> Result<Vec<RelativePower>> {
    if !report.config.procedures.contains(&baseline) {
        return Err(Error::precondition(format!(
            "baseline `{baseline}` not in report"
        )));
    }
    let mut out = Vec::new();
    for row in report.rows.iter().filter(|r| r.mu > 0.0) {
        let base = report.rate(baseline, row.mu).expect("baseline row").rate;
        out.push(RelativePower {
            procedure: row.procedure,
            mu: row.mu,
            relative: (base > 0.0).then(|| (row.rate - base) / base),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pilot(mu_grid: Vec<f64>, seed: u64) -> SimulationConfig {
        SimulationConfig {
            mu_grid,
            replications: 4_000,
            seed: RngSeed::new(seed),
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn validation() {
        let mut cfg = pilot(vec![0.0], 1);
        cfg.replications = 0;
        assert!(matches!(run_simulation(&cfg), Err(Error::Precondition(_))));
        let mut cfg = pilot(vec![], 1);
        assert!(run_simulation(&cfg).is_err());
        cfg.mu_grid = vec![-0.1];
        assert!(run_simulation(&cfg).is_err());
        let mut cfg = pilot(vec![0.0], 1);
        cfg.procedures = vec![Procedure::Liberal, Procedure::Liberal];
        assert!(run_simulation(&cfg).is_err());
        assert_eq!(default_mu_grid().len(), 21);
        assert_eq!(*default_mu_grid().last().unwrap(), 1.0);
    }

    #[test]
    fn reproducible_across_workers() {
        let cfg = pilot(vec![0.0, 0.3], 8);
        let a = run_simulation(&SimulationConfig {
            workers: Some(1),
            ..cfg.clone()
        })
        .unwrap();
        let b = run_simulation(&SimulationConfig {
            workers: Some(3),
            ..cfg.clone()
        })
        .unwrap();
        let c = run_simulation(&cfg).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.to_csv_string(), c.to_csv_string());
        assert_eq!(a.nesting, b.nesting);
    }

    #[test]
    fn ordering_and_nesting() {
        let report = run_simulation(&pilot(vec![0.0, 0.25, 0.5], 3)).unwrap();
        for &mu in &[0.0, 0.25, 0.5] {
            let rate = |p| report.rate(p, mu).unwrap().rate;
            assert!(rate(Procedure::Liberal) >= rate(Procedure::TTest));
            assert!(rate(Procedure::Liberal) >= rate(Procedure::Wilcoxon));
            assert!(rate(Procedure::TTest) >= rate(Procedure::Conservative));
            assert!(rate(Procedure::GValue) >= rate(Procedure::Conservative));
        }
        assert_eq!(report.violations(Nesting::BaseOutsideLiberal), 0);
        assert_eq!(report.violations(Nesting::ConservativeOutsideBase), 0);
        assert_eq!(report.violations(Nesting::ConservativeOutsideGValue), 0);
        assert_eq!(report.redraws, 0);
    }

    #[test]
    fn gvalue_can_reject_when_liberal_does_not() {
        // Both p-values just above α but below α*.
        let d = Decisions::new(0.055, 0.058, 0.05, 0.05 / 0.060_137_816_568_463_27);
        assert!(d.g_value && !d.liberal);
        assert!(d.violates(Nesting::GValueOutsideLiberal));
    }

    #[test]
    fn rates_monotone_in_mu() {
        let report = run_simulation(&pilot(vec![0.0, 0.1, 0.2, 0.4, 0.7, 1.0], 5)).unwrap();
        for p in Procedure::ALL {
            let rates: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.procedure == p)
                .map(|r| r.rate)
                .collect();
            // Shared noise across μ and location-monotone tests make this exact.
            assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{p}: {rates:?}");
        }
        for p in Procedure::ALL {
            assert!(report.rate(p, 1.0).unwrap().rate >= 0.98);
        }
    }

    #[test]
    fn std_error_formula() {
        assert!((mc_std_error(0.05, 100_000) - 0.000_689_2).abs() < 1e-7);
        assert_eq!(mc_std_error(0.0, 1000), 0.0);
    }

    #[test]
    fn relative_power_table() {
        let report = run_simulation(&pilot(vec![0.0, 0.25], 12)).unwrap();
        let rel = relative_power(&report, Procedure::TTest).unwrap();
        assert!(rel.iter().all(|r| r.mu > 0.0));
        assert_eq!(rel.len(), Procedure::ALL.len());
        for r in &rel {
            let v = r.relative.unwrap();
            match r.procedure {
                Procedure::TTest => assert_eq!(v, 0.0),
                Procedure::Liberal => assert!(v >= 0.0),
                Procedure::Conservative => assert!(v <= 0.0),
                _ => {}
            }
        }
        let mut only = pilot(vec![0.0, 0.25], 12);
        only.procedures = vec![Procedure::Liberal];
        let r = run_simulation(&only).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(relative_power(&r, Procedure::TTest).is_err());
    }

    #[test]
    fn undefined_baseline_is_marked() {
        let mut report = run_simulation(&pilot(vec![0.0, 0.25], 2)).unwrap();
        for r in report
            .rows
            .iter_mut()
            .filter(|r| r.procedure == Procedure::TTest)
        {
            r.rate = 0.0;
        }
        let rel = relative_power(&report, Procedure::TTest).unwrap();
        assert!(rel.iter().all(|r| r.relative.is_none()));
    }

    #[test]
    fn csv_layout() {
        let mut cfg = pilot(vec![0.0], 4);
        cfg.procedures = vec![Procedure::Liberal, Procedure::GValue];
        let text = run_simulation(&cfg).unwrap().to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "procedure,mu,rejections,replications,rate,std_error"
        );
        assert!(lines[1].starts_with("liberal,0,"));
        assert!(lines[2].starts_with("g_value,0,"));
        assert_eq!(lines.len(), 3);
    }
}
