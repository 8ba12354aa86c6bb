use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use gvalue_core::gvalue::aggregate;
use gvalue_core::hypothesis::{AnalysisOutcome, AnalysisSet, T_TEST_ID, WILCOXON_ID};
use gvalue_core::joint_null::{max_asymptotic_size, Quadrature};
use gvalue_core::resample::{
    empirical_alpha_star_for, resample_null, ResampleConfig, ResampleTarget,
};
use gvalue_core::simulate::{
    default_mu_grid, run_simulation, Nesting, Noise, Procedure, SimulationConfig,
};
use gvalue_core::{
    solve_alpha_star, Aggregation, AlphaStarSolver, CorrectionResult, Dataset, Error,
    JointNullModel, RngSeed,
};

use crate::manifest;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Solve for the corrected level α* and the adjustment α/α*.
    Correction(CorrectionArgs),
    /// Maximum asymptotic size of rejecting when any strategy rejects.
    Maxsize(MaxsizeArgs),
    /// Combine strategy p-values into a g-value and a decision.
    Gvalue(GvalueArgs),
    /// Monte Carlo comparison of the combination procedures.
    Simulate(SimulateArgs),
    /// Empirical α* from bootstrap + permutation resampling.
    Resample(ResampleArgs),
    /// Re-run a manifest entry and compare its outputs byte for byte.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Correction(_) => "correction",
            Command::Maxsize(_) => "maxsize",
            Command::Gvalue(_) => "gvalue",
            Command::Simulate(_) => "simulate",
            Command::Resample(_) => "resample",
            Command::Replay(_) => "replay",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Gvalue(a) if a.data.is_some() => Some(a.seed),
            Command::Simulate(a) => Some(a.seed),
            Command::Resample(a) => Some(a.seed),
            _ => None,
        }
    }

    fn outputs_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            Command::Gvalue(a) => a.out.iter_mut().collect(),
            Command::Simulate(a) => a.out.iter_mut().collect(),
            Command::Resample(a) => a.out.iter_mut().collect(),
            _ => Vec::new(),
        }
    }
}

/// Source of the joint null correlation.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrSource {
    /// Correlation between strategies: `tw` (t-test vs Wilcoxon, √(3/π)) or a number in [-1, 1].
    #[arg(long, allow_hyphen_values = true, conflicts_with = "corr_file")]
    pub rho: Option<String>,
    /// Number of strategies sharing the correlation given by --rho.
    #[arg(long)]
    pub m: Option<usize>,
    /// File holding the full correlation matrix, one row per line.
    #[arg(long)]
    pub corr_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrectionArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub corr: CorrSource,
    /// Residual tolerance of the root finder.
    #[arg(long, default_value_t = gvalue_core::correction::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MaxsizeArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub corr: CorrSource,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GvalueArgs {
    /// Precomputed one-sided p-values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "data"
    )]
    pub p: Option<Vec<f64>>,
    /// Headered comma-separated data file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Response column (optional when the file has one column).
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "t-test,wilcoxon")]
    pub strategies: Vec<String>,
    #[command(flatten)]
    pub corr: CorrSource,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `max` or `quantile:<level>`.
    #[arg(long, default_value = "max")]
    pub aggregation: String,
    /// Resamples for the quantile correction.
    #[arg(long, default_value_t = 10_000)]
    pub replications: usize,
    #[arg(long, env = "GVALUE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the report as `key,value` rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Degrees of freedom of the Student-t noise.
    #[arg(long, default_value_t = 15, conflicts_with = "normal")]
    pub df: u32,
    /// Standard normal noise instead of Student-t.
    #[arg(long)]
    pub normal: bool,
    /// Comma-separated μ values (default: 21 points on [0, 1]).
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Subset of t_test, wilcoxon, liberal, conservative, g_value.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "t_test,wilcoxon,liberal,conservative,g_value"
    )]
    pub procedures: Vec<String>,
    #[arg(long, env = "GVALUE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Rate table, `procedure,mu,rejections,replications,rate,std_error`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ResampleArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "t-test,wilcoxon")]
    pub strategies: Vec<String>,
    /// Null imposed on each draw: `sign-flip`, `permute-response` or `permute:<covariate>`.
    #[arg(long, default_value = "sign-flip")]
    pub target: String,
    #[arg(long, default_value_t = 10_000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, env = "GVALUE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Null p-value matrix, one column per strategy.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Zero-based line of the manifest (default: last non-replay entry).
    #[arg(long)]
    pub entry: Option<usize>,
    /// Directory for the regenerated output files.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub struct Output {
    pub stdout: String,
    pub outputs: Vec<PathBuf>,
    /// Messages for stderr, kept out of the comparable output.
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Precondition(_) | Error::MissingColumn(_) => 2,
        Error::DegenerateSample(_)
        | Error::DegenerateData(_)
        | Error::Resolution(_)
        | Error::Data(_)
        | Error::Model(_) => 3,
        Error::Strategy { source, .. } => exit_code(source),
        Error::Solver { .. } | Error::Numerical(_) | Error::InvalidCorrection(_) => 4,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

type CmdResult = Result<Output, Failure>;

pub fn run(command: &Command, manifest_path: &Path) -> CmdResult {
    match command {
        Command::Correction(a) => correction(a),
        Command::Maxsize(a) => maxsize(a),
        Command::Gvalue(a) => gvalue(a),
        Command::Simulate(a) => simulate(a),
        Command::Resample(a) => resample(a),
        Command::Replay(a) => replay(a, manifest_path),
    }
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn parse_rho(text: &str) -> Result<f64, Failure> {
    if text == "tw" {
        return Ok(gvalue_core::rho_t_wilcoxon());
    }
    text.parse::<f64>()
        .map_err(|_| Failure::usage(format!("--rho must be `tw` or a number, got `{text}`")))
}

impl CorrSource {
    /// The model, or `None` when no source was given.
    fn model(&self, m_hint: Option<usize>) -> Result<Option<JointNullModel>, Failure> {
        if let Some(path) = &self.corr_file {
            if self.m.is_some() {
                return Err(Failure::usage("--m applies to --rho only"));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
            let model = JointNullModel::parse(&text)?;
            if let Some(m) = m_hint {
                if model.m() != m {
                    return Err(Failure::usage(format!(
                        "correlation file is {0}x{0} but there are {m} strategies",
                        model.m()
                    )));
                }
            }
            return Ok(Some(model));
        }
        let Some(rho) = &self.rho else {
            return Ok(None);
        };
        let rho = parse_rho(rho)?;
        let m = match (self.m, m_hint) {
            (Some(m), Some(h)) if m != h => {
                return Err(Failure::usage(format!(
                    "--m {m} but there are {h} strategies"
                )));
            }
            (Some(m), _) | (None, Some(m)) => m,
            (None, None) => 2,
        };
        if m < 2 {
            return Err(Failure::usage(
                "need at least two strategies for a correlation",
            ));
        }
        Ok(Some(JointNullModel::equicorrelated(m, rho)?))
    }

    fn required_model(&self) -> Result<JointNullModel, Failure> {
        self.model(None)?
            .ok_or_else(|| Failure::usage("give --rho or --corr-file"))
    }
}

fn correction(a: &CorrectionArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    if !(a.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let model = a.corr.required_model()?;
    let c = AlphaStarSolver::new(&model).tol(a.tol).solve(a.alpha)?;
    let mut s = String::new();
    writeln!(s, "alpha       {:.4}", c.alpha).unwrap();
    writeln!(s, "alpha_star  {:.4}", c.alpha_star).unwrap();
    writeln!(s, "adjustment  {:.4}", c.adjustment).unwrap();
    writeln!(s, "residual    {:.1e}", c.residual).unwrap();
    writeln!(s, "iterations  {}", c.iterations).unwrap();
    Ok(Output {
        stdout: s,
        outputs: Vec::new(),
        notes: Vec::new(),
    })
}

fn maxsize(a: &MaxsizeArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let model = a.corr.required_model()?;
    let size = max_asymptotic_size(&model, a.alpha, &Quadrature::default())?;
    let mut s = String::new();
    writeln!(s, "alpha      {:.4}", a.alpha).unwrap();
    writeln!(s, "size       {:.4}", size).unwrap();
    writeln!(s, "inflation  {:+.0}%", 100.0 * (size / a.alpha - 1.0)).unwrap();
    Ok(Output {
        stdout: s,
        outputs: Vec::new(),
        notes: Vec::new(),
    })
}

fn load_dataset(path: &Path, column: Option<&str>) -> Result<Dataset, Failure> {
    if !path.exists() {
        return Err(Failure::usage(format!(
            "data file {} does not exist",
            path.display()
        )));
    }
    Ok(Dataset::from_csv_path(path, column)?)
}

fn is_t_and_wilcoxon(ids: &[String]) -> bool {
    let mut v: Vec<&str> = ids.iter().map(String::as_str).collect();
    v.sort_unstable();
    v == [T_TEST_ID, WILCOXON_ID]
}

fn gvalue(a: &GvalueArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let aggregation: Aggregation = a.aggregation.parse()?;
    let mut notes = Vec::new();

    let (outcomes, dataset, set) = match (&a.p, &a.data) {
        (Some(ps), None) => {
            if ps.is_empty() {
                return Err(Failure::usage("--p needs at least one p-value"));
            }
            if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Failure::usage(format!("p-value {bad} not in [0, 1]")));
            }
            let outcomes: Vec<AnalysisOutcome> = ps
                .iter()
                .enumerate()
                .map(|(i, &p)| AnalysisOutcome {
                    strategy_id: format!("p{}", i + 1),
                    statistic: f64::NAN,
                    p_value: p,
                })
                .collect();
            (outcomes, None, None)
        }
        (None, Some(path)) => {
            let data = load_dataset(path, a.column.as_deref())?;
            let set = AnalysisSet::from_ids(&a.strategies)?;
            let outcomes = set.evaluate(&data)?;
            (outcomes, Some(data), Some(set))
        }
        _ => return Err(Failure::usage("give either --p or --data")),
    };
    let m = outcomes.len();

    let correction: CorrectionResult = match aggregation {
        Aggregation::Quantile(g) if g < 1.0 => {
            let (Some(data), Some(set)) = (&dataset, &set) else {
                return Err(Failure::usage(
                    "quantile aggregation below 1 needs --data: its alpha* is estimated by resampling",
                ));
            };
            let cfg = resample_config(a.replications, a.seed, a.workers, ResampleTarget::SignFlip);
            let null = resample_null(data, set, &cfg)?;
            empirical_alpha_star_for(&null, a.alpha, aggregation)?
        }
        _ => {
            let model = match a.corr.model(Some(m))? {
                Some(model) => model,
                None if a.p.is_none() && is_t_and_wilcoxon(&a.strategies) => {
                    notes.push("using rho = sqrt(3/pi) for the t-test/Wilcoxon pair".to_string());
                    JointNullModel::t_wilcoxon()
                }
                None if m == 1 => JointNullModel::from_rows(&[vec![1.0]])?,
                None => {
                    return Err(Failure::usage(
                        "alpha* depends on the joint null correlation of the strategies; give --rho or --corr-file",
                    ))
                }
            };
            solve_alpha_star(&model, a.alpha, gvalue_core::correction::DEFAULT_TOL)?
        }
    };

    let report = aggregate(&outcomes, aggregation, &correction)?;
    let mut s = String::new();
    for o in &report.outcomes {
        writeln!(s, "p[{}]  {:.4}", o.strategy_id, o.p_value).unwrap();
    }
    writeln!(s, "aggregation  {}", report.aggregation).unwrap();
    writeln!(s, "aggregate_p  {:.4}", report.aggregate_p).unwrap();
    writeln!(s, "alpha_star   {:.4}", report.alpha_star).unwrap();
    writeln!(s, "adjustment   {:.4}", report.adjustment).unwrap();
    writeln!(s, "g_value      {:.4}", report.g_value).unwrap();
    writeln!(s, "decision     {}", report.decision()).unwrap();

    let mut outputs = Vec::new();
    if let Some(path) = &a.out {
        let mut text = String::from("key,value\n");
        for (k, v) in report.to_key_values() {
            writeln!(text, "{k},{v}").unwrap();
        }
        write_file(path, text.as_bytes())?;
        notes.push(format!("wrote {}", path.display()));
        outputs.push(path.clone());
    }
    Ok(Output {
        stdout: s,
        outputs,
        notes,
    })
}

fn resample_config(
    b: usize,
    seed: u64,
    workers: Option<usize>,
    target: ResampleTarget,
) -> ResampleConfig {
    let mut cfg = ResampleConfig::new(seed).replications(b).target(target);
    if let Some(w) = workers {
        cfg = cfg.workers(w);
    }
    cfg
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn simulate(a: &SimulateArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let procedures = a
        .procedures
        .iter()
        .map(|p| p.parse::<Procedure>())
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SimulationConfig {
        n: a.n,
        noise: if a.normal {
            Noise::Normal
        } else {
            Noise::StudentT(a.df)
        },
        mu_grid: a.mu.clone().unwrap_or_else(default_mu_grid),
        replications: a.replications,
        alpha: a.alpha,
        procedures,
        seed: RngSeed::new(a.seed),
        workers: a.workers,
    };
    let report = run_simulation(&cfg)?;

    let mut s = String::new();
    writeln!(s, "alpha_star  {:.4}", report.alpha_star).unwrap();
    writeln!(s, "adjustment  {:.4}", report.adjustment).unwrap();
    writeln!(s, "redraws     {}", report.redraws).unwrap();
    writeln!(
        s,
        "{:<13} {:>6} {:>8} {:>8}",
        "procedure", "mu", "rate", "se"
    )
    .unwrap();
    for r in &report.rows {
        writeln!(
            s,
            "{:<13} {:>6.3} {:>8.4} {:>8.4}",
            r.procedure.id(),
            r.mu,
            r.rate,
            r.std_error
        )
        .unwrap();
    }
    for rel in Nesting::ALL {
        let name = serde_json::to_value(rel).unwrap();
        writeln!(
            s,
            "nesting_violations.{}  {}",
            name.as_str().unwrap(),
            report.violations(rel)
        )
        .unwrap();
    }

    let mut outputs = Vec::new();
    let mut notes = vec![format!("elapsed {:.2} s", report.elapsed_secs)];
    if let Some(path) = &a.out {
        let file = File::create(path)
            .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        report.write_csv(BufWriter::new(file))?;
        notes.push(format!("wrote {}", path.display()));
        outputs.push(path.clone());
    }
    Ok(Output {
        stdout: s,
        outputs,
        notes,
    })
}

fn parse_target(text: &str) -> Result<ResampleTarget, Failure> {
    match text {
        "sign-flip" => Ok(ResampleTarget::SignFlip),
        "permute-response" => Ok(ResampleTarget::PermuteResponse),
        _ => match text.strip_prefix("permute:") {
            Some(name) if !name.is_empty() => {
                Ok(ResampleTarget::PermuteCovariate(name.to_string()))
            }
            _ => Err(Failure::usage(format!(
                "--target must be sign-flip, permute-response or permute:<covariate>, got `{text}`"
            ))),
        },
    }
}

fn resample(a: &ResampleArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let target = parse_target(&a.target)?;
    let data = load_dataset(&a.data, a.column.as_deref())?;
    if let ResampleTarget::PermuteCovariate(name) = &target {
        if data.covariate(name).is_none() {
            return Err(Failure::usage(format!("column `{name}` not found")));
        }
    }
    let set = AnalysisSet::from_ids(&a.strategies)?;
    let cfg = resample_config(a.replications, a.seed, a.workers, target);
    // Check resolution before spending time on the resamples.
    if (a.replications as f64) * a.alpha < gvalue_core::resample::MIN_TAIL_COUNT {
        return Err(Error::Resolution(format!(
            "B * alpha = {} < {}; use at least {} replications",
            a.replications as f64 * a.alpha,
            gvalue_core::resample::MIN_TAIL_COUNT,
            (gvalue_core::resample::MIN_TAIL_COUNT / a.alpha).ceil()
        ))
        .into());
    }
    let null = resample_null(&data, &set, &cfg)?;
    let c = empirical_alpha_star_for(&null, a.alpha, Aggregation::Max)?;

    let mut s = String::new();
    writeln!(s, "replications  {}", null.replications()).unwrap();
    writeln!(s, "retries       {}", null.retries()).unwrap();
    writeln!(s, "alpha         {:.4}", c.alpha).unwrap();
    writeln!(s, "alpha_star    {:.4}", c.alpha_star).unwrap();
    writeln!(s, "adjustment    {:.4}", c.adjustment).unwrap();
    writeln!(s, "residual      {:.1e}", c.residual).unwrap();

    let mut outputs = Vec::new();
    let mut notes = Vec::new();
    if let Some(path) = &a.out {
        let file = File::create(path)
            .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
        null.write_csv(BufWriter::new(file))?;
        notes.push(format!("wrote {}", path.display()));
        outputs.push(path.clone());
    }
    Ok(Output {
        stdout: s,
        outputs,
        notes,
    })
}

fn replay(a: &ReplayArgs, manifest_path: &Path) -> CmdResult {
    let entries = manifest::read(manifest_path).map_err(|e| Failure::usage(format!("{e:#}")))?;
    let entry = match a.entry {
        Some(i) => entries.get(i).ok_or_else(|| {
            Failure::usage(format!(
                "manifest has {} entries, no entry {i}",
                entries.len()
            ))
        })?,
        None => entries
            .iter()
            .rev()
            .find(|e| !matches!(e.args, Command::Replay(_)))
            .ok_or_else(|| Failure::usage("manifest has no replayable entry"))?,
    };
    if matches!(entry.args, Command::Replay(_)) {
        return Err(Failure::usage("cannot replay a replay entry"));
    }
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", a.out_dir.display())))?;

    let mut command = entry.args.clone();
    let mut pairs = Vec::new();
    for out in command.outputs_mut() {
        let name = out
            .file_name()
            .ok_or_else(|| Failure::usage(format!("output {} has no file name", out.display())))?;
        let fresh = a.out_dir.join(name);
        pairs.push((out.clone(), fresh.clone()));
        *out = fresh;
    }
    let rerun = run(&command, manifest_path);
    let rerun_code = rerun.as_ref().map(|_| 0).unwrap_or_else(|f| f.code);

    let mut s = String::new();
    let mut all_same = rerun_code == entry.exit_code;
    writeln!(
        s,
        "replayed     {} ({})",
        entry.subcommand,
        entry.started.to_rfc3339()
    )
    .unwrap();
    writeln!(
        s,
        "exit_code    {} (recorded {})",
        rerun_code, entry.exit_code
    )
    .unwrap();
    let stdout_same = rerun
        .as_ref()
        .map(|o| o.stdout == entry.stdout)
        .unwrap_or(entry.stdout.is_empty());
    all_same &= stdout_same;
    writeln!(
        s,
        "stdout       {}",
        if stdout_same { "identical" } else { "differs" }
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (original, fresh) in &pairs {
        let status = match (std::fs::read(original), std::fs::read(fresh)) {
            (Ok(x), Ok(y)) if x == y => "identical",
            (Ok(_), Ok(_)) => "differs",
            (Err(_), _) => "original missing",
            (_, Err(_)) => "not regenerated",
        };
        all_same &= status == "identical";
        writeln!(s, "{}  {}", original.display(), status).unwrap();
        outputs.push(fresh.clone());
    }
    if !all_same {
        return Err(Failure::data(format!(
            "replay differs from the recorded run\n{s}"
        )));
    }
    Ok(Output {
        stdout: s,
        outputs,
        notes: Vec::new(),
    })
}
