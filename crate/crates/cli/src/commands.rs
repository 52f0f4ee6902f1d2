//! One function per subcommand. Each merges its settings (defaults, config
//! file, flags), runs, writes tidy CSV tables and finishes with a manifest.

use crate::output::OutputDir;
use crate::{load_settings, CliError, CommonArgs};
use basisrisk::copulas::Family;
use basisrisk::evt::{self, GpdFit};
use basisrisk::flood_pipeline::{self, EventRecord, SyntheticFloodConfig, TreeParams};
use basisrisk::gaussian_oracle::{self as oracle, GaussianPairSpec};
use basisrisk::simlab::{self, Figure, FigureTable, MainSettingConfig};
use basisrisk::tail_metrics::{self, Metric, ThresholdGrid};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

fn to_json<T: Serialize>(value: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::internal(e.to_string()))
}

/// Margin overrides shared by `simulate` and `figures`.
#[derive(Debug, Clone, Default, Args)]
pub struct MarginArgs {
    /// Pareto scale u of both parameters.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Pareto shape of the payout parameter.
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Pareto shape of the loss parameter.
    #[arg(long)]
    pub loss_shape: Option<f64>,
    #[arg(long)]
    pub loss_alpha: Option<f64>,
    #[arg(long)]
    pub loss_beta: Option<f64>,
}

impl MarginArgs {
    fn apply(&self, cfg: &mut MainSettingConfig) {
        let pairs = [
            (self.scale, &mut cfg.scale),
            (self.shape, &mut cfg.shape),
            (self.alpha, &mut cfg.alpha),
            (self.beta, &mut cfg.beta),
            (self.loss_shape, &mut cfg.loss_shape),
            (self.loss_alpha, &mut cfg.loss_alpha),
            (self.loss_beta, &mut cfg.loss_beta),
        ];
        for (flag, slot) in pairs {
            if let Some(v) = flag {
                *slot = v;
            }
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub margins: MarginArgs,
    /// Copula family: clayton_survival, gumbel, frank, gaussian, independence, comonotone.
    #[arg(long)]
    pub family: Option<String>,
    /// Kendall's tau of the copula.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Name of the sample file inside the output directory.
    #[arg(long, default_value = "sample.csv")]
    pub output: String,
}

#[derive(Serialize)]
struct SampleRow {
    x: f64,
    y: f64,
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: MainSettingConfig = load_settings(args.common.config.as_deref())?;
    args.margins.apply(&mut cfg);
    if let Some(f) = &args.family {
        cfg.family = Family::from_str(f)?;
    }
    if let Some(t) = args.tau {
        cfg.tau = t;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let sample = simlab::run_main_setting(&cfg)?;
    let rows: Vec<SampleRow> = sample.x.iter().zip(&sample.y).map(|(&x, &y)| SampleRow { x, y }).collect();
    let mut out = OutputDir::create(&args.common.out_dir)?;
    let path = out.write_csv(&args.output, &rows)?;
    let manifest = out.write_manifest("simulate", to_json(&cfg)?, Some(cfg.seed), start.elapsed())?;
    println!("{} rows -> {}", rows.len(), path.display());
    println!("manifest -> {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------- figures

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// Figure id: fig1, fig2, fig3 or fig4.
    pub figure: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub margins: MarginArgs,
    /// Sample size of every cell.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quantile levels of the loss at which the curves are evaluated.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiguresSettings {
    pub figure: Option<Figure>,
    pub quantiles: Vec<f64>,
    pub setting: MainSettingConfig,
}

impl Default for FiguresSettings {
    fn default() -> Self {
        let ThresholdGrid::Quantiles(quantiles) = ThresholdGrid::default_quantiles() else {
            unreachable!("default grid is quantile based")
        };
        Self {
            figure: None,
            quantiles,
            setting: MainSettingConfig::default(),
        }
    }
}

#[derive(Serialize)]
struct FigureCsvRow<'a> {
    table: &'a str,
    family: &'a str,
    tau_or_rho: f64,
    quantile: Option<f64>,
    s: f64,
    estimate: Option<f64>,
    std_error: Option<f64>,
    n_exceed: usize,
}

fn figure_csv_rows(table: &FigureTable) -> Vec<FigureCsvRow<'_>> {
    table
        .rows
        .iter()
        .map(|r| FigureCsvRow {
            table: &table.name,
            family: &r.family,
            tau_or_rho: r.tau_or_rho,
            quantile: r.quantile,
            s: r.s,
            estimate: r.estimate,
            std_error: r.std_error,
            n_exceed: r.n_exceed,
        })
        .collect()
}

pub fn figures(args: FiguresArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: FiguresSettings = load_settings(args.common.config.as_deref())?;
    if let Some(id) = &args.figure {
        cfg.figure = Some(Figure::from_str(id)?);
    }
    args.margins.apply(&mut cfg.setting);
    if let Some(n) = args.n {
        cfg.setting.n = n;
    }
    if let Some(s) = args.seed {
        cfg.setting.seed = s;
    }
    if let Some(q) = &args.quantiles {
        cfg.quantiles = q.clone();
    }
    let figure = cfg
        .figure
        .ok_or_else(|| CliError::validation("no figure given; expected one of fig1, fig2, fig3, fig4"))?;
    if cfg.quantiles.is_empty() || cfg.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(CliError::validation("quantiles must be a non-empty list of levels in (0, 1)"));
    }
    // Family and tau are set per cell; validate the margins with a valid pair.
    MainSettingConfig {
        family: Family::Frank,
        tau: simlab::FIGURE_LEVELS[0],
        ..cfg.setting.clone()
    }
    .validate()?;

    let tables = simlab::figure_suite(figure, &cfg.setting, &ThresholdGrid::Quantiles(cfg.quantiles.clone()))?;
    let mut out = OutputDir::create(&args.common.out_dir)?;
    for table in &tables {
        let path = out.write_csv(&format!("{}.csv", table.name), &figure_csv_rows(table))?;
        println!("{} rows -> {}", table.rows.len(), path.display());
    }
    let manifest = out.write_manifest("figures", to_json(&cfg)?, Some(cfg.setting.seed), start.elapsed())?;
    println!("manifest -> {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------- fit-gpd

#[derive(Debug, Clone, Args)]
pub struct FitGpdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column to fit.
    #[arg(long)]
    pub column: Option<String>,
    /// Threshold quantile level, in (0.5, 1).
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitGpdSettings {
    pub input: Option<PathBuf>,
    pub column: String,
    pub level: f64,
}

impl Default for FitGpdSettings {
    fn default() -> Self {
        Self {
            input: None,
            column: "damage_usd".into(),
            level: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub column: String,
    pub level: f64,
    pub n_values: usize,
    pub threshold: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub gamma_se: Option<f64>,
    pub sigma_se: Option<f64>,
    pub n_excess: usize,
    pub log_likelihood: f64,
}

impl FitSummary {
    fn new(column: &str, level: f64, n_values: usize, fit: &GpdFit) -> Self {
        Self {
            column: column.to_string(),
            level,
            n_values,
            threshold: fit.threshold,
            gamma: fit.gamma,
            sigma: fit.sigma,
            gamma_se: fit.std_errors.map(|s| s.0),
            sigma_se: fit.std_errors.map(|s| s.1),
            n_excess: fit.n_excess,
            log_likelihood: fit.log_likelihood,
        }
    }
}

#[derive(Serialize)]
struct QqRow {
    rank: usize,
    theoretical: f64,
    empirical: f64,
}

/// Numeric values of one column; blank cells are skipped.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(basisrisk::Error::from)?.clone();
    let idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(column))
        .ok_or_else(|| CliError::from(basisrisk::Error::MissingColumn(column.to_string())))?;
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(basisrisk::Error::from)?;
        let cell = row.get(idx).unwrap_or("");
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell.parse().map_err(|_| {
            CliError::validation(format!("line {}: `{column}` is not a number: {cell:?}", i + 2))
        })?;
        if !v.is_finite() {
            return Err(CliError::validation(format!("line {}: `{column}` is not finite", i + 2)));
        }
        values.push(v);
    }
    Ok(values)
}

pub fn fit_gpd(args: FitGpdArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: FitGpdSettings = load_settings(args.common.config.as_deref())?;
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(c) = &args.column {
        cfg.column = c.clone();
    }
    if let Some(l) = args.level {
        cfg.level = l;
    }
    let input = cfg.input.clone().ok_or_else(|| CliError::validation("no input file given (--input)"))?;

    let values = read_column(&input, &cfg.column)?;
    let fit = evt::pot_fit(&values, cfg.level)?;
    let excesses: Vec<f64> = values
        .iter()
        .filter(|&&v| v > fit.threshold)
        .map(|&v| v - fit.threshold)
        .collect();
    let qq: Vec<QqRow> = evt::qq_exponential(&excesses)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| QqRow {
            rank: i + 1,
            theoretical: p.theoretical,
            empirical: p.empirical,
        })
        .collect();

    let summary = FitSummary::new(&cfg.column, cfg.level, values.len(), &fit);
    let mut out = OutputDir::create(&args.common.out_dir)?;
    out.write_json("gpd_fit.json", &summary)?;
    out.write_csv("gpd_qq.csv", &qq)?;
    let manifest = out.write_manifest("fit-gpd", to_json(&cfg)?, None, start.elapsed())?;
    println!(
        "gamma = {:.4}, sigma = {:.4}, threshold = {:.4}, {} excesses",
        fit.gamma, fit.sigma, fit.threshold, fit.n_excess
    );
    println!("manifest -> {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------- floods

#[derive(Debug, Clone, Args)]
pub struct FloodsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Event CSV with columns country, year, affected, damage_usd.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Use a generated flood-like corpus instead of an input file.
    #[arg(long)]
    pub synthetic: bool,
    /// Size of the generated corpus (implies --synthetic).
    #[arg(long)]
    pub synthetic_n: Option<usize>,
    /// Tail index of the generated corpus (implies --synthetic).
    #[arg(long)]
    pub synthetic_gamma: Option<f64>,
    /// Number of cross-validation folds.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Threshold quantile level of the damage tail fit.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloodsSettings {
    pub input: Option<PathBuf>,
    /// Generated corpus, used when `input` is absent.
    pub synthetic: Option<SyntheticFloodConfig>,
    pub k: usize,
    pub seed: u64,
    pub tree: TreeParams,
    pub level: f64,
}

impl Default for FloodsSettings {
    fn default() -> Self {
        Self {
            input: None,
            synthetic: None,
            k: 10,
            seed: 1,
            tree: TreeParams::default(),
            level: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloodsSummary {
    pub n_records: usize,
    pub n_dropped: usize,
    pub deflation: flood_pipeline::DeflationFit,
    pub fold_sizes: Vec<usize>,
    pub overall_rmse: f64,
    pub median_decile_rmse: Option<f64>,
    pub top_decile_rmse: Option<f64>,
    /// Tail fit of the deflated damages; absent when there are too few excesses.
    pub damage_tail: Option<FitSummary>,
    pub damage_tail_error: Option<String>,
}

#[derive(Serialize)]
struct EventCsvRow<'a> {
    country: &'a str,
    year: i32,
    affected: Option<f64>,
    damage_usd: f64,
}

pub fn floods(args: FloodsArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: FloodsSettings = load_settings(args.common.config.as_deref())?;
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
        cfg.synthetic = None;
    }
    if args.synthetic || args.synthetic_n.is_some() || args.synthetic_gamma.is_some() {
        let synth = cfg.synthetic.get_or_insert_with(SyntheticFloodConfig::default);
        if let Some(n) = args.synthetic_n {
            synth.n = n;
        }
        if let Some(g) = args.synthetic_gamma {
            synth.gamma = g;
        }
        cfg.input = None;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.max_depth {
        cfg.tree.max_depth = d;
    }
    if let Some(m) = args.min_leaf {
        cfg.tree.min_leaf = m;
    }
    if let Some(l) = args.level {
        cfg.level = l;
    }
    if cfg.tree.min_leaf == 0 {
        return Err(CliError::validation("invalid value for `min_leaf`: must be at least 1"));
    }

    let mut out = OutputDir::create(&args.common.out_dir)?;
    let (records, dropped) = match (&cfg.input, &cfg.synthetic) {
        (Some(path), _) => {
            let report = flood_pipeline::load_events(path)?;
            (report.records, report.dropped)
        }
        (None, Some(synth)) => {
            let records = flood_pipeline::synthetic_floods(synth)?;
            let rows: Vec<EventCsvRow> = records
                .iter()
                .map(|r| EventCsvRow {
                    country: &r.country,
                    year: r.year,
                    affected: r.affected,
                    damage_usd: r.damage,
                })
                .collect();
            out.write_csv("synthetic_events.csv", &rows)?;
            (records, Vec::new())
        }
        (None, None) => return Err(CliError::validation("no data: pass --input FILE or --synthetic")),
    };

    let (deflated, deflation) = flood_pipeline::deflate(&records)?;
    let report = flood_pipeline::kfold_cv(&deflated, cfg.k, cfg.seed, &cfg.tree)?;
    let deciles = flood_pipeline::rmse_by_decile(&report)?;
    let damages: Vec<f64> = deflated.iter().map(|r: &EventRecord| r.damage).collect();
    let (damage_tail, damage_tail_error) = match evt::pot_fit(&damages, cfg.level) {
        Ok(fit) => (Some(FitSummary::new("damage_usd", cfg.level, damages.len(), &fit)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let sse: f64 = report.predictions.iter().map(|p| p.sq_error).sum();
    let summary = FloodsSummary {
        n_records: records.len(),
        n_dropped: dropped.len(),
        deflation,
        fold_sizes: report.fold_sizes.clone(),
        overall_rmse: (sse / report.predictions.len() as f64).sqrt(),
        median_decile_rmse: flood_pipeline::median_decile_rmse(&deciles),
        top_decile_rmse: deciles.iter().find(|r| r.class == 10).map(|r| r.rmse),
        damage_tail,
        damage_tail_error,
    };

    out.write_csv("cv_predictions.csv", &report.predictions)?;
    out.write_csv("rmse_deciles.csv", &deciles)?;
    out.write_csv("dropped_rows.csv", &dropped)?;
    out.write_json("floods_summary.json", &summary)?;
    let manifest = out.write_manifest("floods", to_json(&cfg)?, Some(cfg.seed), start.elapsed())?;
    println!(
        "{} records ({} dropped), {}-fold CV, overall RMSE {:.4e}",
        summary.n_records, summary.n_dropped, cfg.k, summary.overall_rmse
    );
    println!("manifest -> {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------- gaussian-check

/// Largest |z| accepted between Monte Carlo and the closed forms.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Args)]
pub struct GaussianCheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_y: Option<f64>,
    #[arg(long)]
    pub sigma_x: Option<f64>,
    #[arg(long)]
    pub sigma_y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Thresholds as multiples of sigma_x above mu_x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z_levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianCheckSettings {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
    pub z_levels: Vec<f64>,
}

impl Default for GaussianCheckSettings {
    fn default() -> Self {
        Self {
            mu_x: 0.0,
            mu_y: 0.0,
            sigma_x: 1.0,
            sigma_y: 1.0,
            rho: 0.5,
            n: 1_000_000,
            seed: 1,
            z_levels: vec![0.0, 1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub metric: String,
    pub z_level: f64,
    pub s: f64,
    pub n_exceed: usize,
    pub mc: f64,
    pub std_error: Option<f64>,
    pub exact: f64,
    pub asymptotic: f64,
    /// `(mc − exact)/std_error`; absent when the standard error is undefined.
    pub z_score: Option<f64>,
}

fn z_score(mc: f64, exact: f64, se: Option<f64>) -> Option<f64> {
    let se = se?;
    let diff = mc - exact;
    if se > 0.0 {
        Some(diff / se)
    } else if diff.abs() <= 1e-12 * (1.0 + exact.abs()) {
        // X − Y constant on the event: agreement is exact or not at all.
        Some(0.0)
    } else {
        Some(f64::INFINITY.copysign(diff))
    }
}

/// The comparison table for one spec; shared with the tests.
pub fn gaussian_check_rows(cfg: &GaussianCheckSettings) -> Result<Vec<CheckRow>, CliError> {
    let spec = GaussianPairSpec::new(cfg.mu_x, cfg.mu_y, cfg.sigma_x, cfg.sigma_y, cfg.rho)?;
    let sample = oracle::sample_bivariate_gaussian(&spec, cfg.n, cfg.seed)?;
    let mut rows = Vec::new();
    for &z in &cfg.z_levels {
        let s = spec.mu_x + z * spec.sigma_x;
        for metric in [Metric::Mean, Metric::Square] {
            let (est, exact, asymptotic) = match metric {
                Metric::Mean => (
                    tail_metrics::conditional_mean_diff(&sample, s),
                    oracle::cond_mean_diff_exact(&spec, s),
                    oracle::cond_mean_diff_asymptotic(&spec, s),
                ),
                Metric::Square => (
                    tail_metrics::conditional_sq_diff(&sample, s),
                    oracle::cond_sq_diff_exact(&spec, s),
                    oracle::cond_sq_diff_asymptotic(&spec, s),
                ),
            };
            let est = est?;
            rows.push(CheckRow {
                metric: metric.name().to_string(),
                z_level: z,
                s,
                n_exceed: est.n_exceed,
                mc: est.estimate,
                std_error: est.std_error,
                exact,
                asymptotic,
                z_score: z_score(est.estimate, exact, est.std_error),
            });
        }
    }
    Ok(rows)
}

pub fn gaussian_check(args: GaussianCheckArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: GaussianCheckSettings = load_settings(args.common.config.as_deref())?;
    let overrides = [
        (args.mu_x, &mut cfg.mu_x),
        (args.mu_y, &mut cfg.mu_y),
        (args.sigma_x, &mut cfg.sigma_x),
        (args.sigma_y, &mut cfg.sigma_y),
        (args.rho, &mut cfg.rho),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(z) = &args.z_levels {
        cfg.z_levels = z.clone();
    }
    if cfg.z_levels.is_empty() || cfg.z_levels.iter().any(|z| !z.is_finite()) {
        return Err(CliError::validation("z_levels must be a non-empty list of finite numbers"));
    }

    let rows = gaussian_check_rows(&cfg)?;
    let mut out = OutputDir::create(&args.common.out_dir)?;
    let path = out.write_csv("gaussian_check.csv", &rows)?;
    let manifest = out.write_manifest("gaussian-check", to_json(&cfg)?, Some(cfg.seed), start.elapsed())?;
    println!("{} rows -> {}", rows.len(), path.display());
    println!("manifest -> {}", manifest.display());

    let worst = rows
        .iter()
        .filter_map(|r| r.z_score.map(|z| (z.abs(), r)))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match worst {
        Some((z, r)) if z > Z_LIMIT => Err(CliError::numerical(format!(
            "Monte Carlo disagrees with the closed form: |z| = {z:.2} for {} at s = {}",
            r.metric, r.s
        ))),
        _ => Ok(()),
    }
}
