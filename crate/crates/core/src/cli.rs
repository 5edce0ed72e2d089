//! The `iscore` command line. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 numeric or domain error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::catalog::{pair_study_rows, single_study_rows};
use crate::disease_model::error_bound;
use crate::error::{Error, Result};
use crate::estimators::{
    cell_counts, estimate_report, theta_e_train, CorrectionForm, CorrectionMode, EstimateReport, EstimatorSettings,
    TieRule,
};
use crate::exact_binomial::bias_grid;
use crate::io::{
    dataset_bytes, fixed, parse_costs, parse_study_config, read_dataset, read_model_spec, read_text, write_bytes,
    write_csv, DatasetOptions, RunManifest,
};
use crate::partition_retention::{staged_selection, RetentionConfig};
use crate::simulator::{draw_case_control, figure_curves, run_study, Figure, RepSummary};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ISCORE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "iscore",
    version,
    about = "I-score statistics, error-rate bias study and Partition Retention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grid of b(n, lambda, r) and a(n, lambda, r)
    BiasTable(BiasTableArgs),
    /// Oracle predictivity parameters of a model spec
    OracleParams(OracleArgs),
    /// Curve data for figures 1-4
    FigureData(FigureArgs),
    /// Draw a case-control sample from a model spec
    Simulate(SimulateArgs),
    /// Replicated bias study over the rows of a config file
    BiasStudy(BiasStudyArgs),
    /// Scores and error estimates for one variable subset of a dataset
    Estimate(EstimateArgs),
    /// Partition Retention variable selection
    PrSelect(PrSelectArgs),
    /// Regenerate a published table or figure
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Oracle,
    Plugin,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FormArg {
    Literal,
    Inverse,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TiesArg {
    Half,
    Control,
}

#[derive(Debug, Args, Serialize)]
struct CorrectionArgs {
    /// Source of lambda and r in the corrected training estimate
    #[arg(long, value_enum, default_value = "plugin")]
    mode: ModeArg,
    /// Multiply by 1-b (literal) or divide by max(1-b, 0.05) (inverse)
    #[arg(long, value_enum, default_value = "inverse")]
    form: FormArg,
    /// Out-of-sample decision on tied and unobserved cells: split evenly
    /// (half) or always h (control). Default: half, except control for
    /// `reproduce`, which is how the published tables were simulated
    #[arg(long, value_enum)]
    oos_ties: Option<TiesArg>,
}

impl CorrectionArgs {
    fn mode(&self) -> CorrectionMode {
        match self.mode {
            ModeArg::Oracle => CorrectionMode::Oracle,
            ModeArg::Plugin => CorrectionMode::Plugin,
        }
    }

    fn form(&self) -> CorrectionForm {
        match self.form {
            FormArg::Literal => CorrectionForm::Literal,
            FormArg::Inverse => CorrectionForm::Inverse,
        }
    }

    fn settings(&self, default_ties: TieRule) -> EstimatorSettings {
        EstimatorSettings {
            mode: self.mode(),
            form: self.form(),
            oos_ties: match self.oos_ties {
                None => default_ties,
                Some(TiesArg::Half) => TieRule::Half,
                Some(TiesArg::Control) => TieRule::Control,
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct DataArgs {
    /// Delimited dataset with a header row
    #[arg(long)]
    data: PathBuf,
    /// Outcome column (default: y, label, class or status)
    #[arg(long)]
    label: Option<String>,
    /// `comma`, `tab` or a single character (default: detect comma or tab)
    #[arg(long)]
    delimiter: Option<String>,
    /// Treat the outcome column as real-valued
    #[arg(long)]
    real_outcome: bool,
}

impl DataArgs {
    fn options(&self) -> Result<DatasetOptions> {
        let delimiter = match self.delimiter.as_deref() {
            None => None,
            Some("comma") => Some(b','),
            Some("tab") => Some(b'\t'),
            Some(s) if s.len() == 1 => Some(s.as_bytes()[0]),
            Some(s) => {
                return Err(Error::Usage(format!(
                    "delimiter {s:?} must be comma, tab or one character"
                )))
            }
        };
        Ok(DatasetOptions {
            label_column: self.label.clone(),
            delimiter,
            real_outcome: self.real_outcome,
            ..Default::default()
        })
    }
}

#[derive(Debug, Args, Serialize)]
struct BiasTableArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    r: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    model: PathBuf,
    /// Report file; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    figure: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Subjects per class
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Replicate index, selecting an independent stream under the same seed
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BiasStudyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    correction: CorrectionArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated variable names
    #[arg(long, value_delimiter = ',', required = true)]
    subset: Vec<String>,
    /// Model spec for the oracle quantities; its SNPs map to the subset in order
    #[arg(long)]
    model: Option<PathBuf>,
    /// Priors and costs, e.g. pi_d=0.3,c_d=2,c_h=1
    #[arg(long)]
    costs: Option<String>,
    #[command(flatten)]
    correction: CorrectionArgs,
    /// Key-value report; a CSV copy is written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PrSelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Group size
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Groups per pass (default: about 20 appearances per variable)
    #[arg(long)]
    groups: Option<usize>,
    /// Resuscitation rounds
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Comma-separated group sizes of the stages before the final one
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.05)]
    top_fraction: f64,
    /// Top variables per resuscitation group (default k/2)
    #[arg(long)]
    mix_count: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false, id = "artifact")]
struct Target {
    #[arg(long, group = "artifact", value_parser = ["1", "2", "4", "6"])]
    table: Option<String>,
    #[arg(long, group = "artifact", value_parser = clap::value_parser!(u32).range(1..=4))]
    figure: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
struct ReproduceArgs {
    #[command(flatten)]
    target: Target,
    /// Required for the simulated tables 4 and 6
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    correction: CorrectionArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| Error::Usage(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn finish(mut manifest: RunManifest, outputs: &[&Path], manifest_path: PathBuf) -> Result<()> {
    for o in outputs {
        manifest.add_output(o);
    }
    manifest.write(&manifest_path)?;
    log::info!("wrote {}", manifest_path.display());
    Ok(())
}

fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::BiasTable(a) => {
            let rows: Vec<Vec<String>> = bias_grid(&a.n, &a.lambda, &a.r)?
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.lambda.to_string(),
                        p.r.to_string(),
                        fixed(p.b, 4),
                        fixed(p.a, 4),
                    ]
                })
                .collect();
            write_csv(&a.out, &["n", "lambda", "r", "b", "a"], &rows)?;
            finish(
                RunManifest::new("bias-table", argv, None, to_value(&a)),
                &[&a.out],
                RunManifest::path_for(&a.out, false),
            )
        }
        Command::OracleParams(a) => {
            let model = read_model_spec(&a.model)?;
            let p = model.oracle_params()?;
            let tables = model.conditional_tables()?;
            let mut lines = vec![
                ("f_y_d", fixed(p.f_y_d, 6)),
                ("theta_e", fixed(p.theta_e, 6)),
                ("theta_c", fixed(p.theta_c, 6)),
                ("theta_i0", fixed(p.theta_i0, 6)),
                ("noise_factor", fixed(p.noise_factor, 6)),
                ("theta_i", fixed(p.theta_i, 6)),
                ("bound", fixed(p.bound_on_theta_e, 6)),
            ];
            let join = |v: &[f64]| v.iter().map(|x| fixed(*x, 6)).collect::<Vec<_>>().join(" ");
            lines.push(("f_u_given_d", join(&tables.f_u_given_d)));
            lines.push(("f_u_given_h", join(&tables.f_u_given_h)));
            let text: String = lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            match &a.out {
                None => {
                    print!("{text}");
                    Ok(())
                }
                Some(out) => {
                    write_bytes(out, text.as_bytes())?;
                    let mut m = RunManifest::new("oracle-params", argv, None, to_value(&a));
                    m.add_input(&a.model)?;
                    finish(m, &[out], RunManifest::path_for(out, false))
                }
            }
        }
        Command::FigureData(a) => {
            write_figure(a.figure, &a.out)?;
            finish(
                RunManifest::new("figure-data", argv, None, to_value(&a)),
                &[&a.out],
                RunManifest::path_for(&a.out, false),
            )
        }
        Command::Simulate(a) => {
            let model = read_model_spec(&a.model)?;
            let sample = draw_case_control(&model, a.n, a.seed, a.rep)?;
            write_bytes(&a.out, &dataset_bytes(&sample, "y", b',', None)?)?;
            let mut m = RunManifest::new("simulate", argv, Some(a.seed), to_value(&a));
            m.add_input(&a.model)?;
            finish(m, &[&a.out], RunManifest::path_for(&a.out, false))
        }
        Command::BiasStudy(a) => {
            let rows = parse_study_config(&read_text(&a.config)?, &a.config.display().to_string())?;
            let summaries = run_study(&rows, a.seed, a.correction.settings(TieRule::Half))?;
            write_study(&summaries, &a.out)?;
            let mut m = RunManifest::new("bias-study", argv, Some(a.seed), to_value(&a));
            m.add_input(&a.config)?;
            finish(m, &[&a.out], RunManifest::path_for(&a.out, false))
        }
        Command::Estimate(a) => {
            let dataset = read_dataset(&a.data.data, &a.data.options()?)?;
            log::info!("{}: {}", a.data.data.display(), dataset.summary());
            let subset = dataset.sample.resolve_subset(&a.subset)?;
            let model = a.model.as_deref().map(read_model_spec).transpose()?;
            let costs = a.costs.as_deref().map(parse_costs).transpose()?;
            let report = estimate_report(
                &dataset.sample,
                &subset,
                model.as_ref(),
                costs.as_ref(),
                a.correction.settings(TieRule::Half),
            )?;
            let pairs = report_pairs(&report);
            let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            let csv_path = if a.out.extension().is_some_and(|e| e == "csv") {
                a.out.with_extension("csv.txt")
            } else {
                a.out.with_extension("csv")
            };
            write_bytes(&a.out, text.as_bytes())?;
            let rows: Vec<Vec<String>> = pairs.into_iter().map(|(k, v)| vec![k, v]).collect();
            write_csv(&csv_path, &["key", "value"], &rows)?;
            let mut m = RunManifest::new("estimate", argv, None, to_value(&a));
            m.add_input(&a.data.data)?;
            if let Some(p) = &a.model {
                m.add_input(p)?;
            }
            finish(m, &[&a.out, &csv_path], RunManifest::path_for(&a.out, false))
        }
        Command::PrSelect(a) => pr_select(&a, argv),
        Command::Reproduce(a) => reproduce(&a, argv),
    }
}

fn opt6(x: Option<f64>) -> String {
    x.map(|v| fixed(v, 6)).unwrap_or_default()
}

fn report_pairs(r: &EstimateReport) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("variables".into(), r.variables.join(" ")),
        ("n_d".into(), r.n_d.to_string()),
        ("n_h".into(), r.n_h.to_string()),
        ("cells_observed".into(), r.cells_observed.to_string()),
        ("i_score".into(), fixed(r.i_score, 6)),
        ("j_score".into(), fixed(r.j_score, 6)),
        ("theta_i_plugin".into(), fixed(r.theta_i_plugin, 6)),
        ("bound_plugin".into(), fixed(r.bound_plugin, 6)),
        ("theta_e_train".into(), opt6(r.theta_e_train)),
        ("theta_e_train_corrected".into(), opt6(r.theta_e_train_corrected)),
        ("theta_e_oos".into(), opt6(r.theta_e_oos)),
        ("theta_e_oos_corrected".into(), opt6(r.theta_e_oos_corrected)),
        ("bias_training".into(), opt6(r.bias_training)),
        ("bias_oos".into(), opt6(r.bias_oos)),
    ];
    if let Some(o) = &r.oracle {
        out.push(("theta_e".into(), fixed(o.theta_e, 6)));
        out.push(("theta_i0".into(), fixed(o.theta_i0, 6)));
        out.push(("theta_i".into(), fixed(o.theta_i, 6)));
        out.push(("bound".into(), fixed(o.bound_on_theta_e, 6)));
    }
    if let Some(w) = r.weighted_i {
        out.push(("weighted_i".into(), fixed(w, 6)));
    }
    let s = to_value(&r.settings);
    for key in ["mode", "form", "oos_ties"] {
        out.push((key.into(), s[key].as_str().unwrap_or_default().to_string()));
    }
    for (i, w) in r.warnings.iter().enumerate() {
        out.push((format!("warning{}", i + 1), w.clone()));
    }
    out
}

const STUDY_HEADER: [&str; 14] = [
    "label", "m", "n", "theta_e", "b", "b_o", "mean_b", "sd_b", "mean_b1", "sd_b1", "mean_bo", "sd_bo", "theta_i0",
    "bound",
];

fn study_rows(summaries: &[(String, RepSummary)]) -> Vec<Vec<String>> {
    summaries
        .iter()
        .map(|(label, s)| {
            let mut row = vec![label.clone(), s.reps.to_string(), s.n.to_string()];
            row.extend(
                [
                    s.theta_e, s.b, s.b_o, s.mean_b, s.sd_b, s.mean_b1, s.sd_b1, s.mean_bo, s.sd_bo, s.theta_i0,
                    s.bound,
                ]
                .iter()
                .map(|v| fixed(*v, 3)),
            );
            row
        })
        .collect()
}

fn write_study(summaries: &[(String, RepSummary)], out: &Path) -> Result<()> {
    for (label, s) in summaries {
        if s.sd_undefined {
            log::warn!("{label}: a single replicate, standard deviations reported as 0");
        }
    }
    write_csv(out, &STUDY_HEADER, &study_rows(summaries))
}

fn write_figure(id: u32, out: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = figure_curves(Figure::from_id(id)?)?
        .into_iter()
        .map(|p| vec![p.curve, fixed(p.param, 6), fixed(p.x, 6), fixed(p.y, 6)])
        .collect();
    write_csv(out, &["curve", "param", "x", "y"], &rows)
}

/// `λ = 40·4^-k`, `k = 0..5`.
pub fn published_lambdas() -> Vec<f64> {
    (0..6).map(|k| 40.0 / 4f64.powi(k)).collect()
}

pub const PUBLISHED_N: [u64; 3] = [100, 500, 2500];

/// The `r` values at which the negative relative bias table was evaluated.
/// Its printed column labels repeat the labels of the tie table, but the
/// printed values correspond to these.
pub const NEG_REL_BIAS_R: [f64; 5] = [40.0, 10.0, 2.0, 1.25, 1.0625];

pub const TIE_TABLE_R: [f64; 5] = [40.0, 5.0, 1.25, 1.062, 1.016];

/// Long-format CSV of one of the two exact tables: `n,lambda,r,<value>`.
pub fn exact_table_csv(table: u32) -> Result<Vec<u8>> {
    let (r, col): (&[f64], &str) = match table {
        1 => (&NEG_REL_BIAS_R, "b"),
        2 => (&TIE_TABLE_R, "a"),
        _ => return Err(Error::Usage(format!("table {table} is not an exact table"))),
    };
    let rows: Vec<Vec<String>> = bias_grid(&PUBLISHED_N, &published_lambdas(), r)?
        .iter()
        .map(|p| {
            let v = if table == 1 { p.b } else { p.a };
            vec![p.n.to_string(), p.lambda.to_string(), p.r.to_string(), fixed(v, 4)]
        })
        .collect();
    crate::io::csv_bytes(&["n", "lambda", "r", col], &rows)
}

fn reproduce(a: &ReproduceArgs, argv: &[String]) -> Result<()> {
    if let Some(t) = &a.target.table {
        match t.as_str() {
            "1" | "2" => write_bytes(&a.out, &exact_table_csv(t.parse().unwrap())?)?,
            _ => {
                let seed = a
                    .seed
                    .ok_or_else(|| Error::Usage("--seed is required for the simulated tables".into()))?;
                let rows = if t == "4" {
                    single_study_rows()
                } else {
                    pair_study_rows()
                };
                let summaries = run_study(
                    &rows,
                    seed,
                    a.correction.settings(EstimatorSettings::published().oos_ties),
                )?;
                write_study(&summaries, &a.out)?;
            }
        }
    } else if let Some(f) = a.target.figure {
        write_figure(f, &a.out)?;
    }
    finish(
        RunManifest::new("reproduce", argv, a.seed, to_value(a)),
        &[&a.out],
        RunManifest::path_for(&a.out, false),
    )
}

fn pr_select(a: &PrSelectArgs, argv: &[String]) -> Result<()> {
    let dataset = read_dataset(&a.data.data, &a.data.options()?)?;
    log::info!("{}: {}", a.data.data.display(), dataset.summary());
    let sample = &dataset.sample;
    let config = RetentionConfig {
        group_size: a.k,
        num_groups: a.groups,
        rounds: a.rounds,
        top_fraction: a.top_fraction,
        mix_count: a.mix_count,
        stages: a.stages.clone(),
        seed: a.seed,
        keep_trace: false,
    };
    let result = staged_selection(sample, &config)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    let retention: Vec<Vec<String>> = result
        .scores
        .iter()
        .map(|s| {
            vec![
                s.name.clone(),
                s.appearances.to_string(),
                s.survivals.to_string(),
                fixed(s.frequency, 6),
            ]
        })
        .collect();
    let retention_path = a.out.join("retention.csv");
    write_csv(
        &retention_path,
        &["variable", "appearances", "survivals", "frequency"],
        &retention,
    )?;

    let mut modules = Vec::with_capacity(result.modules.len());
    for (id, m) in result.modules.iter().enumerate() {
        let counts = cell_counts(sample, &m.variables)?;
        let train = if counts.is_balanced() {
            Some(theta_e_train(&counts)?)
        } else {
            None
        };
        let bound = error_bound(counts.theta_i_plugin()?.min(1.0))?;
        modules.push(vec![
            (id + 1).to_string(),
            m.variables
                .iter()
                .map(|&v| sample.names()[v].as_str())
                .collect::<Vec<_>>()
                .join(" "),
            fixed(m.i_score, 6),
            opt6(train),
            fixed(bound, 6),
            m.count.to_string(),
        ]);
    }
    let modules_path = a.out.join("modules.csv");
    write_csv(
        &modules_path,
        &["module", "variables", "i_score", "train_error", "bound", "count"],
        &modules,
    )?;
    let mut m = RunManifest::new("pr-select", argv, Some(a.seed), to_value(a));
    m.add_input(&a.data.data)?;
    finish(
        m,
        &[&retention_path, &modules_path],
        RunManifest::path_for(&a.out, true),
    )
}
