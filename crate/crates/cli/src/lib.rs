//! The `xrr` command line.
//!
//! Every subcommand reads one or more annotation files, computes a set of
//! reliability statistics and writes a single table to stdout or `--output`.
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 when the data
//! cannot support the requested statistic.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use xrr_core::io::{self, Cell, HistogramSpec, PlotData, ReportFormat, WideSchemaSpec};
use xrr_core::model::{pair_stats, item_stats_by_id, AnnotationTable, LabelId, RawValue, ReplicationId};
use xrr_core::report::{build_reports, irr_table, ReplicationPairReport, ReportOptions};
use xrr_core::similarity::DEFAULT_SPLITS;
use xrr_core::{
    analytic_irr, analytic_kappa_x, bootstrap_ci, build_table, generate_pair, iota, kappa_x, normalized_kappa_x,
    AnnotationCount, BootstrapConfig, BootstrapInput, BootstrapMetric, Pool, Scale, SimulationConfig,
};

/// Seed used when neither `--seed`, `XRR_SEED` nor the config file set one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "xrr",
    version,
    about = "Inter-rater and cross-replication reliability for annotated datasets",
    after_help = "Settings may also come from a `--config` file of `key = value` lines \
                  (keys: seed, format, input-format, schema, splits, replicates, level, \
                  min-normalized, irr-ratio-min, irr-ratio-max). Command-line flags win, \
                  then XRR_SEED for the seed, then the config file."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iota (generalized kappa) per label and replication.
    Irr(IrrArgs),
    /// Cross-replication kappa_x per label and replication pair.
    Xrr(PairArgs),
    /// IRR per replication, kappa_x and normalized kappa_x per pair, one row per label.
    Report(ReportArgs),
    /// Quality gate comparing a main replication against a trusted one.
    Audit(AuditArgs),
    /// Percentile bootstrap confidence intervals over items.
    Bootstrap(BootstrapArgs),
    /// Generate a synthetic replication pair and its analytic kappa_x.
    Simulate(SimulateArgs),
    /// Data behind IRR histograms and rho versus normalized kappa_x scatter plots.
    Plotdata(PlotArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Annotation file, optionally tagged `TAG=PATH` to set its replication. Repeatable.
    #[arg(long = "input", short = 'i', value_name = "[TAG=]PATH")]
    inputs: Vec<String>,
    /// File layout.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
    /// TOML column mapping for wide files.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Comma-separated labels to include (default: all).
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Override a label's scale, e.g. `valence=interval`. Repeatable.
    #[arg(long = "scale", value_name = "LABEL=SCALE")]
    scales: Vec<String>,
    /// Random seed for bootstrap, split-half and simulation [env: XRR_SEED] [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Plain-text `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, short = 'f', value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IrrArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[command(flatten)]
    common: Common,
    /// Replication pair `X:Y`. Repeatable; default is every pair in name order.
    #[arg(long = "pair", value_name = "X:Y")]
    pairs: Vec<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Add the disattenuated correlation rho_xy per pair.
    #[arg(long)]
    rho: bool,
    /// Random splits averaged in split-half reliability [default: 20]
    #[arg(long)]
    splits: Option<usize>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
    /// Replication under audit.
    #[arg(long)]
    main: String,
    /// Trusted replication.
    #[arg(long)]
    trusted: String,
    /// Minimum normalized kappa_x [default: 0.8]
    #[arg(long)]
    min_normalized: Option<f64>,
    /// Lower bound on IRR(main) / IRR(trusted) [default: 0.5]
    #[arg(long)]
    irr_ratio_min: Option<f64>,
    /// Upper bound on IRR(main) / IRR(trusted) [default: 2]
    #[arg(long)]
    irr_ratio_max: Option<f64>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Statistic to resample.
    #[arg(long, value_enum, default_value = "xrr")]
    metric: MetricArg,
    /// Replications for `--metric irr` (default: all).
    #[arg(long = "replication")]
    replications: Vec<String>,
    /// Number of bootstrap replicates [default: 1000]
    #[arg(long)]
    replicates: Option<usize>,
    /// Confidence level [default: 0.95]
    #[arg(long)]
    level: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Random seed [env: XRR_SEED] [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Plain-text `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    items: usize,
    /// Probability that an item's latent state is positive.
    #[arg(long, default_value_t = 0.5)]
    prevalence: f64,
    /// Probability that a pool X annotation matches the latent state.
    #[arg(long, default_value_t = 0.9)]
    accuracy_x: f64,
    #[arg(long, default_value_t = 0.9)]
    accuracy_y: f64,
    /// Annotations per item in pool X: `N` or a range `MIN..MAX`.
    #[arg(long, default_value = "2")]
    annotations_x: String,
    #[arg(long, default_value = "2")]
    annotations_y: String,
    /// Probability that pool Y sees the same latent state as pool X.
    #[arg(long, default_value_t = 1.0)]
    latent_agreement: f64,
    /// Also write the synthetic annotations here as long-format CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, short = 'f', value_enum)]
    format: Option<Format>,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Random splits for rho in scatter mode [default: 20]
    #[arg(long)]
    splits: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Long,
    Wide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Irr,
    Xrr,
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    IrrHistogram,
    Scatter,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn from_core(context: impl std::fmt::Display, e: xrr_core::Error) -> Self {
        Self {
            code: if e.is_degenerate() { 2 } else { 1 },
            message: format!("{context}: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T>;
}

impl<T> Context<T> for xrr_core::Result<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(what, e))
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Irr(args) => cmd_irr(args),
        Command::Xrr(args) => cmd_xrr(args),
        Command::Report(args) => cmd_report(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    }
}

/// `key = value` settings; `#` starts a comment.
#[derive(Debug, Default)]
struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: [&str; 10] = [
    "seed",
    "format",
    "input-format",
    "schema",
    "splits",
    "replicates",
    "level",
    "min-normalized",
    "irr-ratio-min",
    "irr-ratio-max",
];

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("{}:{}: expected `key = value`", path.display(), n + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "{}:{}: unknown key `{key}` (known: {})",
                    path.display(),
                    n + 1,
                    CONFIG_KEYS.join(", ")
                )));
            }
            values.insert(key, value.trim().trim_matches('"').to_owned());
        }
        Ok(Self {
            path: Some(path.to_owned()),
            values,
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                let path = self.path.as_deref().unwrap_or(Path::new("config"));
                CliError::usage(format!("{}: bad value `{raw}` for `{key}`: {e}", path.display()))
            }),
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: &ConfigFile) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Ok(raw) = std::env::var("XRR_SEED") {
        return raw
            .trim()
            .parse()
            .map_err(|e| CliError::usage(format!("XRR_SEED: bad seed `{raw}`: {e}")));
    }
    Ok(config.get("seed")?.unwrap_or(DEFAULT_SEED))
}

fn resolve_format(flag: Option<Format>, config: &ConfigFile) -> CliResult<ReportFormat> {
    match flag {
        Some(f) => Ok(f.into()),
        None => Ok(config.get::<ReportFormat>("format")?.unwrap_or(ReportFormat::Csv)),
    }
}

/// Fully resolved shared settings.
struct Session {
    table: AnnotationTable,
    labels: Option<Vec<String>>,
    seed: u64,
    format: ReportFormat,
    output: Option<PathBuf>,
    config: ConfigFile,
}

impl Session {
    fn open(common: Common) -> CliResult<Self> {
        let config = ConfigFile::load(common.config.as_deref())?;
        let seed = resolve_seed(common.seed, &config)?;
        let format = resolve_format(common.format, &config)?;
        let input_format = match common.input_format {
            Some(f) => f,
            None => match config.values.get("input-format").map(String::as_str) {
                None | Some("long") => InputFormat::Long,
                Some("wide") => InputFormat::Wide,
                Some(other) => return Err(CliError::usage(format!("config: unknown input-format `{other}`"))),
            },
        };
        let schema = common.schema.clone().or_else(|| config.values.get("schema").map(PathBuf::from));
        let overrides = parse_scale_overrides(&common.scales)?;
        let table = load_table(&common.inputs, input_format, schema.as_deref(), &overrides)?;
        let labels = if common.labels.is_empty() {
            None
        } else {
            for l in &common.labels {
                table.label_id(l).context("--labels")?;
            }
            Some(common.labels.clone())
        };
        Ok(Self {
            table,
            labels,
            seed,
            format,
            output: common.output,
            config,
        })
    }

    fn emit(&self, bytes: &[u8]) -> CliResult<()> {
        emit(self.output.as_deref(), bytes)
    }

    fn label_ids(&self) -> Vec<LabelId> {
        match &self.labels {
            None => (0..self.table.labels().len() as u32).map(LabelId).collect(),
            Some(names) => {
                let mut ids: Vec<LabelId> = names.iter().filter_map(|n| self.table.label_id(n).ok()).collect();
                ids.sort();
                ids.dedup();
                ids
            }
        }
    }

    fn pairs(&self, raw: &[String]) -> CliResult<Vec<(String, String)>> {
        if raw.is_empty() {
            let reps = self.table.replications();
            if reps.len() < 2 {
                return Err(CliError::usage(format!(
                    "need two replications to pair, found {}: {}",
                    reps.len(),
                    reps.join(", ")
                )));
            }
            let mut pairs = Vec::new();
            for (i, x) in reps.iter().enumerate() {
                for y in &reps[i + 1..] {
                    pairs.push((x.clone(), y.clone()));
                }
            }
            return Ok(pairs);
        }
        raw.iter()
            .map(|p| {
                let (x, y) = p
                    .split_once(':')
                    .filter(|(x, y)| !x.is_empty() && !y.is_empty())
                    .ok_or_else(|| CliError::usage(format!("--pair `{p}`: expected X:Y")))?;
                if x == y {
                    return Err(CliError::usage(format!("--pair `{p}`: replications must differ")));
                }
                for r in [x, y] {
                    self.table.replication_id(r).context(format!("--pair `{p}`"))?;
                }
                Ok((x.to_owned(), y.to_owned()))
            })
            .collect()
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let result = match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| format!("stdout: {e}"))
        }
    };
    result.map_err(CliError::usage)
}

fn parse_scale_overrides(raw: &[String]) -> CliResult<BTreeMap<String, Scale>> {
    raw.iter()
        .map(|s| {
            let (label, scale) = s
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--scale `{s}`: expected LABEL=SCALE")))?;
            let scale: Scale = scale
                .trim()
                .parse()
                .map_err(|e: String| CliError::usage(format!("--scale `{s}`: {e}")))?;
            Ok((label.trim().to_owned(), scale))
        })
        .collect()
}

fn load_table(
    inputs: &[String],
    format: InputFormat,
    schema: Option<&Path>,
    overrides: &BTreeMap<String, Scale>,
) -> CliResult<AnnotationTable> {
    if inputs.is_empty() {
        return Err(CliError::usage("no input files; pass --input PATH (or TAG=PATH)"));
    }
    let spec = match format {
        InputFormat::Long => None,
        InputFormat::Wide => {
            let path = schema.ok_or_else(|| CliError::usage("--input-format wide requires --schema"))?;
            Some(WideSchemaSpec::from_path(path).context(path.display())?)
        }
    };
    let mut tables = Vec::with_capacity(inputs.len());
    for input in inputs {
        let (tag, path) = match input.split_once('=') {
            Some((tag, path)) if !tag.is_empty() && !Path::new(input).exists() => (Some(tag), path),
            _ => (None, input.as_str()),
        };
        let table = match &spec {
            None => io::parse_long_csv(path).context(path)?,
            Some(spec) => {
                let mut spec = spec.clone();
                if let Some(tag) = tag {
                    spec.replication_column = None;
                    spec.replication = Some(tag.to_owned());
                }
                for (label, scale) in overrides {
                    if spec.labels.iter().any(|l| &l.id == label) {
                        spec.set_scale(label, *scale).context("--scale")?;
                    }
                }
                io::parse_wide_csv(path, &spec).context(path)?
            }
        };
        tables.push((tag, path, table));
    }
    let needs_rebuild = tables.len() > 1 || tables.iter().any(|(tag, ..)| tag.is_some()) || !overrides.is_empty();
    if !needs_rebuild {
        return Ok(tables.pop().map(|(_, _, t)| t).expect("one input"));
    }
    let mut scales: BTreeMap<String, Scale> = BTreeMap::new();
    for (_, path, table) in &tables {
        for (label, scale) in table.label_scales() {
            let scale = overrides.get(&label).copied().unwrap_or(scale);
            if let Some(prev) = scales.insert(label.clone(), scale) {
                if prev != scale {
                    return Err(CliError::usage(format!(
                        "{path}: label `{label}` is {scale} here but {prev} in an earlier input"
                    )));
                }
            }
        }
    }
    for label in overrides.keys() {
        if !scales.contains_key(label) {
            return Err(CliError::usage(format!("--scale: unknown label `{label}`")));
        }
    }
    let mut records = Vec::new();
    for (tag, path, table) in &tables {
        for mut r in table.raw_records() {
            if let Some(tag) = tag {
                r.replication = (*tag).to_owned();
            }
            r.value = match (scales[&r.label], r.value) {
                (Scale::Interval, RawValue::Category(c)) => RawValue::Score(c.parse().map_err(|_| {
                    CliError::usage(format!(
                        "{path}: label `{}` value `{c}` is not numeric and cannot be read as interval",
                        r.label
                    ))
                })?),
                (Scale::Categorical, RawValue::Score(v)) => RawValue::Category(format!("{v}")),
                (_, v) => v,
            };
            records.push(r);
        }
    }
    build_table(records, scales).context("combined inputs")
}

/// Collapses per-row failures: if every row failed, the first failure becomes
/// the command's error; otherwise failures stay as notes in the table.
fn all_failed(failures: Vec<Option<CliError>>) -> CliResult<()> {
    if failures.iter().any(Option::is_none) {
        return Ok(());
    }
    match failures.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| (*s).to_owned()).collect()
}

fn cmd_irr(args: IrrArgs) -> CliResult<()> {
    let session = Session::open(args.common)?;
    let rows = irr_table(&session.table, &session.labels).context("irr")?;
    let mut failures = Vec::new();
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            let est = r.estimate.as_ref();
            failures.push(r.error.as_ref().map(|e| CliError {
                code: 2,
                message: format!("label `{}` in `{}`: {e}", r.label, r.replication),
            }));
            vec![
                r.label.clone().into(),
                r.replication.clone().into(),
                est.map(|e| e.value).into(),
                Cell::Count(est.map_or(0, |e| e.n_items)),
                Cell::Count(est.map_or(0, |e| e.n_annotations.iter().sum())),
                est.and_then(|e| e.observed()).into(),
                est.and_then(|e| e.expected()).into(),
                r.error.clone().unwrap_or_default().into(),
            ]
        })
        .collect();
    all_failed(failures)?;
    let cols = columns(&["label", "replication", "iota", "n_items", "n_annotations", "d_o", "d_e", "note"]);
    session.emit(&io::write_table(&cols, &cells, session.format).context("render")?)
}

fn cmd_xrr(args: PairArgs) -> CliResult<()> {
    let session = Session::open(args.common)?;
    let pairs = session.pairs(&args.pairs)?;
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for label in session.label_ids() {
        let name = &session.table.label_info(label).name;
        for (x, y) in &pairs {
            let view = pair_stats(stats(&session.table, label, x), stats(&session.table, label, y));
            let result = view.and_then(|v| kappa_x(&v));
            let (est, note) = match result {
                Ok(e) => {
                    failures.push(None);
                    (Some(e), String::new())
                }
                Err(e) => {
                    let note = e.to_string();
                    failures.push(Some(CliError::from_core(format!("label `{name}` pair {x}:{y}"), e)));
                    (None, note)
                }
            };
            let est = est.as_ref();
            cells.push(vec![
                name.clone().into(),
                x.clone().into(),
                y.clone().into(),
                est.map(|e| e.value).into(),
                Cell::Count(est.map_or(0, |e| e.n_items)),
                Cell::Count(est.map_or(0, |e| e.n_annotations[0])),
                Cell::Count(est.map_or(0, |e| e.n_annotations[1])),
                est.and_then(|e| e.observed()).into(),
                est.and_then(|e| e.expected()).into(),
                note.into(),
            ]);
        }
    }
    all_failed(failures)?;
    let cols = columns(&["label", "x", "y", "kappa_x", "n_items", "n_annotations_x", "n_annotations_y", "d_o", "d_e", "note"]);
    session.emit(&io::write_table(&cols, &cells, session.format).context("render")?)
}

fn stats(table: &AnnotationTable, label: LabelId, replication: &str) -> xrr_core::model::LabelItemStats {
    let rep: ReplicationId = table.replication_id(replication).expect("validated pair");
    item_stats_by_id(table, label, rep)
}

fn reports(session: &Session, pairs: &[(String, String)], with_rho: bool, splits: Option<usize>) -> CliResult<Vec<ReplicationPairReport>> {
    let splits = match splits {
        Some(s) => s,
        None => session.config.get("splits")?.unwrap_or(DEFAULT_SPLITS),
    };
    if splits == 0 {
        return Err(CliError::usage("--splits must be at least 1"));
    }
    let options = ReportOptions {
        labels: session.labels.clone(),
        with_rho,
        splits,
        seed: session.seed,
    };
    let reports = build_reports(&session.table, pairs, &options).context("report")?;
    let rows: Vec<_> = reports.iter().flat_map(|r| &r.rows).collect();
    if !rows.is_empty() && rows.iter().all(|r| r.kappa_x.is_none()) {
        let first = &rows[0];
        return Err(CliError {
            code: 2,
            message: format!(
                "no label produced kappa_x; first problem (`{}`): {}",
                first.label,
                first.warnings.join("; ")
            ),
        });
    }
    Ok(reports)
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let session = Session::open(args.pair.common)?;
    let pairs = session.pairs(&args.pair.pairs)?;
    let reports = reports(&session, &pairs, args.rho, args.splits)?;
    for r in &reports {
        for row in &r.rows {
            for w in &row.warnings {
                eprintln!("warning: label `{}` pair {}:{}: {w}", row.label, r.x, r.y);
            }
        }
    }
    session.emit(&io::write_report(&reports, session.format).context("render")?)
}

fn cmd_audit(args: AuditArgs) -> CliResult<()> {
    let session = Session::open(args.common)?;
    let min_normalized = match args.min_normalized {
        Some(v) => v,
        None => session.config.get("min-normalized")?.unwrap_or(0.8),
    };
    let ratio_min = match args.irr_ratio_min {
        Some(v) => v,
        None => session.config.get("irr-ratio-min")?.unwrap_or(0.5),
    };
    let ratio_max = match args.irr_ratio_max {
        Some(v) => v,
        None => session.config.get("irr-ratio-max")?.unwrap_or(2.0),
    };
    if !(ratio_min > 0.0 && ratio_min <= ratio_max) || !min_normalized.is_finite() {
        return Err(CliError::usage(format!(
            "audit thresholds: need 0 < irr-ratio-min <= irr-ratio-max and a finite min-normalized (got {ratio_min}, {ratio_max}, {min_normalized})"
        )));
    }
    let pairs = session.pairs(&[format!("{}:{}", args.main, args.trusted)])?;
    let reports = reports(&session, &pairs, false, None)?;
    let cells: Vec<Vec<Cell>> = reports[0]
        .rows
        .iter()
        .map(|row| {
            let ratio = match (row.irr_x, row.irr_y) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
            let mut failed = Vec::new();
            match row.normalized_kappa_x {
                Some(n) if n >= min_normalized => {}
                Some(n) => failed.push(format!("normalized_kappa_x {} < {min_normalized}", io_fmt(n))),
                None => failed.push("normalized_kappa_x not computable".to_owned()),
            }
            match ratio {
                Some(r) if (ratio_min..=ratio_max).contains(&r) => {}
                Some(r) => failed.push(format!("irr_ratio {} outside [{ratio_min}, {ratio_max}]", io_fmt(r))),
                None => failed.push("irr_ratio not computable".to_owned()),
            }
            let verdict = if failed.is_empty() { "PASS" } else { "WARN" };
            vec![
                row.label.clone().into(),
                row.irr_x.into(),
                row.irr_y.into(),
                row.kappa_x.into(),
                row.normalized_kappa_x.into(),
                ratio.into(),
                verdict.into(),
                failed.join("; ").into(),
            ]
        })
        .collect();
    let cols = vec![
        "label".to_owned(),
        format!("irr_{}", args.main),
        format!("irr_{}", args.trusted),
        "kappa_x".to_owned(),
        "normalized_kappa_x".to_owned(),
        "irr_ratio".to_owned(),
        "verdict".to_owned(),
        "failed_checks".to_owned(),
    ];
    session.emit(&io::write_table(&cols, &cells, session.format).context("render")?)
}

fn io_fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn cmd_bootstrap(args: BootstrapArgs) -> CliResult<()> {
    let session = Session::open(args.pair.common)?;
    let config = BootstrapConfig {
        replicates: match args.replicates {
            Some(r) => r,
            None => session.config.get("replicates")?.unwrap_or(BootstrapConfig::default().replicates),
        },
        level: match args.level {
            Some(l) => l,
            None => session.config.get("level")?.unwrap_or(BootstrapConfig::default().level),
        },
        seed: session.seed,
    };
    config.validate().context("bootstrap settings")?;

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut push = |label: &str, target: String, result: xrr_core::Result<xrr_core::ReliabilityEstimate>| {
        let (est, note) = match result {
            Ok(e) => {
                failures.push(None);
                (Some(e), String::new())
            }
            Err(e) => {
                let note = e.to_string();
                failures.push(Some(CliError::from_core(format!("label `{label}` {target}"), e)));
                (None, note)
            }
        };
        let ci = est.as_ref().and_then(|e| e.ci.as_ref());
        cells.push(vec![
            label.to_owned().into(),
            target.into(),
            est.as_ref().map(|e| e.value).into(),
            ci.map(|c| c.lower).into(),
            ci.map(|c| c.upper).into(),
            Cell::Count(ci.map_or(0, |c| c.replicates)),
            Cell::Count(ci.map_or(0, |c| c.discarded)),
            note.into(),
        ]);
    };

    match args.metric {
        MetricArg::Irr => {
            let reps: Vec<String> = if args.replications.is_empty() {
                session.table.replications().to_vec()
            } else {
                for r in &args.replications {
                    session.table.replication_id(r).context("--replication")?;
                }
                args.replications.clone()
            };
            for label in session.label_ids() {
                let name = session.table.label_info(label).name.clone();
                for rep in &reps {
                    let s = stats(&session.table, label, rep);
                    push(&name, rep.clone(), bootstrap_ci(BootstrapInput::Stats(&s), BootstrapMetric::Irr, &config));
                }
            }
        }
        metric => {
            let metric = if metric == MetricArg::Xrr {
                BootstrapMetric::Xrr
            } else {
                BootstrapMetric::Normalized
            };
            let pairs = session.pairs(&args.pair.pairs)?;
            for label in session.label_ids() {
                let name = session.table.label_info(label).name.clone();
                for (x, y) in &pairs {
                    let result = pair_stats(stats(&session.table, label, x), stats(&session.table, label, y))
                        .and_then(|v| bootstrap_ci(BootstrapInput::View(&v), metric, &config));
                    push(&name, format!("{x}:{y}"), result);
                }
            }
        }
    }
    all_failed(failures)?;
    let metric = match args.metric {
        MetricArg::Irr => "iota",
        MetricArg::Xrr => "kappa_x",
        MetricArg::Normalized => "normalized_kappa_x",
    };
    let level = format!("{}", config.level * 100.0);
    let cols = vec![
        "label".to_owned(),
        if args.metric == MetricArg::Irr { "replication" } else { "pair" }.to_owned(),
        metric.to_owned(),
        format!("lower_{level}"),
        format!("upper_{level}"),
        "replicates".to_owned(),
        "discarded".to_owned(),
        "note".to_owned(),
    ];
    eprintln!("bootstrap: {} replicates, seed {}", config.replicates, config.seed);
    session.emit(&io::write_table(&cols, &cells, session.format).context("render")?)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file)?;
    let format = resolve_format(args.format, &file)?;
    let count = |flag: &str, raw: &str| -> CliResult<AnnotationCount> {
        raw.parse().map_err(|e| CliError::usage(format!("--{flag} `{raw}`: {e}")))
    };
    let config = SimulationConfig {
        n_items: args.items,
        prevalence: args.prevalence,
        accuracy_x: args.accuracy_x,
        accuracy_y: args.accuracy_y,
        annotations_x: count("annotations-x", &args.annotations_x)?,
        annotations_y: count("annotations-y", &args.annotations_y)?,
        latent_agreement: args.latent_agreement,
        seed,
    };
    let table = generate_pair(&config).context("simulate")?;
    if let Some(path) = &args.data {
        emit(Some(path), &io::write_long_csv(&table).context("simulate")?)?;
    }
    let label = xrr_core::simulate::LABEL;
    let x = xrr_core::item_stats(&table, label, xrr_core::simulate::REPLICATION_X).context("simulate")?;
    let y = xrr_core::item_stats(&table, label, xrr_core::simulate::REPLICATION_Y).context("simulate")?;
    let view = pair_stats(x.clone(), y.clone()).context("simulate")?;

    let irr_x = iota(&x).ok();
    let irr_y = iota(&y).ok();
    let kx = kappa_x(&view).ok();
    let norm = match (&kx, &irr_x, &irr_y) {
        (Some(k), Some(a), Some(b)) => normalized_kappa_x(k, a, b).ok().map(|e| e.value),
        _ => None,
    };
    let a_irr_x = analytic_irr(&config, Pool::X).ok();
    let a_irr_y = analytic_irr(&config, Pool::Y).ok();
    let a_kx = analytic_kappa_x(&config).ok();
    let a_norm = match (a_kx, a_irr_x, a_irr_y) {
        (Some(k), Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(k / (a.sqrt() * b.sqrt())),
        _ => None,
    };
    let rows: Vec<Vec<Cell>> = [
        ("irr_X", a_irr_x, irr_x.map(|e| e.value)),
        ("irr_Y", a_irr_y, irr_y.map(|e| e.value)),
        ("kappa_x", a_kx, kx.map(|e| e.value)),
        ("normalized_kappa_x", a_norm, norm),
    ]
    .into_iter()
    .map(|(name, analytic, empirical)| vec![name.into(), analytic.into(), empirical.into()])
    .collect();
    let cols = columns(&["statistic", "analytic", "empirical"]);
    emit(args.output.as_deref(), &io::write_table(&cols, &rows, format).context("render")?)
}

fn cmd_plotdata(args: PlotArgs) -> CliResult<()> {
    let session = Session::open(args.pair.common)?;
    let pairs = session.pairs(&args.pair.pairs)?;
    let data = match args.kind {
        PlotKind::IrrHistogram => {
            let reports = build_reports(&session.table, &pairs, &ReportOptions {
                labels: session.labels.clone(),
                with_rho: false,
                splits: DEFAULT_SPLITS,
                seed: session.seed,
            })
            .context("plotdata")?;
            PlotData::IrrHistogram(io::irr_points(&reports))
        }
        PlotKind::Scatter => PlotData::Scatter(io::scatter_points(&reports(&session, &pairs, true, args.splits)?)),
    };
    session.emit(&io::emit_plot_data(&data, &HistogramSpec::default()).context("plotdata")?)
}
