use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctsfeat::format::NumberFormat;
use ctsfeat::inference::{dependence_test, holm_adjust, TestFamily};
use ctsfeat::mining::{
    boxplot_outlier_count, distance_matrix, feature_table, outlier_scores, two_dimensional_scaling, Feature,
    FeatureExtraction, Metric,
};
use ctsfeat::simulate::{generate_corpus, CorpusSpec};
use ctsfeat::viz::{
    charts, combined_cycle_chart, cycle_length_chart, cycle_lengths, dependence_plot_data, ewma_marginal_chart,
    ifs_circle_transform, rate_evolution, render_svg, PlotData, StyleOptions, Window,
};
use ctsfeat::{Alphabet, CategoricalSeries};
use serde_json::{json, Map, Value};

use crate::corpus::{parse_corpus, write_csv, write_fasta, AlphabetSource, CorpusFile, CorpusFormat};
use crate::error::{usage, CliError, CliResult};
use crate::output::{emit, json_number, json_numbers, json_optional, render_json};

/// Environment variable overriding the worker count when `--jobs` is absent.
pub const JOBS_ENV: &str = "CTSFEAT_JOBS";

#[derive(Debug, Parser)]
#[command(name = "ctsfeat", version, about = "Features, tests, plots and distances for categorical time series")]
pub struct Cli {
    /// Print numbers as exact hexadecimal floats.
    #[arg(long, global = true)]
    pub bitexact: bool,

    /// Worker threads (default: all cores, or the CTSFEAT_JOBS variable).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output file (default: standard output).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feature matrix as CSV, one row per series.
    Features(FeaturesArgs),
    /// Serial dependence tests per series, as JSON.
    Test(TestArgs),
    /// Render a plot as SVG.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
    /// Pairwise distance matrix as CSV.
    Dist(DistArgs),
    /// Distance-sum outlier ranking and boxplot rule, as JSON.
    Outliers(OutlierArgs),
    /// Two-dimensional scaling coordinates as CSV.
    Mds(DistArgs),
    /// Generate a corpus file from a JSON corpus specification.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file (symbol-csv or fasta).
    pub input: PathBuf,

    /// Ordered alphabet, e.g. `a,c,g,t`.
    #[arg(long, value_delimiter = ',', conflicts_with = "infer_alphabet")]
    pub alphabet: Option<Vec<String>>,

    /// Use the sorted distinct symbols of the file as the alphabet.
    #[arg(long)]
    pub infer_alphabet: bool,

    /// Corpus format: csv or fasta (default: detected from content).
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Features: gini, entropy, chebycheff, marginal, or any serial measure.
    #[arg(long, value_delimiter = ',', required = true)]
    pub measures: Vec<String>,

    /// Lags for serial measures.
    #[arg(long = "lag", value_delimiter = ',', default_value = "1")]
    pub lags: Vec<usize>,

    /// Emit the components of serial measures instead of their values.
    #[arg(long)]
    pub expand: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    #[value(name = "v", alias = "cramers_v")]
    V,
    #[value(name = "kappa", alias = "cohens_kappa")]
    Kappa,
}

impl From<FamilyArg> for TestFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::V => TestFamily::CramersV,
            FamilyArg::Kappa => TestFamily::CohensKappa,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "kappa")]
    pub family: FamilyArg,

    #[arg(long, default_value_t = charts::DEFAULT_MAX_LAG)]
    pub max_lag: usize,

    #[arg(long, default_value_t = charts::DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Add Holm-adjusted p-values across lags.
    #[arg(long)]
    pub holm: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Db,
    Dcc,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Db => Metric::Db,
            MetricArg::Dcc => Metric::Dcc,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "db")]
    pub metric: MetricArg,

    #[arg(long, default_value_t = ctsfeat::mining::DEFAULT_MAX_LAG)]
    pub max_lag: usize,
}

#[derive(Debug, Args)]
pub struct OutlierArgs {
    #[command(flatten)]
    pub dist: DistArgs,

    /// Whisker length in interquartile ranges.
    #[arg(long, default_value_t = ctsfeat::mining::DEFAULT_RANGE_FACTOR)]
    pub range_factor: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Corpus specification (JSON).
    pub spec: PathBuf,

    /// Output format: csv or fasta.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct PlotCommon {
    #[command(flatten)]
    pub input: InputArgs,

    /// One-based index of the series to plot.
    #[arg(long, default_value_t = 1)]
    pub series: usize,

    #[arg(long)]
    pub title: Option<String>,

    /// Also write the plotted data as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlotKind {
    /// Step plot of the categories over time.
    Series(PlotCommon),
    /// Cumulated category counts over time.
    Rate(PlotCommon),
    /// Histogram of cycle lengths of one category.
    Cycles {
        #[command(flatten)]
        common: PlotCommon,
        /// Category symbol.
        #[arg(long)]
        category: String,
    },
    /// IFS circle transformation scatter.
    Ifs {
        #[command(flatten)]
        common: PlotCommon,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Starting point `x,y`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        origin: Option<Vec<f64>>,
        /// Zoom region `x0,x1,y0,y1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        window: Option<Vec<f64>>,
    },
    /// Serial dependence plot with critical values.
    Dependence {
        #[command(flatten)]
        common: PlotCommon,
        #[arg(long, value_enum, default_value = "kappa")]
        family: FamilyArg,
        #[arg(long, default_value_t = charts::DEFAULT_MAX_LAG)]
        max_lag: usize,
        #[arg(long, default_value_t = charts::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Cycle-length control chart.
    CycleChart {
        #[command(flatten)]
        common: PlotCommon,
        /// Category symbol; omit with --combined.
        #[arg(long, required_unless_present = "combined", conflicts_with = "combined")]
        category: Option<String>,
        /// Chart every category on one time axis.
        #[arg(long)]
        combined: bool,
        #[arg(long, default_value_t = charts::DEFAULT_CHART_ALPHA)]
        alpha: f64,
        /// In-control probability (default: sample frequency).
        #[arg(long)]
        probability: Option<f64>,
    },
    /// EWMA chart of the marginal distribution.
    Ewma {
        #[command(flatten)]
        common: PlotCommon,
        #[arg(long, default_value_t = charts::DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = charts::DEFAULT_K)]
        k: f64,
        /// In-control marginal (default: sample frequencies).
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<f64>>,
        /// Plot only the per-step minimum and maximum statistics.
        #[arg(long)]
        collapse: bool,
    },
}

pub struct Context {
    pub format: NumberFormat,
    pub output: Option<PathBuf>,
}

pub fn configure_jobs(jobs: Option<usize>) -> CliResult<()> {
    let jobs = match jobs {
        Some(n) => Some(n),
        None => match std::env::var(JOBS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| usage(format!("{JOBS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("the worker count must be positive"));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_jobs(cli.jobs)?;
    let ctx = Context {
        format: if cli.bitexact { NumberFormat::BitExact } else { NumberFormat::Significant },
        output: cli.output,
    };
    let text = match cli.command {
        Command::Features(a) => features(&ctx, &a)?,
        Command::Test(a) => test(&ctx, &a)?,
        Command::Plot { kind } => plot(&ctx, &kind)?,
        Command::Dist(a) => dist(&ctx, &a)?,
        Command::Outliers(a) => outliers(&ctx, &a)?,
        Command::Mds(a) => mds(&ctx, &a)?,
        Command::Simulate(a) => simulate(&a)?,
    };
    emit(ctx.output.as_deref(), &text)
}

fn read_input(args: &InputArgs) -> CliResult<CorpusFile> {
    let path = args.input.display().to_string();
    let text = std::fs::read_to_string(&args.input).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let source = match (&args.alphabet, args.infer_alphabet) {
        (Some(symbols), false) => AlphabetSource::Declared(Alphabet::new(symbols.iter().map(|s| s.trim().to_string()))?),
        (None, true) => AlphabetSource::Infer,
        _ => return Err(usage("declare the alphabet with --alphabet or pass --infer-alphabet")),
    };
    let format = args.format.as_deref().map(str::parse::<CorpusFormat>).transpose()?;
    parse_corpus(&text, &path, format, &source)
}

fn features(ctx: &Context, a: &FeaturesArgs) -> CliResult<String> {
    let corpus = read_input(&a.input)?;
    let spec = FeatureExtraction {
        features: a.measures.iter().map(|m| m.trim().parse::<Feature>()).collect::<Result<_, _>>()?,
        lags: a.lags.clone(),
        expand: a.expand,
    };
    let vectors = spec.extract_corpus(&corpus.series)?;
    let mut table = feature_table(&corpus.ids, &vectors);
    if corpus.has_labels() {
        table.header.insert(1, "label".into());
        for (row, label) in table.rows.iter_mut().zip(&corpus.labels) {
            row.insert(1, label.as_deref().unwrap_or("").into());
        }
    }
    Ok(table.to_csv(ctx.format))
}

fn test(ctx: &Context, a: &TestArgs) -> CliResult<String> {
    let corpus = read_input(&a.input)?;
    let family: TestFamily = a.family.into();
    let f = ctx.format;
    let mut reports = Vec::new();
    for (id, s) in corpus.ids.iter().zip(&corpus.series) {
        let report = dependence_test(s, family, a.max_lag, a.alpha)?;
        let holm = if a.holm { Some(holm_adjust(&report.p_values())?) } else { None };
        let first = &report.rows[0];
        let lags: Vec<Value> = report
            .rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let mut m = Map::new();
                m.insert("lag".into(), json!(row.lag));
                m.insert("estimate".into(), json_number(row.estimate, f));
                m.insert("statistic".into(), json_number(row.statistic, f));
                m.insert("p_value".into(), json_number(row.p_value, f));
                if let Some(h) = &holm {
                    m.insert("p_holm".into(), json_number(h[k], f));
                }
                let reject = row.estimate > row.critical_upper || row.critical_lower.is_some_and(|lo| row.estimate < lo);
                m.insert("reject".into(), json!(reject));
                Value::Object(m)
            })
            .collect();
        reports.push(json!({
            "id": id,
            "length": report.len,
            "critical_lower": json_optional(first.critical_lower, f),
            "critical_upper": json_number(first.critical_upper, f),
            "lags": lags,
        }));
    }
    render_json(&json!({
        "family": family,
        "alpha": json_number(a.alpha, f),
        "max_lag": a.max_lag,
        "holm": a.holm,
        "series": reports,
    }))
}

fn pick(corpus: &CorpusFile, index: usize) -> CliResult<&CategoricalSeries> {
    if index == 0 || index > corpus.series.len() {
        return Err(usage(format!(
            "series {index} does not exist; the corpus has {} series",
            corpus.series.len()
        )));
    }
    Ok(&corpus.series[index - 1])
}

fn category(series: &CategoricalSeries, symbol: &str) -> CliResult<usize> {
    series
        .alphabet()
        .code_of(symbol)
        .ok_or_else(|| usage(format!("category {symbol:?} is not in the alphabet")))
}

fn exact<const N: usize>(values: &Option<Vec<f64>>, what: &str) -> CliResult<Option<[f64; N]>> {
    values
        .as_ref()
        .map(|v| <[f64; N]>::try_from(v.as_slice()).map_err(|_| usage(format!("{what} needs {N} comma-separated numbers"))))
        .transpose()
}

fn plot(ctx: &Context, kind: &PlotKind) -> CliResult<String> {
    let common = match kind {
        PlotKind::Series(c) | PlotKind::Rate(c) => c,
        PlotKind::Cycles { common, .. }
        | PlotKind::Ifs { common, .. }
        | PlotKind::Dependence { common, .. }
        | PlotKind::CycleChart { common, .. }
        | PlotKind::Ewma { common, .. } => common,
    };
    let corpus = read_input(&common.input)?;
    let s = pick(&corpus, common.series)?;
    let symbols = s.alphabet().symbols().to_vec();
    let (data, table) = match kind {
        PlotKind::Series(_) => {
            let mut t = ctsfeat::format::Table::new(["t", "category"]);
            for (k, sym) in s.symbols().enumerate() {
                t.push(vec![(k + 1).into(), sym.into()]);
            }
            (
                PlotData::TimeSeries {
                    codes: s.codes().to_vec(),
                    symbols,
                },
                t,
            )
        }
        PlotKind::Rate(_) => {
            let rate = rate_evolution(s);
            let t = rate.table();
            (PlotData::RateEvolution(rate), t)
        }
        PlotKind::Cycles { category: c, .. } => {
            let hist = cycle_lengths(s, category(s, c)?)?;
            let t = hist.table();
            (PlotData::Histogram(hist), t)
        }
        PlotKind::Ifs {
            alpha,
            beta,
            origin,
            window,
            ..
        } => {
            let origin = exact::<2>(origin, "--origin")?.unwrap_or([0.0, 0.0]);
            let window = exact::<4>(window, "--window")?
                .map(|[x0, x1, y0, y1]| {
                    if x0 < x1 && y0 < y1 {
                        Ok(Window { x0, x1, y0, y1 })
                    } else {
                        Err(usage("--window needs x0 < x1 and y0 < y1"))
                    }
                })
                .transpose()?;
            let fs = ifs_circle_transform(s, *alpha, *beta, origin)?;
            let t = fs.table(&symbols);
            (PlotData::Ifs { series: fs, window }, t)
        }
        PlotKind::Dependence {
            family,
            max_lag,
            alpha,
            ..
        } => {
            let d = dependence_plot_data(s, (*family).into(), *max_lag, *alpha)?;
            let t = d.table();
            (PlotData::Dependence(d), t)
        }
        PlotKind::CycleChart {
            category: c,
            combined,
            alpha,
            probability,
            ..
        } => {
            let chart = if *combined {
                if probability.is_some() {
                    return Err(usage("--probability applies to a single category"));
                }
                combined_cycle_chart(s, *alpha, None)?
            } else {
                let symbol = c.as_deref().unwrap_or_default();
                cycle_length_chart(s, category(s, symbol)?, *alpha, *probability)?.to_control_chart(symbol)
            };
            let t = chart.table();
            (PlotData::ControlChart(chart), t)
        }
        PlotKind::Ewma {
            lambda,
            k,
            reference,
            collapse,
            ..
        } => {
            let reference = reference.clone().unwrap_or_else(|| s.marginal_probabilities());
            let chart = ewma_marginal_chart(s, *lambda, &reference, *k, *collapse)?;
            let t = chart.table();
            (PlotData::ControlChart(chart), t)
        }
    };
    if let Some(path) = &common.csv {
        std::fs::write(path, table.to_csv(ctx.format))?;
    }
    Ok(render_svg(
        &data,
        &StyleOptions {
            title: common.title.clone(),
            point_radius: None,
        },
    )?)
}

fn matrix(a: &DistArgs) -> CliResult<(CorpusFile, ctsfeat::mining::DistanceMatrix)> {
    let corpus = read_input(&a.input)?;
    let dm = distance_matrix(&corpus.series, a.metric.into(), a.max_lag)?.with_ids(corpus.ids.clone())?;
    Ok((corpus, dm))
}

fn dist(ctx: &Context, a: &DistArgs) -> CliResult<String> {
    Ok(matrix(a)?.1.table().to_csv(ctx.format))
}

fn mds(ctx: &Context, a: &DistArgs) -> CliResult<String> {
    Ok(two_dimensional_scaling(&matrix(a)?.1)?.table().to_csv(ctx.format))
}

fn outliers(ctx: &Context, a: &OutlierArgs) -> CliResult<String> {
    let (corpus, dm) = matrix(&a.dist)?;
    let f = ctx.format;
    let ranking = outlier_scores(&dm);
    let boxplot = boxplot_outlier_count(&ranking.scores, a.range_factor)?;
    let ranked: Vec<Value> = ranking
        .order
        .iter()
        .enumerate()
        .map(|(rank, &k)| {
            json!({
                "rank": rank + 1,
                "id": corpus.ids[k],
                "label": corpus.labels[k],
                "score": json_number(ranking.scores[k], f),
            })
        })
        .collect();
    let metric: Metric = a.dist.metric.into();
    render_json(&json!({
        "metric": metric.name(),
        "max_lag": a.dist.max_lag,
        "ranking": ranked,
        "boxplot": {
            "range_factor": json_number(boxplot.range_factor, f),
            "q1": json_number(boxplot.q1, f),
            "q3": json_number(boxplot.q3, f),
            "threshold": json_number(boxplot.threshold, f),
            "count": boxplot.count(),
            "flagged": boxplot.flagged.iter().map(|&k| corpus.ids[k].clone()).collect::<Vec<_>>(),
        },
        "scores": json_numbers(&ranking.scores, f),
    }))
}

fn simulate(a: &SimulateArgs) -> CliResult<String> {
    let path = a.spec.display().to_string();
    let text = std::fs::read_to_string(&a.spec).map_err(|source| CliError::Read { path, source })?;
    let spec: CorpusSpec = serde_json::from_str(&text)?;
    let corpus = generate_corpus(&spec)?;
    let labels: Vec<Option<String>> = corpus.labels.iter().map(|l| Some(l.to_string())).collect();
    match a.format.parse::<CorpusFormat>()? {
        CorpusFormat::SymbolCsv => Ok(write_csv(&corpus.series, &labels)),
        CorpusFormat::Fasta => {
            let ids: Vec<String> = (1..=corpus.series.len()).map(|k| k.to_string()).collect();
            write_fasta(&corpus.series, &ids, &labels)
        }
    }
}
