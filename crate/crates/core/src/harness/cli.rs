//! Command-line interface.
//!
//! Exit codes: 0 success, 1 invalid input or failed check, 2 I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{read_csv_path, write_rows, FeatureKind, LabelKind};
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::models::{
    default_gamma_grid, fit_optinet_lite, FittedModel, KnnModel, LabeledDataset, PartitionRegressor,
    Prediction, ProtoKnnModel, ProtoNnModel,
};
use crate::synthetic::registry;

use super::config::ExperimentConfig;
use super::sweep::rate_sweep;
use super::verify::run_battery;

#[derive(Parser, Debug)]
#[command(name = "metric-proto", version, about = "Prototype nearest-neighbor rules in metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a CSV dataset and save it as JSON.
    Fit(FitArgs),
    /// Predict labels for CSV rows with a saved model.
    Predict(PredictArgs),
    /// Run a convergence-rate sweep from a JSON config.
    Rates(RatesArgs),
    /// Run the self-check battery.
    Verify(VerifyArgs),
    /// List the built-in distribution families.
    ListFamilies,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
// snake_case aliases match the classifier names in experiment configs
enum ModelKind {
    #[value(alias = "proto_nn")]
    ProtoNn,
    #[value(alias = "proto_knn")]
    ProtoKnn,
    Knn,
    #[value(alias = "optinet_lite")]
    OptinetLite,
    Regressor,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Training CSV with columns x1..xd,label.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, value_name = "KIND")]
    model: ModelKind,
    /// euclidean, lp:<p>, discrete, edit or table:<path>.
    #[arg(long, default_value = "euclidean")]
    metric: String,
    /// Neighbor count for knn and proto_knn.
    #[arg(long)]
    k: Option<usize>,
    /// Use the first m rows as nuclei and train on the rest.
    #[arg(long, conflicts_with_all = ["nuclei", "nuclei_all"])]
    m: Option<usize>,
    /// CSV of nucleus points (any label column is ignored).
    #[arg(long, conflicts_with = "nuclei_all")]
    nuclei: Option<PathBuf>,
    /// Use every training point as a nucleus.
    #[arg(long)]
    nuclei_all: bool,
    /// Share of rows held out to choose gamma for optinet_lite.
    #[arg(long, default_value_t = 0.3)]
    holdout: f64,
    /// Number of classes; defaults to the largest label.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with columns x1..xd; a label column is ignored.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Regressors predict 0 in cells holding fewer than ln(n) points.
    #[arg(long)]
    truncated: bool,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn nucleus_source(args: &FitArgs, data: LabeledDataset, kind: &FeatureKind) -> Result<(LabeledDataset, Vec<Point>)> {
    if let Some(m) = args.m {
        if m == 0 || m >= data.len() {
            return Err(Error::Config(format!(
                "--m must leave training rows: got {m} of {} rows",
                data.len()
            )));
        }
        let (head, rest) = data.split_at(m);
        return Ok((rest, head.into_points()));
    }
    if let Some(path) = &args.nuclei {
        let nuclei = read_csv_path(path, kind)?.points;
        return Ok((data, nuclei));
    }
    if args.nuclei_all {
        let nuclei = data.points().to_vec();
        return Ok((data, nuclei));
    }
    Err(Error::Config("one of --m, --nuclei or --nuclei-all is required".into()))
}

fn fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let space = MetricSpace::parse(&args.metric)?;
    let kind = FeatureKind::for_metric(&space);
    let labels = if args.model == ModelKind::Regressor {
        LabelKind::Real
    } else {
        LabelKind::Class
    };
    let data = read_csv_path(&args.data, &kind)?.into_dataset(labels, args.classes)?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let need_k = || args.k.ok_or_else(|| Error::Config("--k is required for this model".into()));
    let model = match args.model {
        ModelKind::Knn => FittedModel::Knn(KnnModel::fit(&data, need_k()?, &space)?),
        ModelKind::ProtoNn => {
            let (train, nuclei) = nucleus_source(args, data, &kind)?;
            FittedModel::ProtoNn(ProtoNnModel::fit(&train, nuclei, &space)?)
        }
        ModelKind::ProtoKnn => {
            let k = need_k()?;
            let (train, nuclei) = nucleus_source(args, data, &kind)?;
            FittedModel::ProtoKnn(ProtoKnnModel::fit(&train, nuclei, k, &space)?)
        }
        ModelKind::Regressor => {
            let (train, nuclei) = nucleus_source(args, data, &kind)?;
            FittedModel::Regressor {
                model: PartitionRegressor::fit(&train, nuclei, &space)?,
                truncated: false,
            }
        }
        ModelKind::OptinetLite => {
            if !(args.holdout > 0.0 && args.holdout < 1.0) {
                return Err(Error::Config(format!("--holdout must lie in (0, 1), got {}", args.holdout)));
            }
            let held = (data.len() as f64 * args.holdout).round() as usize;
            if held == 0 || held >= data.len() {
                return Err(Error::Config("too few rows to hold out a validation set".into()));
            }
            let (train, holdout) = data.split_at(data.len() - held);
            let gammas = default_gamma_grid(train.points(), &space)?;
            FittedModel::GammaNet(fit_optinet_lite(&train, &holdout, &gammas, &space)?)
        }
    };
    model.save(&args.out)?;
    writeln!(out, "saved {} model to {}", model.name(), args.out.display()).map_err(io_err)?;
    Ok(())
}

fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = FittedModel::load(&args.model, args.truncated)?;
    let kind = FeatureKind::for_metric(model.space());
    let points = read_csv_path(&args.data, &kind)?.points;
    let labels = points
        .iter()
        .map(|p| {
            Ok(match model.predict(p)? {
                Prediction::Class(c) => (c + 1).to_string(),
                Prediction::Real(v) => v.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = match &kind {
        FeatureKind::Symbol(t) => Some(t.as_ref()),
        _ => None,
    };
    match &args.out {
        Some(path) => write_rows(create(path)?, &points, &labels, "label", table),
        None => write_rows(out, &points, &labels, "label", table),
    }
}

fn rates(args: &RatesArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let experiment = ExperimentConfig::load(&args.config)?.validate()?;
    let report = rate_sweep(&experiment)?;
    match &args.out {
        Some(path) => report.write_csv(create(path)?)?,
        None => report.write_csv(&mut *out)?,
    }
    let summary = serde_json::to_string_pretty(&report.summary())?;
    match (&args.summary, &args.out) {
        (Some(path), _) => {
            let mut w = create(path)?;
            writeln!(w, "{summary}").map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        (None, Some(_)) => writeln!(out, "{summary}").map_err(io_err)?,
        (None, None) => writeln!(err, "{summary}").map_err(io_err)?,
    }
    Ok(())
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let outcomes = run_battery(args.seed);
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {} ({})", o.name, o.detail).map_err(io_err)?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn list_families(out: &mut dyn Write) -> Result<()> {
    for (name, about) in registry() {
        writeln!(out, "{name:<26} {about}").map_err(io_err)?;
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => fit(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Rates(a) => rates(a, out, err),
        Command::Verify(a) => match verify(a, out) {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
        Command::ListFamilies => list_families(out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs against the process's standard streams.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(argv, &mut out, &mut err);
    let _ = out.flush();
    code
}
