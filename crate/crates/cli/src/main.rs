//! `wdn`: ingest edge lists, generate fairness/goodness weights, predict and
//! evaluate.
//!
//! Exit codes: 0 success, 1 usage, 2 input/output or parse, 3 numeric.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wdn::eval::{read_predictions_csv, render_tables, write_predictions_csv};
use wdn::fairness::compute_fairness_goodness;
use wdn::ingest::{ingest, sha256_hex, DatasetSpec, Delimiter, Snapshot};
use wdn::{
    evaluate, run_experiment, run_predictions, Bandwidth, DenominatorPolicy, ErrorClass, EvaluationReport,
    ExperimentConfig, KernelKind, Method, TrainSize, Variant, WeightRange, ZeroDistancePolicy,
};

const DEFAULT_SAMPLE: usize = 5000;

#[derive(Parser, Debug)]
#[command(name = "wdn", version, about = "Weight prediction on directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an edge list into a self-describing snapshot.
    Ingest(IngestArgs),
    /// Compute fairness and goodness scores for every vertex of a snapshot.
    GenWeights(GenWeightsArgs),
    /// Fit on the training split and write per-element predictions.
    Predict(PredictArgs),
    /// Score a predictions file, or run and score experiments on a snapshot.
    Evaluate(EvaluateArgs),
    /// Run every task with both methods and print the result tables.
    ReproduceTables(TablesArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Raw weight range as `lo,hi`.
    #[arg(long, default_value = "-10,10", value_parser = parse_range, allow_hyphen_values = true)]
    range: WeightRange,
    /// Records have no fourth timestamp field.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, default_value = "auto", value_parser = parse_delimiter)]
    delimiter: Delimiter,
    /// Number of edges to sample; without it, up to 5000 are kept.
    #[arg(long, conflicts_with = "all")]
    sample: Option<usize>,
    /// Keep every edge.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Name shown in the summary table.
    #[arg(long)]
    network: Option<String>,
}

#[derive(Args, Debug)]
struct GenWeightsArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TaskArg {
    Origin,
    Terminal,
    Edge,
}

impl From<TaskArg> for Variant {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Origin => Variant::Origin,
            TaskArg::Terminal => Variant::Terminal,
            TaskArg::Edge => Variant::Edge,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Knn,
    Svm,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KernelArg {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ZeroArg {
    Exclude,
    Include,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DenominatorArg {
    Neighborhood,
    K,
}

/// Experiment settings. Flags override values loaded with `--config`.
#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// JSON experiment config, e.g. one echoed in an earlier report.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    k: Option<usize>,
    /// `stddev` or a positive number.
    #[arg(long, value_parser = parse_bandwidth)]
    h: Option<Bandwidth>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    coef0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    zero_distance: Option<ZeroArg>,
    #[arg(long, value_enum)]
    denominator: Option<DenominatorArg>,
    /// Drop an element from its own neighbor set.
    #[arg(long)]
    exclude_self: bool,
    /// Training size for the chosen task as an element count.
    #[arg(long, conflicts_with = "train_fraction")]
    train_count: Option<usize>,
    /// Training size for the chosen task as a fraction.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    snapshot: PathBuf,
    /// Predictions CSV; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, conflicts_with = "snapshot", required_unless_present = "snapshot")]
    predictions: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Number of runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1, requires = "snapshot")]
    repeat: usize,
    /// Report JSON (an array when several runs are made).
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    network: Option<String>,
    /// Directory for the six report JSON files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_range(s: &str) -> Result<WeightRange, String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    WeightRange::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_delimiter(s: &str) -> Result<Delimiter, String> {
    s.parse().map_err(|e: wdn::Error| e.to_string())
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("stddev") {
        return Ok(Bandwidth::TrainingStdDev);
    }
    match s.parse::<f64>() {
        Ok(h) if h.is_finite() && h > 0.0 => Ok(Bandwidth::Fixed(h)),
        _ => Err(format!("expected `stddev` or a positive number, got `{s}`")),
    }
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| wdn::Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| wdn::Error::Parse {
                    path: path.clone(),
                    line: e.line(),
                    message: e.to_string(),
                })?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(t) = self.task {
            c.task = t.into();
        }
        if let Some(m) = self.method {
            c.method = match m {
                MethodArg::Knn => Method::Knn,
                MethodArg::Svm => Method::Svm,
            };
        }
        if let Some(k) = self.k {
            c.knn.k = k;
        }
        if let Some(h) = self.h {
            c.bandwidth = h;
        }
        if let Some(kernel) = self.kernel {
            c.svm.kernel = match kernel {
                KernelArg::Linear => KernelKind::Linear,
                KernelArg::Polynomial => KernelKind::Polynomial,
                KernelArg::Rbf => KernelKind::Rbf,
            };
        }
        if let Some(d) = self.degree {
            c.svm.degree = d;
        }
        if let Some(v) = self.coef0 {
            c.svm.coef0 = v;
        }
        if self.gamma.is_some() {
            c.svm.gamma = self.gamma;
        }
        if let Some(l) = self.lambda {
            c.svm.lambda = l;
        }
        if let Some(s) = self.seed {
            c.split.seed = s;
        }
        if let Some(z) = self.zero_distance {
            c.knn.zero_distance = match z {
                ZeroArg::Exclude => ZeroDistancePolicy::Exclude,
                ZeroArg::Include => ZeroDistancePolicy::Include,
            };
        }
        if let Some(d) = self.denominator {
            c.knn.denominator = match d {
                DenominatorArg::Neighborhood => DenominatorPolicy::NeighborhoodSize,
                DenominatorArg::K => DenominatorPolicy::LiteralK,
            };
        }
        if self.exclude_self {
            c.neighbors.exclude_self = true;
        }
        let size = match (self.train_count, self.train_fraction) {
            (Some(n), _) => Some(TrainSize::Count(n)),
            (_, Some(f)) => Some(TrainSize::Fraction(f)),
            _ => None,
        };
        if let Some(size) = size {
            match c.task {
                Variant::Edge => c.split.edge_train = size,
                _ => c.split.vertex_train = size,
            }
        }
        c.knn.validate()?;
        Ok(c)
    }
}

fn load_snapshot(path: &Path) -> Result<(Snapshot, String)> {
    Ok(Snapshot::load(path)?)
}

/// Echoes the snapshot's actual edge count as the sample size.
fn bind_to_snapshot(mut c: ExperimentConfig, snap: &Snapshot) -> ExperimentConfig {
    c.split.sample_size = snap.edges.len();
    c
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| {
        wdn::Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let spec = DatasetSpec {
        path: a.input.clone(),
        weight_range: a.range,
        has_timestamp: !a.no_timestamp,
        delimiter: a.delimiter,
    };
    let snap = match (a.sample, a.all) {
        (Some(n), _) => ingest(&spec, Some(n), a.seed)?,
        (None, true) => ingest(&spec, None, a.seed)?,
        (None, false) => match ingest(&spec, Some(DEFAULT_SAMPLE), a.seed) {
            Err(wdn::Error::SampleTooLarge { .. }) => ingest(&spec, None, a.seed)?,
            other => other?,
        },
    };
    let json = snap.to_json()?;
    write_output(&a.output, json.as_bytes())?;

    let s = snap.summary();
    let name = a.network.clone().unwrap_or_else(|| snap.provenance.source.clone());
    let w = name.len().max(7);
    println!(
        "| {:<w$} | {:>6} | {:>6} | {:>6} | {:>10} |",
        "Network", "|O|", "|T|", "|E|", "% positive"
    );
    println!(
        "| {:<w$} | {:>6} | {:>6} | {:>6} | {:>9.2}% |",
        name,
        s.origins,
        s.terminals,
        s.edges,
        100.0 * s.positive_fraction
    );
    eprintln!("snapshot sha256 {}", sha256_hex(json.as_bytes()));
    Ok(())
}

#[derive(Serialize)]
struct WeightsMeta<'a> {
    format: &'a str,
    snapshot_sha256: &'a str,
    params: wdn::FgParams,
    iterations: usize,
    converged: bool,
}

fn cmd_gen_weights(a: &GenWeightsArgs) -> Result<()> {
    let (snap, sha) = load_snapshot(&a.snapshot)?;
    let (g, weights) = snap.graph()?;
    let params = wdn::FgParams {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let s = compute_fairness_goodness(&g, &weights, params)?;
    if !s.converged {
        eprintln!("warning: no convergence after {} sweeps", s.iterations);
    }
    let meta = WeightsMeta {
        format: "wdn-weights/1",
        snapshot_sha256: &sha,
        params,
        iterations: s.iterations,
        converged: s.converged,
    };
    let mut buf = Vec::new();
    writeln!(buf, "# {}", serde_json::to_string(&meta)?)?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["role", "vertex", "score"])?;
        for (tok, f) in g.origin_tokens().iter().zip(&s.fairness) {
            w.write_record(["origin", tok, &f.to_string()])?;
        }
        for (tok, v) in g.terminal_tokens().iter().zip(&s.goodness) {
            w.write_record(["terminal", tok, &v.to_string()])?;
        }
        w.flush()?;
    }
    write_output(&a.output, &buf)?;
    eprintln!(
        "{} fairness and {} goodness scores after {} sweeps",
        s.fairness.len(),
        s.goodness.len(),
        s.iterations
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let config = a.exp.resolve()?;
    let (snap, sha) = load_snapshot(&a.snapshot)?;
    let set = run_predictions(&snap, &sha, &bind_to_snapshot(config, &snap))?;
    let mut buf = Vec::new();
    write_predictions_csv(&set, &mut buf)?;
    match &a.output {
        Some(path) => {
            write_output(path, &buf)?;
            eprintln!("{} predictions written to {}", set.rows.len(), path.display());
        }
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn report_json(reports: &[EvaluationReport]) -> Result<String> {
    Ok(match reports {
        [one] => one.to_json()?,
        many => serde_json::to_string_pretty(many)?,
    })
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let reports = if let Some(path) = &a.predictions {
        let file = fs::File::open(path).map_err(|source| wdn::Error::Io {
            path: path.clone(),
            source,
        })?;
        let set = read_predictions_csv(io::BufReader::new(file)).map_err(|e| match e {
            wdn::Error::Parse { line, message, .. } => wdn::Error::Parse {
                path: path.clone(),
                line,
                message,
            },
            other => other,
        })?;
        let r = evaluate(&set)?;
        println!("{}", r.pair());
        vec![r]
    } else {
        let snapshot = a
            .snapshot
            .as_ref()
            .ok_or_else(|| usage("--predictions or --snapshot is required"))?;
        if a.repeat == 0 {
            return Err(usage("--repeat must be at least 1"));
        }
        let base = a.exp.resolve()?;
        let (snap, sha) = load_snapshot(snapshot)?;
        let base = bind_to_snapshot(base, &snap);
        let mut out = Vec::with_capacity(a.repeat);
        for i in 0..a.repeat as u64 {
            let mut c = base.clone();
            c.split.seed = base.split.seed.checked_add(i).ok_or_else(|| usage("seed overflow"))?;
            let r = run_experiment(&snap, &sha, &c)?;
            println!("seed {}: {} {} {}", c.split.seed, c.task, c.method, r.pair());
            out.push(r);
        }
        out
    };
    if let Some(path) = &a.output {
        write_output(path, report_json(&reports)?.as_bytes())?;
    }
    Ok(())
}

fn cmd_reproduce_tables(a: &TablesArgs) -> Result<()> {
    let base = a.exp.resolve()?;
    let (snap, sha) = load_snapshot(&a.snapshot)?;
    let base = bind_to_snapshot(base, &snap);
    if let Some(dir) = &a.output_dir {
        fs::create_dir_all(dir).map_err(|source| wdn::Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let mut reports = Vec::new();
    for task in [Variant::Origin, Variant::Terminal, Variant::Edge] {
        for method in [Method::Knn, Method::Svm] {
            let mut c = base.clone();
            c.task = task;
            c.method = method;
            let r = run_experiment(&snap, &sha, &c)?;
            if let Some(dir) = &a.output_dir {
                write_output(&dir.join(format!("{task}-{method}.json")), r.to_json()?.as_bytes())?;
            }
            reports.push(r);
        }
    }
    let name = a.network.clone().unwrap_or_else(|| snap.provenance.source.clone());
    print!("{}", render_tables(&name, &reports));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::GenWeights(a) => cmd_gen_weights(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::ReproduceTables(a) => cmd_reproduce_tables(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<wdn::Error>().map(wdn::Error::class) {
        Some(ErrorClass::Usage) => 1,
        Some(ErrorClass::Numeric) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
