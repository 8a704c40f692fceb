//! Error metrics, the end-to-end experiment pipeline, and its artifacts.
//!
//! A run is fully described by an [`ExperimentConfig`] plus the snapshot it
//! reads. Vertex tasks first derive ground-truth vertex weights with
//! fairness/goodness on the whole snapshot, then split the vertex set; the
//! edge task splits the edges directly. Metrics are computed on the scaled
//! weights: [0, 1] for origins, [-1, 1] for terminals and edges.

use std::fmt::{self, Write as _};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{compute_fairness_goodness, FgParams};
use crate::graph::{Element, NeighborOptions, PartialWeighting, Variant, WeightRange};
use crate::ingest::{make_split, Snapshot, SplitPlan, SAMPLER};
use crate::knn::{KnnConfig, KnnRegressor};
use crate::metric::{Bandwidth, ProfileTable, TieStats};
use crate::svm::{KernelSpec, SvmConfig, SvmModel};

pub const PREDICTIONS_FORMAT: &str = "wdn-predictions/1";

pub fn mae(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_pairs(predictions, truths)?;
    let s: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t).abs()).sum();
    Ok(s / predictions.len() as f64)
}

pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_pairs(predictions, truths)?;
    let s: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((s / predictions.len() as f64).sqrt())
}

fn check_pairs(p: &[f64], t: &[f64]) -> Result<()> {
    if p.len() != t.len() {
        return Err(Error::LengthMismatch {
            predictions: p.len(),
            truths: t.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Knn,
    Svm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Knn => "knn",
            Method::Svm => "svm",
        })
    }
}

/// Everything needed to rerun an experiment on a given snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Variant,
    pub method: Method,
    pub knn: KnnConfig,
    pub svm: SvmConfig,
    pub bandwidth: Bandwidth,
    pub neighbors: NeighborOptions,
    pub split: SplitPlan,
    pub fairness: FgParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Variant::Edge,
            method: Method::Knn,
            knn: KnnConfig::default(),
            svm: SvmConfig::default(),
            bandwidth: Bandwidth::TrainingStdDev,
            neighbors: NeighborOptions::default(),
            split: SplitPlan::default(),
            fairness: FgParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub element: String,
    pub predicted: f64,
    pub truth: Option<f64>,
    pub fallback: bool,
    pub degenerate: bool,
    pub clamped: bool,
}

/// Fitted-model details worth keeping next to the predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmSummary {
    pub kernel: KernelSpec,
    pub support_points: usize,
    pub merged: usize,
    pub training_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub format: String,
    pub config: ExperimentConfig,
    pub snapshot_sha256: String,
    pub sampler: String,
    pub h: f64,
    pub n_train: usize,
    pub tie_stats: TieStats,
    pub fairness_iterations: Option<usize>,
    pub fairness_converged: Option<bool>,
    pub svm: Option<SvmSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub meta: RunMeta,
    pub rows: Vec<PredictionRow>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub fallback: usize,
    pub degenerate: usize,
    pub clamped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: Variant,
    pub method: Method,
    pub mae: f64,
    pub rmse: f64,
    pub n_test: usize,
    pub flags: FlagCounts,
    #[serde(flatten)]
    pub meta: RunMeta,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Snapshot(e.to_string()))
    }

    /// `(MAE, RMSE)` to three decimals.
    pub fn pair(&self) -> String {
        format!("({:.3}, {:.3})", self.mae, self.rmse)
    }
}

fn task_range(task: Variant) -> WeightRange {
    match task {
        Variant::Origin => WeightRange::UNIT,
        _ => WeightRange::SIGNED_UNIT,
    }
}

/// Runs split, fit and prediction for one configuration.
pub fn run_predictions(snapshot: &Snapshot, snapshot_sha256: &str, config: &ExperimentConfig) -> Result<PredictionSet> {
    let (g, edge_weights) = snapshot.graph().map_err(Error::at("snapshot"))?;
    let task = config.task;

    let (truth, fg) = match task {
        Variant::Edge => (edge_weights, None),
        Variant::Origin | Variant::Terminal => {
            let s = compute_fairness_goodness(&g, &edge_weights, config.fairness)
                .map_err(Error::at("fairness_goodness"))?;
            let v = if task == Variant::Origin {
                s.fairness.clone()
            } else {
                s.goodness.clone()
            };
            (v, Some(s))
        }
    };

    let split = make_split(truth.len(), &config.split, task).map_err(Error::at("split"))?;
    let weighting = PartialWeighting::new(&g, task, task_range(task), split.train.iter().map(|&i| (i, truth[i])))
        .map_err(Error::at("weighting"))?;
    let h = config.bandwidth.resolve(&weighting).map_err(Error::at("bandwidth"))?;
    let profiles = ProfileTable::build(&g, &weighting, h, config.neighbors).map_err(Error::at("profiles"))?;

    let mut svm_summary = None;
    let rows: Vec<PredictionRow> = match config.method {
        Method::Knn => {
            let knn = KnnRegressor::fit(&profiles, &weighting, config.knn).map_err(Error::at("knn"))?;
            split
                .test
                .par_iter()
                .map(|&i| {
                    let el = Element::from_index(task, i);
                    let p = knn.predict(el)?;
                    Ok(PredictionRow {
                        element: g.element_label(el),
                        predicted: p.value,
                        truth: Some(truth[i]),
                        fallback: p.fallback,
                        degenerate: p.degenerate,
                        clamped: false,
                    })
                })
                .collect::<Result<_>>()
                .map_err(Error::at("knn"))?
        }
        Method::Svm => {
            let model = SvmModel::fit(&profiles, &weighting, &config.svm).map_err(Error::at("svm"))?;
            svm_summary = Some(SvmSummary {
                kernel: model.kernel,
                support_points: model.points.len(),
                merged: model.merged,
                training_mae: model.training_mae,
            });
            split
                .test
                .par_iter()
                .map(|&i| {
                    let el = Element::from_index(task, i);
                    let p = model.predict(&profiles, el)?;
                    Ok(PredictionRow {
                        element: g.element_label(el),
                        predicted: p.value,
                        truth: Some(truth[i]),
                        fallback: false,
                        degenerate: false,
                        clamped: p.clamped,
                    })
                })
                .collect::<Result<_>>()
                .map_err(Error::at("svm"))?
        }
    };

    Ok(PredictionSet {
        meta: RunMeta {
            format: PREDICTIONS_FORMAT.into(),
            config: config.clone(),
            snapshot_sha256: snapshot_sha256.to_owned(),
            sampler: SAMPLER.into(),
            h,
            n_train: split.train.len(),
            tie_stats: profiles.tie_stats(),
            fairness_iterations: fg.as_ref().map(|s| s.iterations),
            fairness_converged: fg.as_ref().map(|s| s.converged),
            svm: svm_summary,
        },
        rows,
    })
}

/// Scores a prediction set; every row must carry its ground truth.
pub fn evaluate(set: &PredictionSet) -> Result<EvaluationReport> {
    if set.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut preds = Vec::with_capacity(set.rows.len());
    let mut truths = Vec::with_capacity(set.rows.len());
    let mut flags = FlagCounts::default();
    for r in &set.rows {
        let t = r.truth.ok_or_else(|| Error::MissingTruth {
            element: r.element.clone(),
        })?;
        preds.push(r.predicted);
        truths.push(t);
        flags.fallback += r.fallback as usize;
        flags.degenerate += r.degenerate as usize;
        flags.clamped += r.clamped as usize;
    }
    let mae = mae(&preds, &truths)?;
    let rmse = rmse(&preds, &truths)?;
    if !(mae.is_finite() && rmse.is_finite()) {
        return Err(Error::Numeric("non-finite error metric".into()));
    }
    Ok(EvaluationReport {
        task: set.meta.config.task,
        method: set.meta.config.method,
        mae,
        rmse,
        n_test: set.rows.len(),
        flags,
        meta: set.meta.clone(),
    })
}

pub fn run_experiment(
    snapshot: &Snapshot,
    snapshot_sha256: &str,
    config: &ExperimentConfig,
) -> Result<EvaluationReport> {
    evaluate(&run_predictions(snapshot, snapshot_sha256, config)?)
}

/// Writes predictions as CSV preceded by a `#` line carrying the run metadata.
pub fn write_predictions_csv<W: Write>(set: &PredictionSet, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: "<predictions>".into(),
        source: e,
    };
    let meta = serde_json::to_string(&set.meta).map_err(|e| Error::Snapshot(e.to_string()))?;
    writeln!(out, "# {meta}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Snapshot(e.to_string());
    w.write_record(["element", "predicted", "truth", "fallback", "degenerate", "clamped"])
        .map_err(csv_err)?;
    for r in &set.rows {
        let truth = r.truth.map(|t| t.to_string()).unwrap_or_default();
        w.write_record([
            r.element.as_str(),
            &r.predicted.to_string(),
            &truth,
            if r.fallback { "1" } else { "0" },
            if r.degenerate { "1" } else { "0" },
            if r.clamped { "1" } else { "0" },
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn read_predictions_csv<R: Read>(mut input: R) -> Result<PredictionSet> {
    let bad = |line: usize, message: String| Error::Parse {
        path: "<predictions>".into(),
        line,
        message,
    };
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::Io {
        path: "<predictions>".into(),
        source: e,
    })?;
    let (first, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let meta_json = first
        .strip_prefix("# ")
        .ok_or_else(|| bad(1, "missing run metadata line".into()))?;
    let meta: RunMeta = serde_json::from_str(meta_json).map_err(|e| bad(1, e.to_string()))?;
    if meta.format != PREDICTIONS_FORMAT {
        return Err(bad(1, format!("unsupported format `{}`", meta.format)));
    }

    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(2, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(2, format!("missing `{name}` column")))
    };
    let (c_el, c_pred, c_truth) = (col("element")?, col("predicted")?, col("truth")?);
    let (c_fb, c_dg, c_cl) = (col("fallback")?, col("degenerate")?, col("clamped")?);

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 3;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| bad(line, format!("bad number in column {c}")))
        };
        let flag = |c: usize| rec.get(c) == Some("1");
        let truth = match rec.get(c_truth).unwrap_or("") {
            "" => None,
            _ => Some(num(c_truth)?),
        };
        rows.push(PredictionRow {
            element: rec.get(c_el).unwrap_or("").to_owned(),
            predicted: num(c_pred)?,
            truth,
            fallback: flag(c_fb),
            degenerate: flag(c_dg),
            clamped: flag(c_cl),
        });
    }
    Ok(PredictionSet { meta, rows })
}

/// Plain-text tables with one row per network and `(MAE, RMSE)` cells for
/// kNN and SVM, one table per task.
pub fn render_tables(network: &str, reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    let width = network.len().max(7);
    for (task, title) in [
        (Variant::Origin, "Predicting weights of origins"),
        (Variant::Terminal, "Predicting weights of terminals"),
        (Variant::Edge, "Predicting edge weights"),
    ] {
        let cell = |m: Method| {
            reports
                .iter()
                .find(|r| r.task == task && r.method == m)
                .map(EvaluationReport::pair)
                .unwrap_or_else(|| "-".into())
        };
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "| {:<width$} | {:<16} | {:<16} |", "Network", "kNN", "SVM");
        let _ = writeln!(
            out,
            "| {:<width$} | {:<16} | {:<16} |",
            network,
            cell(Method::Knn),
            cell(Method::Svm)
        );
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0.0);
        assert_eq!(mae(&[0.5, -0.5], &[0.0, 0.0]).unwrap(), 0.5);
        assert!((mae(&[0.3], &[0.7]).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((rmse(&[0.5, 0.0], &[0.0, 0.0]).unwrap() - 0.125f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(mae(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(rmse(&[1.0], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn evaluate_requires_truth() {
        let set = PredictionSet {
            meta: RunMeta {
                format: PREDICTIONS_FORMAT.into(),
                config: ExperimentConfig::default(),
                snapshot_sha256: String::new(),
                sampler: SAMPLER.into(),
                h: 0.1,
                n_train: 1,
                tie_stats: TieStats::default(),
                fairness_iterations: None,
                fairness_converged: None,
                svm: None,
            },
            rows: vec![PredictionRow {
                element: "a->b".into(),
                predicted: 0.1,
                truth: None,
                fallback: false,
                degenerate: false,
                clamped: false,
            }],
        };
        assert!(evaluate(&set).is_err());
        let empty = PredictionSet { rows: vec![], ..set };
        assert!(matches!(evaluate(&empty), Err(Error::EmptyInput)));
    }
}
