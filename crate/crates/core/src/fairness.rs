//! Fairness and goodness scores for rater/ratee networks.
//!
//! Starting from `f = 1`, `g = 1`, each sweep sets
//!
//! ```text
//! g(t) = mean over in-edges (o, t) of f(o) * W(o, t)
//! f(o) = 1 - mean over out-edges (o, t) of |W(o, t) - g(t)| / 2
//! ```
//!
//! using the previous fairness for every goodness update and the fresh
//! goodness for every fairness update. With `W` in `[-1, 1]` this keeps
//! `f` in `[0, 1]` and `g` in `[-1, 1]`, which is checked after each sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, OriginId, TerminalId};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FgParams {
    fn default() -> Self {
        FgParams {
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FgScores {
    /// Indexed by origin.
    pub fairness: Vec<f64>,
    /// Indexed by terminal.
    pub goodness: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute score change of each sweep.
    pub max_change: Vec<f64>,
    /// Vertices without incident edges, left at their initial score.
    pub isolated_origins: Vec<OriginId>,
    pub isolated_terminals: Vec<TerminalId>,
}

pub fn compute_fairness_goodness(g: &DirectedGraph, edge_weights: &[f64], params: FgParams) -> Result<FgScores> {
    if edge_weights.len() != g.edge_count() {
        return Err(Error::InvalidParameter(format!(
            "expected {} edge weights, got {}",
            g.edge_count(),
            edge_weights.len()
        )));
    }
    if params.tol.is_nan() || params.tol <= 0.0 || params.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "tol must be positive and max_iter at least 1".into(),
        ));
    }
    for &w in edge_weights {
        if !w.is_finite() {
            return Err(Error::NonFiniteWeight { value: w });
        }
        if !(-1.0..=1.0).contains(&w) {
            return Err(Error::WeightOutOfRange {
                value: w,
                lo: -1.0,
                hi: 1.0,
            });
        }
    }

    let mut fairness = vec![1.0; g.origin_count()];
    let mut goodness = vec![1.0; g.terminal_count()];
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..params.max_iter {
        let new_goodness: Vec<f64> = (0..g.terminal_count())
            .into_par_iter()
            .map(|t| {
                let ins = g.in_edges(TerminalId(t as u32));
                if ins.is_empty() {
                    return goodness[t];
                }
                let s: f64 = ins
                    .iter()
                    .map(|&e| fairness[g.endpoints(e).0.index()] * edge_weights[e.index()])
                    .sum();
                s / ins.len() as f64
            })
            .collect();
        let new_fairness: Vec<f64> = (0..g.origin_count())
            .into_par_iter()
            .map(|o| {
                let outs = g.out_edges(OriginId(o as u32));
                if outs.is_empty() {
                    return fairness[o];
                }
                let s: f64 = outs
                    .iter()
                    .map(|&e| (edge_weights[e.index()] - new_goodness[g.endpoints(e).1.index()]).abs() / 2.0)
                    .sum();
                1.0 - s / outs.len() as f64
            })
            .collect();

        if let Some(&bad) = new_fairness.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Numeric(format!("fairness {bad} left [0, 1]")));
        }
        if let Some(&bad) = new_goodness.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Numeric(format!("goodness {bad} left [-1, 1]")));
        }

        let change = fairness
            .iter()
            .zip(&new_fairness)
            .chain(goodness.iter().zip(&new_goodness))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        fairness = new_fairness;
        goodness = new_goodness;
        history.push(change);
        if change < params.tol {
            converged = true;
            break;
        }
    }

    let isolated_origins = (0..g.origin_count() as u32)
        .map(OriginId)
        .filter(|&o| g.out_edges(o).is_empty())
        .collect();
    let isolated_terminals = (0..g.terminal_count() as u32)
        .map(TerminalId)
        .filter(|&t| g.in_edges(t).is_empty())
        .collect();

    Ok(FgScores {
        fairness,
        goodness,
        iterations: history.len(),
        converged,
        max_change: history,
        isolated_origins,
        isolated_terminals,
    })
}
