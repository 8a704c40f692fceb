//! Kernel expansion predictor over the count transfer map.
//!
//! Each element is embedded in the reals by its count `T(x) = C_h(x)`. The
//! model has the label-scaled kernel expansion
//!
//! ```text
//! y(x) = w0 + sum_i w_i * y_i * k(T(x), T(x_i))
//! ```
//!
//! over the training points. Coefficients are estimated by ridge regression
//! with an unpenalized intercept. Training points that share a transfer value
//! produce identical basis columns, so they are merged (labels averaged,
//! multiplicity kept as a row weight) before solving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Element, PartialWeighting, WeightRange};
use crate::metric::ProfileTable;

/// Added to the transfer-value variance in the default RBF width.
pub const GAMMA_EPS: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, coef0 } => {
                if degree == 0 {
                    Err(Error::InvalidParameter("polynomial degree must be at least 1".into()))
                } else if !coef0.is_finite() {
                    Err(Error::InvalidParameter("polynomial coef0 must be finite".into()))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Rbf { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "rbf gamma must be positive, got {gamma}"
                    )))
                }
            }
        }
    }

    #[inline]
    fn apply(&self, u: f64, v: f64) -> f64 {
        match *self {
            KernelSpec::Linear => u * v,
            KernelSpec::Polynomial { degree, coef0 } => (u * v + coef0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => (-gamma * (u - v) * (u - v)).exp(),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, u: f64, v: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.apply(u, v))
}

/// Transfer map: the element's count as a real number.
pub fn transfer(profiles: &ProfileTable, x: Element) -> Result<f64> {
    Ok(profiles.c_count(x)? as f64)
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    #[default]
    Rbf,
}

/// User-facing kernel choice; an unset RBF width is derived from the data.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: KernelKind,
    pub degree: u32,
    pub coef0: f64,
    pub gamma: Option<f64>,
    pub lambda: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: KernelKind::Rbf,
            degree: 2,
            coef0: 1.0,
            gamma: None,
            lambda: 1e-3,
        }
    }
}

impl SvmConfig {
    /// Resolves the kernel against the training transfer values.
    pub fn kernel_spec(&self, transfers: &[f64]) -> Result<KernelSpec> {
        let spec = match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Polynomial => KernelSpec::Polynomial {
                degree: self.degree,
                coef0: self.coef0,
            },
            KernelKind::Rbf => KernelSpec::Rbf {
                gamma: match self.gamma {
                    Some(g) => g,
                    None => default_gamma(transfers),
                },
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `1 / (2 var + eps)` over the given transfer values.
pub fn default_gamma(transfers: &[f64]) -> f64 {
    if transfers.is_empty() {
        return 1.0 / GAMMA_EPS;
    }
    let n = transfers.len() as f64;
    let mean = transfers.iter().sum::<f64>() / n;
    let var = transfers.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    1.0 / (2.0 * var + GAMMA_EPS)
}

/// A merged training point: distinct transfer value, mean label, multiplicity.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub transfer: f64,
    pub label: f64,
    pub multiplicity: usize,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SvmPrediction {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub points: Vec<SupportPoint>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub range: WeightRange,
    /// Raw training points folded into an existing support point.
    pub merged: usize,
    pub training_mae: f64,
}

fn merge_points(raw: &[(f64, f64)]) -> Vec<SupportPoint> {
    let mut sorted = raw.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<SupportPoint> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for (t, y) in sorted {
        match out.last_mut() {
            Some(p) if p.transfer == t => {
                p.multiplicity += 1;
                *sums.last_mut().unwrap() += y;
            }
            _ => {
                out.push(SupportPoint {
                    transfer: t,
                    label: 0.0,
                    multiplicity: 1,
                });
                sums.push(y);
            }
        }
    }
    for (p, s) in out.iter_mut().zip(sums) {
        p.label = s / p.multiplicity as f64;
    }
    out
}

impl SvmModel {
    /// Fits on explicit `(transfer value, label)` pairs.
    pub fn fit_points(raw: &[(f64, f64)], kernel: KernelSpec, lambda: f64, range: WeightRange) -> Result<Self> {
        kernel.validate()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if raw.is_empty() {
            return Err(Error::EmptyTraining);
        }
        if let Some(&(t, y)) = raw.iter().find(|(t, y)| !t.is_finite() || !y.is_finite()) {
            return Err(Error::NonFiniteWeight {
                value: if t.is_finite() { y } else { t },
            });
        }

        let points = merge_points(raw);
        let m = points.len();
        let total = raw.len() as f64;

        // design[j][i] = y_i * k(t_j, t_i)
        let design = DMatrix::from_fn(m, m, |j, i| {
            points[i].label * kernel.apply(points[j].transfer, points[i].transfer)
        });
        let weights: Vec<f64> = points.iter().map(|p| p.multiplicity as f64).collect();
        let y_mean = points.iter().zip(&weights).map(|(p, n)| n * p.label).sum::<f64>() / total;
        let x_mean = DVector::from_fn(m, |i, _| {
            (0..m).map(|j| weights[j] * design[(j, i)]).sum::<f64>() / total
        });

        let mut gram = DMatrix::<f64>::identity(m, m) * lambda;
        let mut rhs = DVector::<f64>::zeros(m);
        for j in 0..m {
            let xc = design.row(j).transpose() - &x_mean;
            let yc = points[j].label - y_mean;
            gram += &xc * xc.transpose() * weights[j];
            rhs += &xc * (yc * weights[j]);
        }

        let omega = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numeric("ridge normal system is singular".into()))?,
        };
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("ridge solve produced non-finite coefficients".into()));
        }
        let intercept = y_mean - x_mean.dot(&omega);

        let mut model = SvmModel {
            points,
            coefficients: omega.iter().copied().collect(),
            intercept,
            kernel,
            lambda,
            range,
            merged: raw.len() - m,
            training_mae: 0.0,
        };
        model.training_mae = raw.iter().map(|&(t, y)| (model.raw_value(t) - y).abs()).sum::<f64>() / total;
        if !model.training_mae.is_finite() {
            return Err(Error::Numeric("training residuals are not finite".into()));
        }
        Ok(model)
    }

    /// Fits on the training domain of `weighting`, embedding each element by
    /// its count in `profiles`.
    pub fn fit(profiles: &ProfileTable, weighting: &PartialWeighting, config: &SvmConfig) -> Result<Self> {
        if profiles.variant() != weighting.variant() {
            return Err(Error::VariantMismatch {
                expected: profiles.variant(),
                found: weighting.variant(),
            });
        }
        let raw: Vec<(f64, f64)> = weighting
            .domain()
            .iter()
            .map(|&i| (profiles.count_at(i) as f64, weighting.get(i).unwrap_or_default()))
            .collect();
        if raw.is_empty() {
            return Err(Error::EmptyTraining);
        }
        let transfers: Vec<f64> = raw.iter().map(|p| p.0).collect();
        let kernel = config.kernel_spec(&transfers)?;
        Self::fit_points(&raw, kernel, config.lambda, weighting.range())
    }

    /// Unclamped model output at transfer value `t`.
    pub fn raw_value(&self, t: f64) -> f64 {
        self.intercept
            + self
                .points
                .iter()
                .zip(&self.coefficients)
                .map(|(p, w)| w * p.label * self.kernel.apply(t, p.transfer))
                .sum::<f64>()
    }

    pub fn predict_transfer(&self, t: f64) -> SvmPrediction {
        let raw = self.raw_value(t);
        let value = self.range.clamp(raw);
        SvmPrediction {
            value,
            raw,
            clamped: value != raw,
        }
    }

    pub fn predict(&self, profiles: &ProfileTable, x: Element) -> Result<SvmPrediction> {
        Ok(self.predict_transfer(transfer(profiles, x)?))
    }
}
