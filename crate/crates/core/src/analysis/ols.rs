//! Multiple linear regression by Householder QR.

use super::special::student_t_two_sided_p;
use super::{pearson_r, sample_sd, AnalysisError};
use serde::Serialize;

/// Relative size below which a column's residual norm after orthogonalisation
/// marks it as linearly dependent on the earlier columns.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub label: String,
    /// Raw coefficient.
    pub b: f64,
    /// Standard error of `b`.
    pub se: f64,
    /// Standardized coefficient, b · sd(x) / sd(y).
    pub beta: f64,
    pub t: f64,
    pub p: f64,
    /// Zero-order Pearson correlation with the outcome, and its two-sided p.
    pub r: f64,
    pub r_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intercept {
    pub b: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub outcome: String,
    pub n: usize,
    pub df_resid: usize,
    pub r_squared: f64,
    pub intercept: Intercept,
    pub coefficients: Vec<Coefficient>,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, label: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.label == label)
    }
}

/// A labelled predictor column.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub label: String,
    pub values: Vec<f64>,
}

impl Predictor {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Predictor {
            label: label.into(),
            values,
        }
    }
}

fn t_and_p(b: f64, se: f64, df: f64) -> (f64, f64) {
    if se > 0.0 {
        let t = b / se;
        (t, student_t_two_sided_p(t, df))
    } else if b == 0.0 {
        (0.0, 1.0)
    } else {
        (b.signum() * f64::INFINITY, 0.0)
    }
}

/// Ordinary least squares of `y` on an intercept plus `predictors`.
pub fn ols(
    outcome: &str,
    y: &[f64],
    predictors: &[Predictor],
) -> Result<RegressionResult, AnalysisError> {
    let n = y.len();
    let k = predictors.len();
    let p = k + 1;
    for pred in predictors {
        if pred.values.len() != n {
            return Err(AnalysisError::LengthMismatch {
                left: n,
                right: pred.values.len(),
            });
        }
    }
    if n <= p {
        return Err(AnalysisError::InsufficientData {
            n,
            needed: p + 1,
            what: "regression",
        });
    }
    let sd_y = sample_sd(y);
    if !(sd_y > 0.0) {
        return Err(AnalysisError::ZeroVariance(outcome.to_string()));
    }

    let labels: Vec<&str> = std::iter::once("intercept")
        .chain(predictors.iter().map(|p| p.label.as_str()))
        .collect();
    let design: Vec<Vec<f64>> = std::iter::once(vec![1.0; n])
        .chain(predictors.iter().map(|p| p.values.clone()))
        .collect();

    // Householder QR, column-major. `work` becomes R in its upper triangle.
    let mut work = design.clone();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; p];
    for j in 0..p {
        let original = design[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = work[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > RANK_TOLERANCE * original) || original == 0.0 {
            return Err(AnalysisError::RankDeficient {
                column: labels[j].to_string(),
            });
        }
        let alpha = if work[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = work[j][j..].to_vec();
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / v_norm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= scale * vi;
            }
        };
        for col in work.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
        diag[j] = alpha;
        work[j][j] = alpha;
        for v in work[j][j + 1..].iter_mut() {
            *v = 0.0;
        }
    }
    let r = |row: usize, col: usize| if row == col { diag[row] } else { work[col][row] };

    // back substitution R b = Qᵀy
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc -= r(i, j) * coef[j];
        }
        coef[i] = acc / r(i, i);
    }

    // R⁻¹, upper triangular
    let mut r_inv = vec![vec![0.0; p]; p];
    for i in (0..p).rev() {
        r_inv[i][i] = 1.0 / r(i, i);
        for j in i + 1..p {
            let mut acc = 0.0;
            for m in i + 1..=j {
                acc += r(i, m) * r_inv[m][j];
            }
            r_inv[i][j] = -acc / r(i, i);
        }
    }

    let residuals: Vec<f64> = (0..n)
        .map(|row| y[row] - (0..p).map(|j| design[j][row] * coef[j]).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;
    // diag((XᵀX)⁻¹) = row norms of R⁻¹
    let se: Vec<f64> = (0..p)
        .map(|j| (sigma2 * r_inv[j].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();

    let df = df_resid as f64;
    let (t0, p0) = t_and_p(coef[0], se[0], df);
    let coefficients = predictors
        .iter()
        .enumerate()
        .map(|(i, pred)| {
            let j = i + 1;
            let (t, pv) = t_and_p(coef[j], se[j], df);
            let r = pearson_r(&pred.values, y)?;
            Ok(Coefficient {
                label: pred.label.clone(),
                b: coef[j],
                se: se[j],
                beta: coef[j] * sample_sd(&pred.values) / sd_y,
                t,
                p: pv,
                r,
                r_p: correlation_p(r, n),
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    Ok(RegressionResult {
        outcome: outcome.to_string(),
        n,
        df_resid,
        r_squared: (1.0 - rss / tss).clamp(0.0, 1.0),
        intercept: Intercept {
            b: coef[0],
            se: se[0],
            t: t0,
            p: p0,
        },
        coefficients,
        residuals,
    })
}

/// Two-sided p of a Pearson correlation against zero, t = r·√(n−2)/√(1−r²).
pub fn correlation_p(r: f64, n: usize) -> f64 {
    if n < 3 {
        return f64::NAN;
    }
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * ((n - 2) as f64 / denom).sqrt();
    student_t_two_sided_p(t, (n - 2) as f64)
}
