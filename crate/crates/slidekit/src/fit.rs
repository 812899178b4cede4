//! Ordinary least squares with inference and estimate-correlation diagnostics.
//!
//! Coefficients come from a Householder QR of the model matrix rather than
//! from inverting the normal equations; the inverse normal-equations matrix is
//! recovered from the triangular factor only for standard errors and estimate
//! correlations. The RSM coding of a sliding design is ill-conditioned by
//! construction, so the orthogonal route matters here.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coding::ModelMatrix;
use crate::error::{Error, Result};
use crate::stats::student_t_two_sided_p;

/// A column is declared dependent when its residual after projection onto the
/// preceding columns has norm at most this fraction of its own norm.
pub const RANK_TOL: f64 = 1e-10;

/// Basis-drop tolerance used when comparing column spans.
const SPAN_BASIS_TOL: f64 = 1e-12;

/// Least-squares fit of a labelled model matrix.
///
/// `standard_errors`, `t_values`, `p_values`, and `sigma2_hat` are `None` when
/// there is no residual information to estimate them from: zero residual
/// degrees of freedom (a saturated fit returns its coefficients but inference
/// is unavailable) or an exactly zero residual sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Option<Vec<f64>>,
    pub t_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub residual_df: usize,
    pub sigma2_hat: Option<f64>,
    pub r_squared: f64,
    pub fitted_values: Vec<f64>,
    /// terms-by-terms correlation matrix of the coefficient estimators,
    /// determined by the design alone.
    pub estimate_correlations: Vec<Vec<f64>>,
}

impl FitResult {
    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.coefficients[i])
    }

    pub fn t_value(&self, term: &str) -> Option<f64> {
        Some(self.t_values.as_ref()?[self.term_index(term)?])
    }

    pub fn p_value(&self, term: &str) -> Option<f64> {
        Some(self.p_values.as_ref()?[self.term_index(term)?])
    }

    pub fn estimate_correlation(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.estimate_correlations[self.term_index(a)?][self.term_index(b)?])
    }

    pub fn inference_available(&self) -> bool {
        self.standard_errors.is_some()
    }
}

/// Estimate-correlation matrix of a model matrix, independent of any response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCorrelations {
    pub terms: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl EstimateCorrelations {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.terms.iter().position(|t| t == a)?;
        let j = self.terms.iter().position(|t| t == b)?;
        Some(self.values[i][j])
    }
}

/// Fit `response` on the matrix columns by ordinary least squares.
///
/// An intercept column is prepended unless the matrix already carries one.
pub fn ols_fit(matrix: &ModelMatrix, response: &[f64]) -> Result<FitResult> {
    let m = matrix.with_intercept();
    let n = m.nrows();
    if response.len() != n {
        return Err(Error::Validation(format!(
            "{} responses for {} runs",
            response.len(),
            n
        )));
    }
    check_full_rank(m.values(), &m.terms)?;

    let x = m.values().clone();
    let k = x.ncols();
    let y = DVector::from_column_slice(response);

    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient {
            rank: k.saturating_sub(1),
            terms: vec![],
        })?;

    let fitted = &x * &coef;
    let residuals = &y - &fitted;
    let ssr = residuals.norm_squared();
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };

    // (X'X)^{-1} = R^{-1} R^{-T} from the triangular factor.
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient {
            rank: k.saturating_sub(1),
            terms: vec![],
        })?;
    let cov_unscaled = &rinv * rinv.transpose();
    let estimate_correlations = correlation_from_cov(&cov_unscaled);

    let residual_df = n - k;
    let (standard_errors, t_values, p_values, sigma2_hat) = if residual_df == 0 || ssr == 0.0 {
        (None, None, None, None)
    } else {
        let sigma2 = ssr / residual_df as f64;
        let se: Vec<f64> = (0..k)
            .map(|i| (sigma2 * cov_unscaled[(i, i)]).sqrt())
            .collect();
        let t: Vec<f64> = coef
            .iter()
            .zip(&se)
            .map(|(c, s)| if *s > 0.0 { c / s } else { 0.0 })
            .collect();
        let p: Vec<f64> = t
            .iter()
            .map(|t| student_t_two_sided_p(*t, residual_df))
            .collect();
        (Some(se), Some(t), Some(p), Some(sigma2))
    };

    Ok(FitResult {
        terms: m.terms.clone(),
        coefficients: coef.iter().copied().collect(),
        standard_errors,
        t_values,
        p_values,
        residual_df,
        sigma2_hat,
        r_squared,
        fitted_values: fitted.iter().copied().collect(),
        estimate_correlations,
    })
}

/// Correlation matrix of the coefficient estimators, from the inverse
/// normal-equations matrix of the intercept-augmented model matrix.
pub fn estimate_correlations(matrix: &ModelMatrix) -> Result<EstimateCorrelations> {
    let m = matrix.with_intercept();
    check_full_rank(m.values(), &m.terms)?;
    let x = m.values().clone();
    let k = x.ncols();
    let qr = x.qr();
    let r = qr.r();
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient {
            rank: k.saturating_sub(1),
            terms: vec![],
        })?;
    let cov = &rinv * rinv.transpose();
    Ok(EstimateCorrelations {
        terms: m.terms.clone(),
        values: correlation_from_cov(&cov),
    })
}

fn correlation_from_cov(cov: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let k = cov.nrows();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let denom = (cov[(i, i)] * cov[(j, j)]).sqrt();
            out[i][j] = if i == j {
                1.0
            } else {
                (cov[(i, j)] / denom).clamp(-1.0, 1.0)
            };
        }
    }
    out
}

/// True when the two matrices span the same column space: every column of one
/// projects onto the other's span with relative residual at most `tol`,
/// and symmetrically.
pub fn span_equal(m1: &ModelMatrix, m2: &ModelMatrix, tol: f64) -> Result<bool> {
    if m1.nrows() != m2.nrows() {
        return Err(Error::Validation(format!(
            "span comparison needs equal run counts ({} vs {})",
            m1.nrows(),
            m2.nrows()
        )));
    }
    let b1 = orthonormal_basis(m1.values());
    let b2 = orthonormal_basis(m2.values());
    Ok(columns_in_span(m2.values(), &b1, tol) && columns_in_span(m1.values(), &b2, tol))
}

fn orthonormal_basis(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let mut res = col;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&res);
                res -= b * c;
            }
        }
        let rnorm = res.norm();
        if rnorm > SPAN_BASIS_TOL * norm {
            basis.push(res / rnorm);
        }
    }
    basis
}

fn columns_in_span(m: &DMatrix<f64>, basis: &[DVector<f64>], tol: f64) -> bool {
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let mut res = col;
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&res);
                res -= b * c;
            }
        }
        if res.norm() > tol * norm {
            return false;
        }
    }
    true
}

/// Sequential projection rank check. On failure reports the matrix rank and a
/// minimal dependent subset: the first dependent column together with the
/// preceding columns its projection actually loads on.
fn check_full_rank(m: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut independent: Vec<usize> = Vec::new();
    let mut first_dependent: Option<usize> = None;
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let norm = col.norm();
        let mut res = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&res);
                res -= b * c;
            }
        }
        let rnorm = res.norm();
        if norm == 0.0 || rnorm <= RANK_TOL * norm {
            if first_dependent.is_none() {
                first_dependent = Some(j);
            }
        } else {
            basis.push(res / rnorm);
            independent.push(j);
        }
    }
    let Some(dep) = first_dependent else {
        return Ok(());
    };

    // Express the dependent column in terms of the preceding independent ones
    // and keep the labels that actually contribute.
    let prior: Vec<usize> = independent.iter().copied().filter(|&i| i < dep).collect();
    let mut terms: Vec<String> = Vec::new();
    if !prior.is_empty() {
        let sub = DMatrix::from_fn(m.nrows(), prior.len(), |r, c| m[(r, prior[c])]);
        let target = m.column(dep).into_owned();
        let qr = sub.clone().qr();
        if let Some(beta) = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * &target))
        {
            let target_norm = target.norm().max(f64::MIN_POSITIVE);
            for (c, &idx) in beta.iter().zip(&prior) {
                let contribution = c.abs() * m.column(idx).norm();
                if contribution > 1e-8 * target_norm {
                    terms.push(labels[idx].clone());
                }
            }
        }
    }
    if !terms.contains(&labels[dep]) {
        terms.push(labels[dep].clone());
    }
    Err(Error::RankDeficient {
        rank: independent.len(),
        terms,
    })
}
