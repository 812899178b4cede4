//! Effect codings for sliding-level designs.
//!
//! Three model matrices can be built from the same design:
//!
//! * RCRS — the slid factor is coded as if it were not slid, via the
//!   linear-quadratic contrast system on its symbolic levels.
//! * NEM — the slid factor's linear/quadratic contrasts are defined
//!   conditionally at each parent level (disjoint support columns).
//! * RSM — quantitative factors are proportionally coded onto [-1, 1] and
//!   model columns are monomials in the coded values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{FactorKind, FactorSpec, SlidingDesign};
use crate::error::{Error, Result};

/// Slack for strict range checks, absorbing float noise on the boundaries.
const RANGE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rcrs,
    Nem,
    Rsm,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Rcrs => write!(f, "rcrs"),
            Scheme::Nem => write!(f, "nem"),
            Scheme::Rsm => write!(f, "rsm"),
        }
    }
}

pub const INTERCEPT_LABEL: &str = "intercept";

/// Linear (and for three levels quadratic) contrast values for an ordered
/// level at position `level_index`.
///
/// Two levels code to -1, +1; three levels code to (-1, 0, +1) linear and
/// (1, -2, 1) quadratic.
pub fn lq_contrasts(n_levels: usize, level_index: usize) -> Result<(f64, Option<f64>)> {
    if level_index >= n_levels {
        return Err(Error::Validation(format!(
            "level index {level_index} out of range for {n_levels} levels"
        )));
    }
    match n_levels {
        2 => Ok(([-1.0, 1.0][level_index], None)),
        3 => Ok((
            [-1.0, 0.0, 1.0][level_index],
            Some([1.0, -2.0, 1.0][level_index]),
        )),
        n => Err(Error::UnsupportedLevelCount {
            factor: "(unnamed)".into(),
            n,
        }),
    }
}

fn lq_for_factor(f: &FactorSpec, level_index: usize) -> Result<(f64, Option<f64>)> {
    lq_contrasts(f.levels.len(), level_index).map_err(|e| match e {
        Error::UnsupportedLevelCount { n, .. } => Error::UnsupportedLevelCount {
            factor: f.name.clone(),
            n,
        },
        other => other,
    })
}

/// Affine map sending a factor's observed settings range onto [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalCoder {
    pub factor: String,
    pub min: f64,
    pub max: f64,
}

impl ProportionalCoder {
    /// Build from all actual values of the factor across the design.
    pub fn from_settings(factor: &str, values: &[f64]) -> Result<Self> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || !min.is_finite() || !max.is_finite() {
            return Err(Error::Validation(format!(
                "factor {factor} has no finite settings to code"
            )));
        }
        if min == max {
            return Err(Error::DegenerateRange {
                factor: factor.to_string(),
                value: min,
            });
        }
        Ok(Self {
            factor: factor.to_string(),
            min,
            max,
        })
    }

    /// Strict coding: the lowest setting maps to -1, the highest to +1,
    /// values outside the observed range are rejected.
    pub fn code(&self, value: f64) -> Result<f64> {
        if value < self.min - RANGE_EPS || value > self.max + RANGE_EPS {
            return Err(Error::OutOfRange {
                factor: self.factor.clone(),
                value,
                min: self.min,
                max: self.max,
            });
        }
        Ok(self.code_unchecked(value))
    }

    /// Affine extension of the coding map, for query points that may lie
    /// outside the experimental range (classified by the region module).
    pub fn code_unchecked(&self, value: f64) -> f64 {
        -1.0 + 2.0 * (value - self.min) / (self.max - self.min)
    }

    pub fn decode(&self, coded: f64) -> f64 {
        self.min + (coded + 1.0) * (self.max - self.min) / 2.0
    }
}

/// Proportionally code `value` against the observed `settings` of a factor.
///
/// ```
/// use slidekit::coding::proportional_code;
///
/// let weld_times = [18.0, 22.0, 26.0, 32.0, 36.0, 40.0];
/// assert!((proportional_code(&weld_times, 32.0)? - 3.0 / 11.0).abs() < 1e-15);
/// assert_eq!(proportional_code(&weld_times, 29.0)?, 0.0);
/// # Ok::<(), slidekit::Error>(())
/// ```
pub fn proportional_code(settings: &[f64], value: f64) -> Result<f64> {
    ProportionalCoder::from_settings("(unnamed)", settings)?.code(value)
}

/// A runs-by-terms coded matrix with labelled columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    pub scheme: Scheme,
    pub terms: Vec<String>,
    values: DMatrix<f64>,
    pub intercept_included: bool,
}

impl ModelMatrix {
    pub fn new(
        scheme: Scheme,
        terms: Vec<String>,
        values: DMatrix<f64>,
        intercept_included: bool,
    ) -> Result<Self> {
        if terms.len() != values.ncols() {
            return Err(Error::Validation(format!(
                "{} term labels for {} columns",
                terms.len(),
                values.ncols()
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].contains(t) {
                return Err(Error::Validation(format!("duplicate term label {t}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "model matrix contains non-finite values".into(),
            ));
        }
        Ok(Self {
            scheme,
            terms,
            values,
            intercept_included,
        })
    }

    fn from_columns(scheme: Scheme, columns: Vec<(String, DVector<f64>)>) -> Result<Self> {
        let nrows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        let mut terms = Vec::with_capacity(columns.len());
        let mut values = DMatrix::zeros(nrows, columns.len());
        for (j, (label, col)) in columns.into_iter().enumerate() {
            terms.push(label);
            values.set_column(j, &col);
        }
        Self::new(scheme, terms, values, false)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == label)
    }

    pub fn column(&self, label: &str) -> Result<DVector<f64>> {
        let idx = self
            .term_index(label)
            .ok_or_else(|| Error::Validation(format!("no term {label} in model matrix")))?;
        Ok(self.values.column(idx).into_owned())
    }

    /// The same matrix with a leading all-ones intercept column.
    pub fn with_intercept(&self) -> Self {
        if self.intercept_included {
            return self.clone();
        }
        let n = self.nrows();
        let mut values = DMatrix::zeros(n, self.ncols() + 1);
        values.set_column(0, &DVector::from_element(n, 1.0));
        values
            .view_mut((0, 1), (n, self.ncols()))
            .copy_from(&self.values);
        let mut terms = vec![INTERCEPT_LABEL.to_string()];
        terms.extend(self.terms.iter().cloned());
        Self {
            scheme: self.scheme,
            terms,
            values,
            intercept_included: true,
        }
    }

    /// Restrict to the named terms, in the given order.
    pub fn select_terms(&self, labels: &[&str]) -> Result<Self> {
        let cols = labels
            .iter()
            .map(|l| Ok((l.to_string(), self.column(l)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::from_columns(self.scheme, cols)?;
        m.intercept_included = labels.contains(&INTERCEPT_LABEL);
        Ok(m)
    }

    /// Append labelled columns (for covariates); labels must be fresh.
    pub fn append_columns(&self, columns: Vec<(String, DVector<f64>)>) -> Result<Self> {
        let mut all: Vec<(String, DVector<f64>)> = self
            .terms
            .iter()
            .cloned()
            .zip(self.values.column_iter().map(|c| c.into_owned()))
            .collect();
        for (label, col) in columns {
            if col.len() != self.nrows() {
                return Err(Error::Validation(format!(
                    "column {label} has {} entries for {} runs",
                    col.len(),
                    self.nrows()
                )));
            }
            all.push((label, col));
        }
        let mut m = Self::from_columns(self.scheme, all)?;
        m.intercept_included = self.intercept_included;
        Ok(m)
    }
}

fn contrast_columns_for(
    design: &SlidingDesign,
    factor: &FactorSpec,
) -> Result<Vec<(String, DVector<f64>)>> {
    let col = design.planning.column(&factor.name)?;
    let n = design.runs();
    let mut linear = DVector::zeros(n);
    let mut quad = DVector::zeros(n);
    let mut has_quad = false;
    for (run, label) in col.iter().enumerate() {
        let idx = factor
            .level_index(label)
            .ok_or_else(|| Error::UnknownLevelLabel {
                factor: factor.name.clone(),
                label: label.clone(),
            })?;
        let (l, q) = lq_for_factor(factor, idx)?;
        linear[run] = l;
        if let Some(q) = q {
            quad[run] = q;
            has_quad = true;
        }
    }
    let mut out = vec![(format!("{}_l", factor.name), linear)];
    if has_quad {
        out.push((format!("{}_q", factor.name), quad));
    }
    Ok(out)
}

/// RCRS coding: the slid factor is treated as non-slid and coded by its
/// symbolic level contrasts, ignoring actual settings. Interactions are
/// elementwise products of the parent linear contrast with the slid contrasts.
pub fn code_rcrs(design: &SlidingDesign) -> Result<ModelMatrix> {
    let (parent, slid, _) = design.sliding_pair()?;
    let mut columns = contrast_columns_for(design, parent)?;
    let parent_linear = columns[0].1.clone();
    let parent_linear_label = columns[0].0.clone();
    let slid_cols = contrast_columns_for(design, slid)?;
    columns.extend(slid_cols.iter().cloned());
    for (label, col) in &slid_cols {
        columns.push((
            format!("{parent_linear_label}*{label}"),
            parent_linear.component_mul(col),
        ));
    }
    ModelMatrix::from_columns(Scheme::Rcrs, columns)
}

fn conditional_slid_columns(
    design: &SlidingDesign,
    parent: &FactorSpec,
    slid: &FactorSpec,
) -> Result<Vec<(String, DVector<f64>)>> {
    let parent_col = design.planning.column(&parent.name)?;
    let slid_cols = contrast_columns_for(design, slid)?;
    let mut out = Vec::new();
    for (i, parent_label) in parent.levels.iter().enumerate() {
        for (label, col) in &slid_cols {
            let masked = DVector::from_fn(design.runs(), |run, _| {
                if parent_col[run] == *parent_label {
                    col[run]
                } else {
                    0.0
                }
            });
            out.push((format!("{}|{}_{}", label, parent.name, i + 1), masked));
        }
    }
    Ok(out)
}

/// Nested-effects coding for a quantitative parent: parent contrasts plus
/// slid contrasts conditioned on each parent level (zero outside it).
pub fn code_nem(design: &SlidingDesign) -> Result<ModelMatrix> {
    let (parent, slid, _) = design.sliding_pair()?;
    if parent.kind != FactorKind::Quantitative {
        return Err(Error::Validation(format!(
            "parent {} is qualitative; use code_nem_qualitative",
            parent.name
        )));
    }
    let mut columns = contrast_columns_for(design, parent)?;
    columns.extend(conditional_slid_columns(design, parent, slid)?);
    ModelMatrix::from_columns(Scheme::Nem, columns)
}

/// Nested-effects coding for a qualitative parent: one contrast column per
/// non-baseline level (+1 on baseline runs, -1 on that level's runs), plus the
/// conditional slid columns.
///
/// With balanced data the fitted contrast coefficient is half the difference
/// of the baseline and contrasted level mean responses.
pub fn code_nem_qualitative(design: &SlidingDesign, baseline: &str) -> Result<ModelMatrix> {
    let (parent, slid, _) = design.sliding_pair()?;
    let b = parent
        .level_index(baseline)
        .ok_or_else(|| Error::UnknownLevelLabel {
            factor: parent.name.clone(),
            label: baseline.to_string(),
        })?;
    if parent.levels.len() < 2 {
        return Err(Error::Validation(format!(
            "qualitative parent {} needs at least two levels",
            parent.name
        )));
    }
    let parent_col = design.planning.column(&parent.name)?;
    let mut columns = Vec::new();
    for (j, level) in parent.levels.iter().enumerate() {
        if j == b {
            continue;
        }
        let col = DVector::from_fn(design.runs(), |run, _| {
            if parent_col[run] == parent.levels[b] {
                1.0
            } else if parent_col[run] == *level {
                -1.0
            } else {
                0.0
            }
        });
        columns.push((format!("{}_{{{},{}}}", parent.name, b + 1, j + 1), col));
    }
    columns.extend(conditional_slid_columns(design, parent, slid)?);
    ModelMatrix::from_columns(Scheme::Nem, columns)
}

/// A product of factor powers, e.g. `x_A * x_B^2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    /// (factor name, exponent), sorted by name, exponents in 1..=3.
    pub exponents: Vec<(String, u32)>,
}

impl Monomial {
    pub fn new(exponents: &[(&str, u32)]) -> Result<Self> {
        let mut exps: Vec<(String, u32)> = Vec::new();
        for (name, e) in exponents {
            if *e == 0 {
                continue;
            }
            if *e > 3 {
                return Err(Error::UnsupportedDegree { degree: *e });
            }
            if exps.iter().any(|(n, _)| n == name) {
                return Err(Error::Validation(format!(
                    "factor {name} repeated in monomial"
                )));
            }
            exps.push((name.to_string(), *e));
        }
        exps.sort();
        Ok(Self { exponents: exps })
    }

    /// Canonical label: `x_<name>` parts with caret exponents, joined by `*`.
    pub fn label(&self) -> String {
        if self.exponents.is_empty() {
            return INTERCEPT_LABEL.to_string();
        }
        self.exponents
            .iter()
            .map(|(name, e)| {
                if *e == 1 {
                    format!("x_{name}")
                } else {
                    format!("x_{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn degree_of(&self, name: &str) -> u32 {
        self.exponents
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }
}

/// An ordered list of monomials defining an RSM model matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet(pub Vec<Monomial>);

impl TermSet {
    /// The five-term set used with a two-level parent:
    /// `x_A, x_B, x_B^2, x_A*x_B, x_A*x_B^2`.
    pub fn welding_default(parent: &str, slid: &str) -> Self {
        TermSet(vec![
            Monomial::new(&[(parent, 1)]).unwrap(),
            Monomial::new(&[(slid, 1)]).unwrap(),
            Monomial::new(&[(slid, 2)]).unwrap(),
            Monomial::new(&[(parent, 1), (slid, 1)]).unwrap(),
            Monomial::new(&[(parent, 1), (slid, 2)]).unwrap(),
        ])
    }

    /// All monomials `x_A^i * x_B^j` with i, j <= 2, excluding the intercept.
    /// With the intercept this is the nine-term expanded model, saturated on a
    /// nine-run three-by-three sliding design.
    pub fn saturated(parent: &str, slid: &str) -> Self {
        let mut monomials = Vec::new();
        for i in 0..=2u32 {
            for j in 0..=2u32 {
                if i == 0 && j == 0 {
                    continue;
                }
                monomials.push(Monomial::new(&[(parent, i), (slid, j)]).unwrap());
            }
        }
        TermSet(monomials)
    }

    /// Default term set for a design: the five-term set for a two-level
    /// parent, the saturated set for a three-level parent.
    pub fn default_for(design: &SlidingDesign) -> Result<Self> {
        let (parent, slid, _) = design.sliding_pair()?;
        match parent.levels.len() {
            2 => Ok(Self::welding_default(&parent.name, &slid.name)),
            3 => Ok(Self::saturated(&parent.name, &slid.name)),
            n => Err(Error::UnsupportedLevelCount {
                factor: parent.name.clone(),
                n,
            }),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(|m| m.label()).collect()
    }
}

/// RSM coding: proportionally coded factor columns combined into the monomials
/// of `term_set`.
pub fn code_rsm(design: &SlidingDesign, term_set: &TermSet) -> Result<ModelMatrix> {
    let mut coded: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for m in &term_set.0 {
        for (name, _) in &m.exponents {
            if coded.contains_key(name) {
                continue;
            }
            let f = design.factor(name)?;
            if f.kind != FactorKind::Quantitative {
                return Err(Error::Validation(format!(
                    "factor {name} is qualitative and cannot be proportionally coded"
                )));
            }
            coded.insert(name.clone(), design.coded_values(name)?);
        }
    }
    let n = design.runs();
    let columns = term_set
        .0
        .iter()
        .map(|m| {
            let col = DVector::from_fn(n, |run, _| {
                m.exponents
                    .iter()
                    .map(|(name, e)| coded[name][run].powi(*e as i32))
                    .product()
            });
            (m.label(), col)
        })
        .collect();
    ModelMatrix::from_columns(Scheme::Rsm, columns)
}

/// Which contrast columns of the free factors to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateSet {
    /// Linear and (for three-level factors) quadratic contrasts.
    LinearQuadratic,
    /// Linear contrasts only.
    LinearOnly,
}

/// Contrast columns for every free factor, in design order.
pub fn covariate_columns(
    design: &SlidingDesign,
    set: CovariateSet,
) -> Result<Vec<(String, DVector<f64>)>> {
    let mut out = Vec::new();
    for f in &design.factors {
        if f.role != crate::design::FactorRole::Free {
            continue;
        }
        let cols = contrast_columns_for(design, f)?;
        match set {
            CovariateSet::LinearQuadratic => out.extend(cols),
            CovariateSet::LinearOnly => out.extend(cols.into_iter().take(1)),
        }
    }
    Ok(out)
}
