//! Factors, sliding-level tables, and planning matrices.
//!
//! A [`SlidingDesign`] ties together the symbolic planning matrix, the factor
//! declarations, and the sliding tables that resolve a slid factor's symbolic
//! levels into actual settings conditional on its parent factor's level.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coding::ProportionalCoder;
use crate::error::{Error, Result};

/// Tolerance for checking the optional (s, t, r) geometry against a sliding table.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Quantitative,
    Qualitative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorRole {
    Free,
    Parent,
    Slid,
}

/// An affine map `x -> intercept + slope * x`.
///
/// Used for the sliding center in coded units: the slid factor's conditional
/// center is `intercept + slope * x_parent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub intercept: f64,
    pub slope: f64,
}

impl AffineMap {
    pub fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Declaration of one experimental factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub kind: FactorKind,
    pub role: FactorRole,
    /// Ordered symbolic level labels, e.g. `["low", "median", "high"]`.
    pub levels: Vec<String>,
    /// Actual settings, one per level, for quantitative non-slid factors.
    /// A slid factor's settings live in its [`SlidingSpec`] table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<f64>>,
    /// Free-text unit; metadata only, never used in computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl FactorSpec {
    /// Quantitative factor whose labels are the printed settings.
    pub fn quantitative(name: &str, role: FactorRole, settings: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            kind: FactorKind::Quantitative,
            role,
            levels: settings.iter().map(|v| format_setting(*v)).collect(),
            settings: Some(settings.to_vec()),
            unit: None,
        }
    }

    pub fn qualitative(name: &str, role: FactorRole, levels: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            kind: FactorKind::Qualitative,
            role,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            settings: None,
            unit: None,
        }
    }

    /// Quantitative slid factor; settings come from the sliding table.
    pub fn slid(name: &str, levels: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            kind: FactorKind::Quantitative,
            role: FactorRole::Slid,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            settings: None,
            unit: None,
        }
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Validation(format!(
                "factor {} declares no levels",
                self.name
            )));
        }
        let distinct: BTreeSet<&String> = self.levels.iter().collect();
        if distinct.len() != self.levels.len() {
            return Err(Error::Validation(format!(
                "factor {} has duplicate level labels",
                self.name
            )));
        }
        match (&self.role, &self.kind, &self.settings) {
            (FactorRole::Slid, FactorKind::Qualitative, _) => {
                return Err(Error::Validation(format!(
                    "slid factor {} must be quantitative",
                    self.name
                )))
            }
            (FactorRole::Slid, _, Some(_)) => {
                return Err(Error::Validation(format!(
                    "slid factor {} must not carry unconditional settings",
                    self.name
                )))
            }
            (_, FactorKind::Qualitative, Some(_)) => {
                return Err(Error::Validation(format!(
                    "qualitative factor {} must not carry settings",
                    self.name
                )))
            }
            (_, FactorKind::Quantitative, Some(s)) => {
                if s.len() != self.levels.len() {
                    return Err(Error::Validation(format!(
                        "factor {}: {} settings for {} levels",
                        self.name,
                        s.len(),
                        self.levels.len()
                    )));
                }
                if !strictly_increasing(s) {
                    return Err(Error::Validation(format!(
                        "factor {}: settings must be strictly increasing",
                        self.name
                    )));
                }
            }
            (FactorRole::Free | FactorRole::Parent, FactorKind::Quantitative, None) => {
                return Err(Error::Validation(format!(
                    "quantitative factor {} needs settings",
                    self.name
                )))
            }
            _ => {}
        }
        Ok(())
    }
}

/// The parent-level -> slid-settings table, with optional coded geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlidingSpec {
    pub parent: String,
    pub slid: String,
    /// Parent level label -> actual slid settings, one per slid symbolic level,
    /// strictly increasing.
    pub table: BTreeMap<String, Vec<f64>>,
    /// Conditional center of the slid factor in coded units, as an affine map
    /// of the coded parent value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<AffineMap>,
    /// Conditional half-width of the slid range in coded units. Stored as half
    /// the range so the extreme slid settings code to -1 and +1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl SlidingSpec {
    pub fn new(parent: &str, slid: &str, table: &[(&str, &[f64])]) -> Self {
        Self {
            parent: parent.to_string(),
            slid: slid.to_string(),
            table: table
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_vec()))
                .collect(),
            center: None,
            half_width: None,
        }
    }

    pub fn with_geometry(mut self, center: AffineMap, half_width: f64) -> Self {
        self.center = Some(center);
        self.half_width = Some(half_width);
        self
    }

    /// Every actual slid value occurring anywhere in the table.
    pub fn all_settings(&self) -> Vec<f64> {
        self.table.values().flatten().copied().collect()
    }

    pub fn lookup(&self, parent_label: &str, slid_index: usize) -> Result<f64> {
        let row = self.table.get(parent_label).ok_or_else(|| {
            Error::MissingSlidingEntry(format!(
                "parent level {parent_label:?} absent from sliding table of {}",
                self.slid
            ))
        })?;
        row.get(slid_index).copied().ok_or_else(|| {
            Error::MissingSlidingEntry(format!(
                "slid level index {slid_index} absent from sliding table row {parent_label:?}"
            ))
        })
    }
}

/// Run-by-factor table of symbolic level labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningMatrix {
    pub runs: usize,
    pub columns: BTreeMap<String, Vec<String>>,
}

impl PlanningMatrix {
    pub fn new(runs: usize, columns: BTreeMap<String, Vec<String>>) -> Self {
        Self { runs, columns }
    }

    pub fn from_rows(factor_names: &[&str], rows: &[Vec<&str>]) -> Self {
        let mut columns: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, name) in factor_names.iter().enumerate() {
            columns.insert(
                name.to_string(),
                rows.iter().map(|r| r[i].to_string()).collect(),
            );
        }
        Self {
            runs: rows.len(),
            columns,
        }
    }

    pub fn column(&self, factor: &str) -> Result<&[String]> {
        self.columns
            .get(factor)
            .map(|c| c.as_slice())
            .ok_or_else(|| Error::Validation(format!("planning matrix has no column {factor}")))
    }

    /// Occurrences of each label within a column.
    pub fn level_counts(&self, factor: &str) -> Result<BTreeMap<String, usize>> {
        let mut counts = BTreeMap::new();
        for label in self.column(factor)? {
            *counts.entry(label.clone()).or_insert(0) += 1;
        }
        Ok(counts)
    }
}

/// A planning matrix with factor declarations and resolved actual settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlidingDesign {
    pub planning: PlanningMatrix,
    pub factors: Vec<FactorSpec>,
    pub sliding: Vec<SlidingSpec>,
    /// Factor name -> per-run actual value (quantitative factors only; slid
    /// values resolved through the sliding table).
    pub actual: BTreeMap<String, Vec<f64>>,
}

impl SlidingDesign {
    /// Materialize actual settings from the planning matrix and sliding tables,
    /// validating all invariants along the way.
    pub fn resolve(
        planning: PlanningMatrix,
        factors: Vec<FactorSpec>,
        sliding: Vec<SlidingSpec>,
    ) -> Result<Self> {
        if planning.runs == 0 {
            return Err(Error::Validation("design has no runs".into()));
        }
        let mut names = BTreeSet::new();
        for f in &factors {
            f.validate()?;
            if !names.insert(f.name.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate factor name {}",
                    f.name
                )));
            }
        }
        if planning.columns.len() != factors.len() {
            return Err(Error::Validation(format!(
                "planning matrix has {} columns for {} factors",
                planning.columns.len(),
                factors.len()
            )));
        }
        for f in &factors {
            let col = planning.column(&f.name)?;
            if col.len() != planning.runs {
                return Err(Error::Validation(format!(
                    "column {} has {} entries for {} runs",
                    f.name,
                    col.len(),
                    planning.runs
                )));
            }
            for label in col {
                if f.level_index(label).is_none() {
                    return Err(Error::UnknownLevelLabel {
                        factor: f.name.clone(),
                        label: label.clone(),
                    });
                }
            }
        }

        let find_factor = |name: &str| factors.iter().find(|f| f.name == name);
        let mut seen_slid = BTreeSet::new();
        for s in &sliding {
            let parent = find_factor(&s.parent).ok_or_else(|| {
                Error::Validation(format!(
                    "sliding spec references unknown parent {}",
                    s.parent
                ))
            })?;
            let slid = find_factor(&s.slid).ok_or_else(|| {
                Error::Validation(format!(
                    "sliding spec references unknown slid factor {}",
                    s.slid
                ))
            })?;
            if parent.role != FactorRole::Parent {
                return Err(Error::Validation(format!(
                    "factor {} is referenced as a parent but has another role",
                    parent.name
                )));
            }
            if slid.role != FactorRole::Slid {
                return Err(Error::Validation(format!(
                    "factor {} is referenced as slid but has another role",
                    slid.name
                )));
            }
            if !seen_slid.insert(s.slid.clone()) {
                return Err(Error::Validation(format!(
                    "factor {} appears in more than one sliding spec",
                    s.slid
                )));
            }
            // Every parent level present in the planning matrix needs an entry
            // with one strictly increasing setting per slid symbolic level.
            for label in planning.column(&parent.name)? {
                let row = s.table.get(label).ok_or_else(|| {
                    Error::MissingSlidingEntry(format!(
                        "parent level {label:?} absent from sliding table of {}",
                        s.slid
                    ))
                })?;
                if row.len() != slid.levels.len() {
                    return Err(Error::MissingSlidingEntry(format!(
                        "sliding table row {label:?} has {} settings for {} slid levels",
                        row.len(),
                        slid.levels.len()
                    )));
                }
                if !strictly_increasing(row) {
                    return Err(Error::Validation(format!(
                        "sliding table row {label:?} of {} is not strictly increasing",
                        s.slid
                    )));
                }
            }
        }
        for f in &factors {
            if f.role == FactorRole::Slid && !seen_slid.contains(&f.name) {
                return Err(Error::Validation(format!(
                    "slid factor {} has no sliding spec",
                    f.name
                )));
            }
        }

        // Resolve the actual map.
        let mut actual = BTreeMap::new();
        for f in &factors {
            if f.kind != FactorKind::Quantitative {
                continue;
            }
            let col = planning.column(&f.name)?;
            let values = if f.role == FactorRole::Slid {
                let spec = sliding.iter().find(|s| s.slid == f.name).unwrap();
                let parent_col = planning.column(&spec.parent)?;
                col.iter()
                    .zip(parent_col)
                    .map(|(slid_label, parent_label)| {
                        let idx = f.level_index(slid_label).unwrap();
                        spec.lookup(parent_label, idx)
                    })
                    .collect::<Result<Vec<f64>>>()?
            } else {
                let settings = f.settings.as_ref().unwrap();
                col.iter()
                    .map(|label| settings[f.level_index(label).unwrap()])
                    .collect()
            };
            actual.insert(f.name.clone(), values);
        }

        let design = Self {
            planning,
            factors,
            sliding,
            actual,
        };
        design.validate_geometry()?;
        Ok(design)
    }

    /// Checks the optional (s, t, r) annotations against the sliding tables.
    fn validate_geometry(&self) -> Result<()> {
        for spec in &self.sliding {
            if spec.center.is_none() && spec.half_width.is_none() {
                continue;
            }
            let table = self.coded_sliding_table(spec)?;
            for (parent_coded, row) in &table {
                let mid = (row[0] + row[row.len() - 1]) / 2.0;
                let half = (row[row.len() - 1] - row[0]) / 2.0;
                if let Some(center) = &spec.center {
                    let want = center.eval(*parent_coded);
                    if (mid - want).abs() > GEOMETRY_TOL {
                        return Err(Error::Validation(format!(
                            "sliding geometry of {}: table midpoint {mid} at coded parent \
                             {parent_coded} disagrees with center map value {want}",
                            spec.slid
                        )));
                    }
                }
                if let Some(r) = spec.half_width {
                    if r <= 0.0 {
                        return Err(Error::Validation(format!(
                            "sliding geometry of {}: half-width must be positive",
                            spec.slid
                        )));
                    }
                    if (half - r).abs() > GEOMETRY_TOL {
                        return Err(Error::Validation(format!(
                            "sliding geometry of {}: table half-range {half} at coded parent \
                             {parent_coded} disagrees with half-width {r}",
                            spec.slid
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.planning.runs
    }

    pub fn factor(&self, name: &str) -> Result<&FactorSpec> {
        self.factors
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown factor {name}")))
    }

    /// The (parent, slid, spec) triple of the design's sliding pair.
    ///
    /// Designs model a single slid factor; when several sliding specs are
    /// present the first one is the modeled pair.
    pub fn sliding_pair(&self) -> Result<(&FactorSpec, &FactorSpec, &SlidingSpec)> {
        let spec = self
            .sliding
            .first()
            .ok_or_else(|| Error::Validation("design has no sliding pair".into()))?;
        Ok((self.factor(&spec.parent)?, self.factor(&spec.slid)?, spec))
    }

    /// Per-run actual values of a quantitative factor.
    pub fn actual_values(&self, name: &str) -> Result<&[f64]> {
        self.actual
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Validation(format!("factor {name} has no actual values")))
    }

    /// Proportional coder over the factor's actual values across the design.
    pub fn coder(&self, name: &str) -> Result<ProportionalCoder> {
        ProportionalCoder::from_settings(name, self.actual_values(name)?)
    }

    /// Per-run proportionally coded values of a quantitative factor.
    pub fn coded_values(&self, name: &str) -> Result<Vec<f64>> {
        let coder = self.coder(name)?;
        self.actual_values(name)?
            .iter()
            .map(|v| coder.code(*v))
            .collect()
    }

    /// Coded value of each declared level of a non-slid quantitative factor,
    /// in level order.
    pub fn coded_level_values(&self, name: &str) -> Result<Vec<f64>> {
        let f = self.factor(name)?;
        let settings = f.settings.as_ref().ok_or_else(|| {
            Error::Validation(format!("factor {name} has no unconditional settings"))
        })?;
        let coder = self.coder(name)?;
        settings.iter().map(|v| coder.code(*v)).collect()
    }

    /// The sliding table in coded units: one `(coded parent value, coded slid
    /// settings)` pair per parent level, in parent level order.
    pub fn coded_sliding_table(&self, spec: &SlidingSpec) -> Result<Vec<(f64, Vec<f64>)>> {
        let parent = self.factor(&spec.parent)?;
        let parent_coded = self.coded_level_values(&spec.parent)?;
        let slid_coder = self.coder(&spec.slid)?;
        parent
            .levels
            .iter()
            .zip(parent_coded)
            .map(|(label, p)| {
                let row = spec.table.get(label).ok_or_else(|| {
                    Error::MissingSlidingEntry(format!(
                        "parent level {label:?} absent from sliding table of {}",
                        spec.slid
                    ))
                })?;
                // Affine extension: a declared parent level may be absent from
                // the planning matrix, putting its table row outside the
                // observed range.
                let coded = row.iter().map(|v| slid_coder.code_unchecked(*v)).collect();
                Ok((p, coded))
            })
            .collect()
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// Integers print without a trailing `.0` so planning labels stay readable.
pub(crate) fn format_setting(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
