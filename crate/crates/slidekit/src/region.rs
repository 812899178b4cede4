//! Geometry of the irregular experimental region inside the modeling cube,
//! zone-classified prediction, and the product-variable transform.
//!
//! The experimental region R_E is built from the sliding table: at each coded
//! parent value the slid factor spans its coded conditional range, and the
//! region interpolates those ranges linearly between adjacent parent levels.
//! The modeling region R_M is the cube [-1, 1]^2; prediction between the two
//! is extrapolation and is reported, never forbidden.

use serde::{Deserialize, Serialize};

use crate::design::{FactorKind, SlidingDesign};
use crate::error::{Error, Result};
use crate::translate::{NemModel, RsmModel};

/// Boundary points count as inside, with this much slack, so design points are
/// never flagged as extrapolation.
const BOUNDARY_EPS: f64 = 1e-9;

/// Matching tolerance for nested-effects prediction at a parent level.
const PARENT_LEVEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    InsideRe,
    ExtrapolationBand,
    OutsideRm,
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zone::InsideRe => write!(f, "inside_re"),
            Zone::ExtrapolationBand => write!(f, "extrapolation_band"),
            Zone::OutsideRm => write!(f, "outside_rm"),
        }
    }
}

/// One coded slid range at a coded parent value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub x_a: f64,
    pub low: f64,
    pub high: f64,
}

/// The experimental region polygon inside the [-1, 1]^2 modeling cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Cross-sections sorted by coded parent value.
    pub cross_sections: Vec<CrossSection>,
    /// Factor names behind the two coded axes.
    pub x_axis: String,
    pub y_axis: String,
}

impl Region {
    /// Polygon vertices: lower boundary left to right, then upper boundary
    /// right to left (a simple, x-monotone polygon).
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let mut v: Vec<[f64; 2]> = self.cross_sections.iter().map(|c| [c.x_a, c.low]).collect();
        v.extend(self.cross_sections.iter().rev().map(|c| [c.x_a, c.high]));
        v
    }

    /// Area of the region polygon (shoelace over the cross-sections).
    pub fn area(&self) -> f64 {
        let mut area = 0.0;
        for w in self.cross_sections.windows(2) {
            let width = w[1].x_a - w[0].x_a;
            let h0 = w[0].high - w[0].low;
            let h1 = w[1].high - w[1].low;
            area += width * (h0 + h1) / 2.0;
        }
        area
    }

    /// Fraction of the modeling cube covered by the region.
    pub fn fill_ratio(&self) -> f64 {
        self.area() / 4.0
    }

    /// Zone of a coded point. The region is closed: boundary points are
    /// inside R_E.
    pub fn classify(&self, x_a: f64, x_b: f64) -> Zone {
        if x_a.abs() > 1.0 + BOUNDARY_EPS || x_b.abs() > 1.0 + BOUNDARY_EPS {
            return Zone::OutsideRm;
        }
        let first = self
            .cross_sections
            .first()
            .expect("region has cross-sections");
        let last = self
            .cross_sections
            .last()
            .expect("region has cross-sections");
        if x_a < first.x_a - BOUNDARY_EPS || x_a > last.x_a + BOUNDARY_EPS {
            return Zone::ExtrapolationBand;
        }
        let (low, high) = self.bounds_at(x_a);
        if x_b >= low - BOUNDARY_EPS && x_b <= high + BOUNDARY_EPS {
            Zone::InsideRe
        } else {
            Zone::ExtrapolationBand
        }
    }

    /// Linearly interpolated slid range at a coded parent value.
    pub fn bounds_at(&self, x_a: f64) -> (f64, f64) {
        let cs = &self.cross_sections;
        if x_a <= cs[0].x_a {
            return (cs[0].low, cs[0].high);
        }
        for w in cs.windows(2) {
            if x_a <= w[1].x_a {
                let span = w[1].x_a - w[0].x_a;
                let t = if span > 0.0 {
                    (x_a - w[0].x_a) / span
                } else {
                    0.0
                };
                return (
                    w[0].low + t * (w[1].low - w[0].low),
                    w[0].high + t * (w[1].high - w[0].high),
                );
            }
        }
        let last = cs.last().unwrap();
        (last.low, last.high)
    }
}

/// Build the experimental region of a design.
///
/// With a sliding pair the cross-sections are the coded conditional ranges at
/// each parent level. Without one, the first two quantitative factors span
/// the full square.
pub fn build_region(design: &SlidingDesign) -> Result<Region> {
    if let Ok((parent, slid, spec)) = design.sliding_pair() {
        if parent.kind != FactorKind::Quantitative || slid.kind != FactorKind::Quantitative {
            return Err(Error::Validation(
                "region geometry needs quantitative parent and slid factors".into(),
            ));
        }
        if parent.levels.len() < 2 {
            return Err(Error::Validation(format!(
                "region geometry needs at least 2 parent levels, {} has {}",
                parent.name,
                parent.levels.len()
            )));
        }
        let table = design.coded_sliding_table(spec)?;
        let mut cross_sections: Vec<CrossSection> = table
            .iter()
            .map(|(x_a, row)| CrossSection {
                x_a: *x_a,
                low: row[0],
                high: row[row.len() - 1],
            })
            .collect();
        cross_sections.sort_by(|a, b| a.x_a.total_cmp(&b.x_a));
        return Ok(Region {
            cross_sections,
            x_axis: parent.name.clone(),
            y_axis: slid.name.clone(),
        });
    }

    let quantitative: Vec<&str> = design
        .factors
        .iter()
        .filter(|f| f.kind == FactorKind::Quantitative)
        .map(|f| f.name.as_str())
        .collect();
    if quantitative.len() < 2 {
        return Err(Error::Validation(
            "region geometry needs two quantitative factors".into(),
        ));
    }
    Ok(Region {
        cross_sections: vec![
            CrossSection {
                x_a: -1.0,
                low: -1.0,
                high: 1.0,
            },
            CrossSection {
                x_a: 1.0,
                low: -1.0,
                high: 1.0,
            },
        ],
        x_axis: quantitative[0].to_string(),
        y_axis: quantitative[1].to_string(),
    })
}

/// A predicted mean response with its region classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub zone: Zone,
}

/// Evaluate an RSM model at a coded point and classify the point.
pub fn predict_rsm(model: &RsmModel, region: &Region, x_a: f64, x_b: f64) -> Prediction {
    Prediction {
        value: model.evaluate(x_a, x_b),
        zone: region.classify(x_a, x_b),
    }
}

/// Evaluate a nested-effects model at a coded point.
///
/// The parent value must match one of the fitted levels: conditional effects
/// exist only there, so off-design parent values are a designed refusal, not
/// a numerical failure.
pub fn predict_nem(model: &NemModel, x_a: f64, x_b: f64) -> Result<f64> {
    let level =
        model
            .level_at(x_a, PARENT_LEVEL_TOL)
            .ok_or_else(|| Error::OffDesignParentLevel {
                x_a,
                levels: model.parent_values(),
            })?;
    Ok(level.alpha + level.beta * x_b + level.gamma * x_b * x_b)
}

/// Diagnostics of the product-variable transform. Correlations are between
/// the raw coded parent and slid columns; `None` when a column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDiagnostics {
    pub corr_before: Option<f64>,
    pub corr_after: Option<f64>,
    pub region_fill_before: Option<f64>,
    pub region_fill_after: Option<f64>,
}

/// Replace the slid factor's settings by parent x slid products, rebuilding
/// the sliding table and dropping the (s, t, r) annotation, which the
/// transform invalidates.
///
/// Straightens the experimental region toward a rectangle and lowers the raw
/// collinearity between the coded columns.
pub fn product_transform(design: &SlidingDesign) -> Result<(SlidingDesign, TransformDiagnostics)> {
    let (parent, slid, spec) = design.sliding_pair()?;
    if parent.kind != FactorKind::Quantitative {
        return Err(Error::Validation(
            "product transform needs a quantitative parent".into(),
        ));
    }
    let parent_settings = parent
        .settings
        .as_ref()
        .expect("quantitative parent has settings");

    let mut new_spec = spec.clone();
    new_spec.center = None;
    new_spec.half_width = None;
    for (label, row) in new_spec.table.iter_mut() {
        let idx = parent.level_index(label).ok_or_else(|| {
            Error::MissingSlidingEntry(format!(
                "sliding table row {label:?} is not a level of {}",
                parent.name
            ))
        })?;
        let p = parent_settings[idx];
        for v in row.iter_mut() {
            *v *= p;
        }
        if !row.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation(format!(
                "product transform reverses the slid ordering at parent level {label:?}"
            )));
        }
    }

    let corr_before = coded_correlation(design, &parent.name, &slid.name);
    let region_fill_before = build_region(design).ok().map(|r| r.fill_ratio());

    let transformed = SlidingDesign::resolve(
        design.planning.clone(),
        design.factors.clone(),
        vec![new_spec],
    )?;
    // Surface a degenerate transformed range as its own error.
    transformed.coder(&slid.name).map_err(|e| match e {
        Error::DegenerateRange { factor, value } => Error::DegenerateRange { factor, value },
        other => other,
    })?;

    let corr_after = coded_correlation(&transformed, &parent.name, &slid.name);
    let region_fill_after = build_region(&transformed).ok().map(|r| r.fill_ratio());

    Ok((
        transformed,
        TransformDiagnostics {
            corr_before,
            corr_after,
            region_fill_before,
            region_fill_after,
        },
    ))
}

fn coded_correlation(design: &SlidingDesign, a: &str, b: &str) -> Option<f64> {
    let u = design.coded_values(a).ok()?;
    let v = design.coded_values(b).ok()?;
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut suv = 0.0;
    let mut suu = 0.0;
    let mut svv = 0.0;
    for (x, y) in u.iter().zip(&v) {
        suv += (x - mu) * (y - mv);
        suu += (x - mu) * (x - mu);
        svv += (y - mv) * (y - mv);
    }
    if suu == 0.0 || svv == 0.0 {
        return None;
    }
    Some(suv / (suu * svv).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{FactorRole, FactorSpec, PlanningMatrix, SlidingSpec};
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    /// Ray-casting point-in-polygon oracle, boundary-inclusive. Independent of
    /// the cross-section implementation used by `Region::classify`.
    fn point_in_polygon(pt: [f64; 2], poly: &[[f64; 2]]) -> bool {
        let eps = 1e-12;
        let (x, y) = (pt[0], pt[1]);
        let mut inside = false;
        for i in 0..poly.len() {
            let [x1, y1] = poly[i];
            let [x2, y2] = poly[(i + 1) % poly.len()];
            let cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
            if cross.abs() < eps
                && x >= x1.min(x2) - eps
                && x <= x1.max(x2) + eps
                && y >= y1.min(y2) - eps
                && y <= y1.max(y2) + eps
            {
                return true;
            }
            if (y1 > y) != (y2 > y) {
                let xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                if xi > x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    #[test]
    fn welding_region_is_the_expected_quadrilateral() {
        let d = fixtures::welding();
        let r = build_region(&d).unwrap();
        assert_eq!(r.cross_sections.len(), 2);
        let lo = r.cross_sections[0];
        let hi = r.cross_sections[1];
        assert_eq!(lo.x_a, -1.0);
        assert_abs_diff_eq!(lo.low, 3.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lo.high, 1.0, epsilon = 1e-12);
        assert_eq!(hi.x_a, 1.0);
        assert_abs_diff_eq!(hi.low, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi.high, -3.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.area(), 16.0 / 11.0, epsilon = 1e-12);
    }

    #[test]
    fn classify_agrees_with_point_in_polygon_oracle() {
        let d = fixtures::welding();
        let r = build_region(&d).unwrap();
        let poly = r.vertices();
        // Sweep a grid over the cube and cross-validate both routes away from
        // boundaries, where closed-vs-eps conventions could differ.
        let mut checked = 0;
        for i in 0..41 {
            for j in 0..41 {
                let xa = -1.0 + 2.0 * i as f64 / 40.0;
                let xb = -1.0 + 2.0 * j as f64 / 40.0;
                let (low, high) = r.bounds_at(xa);
                if (xb - low).abs() < 1e-6 || (xb - high).abs() < 1e-6 {
                    continue;
                }
                let got = r.classify(xa, xb) == Zone::InsideRe;
                let want = point_in_polygon([xa, xb], &poly);
                assert_eq!(got, want, "disagreement at ({xa}, {xb})");
                checked += 1;
            }
        }
        assert!(checked > 1500);
    }

    #[test]
    fn classify_key_points() {
        let d = fixtures::welding();
        let r = build_region(&d).unwrap();
        // The cross-section at x_A = 0 is [-4/11, 4/11], so the center of the
        // cube lies inside the experimental region; the point-in-polygon
        // oracle above agrees.
        assert_eq!(r.classify(0.0, 0.0), Zone::InsideRe);
        // A design point on the boundary is inside.
        assert_eq!(r.classify(-1.0, 7.0 / 11.0), Zone::InsideRe);
        assert_eq!(r.classify(-1.0, 3.0 / 11.0), Zone::InsideRe);
        // Band between region and cube.
        assert_eq!(r.classify(0.0, 0.9), Zone::ExtrapolationBand);
        assert_eq!(r.classify(-1.0, -1.0), Zone::ExtrapolationBand);
        // Outside the cube.
        assert_eq!(r.classify(2.0, 0.0), Zone::OutsideRm);
        assert_eq!(r.classify(0.0, -1.5), Zone::OutsideRm);
    }

    #[test]
    fn region_polygon_stays_inside_the_cube() {
        for d in [fixtures::welding(), fixtures::nine_run()] {
            let r = build_region(&d).unwrap();
            for v in r.vertices() {
                assert!(
                    v[0].abs() <= 1.0 + 1e-9 && v[1].abs() <= 1.0 + 1e-9,
                    "{v:?}"
                );
            }
        }
    }

    #[test]
    fn every_design_point_is_inside() {
        let d = fixtures::welding();
        let r = build_region(&d).unwrap();
        let xa = d.coded_values("A").unwrap();
        let xb = d.coded_values("B").unwrap();
        for i in 0..d.runs() {
            assert_eq!(r.classify(xa[i], xb[i]), Zone::InsideRe, "run {i}");
        }
    }

    #[test]
    fn non_slid_design_spans_the_full_square() {
        let planning = PlanningMatrix::from_rows(
            &["X", "Y"],
            &[
                vec!["1", "10"],
                vec!["2", "20"],
                vec!["1", "20"],
                vec!["2", "10"],
            ],
        );
        let factors = vec![
            FactorSpec::quantitative("X", FactorRole::Free, &[1.0, 2.0]),
            FactorSpec::quantitative("Y", FactorRole::Free, &[10.0, 20.0]),
        ];
        let d = crate::design::SlidingDesign::resolve(planning, factors, vec![]).unwrap();
        let r = build_region(&d).unwrap();
        assert_eq!(r.area(), 4.0);
        assert_eq!(r.classify(0.3, -0.8), Zone::InsideRe);
    }

    #[test]
    fn predict_nem_refuses_off_design_parent_values() {
        use crate::translate::{NemLevel, NemModel};
        let model = NemModel::new(vec![
            NemLevel {
                parent_value: -1.0,
                alpha: 1.0,
                beta: 2.0,
                gamma: 3.0,
            },
            NemLevel {
                parent_value: 1.0,
                alpha: 0.0,
                beta: 0.0,
                gamma: 0.0,
            },
        ])
        .unwrap();
        let err = predict_nem(&model, 0.5, 0.2).unwrap_err();
        assert!(matches!(err, Error::OffDesignParentLevel { .. }), "{err}");
        let v = predict_nem(&model, -1.0, 7.0 / 11.0).unwrap();
        assert_abs_diff_eq!(
            v,
            1.0 + 2.0 * 7.0 / 11.0 + 3.0 * 49.0 / 121.0,
            epsilon = 1e-14
        );
        assert_eq!(predict_nem(&model, 1.0, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn predict_rsm_is_exact_on_monomials() {
        let d = fixtures::welding();
        let region = build_region(&d).unwrap();
        let mut m = RsmModel::new();
        m.set(1, 1, 1.0).unwrap();
        let p = predict_rsm(&m, &region, 0.5, 0.5);
        assert_eq!(p.value, 0.25);
        let zero = RsmModel::new();
        assert_eq!(predict_rsm(&zero, &region, -0.3, 0.9).value, 0.0);
    }

    #[test]
    fn product_transform_straightens_the_welding_region() {
        let d = fixtures::welding();
        let (transformed, diag) = product_transform(&d).unwrap();
        // Transformed settings are 2x(32,36,40) = (64,72,80) and
        // 4x(18,22,26) = (72,88,104).
        let spec = &transformed.sliding[0];
        assert_eq!(spec.table["2"], vec![64.0, 72.0, 80.0]);
        assert_eq!(spec.table["4"], vec![72.0, 88.0, 104.0]);
        // Oracle values computed directly from the two coded 18-entry columns.
        assert_abs_diff_eq!(
            diag.corr_before.unwrap(),
            -0.9062168892044167,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            diag.corr_after.unwrap(),
            0.6123724356957947,
            epsilon = 1e-12
        );
        assert!(diag.corr_after.unwrap().abs() < diag.corr_before.unwrap().abs());
        // The region fills more of the cube after the transform.
        assert_abs_diff_eq!(
            diag.region_fill_before.unwrap(),
            4.0 / 11.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(diag.region_fill_after.unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn product_transform_with_unit_parent_is_identity() {
        let planning = PlanningMatrix::from_rows(
            &["P", "S"],
            &[vec!["1", "lo"], vec!["1", "mid"], vec!["1", "hi"]],
        );
        let factors = vec![
            FactorSpec::quantitative("P", FactorRole::Parent, &[1.0]),
            FactorSpec::slid("S", &["lo", "mid", "hi"]),
        ];
        let sliding = SlidingSpec::new("P", "S", &[("1", &[5.0, 6.0, 7.0])]);
        let d = crate::design::SlidingDesign::resolve(planning, factors, vec![sliding]).unwrap();
        let (transformed, diag) = product_transform(&d).unwrap();
        assert_eq!(
            transformed.actual_values("S").unwrap(),
            d.actual_values("S").unwrap()
        );
        // The parent column is constant, so no correlation is defined.
        assert!(diag.corr_before.is_none());
    }
}
