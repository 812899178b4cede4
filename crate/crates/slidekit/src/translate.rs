//! Translation between the three model parameterizations.
//!
//! * A nested-effects model carries one conditional quadratic
//!   `alpha + beta * x_B + gamma * x_B^2` per parent level.
//! * A response-surface model carries coefficients on monomials
//!   `x_A^i * x_B^j` with exponents up to 2.
//! * An RCRS model carries effects of the re-centered and re-scaled slid
//!   coordinate `z = (x_B - m(x_A)) / r` together with the region geometry
//!   `(s, t, r)` where `m(x_A) = s + t * x_A`.
//!
//! The maps here are exact polynomial identities, so round trips recover the
//! inputs to machine precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coding::{lq_contrasts, INTERCEPT_LABEL};
use crate::design::{AffineMap, FactorKind, SlidingDesign};
use crate::error::{Error, Result};
use crate::fit::{ols_fit, FitResult};

/// Conditional effects of the slid factor at one parent level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NemLevel {
    /// Coded parent value the triple is conditioned on.
    pub parent_value: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Nested-effects model: one (alpha, beta, gamma) triple per parent level,
/// with the slid factor in proportional coding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemModel {
    pub levels: Vec<NemLevel>,
}

impl NemModel {
    /// Levels are sorted by parent value and must be distinct.
    pub fn new(mut levels: Vec<NemLevel>) -> Result<Self> {
        levels.sort_by(|a, b| a.parent_value.total_cmp(&b.parent_value));
        for w in levels.windows(2) {
            if w[0].parent_value == w[1].parent_value {
                return Err(Error::DuplicateParentLevel {
                    value: w[0].parent_value,
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn parent_values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.parent_value).collect()
    }

    pub fn level_at(&self, parent_value: f64, tol: f64) -> Option<&NemLevel> {
        self.levels
            .iter()
            .find(|l| (l.parent_value - parent_value).abs() <= tol)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RsmTermRepr {
    a_exp: u8,
    b_exp: u8,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RsmModelRepr {
    coefficients: Vec<RsmTermRepr>,
}

/// Response-surface model: coefficients keyed by the exponent pair (i, j) of
/// `x_A^i * x_B^j`, exponents up to 2. Absent keys mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "RsmModelRepr", into = "RsmModelRepr")]
pub struct RsmModel {
    coefficients: BTreeMap<(u8, u8), f64>,
}

impl RsmModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[((u8, u8), f64)]) -> Result<Self> {
        let mut m = Self::new();
        for ((i, j), v) in pairs {
            m.set(*i, *j, *v)?;
        }
        Ok(m)
    }

    /// Set the coefficient of `x_A^i * x_B^j`; exact zeros clear the key.
    pub fn set(&mut self, i: u8, j: u8, value: f64) -> Result<()> {
        if i > 2 || j > 2 {
            return Err(Error::UnsupportedDegree {
                degree: i.max(j) as u32,
            });
        }
        if !value.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite coefficient for exponents ({i}, {j})"
            )));
        }
        if value == 0.0 {
            self.coefficients.remove(&(i, j));
        } else {
            self.coefficients.insert((i, j), value);
        }
        Ok(())
    }

    pub fn get(&self, i: u8, j: u8) -> f64 {
        self.coefficients.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u8, u8), f64)> + '_ {
        self.coefficients.iter().map(|(k, v)| (*k, *v))
    }

    pub fn evaluate(&self, x_a: f64, x_b: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&(i, j), &v)| v * x_a.powi(i as i32) * x_b.powi(j as i32))
            .sum()
    }

    /// Largest |coefficient| among the cross terms (both exponents >= 1).
    pub fn max_interaction_magnitude(&self) -> f64 {
        self.coefficients
            .iter()
            .filter(|(&(i, j), _)| i >= 1 && j >= 1)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Read a fitted RSM matrix back into exponent-keyed coefficients.
    pub fn from_fit(
        fit: &FitResult,
        term_set: &crate::coding::TermSet,
        parent: &str,
        slid: &str,
    ) -> Result<Self> {
        let mut m = Self::new();
        let intercept = fit
            .coefficient(INTERCEPT_LABEL)
            .ok_or_else(|| Error::Validation("fit does not contain an intercept term".into()))?;
        m.set(0, 0, intercept)?;
        for mono in &term_set.0 {
            let label = mono.label();
            let c = fit
                .coefficient(&label)
                .ok_or_else(|| Error::Validation(format!("fit does not contain term {label}")))?;
            m.set(mono.degree_of(parent) as u8, mono.degree_of(slid) as u8, c)?;
        }
        Ok(m)
    }

    /// Largest |difference| of matching coefficients.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<(u8, u8)> = self.coefficients.keys().copied().collect();
        keys.extend(other.coefficients.keys().copied());
        keys.into_iter()
            .map(|(i, j)| (self.get(i, j) - other.get(i, j)).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<RsmModelRepr> for RsmModel {
    type Error = String;

    fn try_from(repr: RsmModelRepr) -> std::result::Result<Self, String> {
        let mut m = RsmModel::new();
        for t in repr.coefficients {
            m.set(t.a_exp, t.b_exp, t.value)
                .map_err(|e| e.to_string())?;
        }
        Ok(m)
    }
}

impl From<RsmModel> for RsmModelRepr {
    fn from(m: RsmModel) -> Self {
        RsmModelRepr {
            coefficients: m
                .coefficients
                .into_iter()
                .map(|((i, j), v)| RsmTermRepr {
                    a_exp: i,
                    b_exp: j,
                    value: v,
                })
                .collect(),
        }
    }
}

/// RCRS model with the region geometry that re-centers and re-scales the slid
/// coordinate: effects on `1, x_A, x_A^2, z, z^2, x_A*z` where
/// `z = (x_B - s - t*x_A) / r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcrsModel {
    pub eta0: f64,
    pub eta1: f64,
    pub eta11: f64,
    pub eta2: f64,
    pub eta22: f64,
    pub eta12: f64,
    /// Conditional center `m(x_A) = s + t * x_A` in coded units.
    pub center: AffineMap,
    /// Conditional half-width `r` in coded units, positive.
    pub half_width: f64,
}

impl RcrsModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eta0: f64,
        eta1: f64,
        eta11: f64,
        eta2: f64,
        eta22: f64,
        eta12: f64,
        center: AffineMap,
        half_width: f64,
    ) -> Result<Self> {
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::Validation("RCRS half-width must be positive".into()));
        }
        let fields = [eta0, eta1, eta11, eta2, eta22, eta12, center.intercept, center.slope];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "RCRS effects and geometry must be finite".into(),
            ));
        }
        Ok(Self {
            eta0,
            eta1,
            eta11,
            eta2,
            eta22,
            eta12,
            center,
            half_width,
        })
    }

    /// Direct evaluation in the re-centered coordinate; the oracle route the
    /// polynomial expansion is checked against.
    pub fn evaluate(&self, x_a: f64, x_b: f64) -> f64 {
        let z = (x_b - self.center.eval(x_a)) / self.half_width;
        self.eta0
            + self.eta1 * x_a
            + self.eta11 * x_a * x_a
            + self.eta2 * z
            + self.eta22 * z * z
            + self.eta12 * x_a * z
    }
}

/// Interpolating polynomial (degree len-1, at most quadratic) through the
/// given points, as coefficients `[c0, c1, c2]`.
pub(crate) fn interpolate_poly(points: &[(f64, f64)]) -> Result<[f64; 3]> {
    match points {
        [(_, y)] => Ok([*y, 0.0, 0.0]),
        [(x1, y1), (x2, y2)] => {
            if x1 == x2 {
                return Err(Error::DuplicateParentLevel { value: *x1 });
            }
            let slope = (y2 - y1) / (x2 - x1);
            Ok([y1 - slope * x1, slope, 0.0])
        }
        [(x1, y1), (x2, y2), (x3, y3)] => {
            if x1 == x2 || x1 == x3 || x2 == x3 {
                return Err(Error::DuplicateParentLevel {
                    value: if x1 == x2 { *x1 } else { *x3 },
                });
            }
            let d1 = (x1 - x2) * (x1 - x3);
            let d2 = (x2 - x1) * (x2 - x3);
            let d3 = (x3 - x1) * (x3 - x2);
            let c2 = y1 / d1 + y2 / d2 + y3 / d3;
            let c1 = -y1 * (x2 + x3) / d1 - y2 * (x1 + x3) / d2 - y3 * (x1 + x2) / d3;
            let c0 = y1 * x2 * x3 / d1 + y2 * x1 * x3 / d2 + y3 * x1 * x2 / d3;
            Ok([c0, c1, c2])
        }
        _ => Err(Error::Validation(format!(
            "interpolation through {} points is unsupported (need 1 to 3)",
            points.len()
        ))),
    }
}

/// Specialize an RSM model to conditional (alpha, beta, gamma) triples at the
/// given coded parent levels: each of alpha, beta, gamma is the corresponding
/// polynomial in `x_A` evaluated at the level.
pub fn rsm_to_nem(model: &RsmModel, parent_levels: &[f64]) -> Result<NemModel> {
    let eval_poly =
        |j: u8, p: f64| -> f64 { model.get(0, j) + model.get(1, j) * p + model.get(2, j) * p * p };
    NemModel::new(
        parent_levels
            .iter()
            .map(|&p| NemLevel {
                parent_value: p,
                alpha: eval_poly(0, p),
                beta: eval_poly(1, p),
                gamma: eval_poly(2, p),
            })
            .collect(),
    )
}

/// Lift a nested-effects model to an RSM model by interpolating alpha, beta,
/// and gamma across the parent levels.
///
/// Three levels give quadratic polynomials in `x_A` (the nine-term expanded
/// model); two levels give affine interpolation with zero quadratic
/// coefficients, matching the degrees of freedom the design actually carries.
pub fn nem_to_rsm(model: &NemModel) -> Result<RsmModel> {
    let n = model.levels.len();
    if !(2..=3).contains(&n) {
        return Err(Error::Validation(format!(
            "nested-effects translation needs 2 or 3 parent levels, got {n}"
        )));
    }
    type Pick = fn(&NemLevel) -> f64;
    let mut out = RsmModel::new();
    let picks: [(u8, Pick); 3] = [(0, |l| l.alpha), (1, |l| l.beta), (2, |l| l.gamma)];
    for (j, pick) in picks {
        let points: Vec<(f64, f64)> = model
            .levels
            .iter()
            .map(|l| (l.parent_value, pick(l)))
            .collect();
        let coeffs = interpolate_poly(&points)?;
        for (i, c) in coeffs.iter().enumerate() {
            out.set(i as u8, j, *c)?;
        }
    }
    Ok(out)
}

/// Constraint diagnostics for representing a nested-effects model by the
/// six-term second-order RSM model: the conditional second-order effects must
/// coincide and the conditional first-order effects must be affine in `x_A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// max |gamma_i - gamma_j| over parent level pairs.
    pub gamma_spread: f64,
    /// |beta(1) + beta(-1) - 2 beta(0)| / 2, the quadratic component of beta.
    pub beta_curvature: f64,
    pub tol: f64,
    pub gamma_within_tol: bool,
    pub beta_within_tol: bool,
}

impl ConstraintReport {
    pub fn satisfied(&self) -> bool {
        self.gamma_within_tol && self.beta_within_tol
    }
}

/// Check the second-order representability constraints of a three-level
/// nested-effects model whose parent levels are coded to {-1, 0, 1}.
pub fn check_second_order_constraints(model: &NemModel, tol: f64) -> Result<ConstraintReport> {
    const LEVEL_TOL: f64 = 1e-12;
    let find = |p: f64| -> Result<&NemLevel> {
        model.level_at(p, LEVEL_TOL).ok_or_else(|| {
            Error::Validation(format!(
                "constraint check needs parent levels {{-1, 0, 1}}; level {p} is missing"
            ))
        })
    };
    if model.levels.len() != 3 {
        return Err(Error::Validation(format!(
            "constraint check needs exactly 3 parent levels, got {}",
            model.levels.len()
        )));
    }
    let lo = find(-1.0)?;
    let mid = find(0.0)?;
    let hi = find(1.0)?;

    let gammas = [lo.gamma, mid.gamma, hi.gamma];
    let gmax = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmin = gammas.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma_spread = gmax - gmin;
    let beta_curvature = (hi.beta + lo.beta - 2.0 * mid.beta).abs() / 2.0;

    Ok(ConstraintReport {
        gamma_spread,
        beta_curvature,
        tol,
        gamma_within_tol: gamma_spread <= tol,
        beta_within_tol: beta_curvature <= tol,
    })
}

/// Assemble a nested-effects model from a fitted NEM matrix.
///
/// The fit carries conditional linear/quadratic contrast coefficients; at each
/// parent level they are converted into the monomial basis `1, x_B, x_B^2` by
/// the unique change of basis between the two systems restricted to the three
/// conditional settings, derived from the design's sliding table.
pub fn nem_model_from_fit(design: &SlidingDesign, fit: &FitResult) -> Result<NemModel> {
    let (parent, slid, spec) = design.sliding_pair()?;
    if parent.kind != FactorKind::Quantitative {
        return Err(Error::Validation(format!(
            "parent {} must be quantitative to carry coded levels",
            parent.name
        )));
    }
    let coef = |label: &str| -> Result<f64> {
        fit.coefficient(label)
            .ok_or_else(|| Error::Validation(format!("fit does not contain term {label}")))
    };

    let intercept = coef(INTERCEPT_LABEL)?;
    let parent_l = coef(&format!("{}_l", parent.name))?;
    let parent_q = if parent.levels.len() == 3 {
        Some(coef(&format!("{}_q", parent.name))?)
    } else {
        None
    };

    let coded_table = design.coded_sliding_table(spec)?;
    let n_slid = slid.levels.len();

    let mut levels = Vec::new();
    for (i, (parent_coded, settings)) in coded_table.iter().enumerate() {
        let (al, aq) = lq_contrasts(parent.levels.len(), i)?;
        let mut c0 = intercept + parent_l * al;
        if let (Some(pq), Some(aqv)) = (parent_q, aq) {
            c0 += pq * aqv;
        }
        let b_l = coef(&format!("{}_l|{}_{}", slid.name, parent.name, i + 1))?;
        let b_q = if n_slid == 3 {
            coef(&format!("{}_q|{}_{}", slid.name, parent.name, i + 1))?
        } else {
            0.0
        };

        // Conditional fitted means at the slid settings, then the quadratic
        // (or line) through them in the coded slid coordinate.
        let points: Vec<(f64, f64)> = settings
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let (bl, bq) = lq_contrasts(n_slid, j)?;
                Ok((*v, c0 + b_l * bl + b_q * bq.unwrap_or(0.0)))
            })
            .collect::<Result<_>>()?;
        let [alpha, beta, gamma] = interpolate_poly(&points)?;
        levels.push(NemLevel {
            parent_value: *parent_coded,
            alpha,
            beta,
            gamma,
        });
    }
    NemModel::new(levels)
}

/// The hybrid strategy: fit the well-conditioned nested-effects matrix, then
/// translate the fitted conditional effects into an RSM model usable for
/// prediction at off-design parent values.
pub fn hybrid_fit(design: &SlidingDesign, response: &[f64]) -> Result<RsmModel> {
    let matrix = crate::coding::code_nem(design)?;
    let fit = ols_fit(&matrix, response)?;
    let nem = nem_model_from_fit(design, &fit)?;
    nem_to_rsm(&nem)
}

/// Expand an RCRS model into RSM monomial coefficients by substituting
/// `z = (x_B - s - t*x_A) / r` and collecting powers.
///
/// With trivial geometry (no sliding) the effects pass through unchanged;
/// otherwise the region shape leaks into every coefficient, which is exactly
/// why fitted RSM coefficients mix the response relationship with the
/// region's slant:
///
/// ```
/// use slidekit::design::AffineMap;
/// use slidekit::translate::{rcrs_expand, RcrsModel};
///
/// // A pure slid-linear effect over the sliding line z = x_B + x_A.
/// let model = RcrsModel::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
///                            AffineMap::new(0.0, -1.0), 1.0)?;
/// let rsm = rcrs_expand(&model);
/// assert_eq!(rsm.get(1, 0), 1.0); // x_A
/// assert_eq!(rsm.get(0, 1), 1.0); // x_B
/// # Ok::<(), slidekit::Error>(())
/// ```
pub fn rcrs_expand(model: &RcrsModel) -> RsmModel {
    let s = model.center.intercept;
    let t = model.center.slope;
    let r = model.half_width;
    let (e0, e1, e11, e2, e22, e12) = (
        model.eta0,
        model.eta1,
        model.eta11,
        model.eta2,
        model.eta22,
        model.eta12,
    );
    let mut out = RsmModel::new();
    let mut set = |i: u8, j: u8, v: f64| {
        out.set(i, j, v)
            .expect("exponents are fixed and finite inputs stay finite");
    };
    set(0, 0, e0 + (s * s) / (r * r) * e22 - (s / r) * e2);
    set(
        1,
        0,
        e1 - (t / r) * e2 - (s / r) * e12 + (2.0 * s * t) / (r * r) * e22,
    );
    set(2, 0, e11 + (t * t) / (r * r) * e22 - (t / r) * e12);
    set(0, 1, e2 / r - (2.0 * s) / (r * r) * e22);
    set(0, 2, e22 / (r * r));
    set(1, 1, e12 / r - (2.0 * t) / (r * r) * e22);
    out
}

/// One verified relation between fitted RCRS and NEM coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRelation {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityRelation {
    pub fn abs_diff(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Report of the averaging/difference identities tying the RCRS fit to the
/// NEM fit on a two-parent-level design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub relations: Vec<IdentityRelation>,
    pub tol: f64,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.relations.iter().all(|r| r.abs_diff() <= self.tol)
    }

    pub fn max_abs_diff(&self) -> f64 {
        self.relations
            .iter()
            .map(|r| r.abs_diff())
            .fold(0.0, f64::max)
    }
}

/// Check that on a two-level-parent design the RCRS slid effects are the
/// averages of the two conditional NEM effects, the RCRS interactions are
/// half their differences (second level minus first, since the parent linear
/// contrast is +1 at the second level), and the parent linear effects agree.
pub fn rcrs_nem_identity_check(
    fit_rcrs: &FitResult,
    fit_nem: &FitResult,
    tol: f64,
) -> Result<IdentityReport> {
    // Recover the slid/parent label structure from the fitted terms.
    let interactions: Vec<&String> = fit_rcrs.terms.iter().filter(|t| t.contains('*')).collect();
    if interactions.is_empty() {
        return Err(Error::Validation(
            "RCRS fit carries no interaction terms to check".into(),
        ));
    }
    let parent_l = interactions[0]
        .split('*')
        .next()
        .expect("split yields at least one part")
        .to_string();

    let coef = |fit: &FitResult, label: &str| -> Result<f64> {
        fit.coefficient(label)
            .ok_or_else(|| Error::Validation(format!("fit does not contain term {label}")))
    };

    let mut relations = vec![IdentityRelation {
        name: format!("{parent_l} equal in both fits"),
        lhs: coef(fit_rcrs, &parent_l)?,
        rhs: coef(fit_nem, &parent_l)?,
    }];

    for interaction in interactions {
        let slid_label = interaction.split('*').nth(1).ok_or_else(|| {
            Error::Validation(format!("malformed interaction label {interaction}"))
        })?;
        let parent_name = parent_l.trim_end_matches("_l");
        let cond_1 = format!("{slid_label}|{parent_name}_1");
        let cond_2 = format!("{slid_label}|{parent_name}_2");
        if fit_nem
            .coefficient(&format!("{slid_label}|{parent_name}_3"))
            .is_some()
        {
            return Err(Error::Validation(
                "identity check is defined for two-level parents only".into(),
            ));
        }
        let c1 = coef(fit_nem, &cond_1)?;
        let c2 = coef(fit_nem, &cond_2)?;
        relations.push(IdentityRelation {
            name: format!("{slid_label} = ({cond_1} + {cond_2})/2"),
            lhs: coef(fit_rcrs, slid_label)?,
            rhs: (c1 + c2) / 2.0,
        });
        relations.push(IdentityRelation {
            name: format!("{interaction} = ({cond_2} - {cond_1})/2"),
            lhs: coef(fit_rcrs, interaction)?,
            rhs: (c2 - c1) / 2.0,
        });
    }

    Ok(IdentityReport { relations, tol })
}
