//! Synthetic ground truths, interaction-elimination checks, and seeded
//! comparison of the three modeling strategies.
//!
//! Ground-truth surfaces are additively separable in the parent coordinate and
//! the standardized slid coordinate: `g1(x_A) + g2((x_B - c(x_A)) / r)`. When
//! a design's sliding table matches the surface's centering and scaling, the
//! RCRS interaction coefficients vanish on noiseless data; a mislocated table
//! leaves a real interaction behind.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coding::{code_nem, code_rcrs, code_rsm, lq_contrasts, TermSet};
use crate::design::{AffineMap, SlidingDesign};
use crate::error::{Error, Result};
use crate::fit::{ols_fit, FitResult};
use crate::region::{build_region, Region, Zone};
use crate::translate::{interpolate_poly, nem_model_from_fit, nem_to_rsm, RsmModel};

/// Tolerance for declaring a design's sliding structure matched to a surface.
const MATCH_TOL: f64 = 1e-9;

/// Tolerance for snapping a grid parent value onto a design parent level when
/// the RCRS strategy has no (s, t, r) geometry to extend with.
const LEVEL_SNAP_TOL: f64 = 1e-9;

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SurfaceRepr {
    g1: Vec<f64>,
    g2: Vec<f64>,
    center: AffineMap,
    half_width: f64,
}

/// Additively separable ground truth `g1(x_A) + g2(z)` with
/// `z = (x_B - center(x_A)) / half_width`, polynomial degrees capped at 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceRepr", into = "SurfaceRepr")]
pub struct SurfaceEq1 {
    /// Coefficients of g1 in the coded parent value, constant term first.
    pub g1: Vec<f64>,
    /// Coefficients of g2 in the standardized slid coordinate.
    pub g2: Vec<f64>,
    /// Conditional center of the slid coordinate, in coded units.
    pub center: AffineMap,
    /// Conditional half-width, positive.
    pub half_width: f64,
}

impl SurfaceEq1 {
    pub fn new(g1: &[f64], g2: &[f64], center: AffineMap, half_width: f64) -> Result<Self> {
        if g1.len() > 4 || g2.len() > 4 {
            return Err(Error::UnsupportedDegree {
                degree: (g1.len().max(g2.len()) - 1) as u32,
            });
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::Validation(
                "surface half-width must be positive".into(),
            ));
        }
        if g1.iter().chain(g2).any(|c| !c.is_finite()) {
            return Err(Error::Validation(
                "surface coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            g1: g1.to_vec(),
            g2: g2.to_vec(),
            center,
            half_width,
        })
    }

    pub fn eval(&self, x_a: f64, x_b: f64) -> f64 {
        let z = (x_b - self.center.eval(x_a)) / self.half_width;
        eval_poly(&self.g1, x_a) + eval_poly(&self.g2, z)
    }
}

impl TryFrom<SurfaceRepr> for SurfaceEq1 {
    type Error = String;

    fn try_from(r: SurfaceRepr) -> std::result::Result<Self, String> {
        SurfaceEq1::new(&r.g1, &r.g2, r.center, r.half_width).map_err(|e| e.to_string())
    }
}

impl From<SurfaceEq1> for SurfaceRepr {
    fn from(s: SurfaceEq1) -> Self {
        SurfaceRepr {
            g1: s.g1,
            g2: s.g2,
            center: s.center,
            half_width: s.half_width,
        }
    }
}

/// Evaluate the surface at a coded point.
pub fn eval_surface(surface: &SurfaceEq1, x_a: f64, x_b: f64) -> f64 {
    surface.eval(x_a, x_b)
}

/// Noiseless responses of a surface at the design's coded points.
pub fn surface_responses(surface: &SurfaceEq1, design: &SlidingDesign) -> Result<Vec<f64>> {
    let (parent, slid, _) = design.sliding_pair()?;
    let xa = design.coded_values(&parent.name)?;
    let xb = design.coded_values(&slid.name)?;
    Ok(xa
        .iter()
        .zip(&xb)
        .map(|(a, b)| surface.eval(*a, *b))
        .collect())
}

/// Result of fitting the RCRS model to noiseless surface data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    /// True when the design's standardized slid offsets are identical across
    /// parent levels under the surface's centering and scaling.
    pub matched: bool,
    /// Largest across-level spread of a standardized slid offset.
    pub z_spread: f64,
    pub interactions: Vec<(String, f64)>,
    pub max_interaction: f64,
    pub tol: f64,
    /// Whether the interactions meet the tolerance expected of matched designs.
    pub within_tol: bool,
}

/// Fit the RCRS model on noiseless surface data and report the interaction
/// coefficient magnitudes together with the matched/mismatched flag.
pub fn elimination_check(
    surface: &SurfaceEq1,
    design: &SlidingDesign,
    tol: f64,
) -> Result<EliminationReport> {
    let (_, _, spec) = design.sliding_pair()?;
    let table = design.coded_sliding_table(spec)?;
    let n_slid = table.first().map(|(_, row)| row.len()).unwrap_or(0);
    let mut z_spread = 0.0f64;
    for j in 0..n_slid {
        let offsets: Vec<f64> = table
            .iter()
            .map(|(p, row)| (row[j] - surface.center.eval(*p)) / surface.half_width)
            .collect();
        let max = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        z_spread = z_spread.max(max - min);
    }
    let matched = z_spread <= MATCH_TOL;

    let y = surface_responses(surface, design)?;
    let fit = ols_fit(&code_rcrs(design)?, &y)?;
    let interactions: Vec<(String, f64)> = fit
        .terms
        .iter()
        .filter(|t| t.contains('*'))
        .map(|t| (t.clone(), fit.coefficient(t).unwrap()))
        .collect();
    let max_interaction = interactions
        .iter()
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);

    Ok(EliminationReport {
        matched,
        z_spread,
        interactions,
        max_interaction,
        tol,
        within_tol: max_interaction <= tol,
    })
}

/// Per-strategy summary over the replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: String,
    /// Mean over replications of the in-region RMSE against the true mean.
    pub rmse_mean: Option<f64>,
    /// Standard error of that mean (needs at least two replications).
    pub rmse_se: Option<f64>,
    /// Mean RMSE over the extrapolation band, when the band is nonempty.
    pub extrapolation_rmse_mean: Option<f64>,
    pub r_squared_mean: f64,
    /// Largest |interaction coefficient| seen across replications.
    pub max_interaction: f64,
    /// In-region grid points this strategy scored (the RCRS strategy without
    /// sliding geometry is scored only at design parent levels).
    pub grid_points_scored: usize,
    pub failed_reps: usize,
}

/// Reproducible comparison report; identical configuration and seed give a
/// bit-identical report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub reps: usize,
    pub noise_sd: f64,
    pub grid_n: usize,
    pub grid_points_inside: usize,
    pub grid_points_band: usize,
    pub strategies: Vec<StrategyReport>,
}

/// RCRS prediction at arbitrary coded points: contrast values are polynomial
/// in the standardized slid coordinate and in the coded parent value.
struct RcrsPredictor {
    parent_linear: [f64; 3],
    parent_quad: Option<[f64; 3]>,
    slid_linear: [f64; 3],
    slid_quad: Option<[f64; 3]>,
    /// (s, t, r) when the design carries it; otherwise prediction is limited
    /// to the design's parent levels.
    geometry: Option<(AffineMap, f64)>,
    /// Per parent level: (coded parent, conditional center, conditional half-range).
    per_level: Vec<(f64, f64, f64)>,
}

impl RcrsPredictor {
    fn build(design: &SlidingDesign) -> Result<Self> {
        let (parent, slid, spec) = design.sliding_pair()?;
        let parent_coded = design.coded_level_values(&parent.name)?;
        let table = design.coded_sliding_table(spec)?;

        let n_parent = parent.levels.len();
        let mut lin_pts = Vec::new();
        let mut quad_pts = Vec::new();
        for (i, p) in parent_coded.iter().enumerate() {
            let (l, q) = lq_contrasts(n_parent, i)?;
            lin_pts.push((*p, l));
            if let Some(q) = q {
                quad_pts.push((*p, q));
            }
        }
        let parent_linear = interpolate_poly(&lin_pts)?;
        let parent_quad = if quad_pts.is_empty() {
            None
        } else {
            Some(interpolate_poly(&quad_pts)?)
        };

        // Standardized offsets of the slid symbolic levels, averaged across
        // parent levels (identical across levels for matched tables).
        let per_level: Vec<(f64, f64, f64)> = table
            .iter()
            .map(|(p, row)| {
                let center = (row[0] + row[row.len() - 1]) / 2.0;
                let half = (row[row.len() - 1] - row[0]) / 2.0;
                (*p, center, half)
            })
            .collect();
        let n_slid = slid.levels.len();
        let mut lin_pts = Vec::new();
        let mut quad_pts = Vec::new();
        for j in 0..n_slid {
            let w = table
                .iter()
                .zip(&per_level)
                .map(|((_, row), (_, c, h))| (row[j] - c) / h)
                .sum::<f64>()
                / table.len() as f64;
            let (l, q) = lq_contrasts(n_slid, j)?;
            lin_pts.push((w, l));
            if let Some(q) = q {
                quad_pts.push((w, q));
            }
        }
        let slid_linear = interpolate_poly(&lin_pts)?;
        let slid_quad = if quad_pts.is_empty() {
            None
        } else {
            Some(interpolate_poly(&quad_pts)?)
        };

        let geometry = match (&spec.center, spec.half_width) {
            (Some(c), Some(r)) => Some((*c, r)),
            _ => None,
        };

        Ok(Self {
            parent_linear,
            parent_quad,
            slid_linear,
            slid_quad,
            geometry,
            per_level,
        })
    }

    fn z_at(&self, x_a: f64, x_b: f64) -> Option<f64> {
        match &self.geometry {
            Some((center, r)) => Some((x_b - center.eval(x_a)) / r),
            None => {
                let (_, c, h) = self
                    .per_level
                    .iter()
                    .find(|(p, _, _)| (p - x_a).abs() <= LEVEL_SNAP_TOL)?;
                Some((x_b - c) / h)
            }
        }
    }

    fn predict(&self, fit: &FitResult, labels: &RcrsLabels, x_a: f64, x_b: f64) -> Option<f64> {
        let z = self.z_at(x_a, x_b)?;
        let poly = |c: &[f64; 3], x: f64| c[0] + c[1] * x + c[2] * x * x;
        let coef = |label: &str| fit.coefficient(label).unwrap_or(0.0);

        let a_l = poly(&self.parent_linear, x_a);
        let b_l = poly(&self.slid_linear, z);
        let mut value = coef("intercept")
            + coef(&labels.parent_l) * a_l
            + coef(&labels.slid_l) * b_l
            + coef(&labels.int_ll) * a_l * b_l;
        if let Some(pq) = &self.parent_quad {
            value += coef(&labels.parent_q) * poly(pq, x_a);
        }
        if let Some(sq) = &self.slid_quad {
            let b_q = poly(sq, z);
            value += coef(&labels.slid_q) * b_q + coef(&labels.int_lq) * a_l * b_q;
        }
        Some(value)
    }
}

struct RcrsLabels {
    parent_l: String,
    parent_q: String,
    slid_l: String,
    slid_q: String,
    int_ll: String,
    int_lq: String,
}

impl RcrsLabels {
    fn new(parent: &str, slid: &str) -> Self {
        Self {
            parent_l: format!("{parent}_l"),
            parent_q: format!("{parent}_q"),
            slid_l: format!("{slid}_l"),
            slid_q: format!("{slid}_q"),
            int_ll: format!("{parent}_l*{slid}_l"),
            int_lq: format!("{parent}_l*{slid}_q"),
        }
    }
}

fn max_interaction_of_fit(fit: &FitResult) -> f64 {
    fit.terms
        .iter()
        .filter(|t| t.contains('*'))
        .filter_map(|t| fit.coefficient(t))
        .map(f64::abs)
        .fold(0.0, f64::max)
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

struct GridPoint {
    x_a: f64,
    x_b: f64,
    truth: f64,
}

struct StrategyAccumulator {
    strategy: &'static str,
    rmses: Vec<f64>,
    band_rmses: Vec<f64>,
    r_squareds: Vec<f64>,
    max_interaction: f64,
    grid_points_scored: usize,
    failed: usize,
}

impl StrategyAccumulator {
    fn new(strategy: &'static str) -> Self {
        Self {
            strategy,
            rmses: Vec::new(),
            band_rmses: Vec::new(),
            r_squareds: Vec::new(),
            max_interaction: 0.0,
            grid_points_scored: 0,
            failed: 0,
        }
    }

    fn finish(self) -> StrategyReport {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let rmse_mean = (!self.rmses.is_empty()).then(|| mean(&self.rmses));
        let rmse_se = (self.rmses.len() >= 2).then(|| {
            let m = mean(&self.rmses);
            let var = self.rmses.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                / (self.rmses.len() - 1) as f64;
            (var / self.rmses.len() as f64).sqrt()
        });
        StrategyReport {
            strategy: self.strategy.to_string(),
            rmse_mean,
            rmse_se,
            extrapolation_rmse_mean: (!self.band_rmses.is_empty()).then(|| mean(&self.band_rmses)),
            r_squared_mean: if self.r_squareds.is_empty() {
                0.0
            } else {
                mean(&self.r_squareds)
            },
            max_interaction: self.max_interaction,
            grid_points_scored: self.grid_points_scored,
            failed_reps: self.failed,
        }
    }
}

/// Draw noisy data from the surface on the design, fit the RCRS, hybrid, and
/// direct RSM strategies, and score their predictions of the true mean on a
/// uniform grid clipped to the experimental region.
///
/// Each replication uses its own generator stream derived from the master
/// seed, so the report is deterministic and independent of evaluation order;
/// the same standard-normal draws are scaled by `noise_sd`, giving common
/// random numbers across noise levels.
pub fn run_comparison(
    surface: &SurfaceEq1,
    design: &SlidingDesign,
    noise_sd: f64,
    reps: usize,
    seed: u64,
    grid_n: usize,
) -> Result<SimReport> {
    if reps < 1 {
        return Err(Error::Validation("need at least one replication".into()));
    }
    if grid_n < 2 {
        return Err(Error::Validation(
            "need a grid of at least 2 points per axis".into(),
        ));
    }
    if noise_sd < 0.0 {
        return Err(Error::Validation("noise sd must be nonnegative".into()));
    }

    let (parent, slid, _) = design.sliding_pair()?;
    let region = build_region(design)?;
    let truth_at_design = surface_responses(surface, design)?;

    let (inside, band) = evaluation_grids(surface, &region, grid_n);

    let rcrs_matrix = code_rcrs(design)?;
    let nem_matrix = code_nem(design)?;
    let term_set = TermSet::default_for(design)?;
    let rsm_matrix = code_rsm(design, &term_set)?;
    let rcrs_predictor = RcrsPredictor::build(design)?;
    let rcrs_labels = RcrsLabels::new(&parent.name, &slid.name);

    let mut acc_rcrs = StrategyAccumulator::new("rcrs");
    let mut acc_hybrid = StrategyAccumulator::new("hybrid");
    let mut acc_rsm = StrategyAccumulator::new("rsm");

    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64 + 1);
        let y: Vec<f64> = truth_at_design
            .iter()
            .map(|t| t + noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();

        match ols_fit(&rcrs_matrix, &y) {
            Ok(fit) => {
                score_predictor(&mut acc_rcrs, &inside, &band, |p| {
                    rcrs_predictor.predict(&fit, &rcrs_labels, p.x_a, p.x_b)
                });
                acc_rcrs.r_squareds.push(fit.r_squared);
                acc_rcrs.max_interaction =
                    acc_rcrs.max_interaction.max(max_interaction_of_fit(&fit));
            }
            Err(_) => acc_rcrs.failed += 1,
        }

        match ols_fit(&nem_matrix, &y)
            .and_then(|fit| Ok((nem_model_from_fit(design, &fit)?, fit)))
            .and_then(|(nem, fit)| Ok((nem_to_rsm(&nem)?, fit)))
        {
            Ok((model, fit)) => {
                score_predictor(&mut acc_hybrid, &inside, &band, |p| {
                    Some(model.evaluate(p.x_a, p.x_b))
                });
                acc_hybrid.r_squareds.push(fit.r_squared);
                acc_hybrid.max_interaction = acc_hybrid
                    .max_interaction
                    .max(model.max_interaction_magnitude());
            }
            Err(_) => acc_hybrid.failed += 1,
        }

        match ols_fit(&rsm_matrix, &y).and_then(|fit| {
            Ok((
                RsmModel::from_fit(&fit, &term_set, &parent.name, &slid.name)?,
                fit,
            ))
        }) {
            Ok((model, fit)) => {
                score_predictor(&mut acc_rsm, &inside, &band, |p| {
                    Some(model.evaluate(p.x_a, p.x_b))
                });
                acc_rsm.r_squareds.push(fit.r_squared);
                acc_rsm.max_interaction = acc_rsm
                    .max_interaction
                    .max(model.max_interaction_magnitude());
            }
            Err(_) => acc_rsm.failed += 1,
        }
    }

    Ok(SimReport {
        seed,
        reps,
        noise_sd,
        grid_n,
        grid_points_inside: inside.len(),
        grid_points_band: band.len(),
        strategies: vec![acc_rcrs.finish(), acc_hybrid.finish(), acc_rsm.finish()],
    })
}

fn evaluation_grids(
    surface: &SurfaceEq1,
    region: &Region,
    grid_n: usize,
) -> (Vec<GridPoint>, Vec<GridPoint>) {
    let mut inside = Vec::new();
    let mut band = Vec::new();
    for i in 0..grid_n {
        for j in 0..grid_n {
            let x_a = -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64;
            let x_b = -1.0 + 2.0 * j as f64 / (grid_n - 1) as f64;
            let point = GridPoint {
                x_a,
                x_b,
                truth: surface.eval(x_a, x_b),
            };
            match region.classify(x_a, x_b) {
                Zone::InsideRe => inside.push(point),
                Zone::ExtrapolationBand => band.push(point),
                Zone::OutsideRm => {}
            }
        }
    }
    (inside, band)
}

fn score_predictor<F: Fn(&GridPoint) -> Option<f64>>(
    acc: &mut StrategyAccumulator,
    inside: &[GridPoint],
    band: &[GridPoint],
    predict: F,
) {
    let errors: Vec<f64> = inside
        .iter()
        .filter_map(|p| predict(p).map(|v| v - p.truth))
        .collect();
    acc.grid_points_scored = errors.len();
    if !errors.is_empty() {
        acc.rmses.push(rmse(&errors));
    }
    let band_errors: Vec<f64> = band
        .iter()
        .filter_map(|p| predict(p).map(|v| v - p.truth))
        .collect();
    if !band_errors.is_empty() {
        acc.band_rmses.push(rmse(&band_errors));
    }
}

/// Which design a simulation runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignChoice {
    #[default]
    Welding,
    NineRun,
    /// Path to a design CSV (with its JSON metadata sibling).
    Csv(String),
}

impl DesignChoice {
    pub fn load(&self) -> Result<SlidingDesign> {
        match self {
            DesignChoice::Welding => Ok(crate::fixtures::welding()),
            DesignChoice::NineRun => Ok(crate::fixtures::nine_run()),
            DesignChoice::Csv(path) => crate::io::load_design(std::path::Path::new(path)),
        }
    }
}

fn default_reps() -> usize {
    100
}

fn default_grid_n() -> usize {
    21
}

/// Simulation configuration as carried by the CLI's JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub surface: SurfaceEq1,
    #[serde(default)]
    pub design: DesignChoice,
    pub noise_sd: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn run(&self) -> Result<SimReport> {
        let design = self.design.load()?;
        run_comparison(
            &self.surface,
            &design,
            self.noise_sd,
            self.reps,
            self.seed,
            self.grid_n,
        )
    }
}
