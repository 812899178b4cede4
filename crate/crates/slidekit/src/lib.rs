//! Design and analysis of experiments with sliding (related) factors.
//!
//! When the sensible settings of one factor depend on the level of another,
//! the experimental region is irregular and the usual factorial machinery
//! needs care. This crate builds the three rival model parameterizations for
//! such experiments and the algebra connecting them:
//!
//! * **RCRS** — re-centering and re-scaling: the slid factor is coded as if
//!   it were not slid, which maps the irregular region onto a cube and keeps
//!   the design columns orthogonal.
//! * **NEM** — nested-effects modeling: the slid factor's effects are defined
//!   conditionally at each parent level; well-conditioned, but unable to
//!   predict at parent values between the design levels.
//! * **RSM** — response-surface modeling in globally, proportionally coded
//!   factors; predicts anywhere in the modeling cube at the price of severe
//!   collinearity induced by the region's shape.
//!
//! The crate fits all three by least squares, translates coefficients between
//! them (including the hybrid fit-NEM-then-translate strategy), classifies
//! predictions as interpolation or extrapolation against the experimental
//! region, and benchmarks the strategies on synthetic ground truths with
//! seeded, reproducible noise.
//!
//! The 18-run spot-welding design that exercises every corner of this
//! machinery ships as [`fixtures::welding`].
//!
//! ```
//! use slidekit::prelude::*;
//!
//! let design = slidekit::fixtures::welding();
//! let matrix = code_rsm(&design, &TermSet::default_for(&design)?)?;
//! let y: Vec<f64> = (0..18).map(|i| (i as f64).sin()).collect();
//! let fit = ols_fit(&matrix, &y)?;
//! let model = hybrid_fit(&design, &y)?;
//! let region = build_region(&design)?;
//! let p = predict_rsm(&model, &region, 0.5, 0.1);
//! assert!(p.value.is_finite());
//! # assert!(fit.r_squared >= 0.0);
//! # Ok::<(), slidekit::Error>(())
//! ```

pub mod coding;
pub mod design;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod io;
pub mod region;
pub mod simulate;
pub mod stats;
pub mod translate;

pub use error::{Error, Result};

/// The commonly used types and operations in one import.
pub mod prelude {
    pub use crate::coding::{
        code_nem, code_nem_qualitative, code_rcrs, code_rsm, covariate_columns, lq_contrasts,
        proportional_code, CovariateSet, ModelMatrix, Monomial, ProportionalCoder, Scheme, TermSet,
    };
    pub use crate::design::{
        AffineMap, FactorKind, FactorRole, FactorSpec, PlanningMatrix, SlidingDesign, SlidingSpec,
    };
    pub use crate::error::{Error, Result};
    pub use crate::fit::{
        estimate_correlations, ols_fit, span_equal, EstimateCorrelations, FitResult,
    };
    pub use crate::region::{
        build_region, predict_nem, predict_rsm, product_transform, Prediction, Region, Zone,
    };
    pub use crate::simulate::{
        elimination_check, eval_surface, run_comparison, SimConfig, SimReport, SurfaceEq1,
    };
    pub use crate::translate::{
        check_second_order_constraints, hybrid_fit, nem_model_from_fit, nem_to_rsm, rcrs_expand,
        rcrs_nem_identity_check, rsm_to_nem, NemLevel, NemModel, RcrsModel, RsmModel,
    };
}
