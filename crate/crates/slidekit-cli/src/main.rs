//! Command-line front end: thin adapters over the library operations.
//!
//! Exit codes: 0 on success, 2 on validation/parse errors, 3 on numerical
//! failures (rank deficiency, degenerate ranges, off-design prediction).
//! Diagnostics go to stderr; results go to stdout or `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use slidekit::design::AffineMap;
use slidekit::io::{load_design, read_response_csv, write_matrix_csv, write_polygon_csv};
use slidekit::prelude::*;

#[derive(Parser)]
#[command(
    name = "slidekit",
    version,
    about = "Design and analysis of experiments with sliding (related) factors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rcrs,
    Nem,
    Rsm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CovariatesArg {
    /// No free-factor columns.
    None,
    /// Linear contrasts of the free factors.
    Linear,
    /// Linear and quadratic contrasts of the free factors.
    Lq,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FromArg {
    Nem,
    Rcrs,
}

#[derive(Subcommand)]
enum Command {
    /// Write a coded model matrix as CSV (term labels in the header).
    Code {
        /// Design file stem, or a bundled fixture name (welding, nine-run).
        #[arg(long)]
        design: String,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Baseline level for nested contrasts of a qualitative parent.
        #[arg(long)]
        baseline: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model by ordinary least squares and emit the fit.
    Fit {
        #[arg(long)]
        design: String,
        /// Single-column response CSV with a header row.
        #[arg(long)]
        response: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Contrast columns of the free factors to append.
        #[arg(long, value_enum, default_value = "none")]
        covariates: CovariatesArg,
        /// json is lossless; table rounds for reading (values and t to two
        /// decimals, p to four).
        #[arg(long, value_enum, default_value = "json")]
        report: ReportArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a fitted model into response-surface coefficients.
    Translate {
        #[arg(long, value_enum)]
        from: FromArg,
        /// Fit JSON (from `slidekit fit`), required with --from nem.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Design the fit was computed on, required with --from nem.
        #[arg(long)]
        design: Option<String>,
        /// RCRS effects JSON, required with --from rcrs.
        #[arg(long)]
        eta: Option<PathBuf>,
        /// Region geometry s,t,r (center intercept, center slope, half-width),
        /// required with --from rcrs.
        #[arg(long)]
        geometry: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the mean response at actual factor settings.
    Predict {
        /// Response-surface model JSON (from `slidekit translate`).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        design: String,
        /// Comma-separated actual settings, e.g. "A=3,B=29".
        #[arg(long)]
        at: String,
    },
    /// Emit the experimental-region polygon as plot-ready CSV.
    Region {
        #[arg(long)]
        design: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded strategy comparison described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config replication count.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// RCRS effects file for `translate --from rcrs`.
#[derive(serde::Deserialize)]
struct EtaFile {
    eta0: f64,
    eta1: f64,
    #[serde(default)]
    eta11: f64,
    eta2: f64,
    eta22: f64,
    eta12: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RankDeficient { .. }
        | Error::DegenerateRange { .. }
        | Error::OutOfRange { .. }
        | Error::DuplicateParentLevel { .. }
        | Error::OffDesignParentLevel { .. } => 3,
        _ => 2,
    }
}

fn resolve_design(name: &str) -> Result<SlidingDesign> {
    match name {
        "welding" => Ok(slidekit::fixtures::welding()),
        "nine-run" | "nine_run" => Ok(slidekit::fixtures::nine_run()),
        path => load_design(Path::new(path)),
    }
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn build_matrix(
    design: &SlidingDesign,
    scheme: SchemeArg,
    baseline: Option<&str>,
) -> Result<ModelMatrix> {
    match scheme {
        SchemeArg::Rcrs => code_rcrs(design),
        SchemeArg::Nem => match baseline {
            Some(level) => code_nem_qualitative(design, level),
            None => code_nem(design),
        },
        SchemeArg::Rsm => code_rsm(design, &TermSet::default_for(design)?),
    }
}

fn fit_table(fit: &FitResult) -> String {
    let mut out = format!(
        "{:<16} {:>12} {:>9} {:>9}\n",
        "term", "value", "t-value", "p-value"
    );
    for (i, term) in fit.terms.iter().enumerate() {
        let (t, p) = match (&fit.t_values, &fit.p_values) {
            (Some(t), Some(p)) => (format!("{:.2}", t[i]), format!("{:.4}", p[i])),
            _ => ("-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{:<16} {:>12.2} {:>9} {:>9}\n",
            term, fit.coefficients[i], t, p
        ));
    }
    out
}

fn parse_at(spec: &str) -> Result<Vec<(String, f64)>> {
    spec.split(',')
        .map(|pair| {
            let (name, value) = pair.split_once('=').ok_or_else(|| {
                Error::Validation(format!("--at entries look like NAME=VALUE, got {pair:?}"))
            })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("--at value {value:?} is not a number")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn parse_geometry(spec: &str) -> Result<(AffineMap, f64)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "--geometry takes s,t,r, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse().map_err(|_| {
                Error::Validation(format!("--geometry component {p:?} is not a number"))
            })
        })
        .collect::<Result<_>>()?;
    Ok((AffineMap::new(nums[0], nums[1]), nums[2]))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Code {
            design,
            scheme,
            baseline,
            out,
        } => {
            let design = resolve_design(&design)?;
            let matrix = build_matrix(&design, scheme, baseline.as_deref())?;
            let mut buf = Vec::new();
            write_matrix_csv(&matrix, &mut buf)?;
            write_output(
                std::str::from_utf8(&buf).expect("csv output is utf-8"),
                out.as_deref(),
            )
        }
        Command::Fit {
            design,
            response,
            scheme,
            covariates,
            report,
            out,
        } => {
            let design = resolve_design(&design)?;
            let y = read_response_csv(&response)?;
            let mut matrix = build_matrix(&design, scheme, None)?;
            let set = match covariates {
                CovariatesArg::None => None,
                CovariatesArg::Linear => Some(CovariateSet::LinearOnly),
                CovariatesArg::Lq => Some(CovariateSet::LinearQuadratic),
            };
            if let Some(set) = set {
                matrix = matrix.append_columns(covariate_columns(&design, set)?)?;
            }
            let fit = ols_fit(&matrix, &y)?;
            let text = match report {
                ReportArg::Json => serde_json::to_string_pretty(&fit)? + "\n",
                ReportArg::Table => fit_table(&fit),
            };
            write_output(&text, out.as_deref())
        }
        Command::Translate {
            from,
            fit,
            design,
            eta,
            geometry,
            out,
        } => {
            let model = match from {
                FromArg::Nem => {
                    let fit_path = fit.ok_or_else(|| {
                        Error::Validation("--from nem needs --fit <fit.json>".into())
                    })?;
                    let design_name = design
                        .ok_or_else(|| Error::Validation("--from nem needs --design".into()))?;
                    let fit: FitResult = serde_json::from_str(&fs::read_to_string(fit_path)?)?;
                    let design = resolve_design(&design_name)?;
                    let nem = nem_model_from_fit(&design, &fit)?;
                    nem_to_rsm(&nem)?
                }
                FromArg::Rcrs => {
                    let eta_path = eta.ok_or_else(|| {
                        Error::Validation("--from rcrs needs --eta <eta.json>".into())
                    })?;
                    let geometry = geometry.ok_or_else(|| {
                        Error::Validation("--from rcrs needs --geometry s,t,r".into())
                    })?;
                    let etas: EtaFile = serde_json::from_str(&fs::read_to_string(eta_path)?)?;
                    let (center, half_width) = parse_geometry(&geometry)?;
                    let model = RcrsModel::new(
                        etas.eta0, etas.eta1, etas.eta11, etas.eta2, etas.eta22, etas.eta12,
                        center, half_width,
                    )?;
                    rcrs_expand(&model)
                }
            };
            write_output(
                &(serde_json::to_string_pretty(&model)? + "\n"),
                out.as_deref(),
            )
        }
        Command::Predict { model, design, at } => {
            let model: RsmModel = serde_json::from_str(&fs::read_to_string(model)?)?;
            let design = resolve_design(&design)?;
            let (parent, slid, _) = design.sliding_pair()?;
            let points = parse_at(&at)?;
            let lookup = |name: &str| -> Result<f64> {
                points
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::Validation(format!("--at does not set factor {name}")))
            };
            // Actual units in, coded units against the design's ranges; points
            // beyond the ranges are allowed and classified by zone.
            let x_a = design
                .coder(&parent.name)?
                .code_unchecked(lookup(&parent.name)?);
            let x_b = design
                .coder(&slid.name)?
                .code_unchecked(lookup(&slid.name)?);
            let region = build_region(&design)?;
            let p = predict_rsm(&model, &region, x_a, x_b);
            println!(
                "{}",
                json!({ "value": p.value, "zone": p.zone, "x_coded": [x_a, x_b] })
            );
            Ok(())
        }
        Command::Region { design, out } => {
            let design = resolve_design(&design)?;
            let region = build_region(&design)?;
            let mut buf = Vec::new();
            write_polygon_csv(&region, &mut buf)?;
            write_output(
                std::str::from_utf8(&buf).expect("csv output is utf-8"),
                out.as_deref(),
            )
        }
        Command::Simulate {
            config,
            seed,
            reps,
            out,
        } => {
            let mut config: SimConfig = serde_json::from_str(&fs::read_to_string(config)?)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(reps) = reps {
                config.reps = reps;
            }
            let report = config.run()?;
            write_output(
                &(serde_json::to_string_pretty(&report)? + "\n"),
                out.as_deref(),
            )
        }
    }
}
