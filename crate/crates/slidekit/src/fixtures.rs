//! Bundled designs used by the test suites and the CLI fixture names.

use crate::design::{
    AffineMap, FactorRole, FactorSpec, PlanningMatrix, SlidingDesign, SlidingSpec,
};

/// The 18-run spot-welding design: an OA(18, 2^1 3^7) with pulse rate (A)
/// parenting weld time (B), five free three-level factors (C-G), and a
/// two-level tip-size factor (H) obtained by collapsing a three-level column,
/// which leaves H with 6 runs at "1/4" and 12 at "3/8".
///
/// Weld time slides on pulse rate: at pulse rate 2 the settings are
/// (32, 36, 40), at pulse rate 4 they are (18, 22, 26). In coded units the
/// conditional center is -7/11 times the coded pulse rate and the conditional
/// half-width is 4/11.
pub fn welding() -> SlidingDesign {
    let rows: Vec<Vec<&str>> = vec![
        vec!["2", "low", "6", "10", "15", "50", "85", "3/8"],
        vec!["2", "low", "12", "18", "20", "55", "90", "1/4"],
        vec!["2", "low", "18", "26", "25", "60", "95", "3/8"],
        vec!["2", "median", "6", "10", "20", "55", "95", "3/8"],
        vec!["2", "median", "12", "18", "25", "60", "85", "3/8"],
        vec!["2", "median", "18", "26", "15", "50", "90", "1/4"],
        vec!["2", "high", "6", "18", "15", "60", "90", "3/8"],
        vec!["2", "high", "12", "26", "20", "50", "95", "3/8"],
        vec!["2", "high", "18", "10", "25", "55", "85", "1/4"],
        vec!["4", "low", "6", "26", "25", "55", "90", "3/8"],
        vec!["4", "low", "12", "10", "15", "60", "95", "1/4"],
        vec!["4", "low", "18", "18", "20", "50", "85", "3/8"],
        vec!["4", "median", "6", "18", "25", "50", "95", "1/4"],
        vec!["4", "median", "12", "26", "15", "55", "85", "3/8"],
        vec!["4", "median", "18", "10", "20", "60", "90", "3/8"],
        vec!["4", "high", "6", "26", "20", "60", "85", "1/4"],
        vec!["4", "high", "12", "10", "25", "50", "90", "3/8"],
        vec!["4", "high", "18", "18", "15", "55", "95", "3/8"],
    ];
    let names = ["A", "B", "C", "D", "E", "F", "G", "H"];
    let planning = PlanningMatrix::from_rows(&names, &rows);

    let factors = vec![
        FactorSpec::quantitative("A", FactorRole::Parent, &[2.0, 4.0]),
        FactorSpec::slid("B", &["low", "median", "high"]),
        FactorSpec::quantitative("C", FactorRole::Free, &[6.0, 12.0, 18.0]),
        FactorSpec::quantitative("D", FactorRole::Free, &[10.0, 18.0, 26.0]),
        FactorSpec::quantitative("E", FactorRole::Free, &[15.0, 20.0, 25.0]),
        FactorSpec::quantitative("F", FactorRole::Free, &[50.0, 55.0, 60.0]),
        FactorSpec::quantitative("G", FactorRole::Free, &[85.0, 90.0, 95.0]),
        FactorSpec::qualitative("H", FactorRole::Free, &["1/4", "3/8"]),
    ];

    let sliding = SlidingSpec::new(
        "A",
        "B",
        &[("2", &[32.0, 36.0, 40.0]), ("4", &[18.0, 22.0, 26.0])],
    )
    .with_geometry(AffineMap::new(0.0, -7.0 / 11.0), 4.0 / 11.0);

    SlidingDesign::resolve(planning, factors, vec![sliding])
        .expect("bundled welding design must satisfy all invariants")
}

/// A nine-run design with a three-level parent and three sliding levels per
/// parent level, one run per cell. Saturated by the nested-effects model and
/// by the nine-term response-surface model.
///
/// Coded geometry: center -x_A/2, half-width 1/2.
pub fn nine_run() -> SlidingDesign {
    let mut rows = Vec::new();
    for a in ["1", "2", "3"] {
        for b in ["low", "median", "high"] {
            rows.push(vec![a, b]);
        }
    }
    let planning = PlanningMatrix::from_rows(&["A", "B"], &rows);
    let factors = vec![
        FactorSpec::quantitative("A", FactorRole::Parent, &[1.0, 2.0, 3.0]),
        FactorSpec::slid("B", &["low", "median", "high"]),
    ];
    let sliding = SlidingSpec::new(
        "A",
        "B",
        &[
            ("1", &[30.0, 35.0, 40.0]),
            ("2", &[25.0, 30.0, 35.0]),
            ("3", &[20.0, 25.0, 30.0]),
        ],
    )
    .with_geometry(AffineMap::new(0.0, -0.5), 0.5);

    SlidingDesign::resolve(planning, factors, vec![sliding])
        .expect("bundled nine-run design must satisfy all invariants")
}
