//! Side-by-side study of four clearance states on two cubic oscillators
//! against reference per-swing margins.
//!
//! The reference margins were reported for speeds whose kinetic energy is
//! far above both barriers of the literal models, so at `κ = 1` every case
//! escapes on its first swing. `κ` scales the restoring polynomial to
//! explore that gap; no value of it is assumed correct.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::model::{Direction, PolynomialOscillator, State};
use crate::swing::{assess_post_fault, AssessmentOptions, AssessmentReport, OverallVerdict, SwingVerdict};

/// Damping shared by both study models.
pub const STUDY_DAMPING: f64 = 4.42e-4;

/// Third-order approximant of a sinusoidal SMIB system.
pub fn smib_approximant() -> PolynomialOscillator {
    PolynomialOscillator::new(STUDY_DAMPING, vec![0.2649, -0.0503, -0.04414]).expect("valid coefficients")
}

/// The same oscillator with a stronger quadratic term.
pub fn modified_oscillator() -> PolynomialOscillator {
    PolynomialOscillator::new(STUDY_DAMPING, vec![0.2649, -0.0603, -0.04414]).expect("valid coefficients")
}

/// `(δ, Δω)` at fault clearance.
pub const CLEARANCE_STATES: [(f64, f64); 4] = [(0.13, -5.2779), (0.13, -8.3299), (0.13, -8.3315), (0.13, -9.4248)];

/// Reference margins of swings 1..=8 (alternating B, F) for each clearance
/// state on [`smib_approximant`]; `None` where the case had already failed.
pub const REFERENCE_APPROXIMANT: [[Option<f64>; 8]; 4] = [
    [
        Some(3.6701),
        Some(0.2631),
        Some(3.4372),
        Some(0.4065),
        Some(3.9569),
        Some(0.5666),
        Some(4.5369),
        Some(0.7446),
    ],
    [
        Some(3.3313),
        Some(0.00005),
        Some(2.4860),
        Some(0.1192),
        Some(2.9172),
        Some(0.2490),
        Some(3.3871),
        Some(0.3924),
    ],
    [Some(3.3311), Some(-0.0600), None, None, None, None, None, None],
    [Some(3.1698), Some(-0.1499), None, None, None, None, None, None],
];

/// As [`REFERENCE_APPROXIMANT`] for [`modified_oscillator`].
pub const REFERENCE_MODIFIED: [[Option<f64>; 8]; 4] = [
    [
        Some(4.6069),
        Some(0.1798),
        Some(4.2444),
        Some(0.3142),
        Some(4.8655),
        Some(0.4643),
        Some(5.5558),
        Some(0.6305),
    ],
    [Some(4.2489), Some(-0.1351), None, None, None, None, None, None],
    [Some(4.2534), Some(-0.1326), None, None, None, None, None, None],
    [Some(4.0862), Some(-0.2172), None, None, None, None, None, None],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub swing: usize,
    pub direction: char,
    pub reference: Option<f64>,
    pub computed: Option<f64>,
}

impl Cell {
    pub fn delta(&self) -> Option<f64> {
        Some(self.computed? - self.reference?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseStudy {
    pub model: &'static str,
    pub case: usize,
    pub init: (f64, f64),
    pub report: AssessmentReport,
    pub cells: Vec<Cell>,
}

/// Runs all four states on both models scaled by `kappa`.
pub fn run_study(kappa: f64, options: &AssessmentOptions) -> Result<Vec<CaseStudy>> {
    let models = [
        ("approximant", smib_approximant().scaled(kappa)?, &REFERENCE_APPROXIMANT),
        ("modified", modified_oscillator().scaled(kappa)?, &REFERENCE_MODIFIED),
    ];
    let mut out = Vec::new();
    for (label, model, reference) in &models {
        for (i, &(delta, omega)) in CLEARANCE_STATES.iter().enumerate() {
            let report = assess_post_fault(model, State::new(0.0, delta, omega), options)?;
            let rows = reference[i].len().max(report.records.len());
            let cells = (0..rows)
                .map(|k| Cell {
                    swing: k + 1,
                    direction: if k % 2 == 0 { 'B' } else { 'F' },
                    reference: reference[i].get(k).copied().flatten(),
                    computed: report.records.get(k).map(|r| r.margin),
                })
                .collect();
            out.push(CaseStudy {
                model: label,
                case: i + 1,
                init: (delta, omega),
                report,
                cells,
            });
        }
    }
    Ok(out)
}

fn opt4(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Plain-text comparison, one line per swing.
pub fn render_study(cases: &[CaseStudy], kappa: f64) -> String {
    let mut out = format!("kappa = {kappa}\n");
    let _ = writeln!(
        out,
        "{:<12} {:>4} {:>6} {:>10} {:>10} {:>10}",
        "model", "case", "swing", "reference", "computed", "delta"
    );
    for c in cases {
        for cell in &c.cells {
            let _ = writeln!(
                out,
                "{:<12} {:>4} {:>6} {:>10} {:>10} {:>10}",
                c.model,
                c.case,
                format!("{}_{}", cell.swing, cell.direction),
                opt4(cell.reference),
                opt4(cell.computed),
                opt4(cell.delta()),
            );
        }
        let _ = writeln!(
            out,
            "{:<12} {:>4} overall {:?}, min margin {:.4}",
            c.model, c.case, c.report.overall, c.report.min_margin
        );
    }
    out
}

/// A named qualitative property and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub name: &'static str,
    pub holds: bool,
}

fn margins(report: &AssessmentReport, direction: Direction) -> Vec<f64> {
    report
        .records
        .iter()
        .filter(|r| r.swing.direction == direction && r.verdict != SwingVerdict::NeverUnstableThisDirection)
        .map(|r| r.margin)
        .collect()
}

/// Orderings expected of stable damped runs that share `δ0` and are listed
/// by increasing `|Δω0|`:
/// minimum margins decrease from case to case, each forward margin is below
/// the backward margins next to it, and margins of one direction do not
/// decrease over time.
pub fn ordering_checks(reports: &[AssessmentReport]) -> Vec<OrderingCheck> {
    let decreasing = reports.windows(2).all(|w| w[1].min_margin < w[0].min_margin);
    let forward_below = reports.iter().all(|r| {
        r.records.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            match (a.swing.direction, b.swing.direction) {
                (Direction::Forward, Direction::Backward) => a.margin < b.margin,
                (Direction::Backward, Direction::Forward) => b.margin < a.margin,
                _ => true,
            }
        })
    });
    let same_direction = reports.iter().all(|r| {
        [Direction::Forward, Direction::Backward]
            .into_iter()
            .all(|d| margins(r, d).windows(2).all(|w| w[1] >= w[0]))
    });
    let all_stable = reports.iter().all(|r| r.overall == OverallVerdict::Stable);
    vec![
        OrderingCheck {
            name: "all runs stable",
            holds: all_stable,
        },
        OrderingCheck {
            name: "minimum margin decreases as |omega0| grows",
            holds: decreasing,
        },
        OrderingCheck {
            name: "forward margins below adjacent backward margins",
            holds: forward_below,
        },
        OrderingCheck {
            name: "same-direction margins non-decreasing",
            holds: same_direction,
        },
    ]
}
