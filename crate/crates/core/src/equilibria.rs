//! Real equilibria of the restoring polynomial and their classification.

use nalgebra::{linalg::Schur, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{GeacError, Result};
use crate::model::{Direction, PolynomialOscillator};

/// Eigenvalues with `|Im λ| ≤ REAL_FILTER·(1 + |Re λ|)` count as real.
const REAL_FILTER: f64 = 1e-9;
/// Near-real pairs within this band are probed for a double root.
const DOUBLE_ROOT_BAND: f64 = 1e-6;
/// Relative degeneracy threshold on `|f'(δ*)|`.
const DEGENERACY_TOL: f64 = 1e-9;
/// Relative root-residual threshold.
const RESIDUAL_TOL: f64 = 1e-9;
const NEWTON_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Sep,
    Uep,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub location: f64,
    pub kind: EquilibriumKind,
    /// `f'(δ*)`.
    pub slope: f64,
    /// Escape check result; only set for UEPs.
    pub escape_possible: Option<bool>,
}

/// Every real equilibrium of a model, sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub all: Vec<Equilibrium>,
    pub sep: Equilibrium,
    pub left_uep: Option<Equilibrium>,
    pub right_uep: Option<Equilibrium>,
}

impl EquilibriumSet {
    /// The UEP that bounds motion in `direction`, if any.
    pub fn bounding_uep(&self, direction: Direction) -> Option<&Equilibrium> {
        match direction {
            Direction::Forward => self.right_uep.as_ref(),
            Direction::Backward => self.left_uep.as_ref(),
        }
    }

    /// Distance from the origin to the nearest UEP on either side.
    pub fn nearest_uep_distance(&self) -> Option<f64> {
        [self.left_uep, self.right_uep]
            .iter()
            .flatten()
            .map(|e| e.location.abs())
            .reduce(f64::min)
    }

    /// Whether `delta` lies strictly between the bounding UEPs.
    pub fn in_well(&self, delta: f64) -> bool {
        self.left_uep.is_none_or(|u| delta > u.location) && self.right_uep.is_none_or(|u| delta < u.location)
    }
}

/// Finds all real roots of `f(δ) = 0` and classifies them by slope.
///
/// The non-zero roots are the eigenvalues of the balanced companion matrix
/// of `f(δ)/δ`, each polished by Newton's method.
pub fn find_equilibria(model: &PolynomialOscillator) -> Result<EquilibriumSet> {
    let mut roots = vec![0.0];
    roots.extend(nonzero_real_roots(model)?);
    roots.sort_by(|a, b| a.total_cmp(b));

    let deg_tol = DEGENERACY_TOL * model.coeff_scale();
    let all: Vec<Equilibrium> = roots
        .into_iter()
        .map(|location| {
            let slope = model.eval_df(location);
            let kind = if slope.abs() <= deg_tol {
                EquilibriumKind::Degenerate
            } else if slope > 0.0 {
                EquilibriumKind::Sep
            } else {
                EquilibriumKind::Uep
            };
            let escape_possible = (kind == EquilibriumKind::Uep).then_some(true);
            Equilibrium {
                location,
                kind,
                slope,
                escape_possible,
            }
        })
        .collect();

    let sep = *all.iter().find(|e| e.location == 0.0).expect("origin is always a root");
    let left_uep = all
        .iter()
        .rev()
        .find(|e| e.location < 0.0 && e.kind == EquilibriumKind::Uep)
        .copied();
    let right_uep = all
        .iter()
        .find(|e| e.location > 0.0 && e.kind == EquilibriumKind::Uep)
        .copied();
    Ok(EquilibriumSet {
        all,
        sep,
        left_uep,
        right_uep,
    })
}

/// Whether crossing `uep` can lead to loss of stability.
///
/// `P_f = −f` must rise through the axis (right side) or fall through it
/// moving leftward (left side); both reduce to `f'(δ*) < 0`.
pub fn escape_possible(model: &PolynomialOscillator, uep: &Equilibrium) -> Result<bool> {
    let slope = model.eval_df(uep.location);
    if slope.abs() <= DEGENERACY_TOL * model.coeff_scale() {
        return Err(GeacError::DegenerateEquilibrium {
            location: uep.location,
            slope,
        });
    }
    Ok(slope < 0.0)
}

fn residual_scale(model: &PolynomialOscillator, x: f64) -> f64 {
    let mut p = x.abs();
    let mut s = 0.0;
    for a in model.coeffs() {
        s += a.abs() * p;
        p *= x.abs();
    }
    s
}

fn newton_polish(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    for _ in 0..NEWTON_STEPS {
        let d = dg(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = g(x) / d;
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        let improved = g(next).abs() <= g(x).abs();
        if improved {
            x = next;
        }
        if !improved || step.abs() <= f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

fn nonzero_real_roots(model: &PolynomialOscillator) -> Result<Vec<f64>> {
    let c = model.coeffs();
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    balance(&mut comp);
    let schur = Schur::try_new(comp, f64::EPSILON, 10_000)
        .ok_or_else(|| GeacError::RootFindingFailure("Schur iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();

    let f = |x: f64| model.eval_f(x);
    let df = |x: f64| model.eval_df(x);
    // f''(x) = Σ (k+1)·k·a_k·x^(k−1) for the coefficient stored at index k.
    let d2f = |x: f64| {
        c.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, a)| acc * x + ((k + 1) * k) as f64 * a)
    };

    let mut candidates: Vec<(f64, bool)> = Vec::new();
    for z in eig.iter() {
        let re = z.re;
        let band = 1.0 + re.abs();
        if z.im.abs() <= REAL_FILTER * band {
            candidates.push((newton_polish(f, df, re), false));
        } else if z.im.abs() <= DOUBLE_ROOT_BAND * band {
            candidates.push((newton_polish(df, d2f, re), true));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Collapse clusters: a double root shows up as two nearby reals.
    let mut roots: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < candidates.len() {
        let mut j = i + 1;
        while j < candidates.len()
            && (candidates[j].0 - candidates[i].0).abs() <= DOUBLE_ROOT_BAND * (1.0 + candidates[i].0.abs())
        {
            j += 1;
        }
        let x = if j - i > 1 || candidates[i].1 {
            let mean = candidates[i..j].iter().map(|c| c.0).sum::<f64>() / (j - i) as f64;
            newton_polish(df, d2f, mean)
        } else {
            candidates[i].0
        };
        if x != 0.0 && f(x).abs() <= RESIDUAL_TOL * residual_scale(model, x) + f64::MIN_POSITIVE {
            roots.push(x);
        }
        i = j;
    }
    Ok(roots)
}

/// Diagonal similarity scaling (radix 2) that equalizes row and column norms.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut g = row / radix;
            let mut scale = 1.0;
            while col < g {
                scale *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                scale /= radix;
                col /= radix * radix;
            }
            if (col + row) / scale < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= scale;
                    m[(j, i)] *= scale;
                }
            }
        }
    }
}
