//! CHSH combination of joint and single-particle probabilities, and the
//! angle search for values outside the local-hidden-variable interval.
//!
//! ```text
//! S = P[χ1,χ2] - P[χ1,χ2'] + P[χ1',χ2] + P[χ1',χ2'] - P[χ1',-] - P[-,χ2]
//! ```
//!
//! Local hidden-variable theories keep `S ∈ [-1, 0]`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::CorrelationModel;
use crate::error::{Error, Result};
use crate::kinematics::Speed;
use crate::simplex::{self, SimplexOptions};

pub const LHV_LOWER: f64 = -1.0;
pub const LHV_UPPER: f64 = 0.0;

/// Detector angles in radians: `χ1, χ2, χ1', χ2'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleQuad {
    pub chi1: f64,
    pub chi2: f64,
    pub chi1p: f64,
    pub chi2p: f64,
}

impl AngleQuad {
    pub fn new(chi1: f64, chi2: f64, chi1p: f64, chi2p: f64) -> Self {
        Self {
            chi1,
            chi2,
            chi1p,
            chi2p,
        }
    }

    pub fn from_degrees(deg: [f64; 4]) -> Self {
        let [a, b, c, d] = deg.map(f64::to_radians);
        Self::new(a, b, c, d)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.chi1, self.chi2, self.chi1p, self.chi2p]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn degrees(&self) -> [f64; 4] {
        self.to_array().map(f64::to_degrees)
    }

    /// Every angle reduced into `[0, 2π)`.
    pub fn wrapped(&self) -> Self {
        Self::from_array(self.to_array().map(|x| {
            let r = x.rem_euclid(TAU);
            if r >= TAU {
                0.0
            } else {
                r
            }
        }))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub beta: f64,
    pub model: CorrelationModel,
    pub angles: AngleQuad,
    /// `[P(χ1,χ2), P(χ1,χ2'), P(χ1',χ2), P(χ1',χ2'), P(χ1',-), P(-,χ2)]`.
    pub terms: [f64; 6],
    pub s_value: f64,
    pub violated: bool,
}

/// Signed six-term combination.
pub fn combine(t: &[f64; 6]) -> f64 {
    t[0] - t[1] + t[2] + t[3] - t[4] - t[5]
}

pub fn is_violation(s: f64) -> bool {
    !(LHV_LOWER..=LHV_UPPER).contains(&s)
}

pub fn s_value(model: CorrelationModel, beta: Speed, q: AngleQuad) -> ChshResult {
    let terms = [
        model.joint(beta, q.chi1, q.chi2).value,
        model.joint(beta, q.chi1, q.chi2p).value,
        model.joint(beta, q.chi1p, q.chi2).value,
        model.joint(beta, q.chi1p, q.chi2p).value,
        model.marginal1(beta, q.chi1p),
        model.marginal2(beta, q.chi2),
    ];
    let s = combine(&terms);
    ChshResult {
        beta: beta.beta(),
        model,
        angles: q,
        terms,
        s_value: s,
        violated: is_violation(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Coarse grid spacing in degrees; must divide 360.
    pub grid_step_deg: f64,
    pub max_iterations: usize,
    /// Simplex convergence threshold on S.
    pub tolerance: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_step_deg: 5.0,
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

impl SearchSettings {
    pub fn with_grid_step(grid_step_deg: f64) -> Self {
        Self {
            grid_step_deg,
            ..Self::default()
        }
    }

    /// Number of grid nodes per angle.
    pub fn nodes(&self) -> Result<usize> {
        let step = self.grid_step_deg;
        if !(step.is_finite() && step > 0.0 && step <= 360.0) {
            return Err(Error::InvalidSettings(format!(
                "grid step {step} must lie in (0, 360]"
            )));
        }
        let n = (360.0 / step).round();
        if ((n * step) - 360.0).abs() > 1e-9 {
            return Err(Error::InvalidSettings(format!(
                "grid step {step} does not divide 360"
            )));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidSettings("negative tolerance".into()));
        }
        Ok(n as usize)
    }
}

type GridHit = (f64, [usize; 4]);

fn better(a: &GridHit, b: &GridHit) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Exhaustive scan of the coarse grid using cached probability tables.
/// Ties resolve to the lexicographically smallest index tuple.
fn grid_minimum(model: CorrelationModel, beta: Speed, n: usize, step: f64) -> GridHit {
    let angles: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let joint: Vec<Vec<f64>> = angles
        .iter()
        .map(|&a| {
            angles
                .iter()
                .map(|&b| model.joint(beta, a, b).value)
                .collect()
        })
        .collect();
    let m1: Vec<f64> = angles.iter().map(|&a| model.marginal1(beta, a)).collect();
    let m2: Vec<f64> = angles.iter().map(|&b| model.marginal2(beta, b)).collect();

    (0..n)
        .into_par_iter()
        .map(|a| {
            let mut best: GridHit = (f64::INFINITY, [usize::MAX; 4]);
            for b in 0..n {
                for ap in 0..n {
                    let base = joint[a][b] + joint[ap][b] - m1[ap] - m2[b];
                    for (bp, (&jb, &jpb)) in joint[a].iter().zip(&joint[ap]).enumerate() {
                        let s = base - jb + jpb;
                        let hit = (s, [a, b, ap, bp]);
                        if better(&hit, &best) {
                            best = hit;
                        }
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|x, y| if better(&y, &x) { y } else { x })
        .expect("grid has at least one node")
}

/// Minimise S over detector angles: coarse grid, then simplex refinement
/// from the best grid node. Deterministic for fixed inputs.
pub fn search_violation(
    model: CorrelationModel,
    beta: Speed,
    settings: &SearchSettings,
) -> Result<ChshResult> {
    let n = settings.nodes()?;
    let step = settings.grid_step_deg.to_radians();
    let (_, idx) = grid_minimum(model, beta, n, step);
    let start = idx.map(|i| i as f64 * step);
    let grid_best = s_value(model, beta, AngleQuad::from_array(start));

    let objective =
        |x: &[f64]| s_value(model, beta, AngleQuad::new(x[0], x[1], x[2], x[3])).s_value;
    let opts = SimplexOptions {
        max_iterations: settings.max_iterations,
        tolerance: settings.tolerance,
        initial_step: step,
    };
    let refined = simplex::minimize(objective, &start, &opts);
    let x: [f64; 4] = refined.x.try_into().expect("four angles");
    let refined = s_value(model, beta, AngleQuad::from_array(x).wrapped());

    if refined.s_value.is_finite() && refined.s_value < grid_best.s_value {
        Ok(refined)
    } else {
        Ok(grid_best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaScan {
    pub rows: Vec<ChshResult>,
    /// Fraction of rows with `violated == true`.
    pub violation_fraction: f64,
}

/// One [`search_violation`] per speed, in input order.
pub fn beta_scan(
    model: CorrelationModel,
    betas: &[Speed],
    settings: &SearchSettings,
) -> Result<BetaScan> {
    if betas.is_empty() {
        return Err(Error::InvalidSettings("empty beta list".into()));
    }
    settings.nodes()?;
    let rows = betas
        .par_iter()
        .map(|&b| search_violation(model, b, settings))
        .collect::<Result<Vec<_>>>()?;
    let violated = rows.iter().filter(|r| r.violated).count();
    Ok(BetaScan {
        violation_fraction: violated as f64 / rows.len() as f64,
        rows,
    })
}
