//! Independent numeric reconstruction of the spin-correlation laws.
//!
//! The amplitude is assembled from explicit spinors and gamma matrices, then
//! its angular dependence is fitted to the closed-form trigonometric
//! templates by exact linear least squares. Agreement with
//! [`crate::closed_form`] is reported through [`ConsistencyReport`], never
//! enforced.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::closed_form::{
    coefficients, norm_unpolarized, shift_set, unpolarized_template, CorrelationModel,
};
use crate::dirac::{
    bilinear, dirac_adjoint, gammas, slash, trace_product, Matrix4c, RowSpinor, Spinor4c, METRIC,
};
use crate::error::{Error, Result};
use crate::kinematics::{
    dirac_u, dirac_v, invariants, momenta, polarized_final_spinors, polarized_initial_spinors,
    unpolarized_final_spinors, Config, MomentumSet, Speed, SPIN_DOWN, SPIN_UP,
};

/// Below this speed `t = -2γ²β²` is numerically zero.
pub const ORACLE_MIN_BETA: f64 = 1e-6;

/// Points in the deterministic fit sample.
pub const FIT_POINTS: usize = 16;
/// Side of the uniform validation grid over `[0, 2π)²`.
pub const VALIDATION_SIDE: usize = 24;
/// Side of the grid used to compare the two unpolarized oracles.
pub const CROSS_ORACLE_SIDE: usize = 12;
/// Relative tolerance for template residuals and cross-oracle agreement.
pub const SHAPE_TOLERANCE: f64 = 1e-9;
/// Default relative tolerance for fitted-vs-printed coefficients.
pub const DEFAULT_COEFFICIENT_TOLERANCE: f64 = 1e-6;

const MAX_RESAMPLES: usize = 8;
const FIT_OFFSET: f64 = 0.013;

fn oracle_speed(beta: Speed) -> Result<Speed> {
    if beta.beta() < ORACLE_MIN_BETA {
        return Err(Error::TChannelPole(beta.beta(), ORACLE_MIN_BETA));
    }
    beta.require_finite_lorentz()
}

/// Annihilation minus exchange channel, with the Lorentz contraction
/// `γ^μ ⊗ γ_μ` done through the metric diagonal.
fn two_channel_amplitude(
    ms: &MomentumSet,
    u_p1: &Spinor4c,
    vbar_p2: &RowSpinor,
    ubar_k1: &RowSpinor,
    v_k2: &Spinor4c,
) -> Complex64 {
    let inv = invariants(ms);
    let g = gammas();
    let mut annihilation = Complex64::new(0.0, 0.0);
    let mut exchange = Complex64::new(0.0, 0.0);
    for mu in 0..4 {
        annihilation +=
            METRIC[mu] * bilinear(vbar_p2, &g[mu], u_p1) * bilinear(ubar_k1, &g[mu], v_k2);
        exchange += METRIC[mu] * bilinear(ubar_k1, &g[mu], u_p1) * bilinear(vbar_p2, &g[mu], v_k2);
    }
    annihilation / inv.s - exchange / inv.t
}

/// Tree-level amplitude for the polarized initial pair, overall constant 1.
pub fn amplitude_polarized(beta: Speed, chi1: f64, chi2: f64) -> Result<Complex64> {
    let beta = oracle_speed(beta)?;
    let ms = momenta(Config::PolarizedAxes, beta)?;
    let init = polarized_initial_spinors(beta)?;
    let fin = polarized_final_spinors(beta, chi1, chi2)?;
    Ok(two_channel_amplitude(
        &ms,
        &init.u_p1,
        &init.vbar_p2,
        &fin.ubar_k1,
        &fin.v_k2,
    ))
}

/// The four-term trace expression for the unpolarized initial pair,
/// evaluated term by term as written. The imaginary part should vanish and
/// is returned as a diagnostic.
pub fn quad_unpolarized(beta: Speed, chi1: f64, chi2: f64) -> Result<Complex64> {
    let beta = oracle_speed(beta)?;
    let ms = momenta(Config::UnpolarizedAxes, beta)?;
    let inv = invariants(&ms);
    let fin = unpolarized_final_spinors(beta, chi1, chi2)?;
    let (u, v) = (fin.u_k1, fin.v_k2);
    let (ubar, vbar) = (dirac_adjoint(&u), dirac_adjoint(&v));

    let m = Matrix4c::scalar(Complex64::new(ms.mass, 0.0));
    let p2_plus = slash(&ms.p2) + m;
    let p1_minus = m - slash(&ms.p1);
    let g = gammas();

    let (s, t) = (inv.s, inv.t);
    let mut total = Complex64::new(0.0, 0.0);
    for mu in 0..4 {
        for sg in 0..4 {
            let lower = METRIC[mu] * METRIC[sg];
            let (gm, gs) = (g[mu], g[sg]);
            let u_mu_v = bilinear(&ubar, &gm, &v);
            let v_sg_u = bilinear(&vbar, &gs, &u);

            let t1 = trace_product(&[gs, p2_plus, gm, p1_minus])? * u_mu_v * v_sg_u / (s * s);
            let t2 = trace_product(&[p2_plus, gm, p1_minus, gs])? * v_sg_u * u_mu_v / (s * t);
            let t3 = trace_product(&[gm, p1_minus, gs, p2_plus])? * u_mu_v * v_sg_u / (s * t);
            let t4 = bilinear(&ubar, &(gm * p1_minus * gs), &u)
                * bilinear(&vbar, &(gs * p2_plus * gm), &v)
                / (t * t);
            total += lower * (t1 - t2 - t3 + t4);
        }
    }
    Ok(total)
}

/// `|M|²` averaged over the four initial spin basis states `{↑,↓}⊗{↑,↓}`,
/// using the same outgoing spinors as [`quad_unpolarized`].
pub fn spin_average_oracle(beta: Speed, chi1: f64, chi2: f64) -> Result<f64> {
    let beta = oracle_speed(beta)?;
    let ms = momenta(Config::UnpolarizedAxes, beta)?;
    let fin = unpolarized_final_spinors(beta, chi1, chi2)?;
    let ubar = dirac_adjoint(&fin.u_k1);
    let mut sum = 0.0;
    for s1 in [SPIN_UP, SPIN_DOWN] {
        let u_p1 = dirac_u(&ms.p1, ms.mass, s1);
        for s2 in [SPIN_UP, SPIN_DOWN] {
            let vbar_p2 = dirac_adjoint(&dirac_v(&ms.p2, ms.mass, s2));
            sum += two_channel_amplitude(&ms, &u_p1, &vbar_p2, &ubar, &fin.v_k2).norm_sqr();
        }
    }
    Ok(sum / 4.0)
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Deterministic Halton (2, 3) sample over `[0, 2π)²`, shifted per attempt.
/// The fixed offset keeps it off the uniform validation grid.
pub fn fit_grid(attempt: usize) -> Vec<(f64, f64)> {
    let shift = FIT_OFFSET + 0.1 * attempt as f64;
    (1..=FIT_POINTS)
        .map(|i| {
            let u = (radical_inverse(i, 2) + shift).fract();
            let v = (radical_inverse(i, 3) + shift).fract();
            (TAU * u, TAU * v)
        })
        .collect()
}

/// Uniform `side × side` grid over `[0, 2π)²`, row-major in χ1.
pub fn uniform_grid(side: usize) -> Vec<(f64, f64)> {
    let step = TAU / side as f64;
    (0..side)
        .flat_map(|i| (0..side).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect()
}

/// Harmonics spanned by the polarized template:
/// `1, cos(χ1+χ2), cos(χ1-χ2), sin χ1, sin χ2`.
fn polarized_basis(chi1: f64, chi2: f64) -> Vec<f64> {
    vec![
        1.0,
        (chi1 + chi2).cos(),
        (chi1 - chi2).cos(),
        chi1.sin(),
        chi2.sin(),
    ]
}

fn unpolarized_basis(chi1: f64, chi2: f64) -> Vec<f64> {
    vec![
        (0.5 * (chi1 - chi2)).sin().powi(2),
        (0.5 * (chi1 + chi2)).cos().powi(2),
        1.0,
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact least squares via SVD. `None` when the design matrix is rank deficient.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let ncols = rows.first()?.len();
    let a = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax.is_nan() || smax <= 0.0 || smin / smax < 1e-10 {
        return None;
    }
    let b = DVector::from_column_slice(y);
    svd.solve(&b, 0.0).ok().map(|x| x.iter().copied().collect())
}

fn fit_on_grid<O, B>(oracle: O, basis: B) -> Result<Vec<f64>>
where
    O: Fn(f64, f64) -> Result<f64> + Sync,
    B: Fn(f64, f64) -> Vec<f64>,
{
    for attempt in 0..MAX_RESAMPLES {
        let pts = fit_grid(attempt);
        let y = pts
            .par_iter()
            .map(|&(a, b)| oracle(a, b))
            .collect::<Result<Vec<f64>>>()?;
        let rows: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| basis(a, b)).collect();
        if let Some(x) = least_squares(&rows, &y) {
            return Ok(x);
        }
    }
    Err(Error::SingularFit(MAX_RESAMPLES))
}

/// Max `|oracle - model|` over the validation grid, relative to max `|oracle|`.
fn validation_residual<O, B>(oracle: O, basis: B, coeffs: &[f64]) -> Result<f64>
where
    O: Fn(f64, f64) -> Result<f64> + Sync,
    B: Fn(f64, f64) -> Vec<f64> + Sync,
{
    let pairs = uniform_grid(VALIDATION_SIDE)
        .par_iter()
        .map(|&(a, b)| Ok((oracle(a, b)?, dot(&basis(a, b), coeffs))))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let scale = pairs.iter().map(|(y, _)| y.abs()).fold(0.0, f64::max);
    let worst = pairs.iter().map(|(y, m)| (y - m).abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        Ok(worst / scale)
    } else {
        Ok(worst)
    }
}

/// Recover `(a, b, c, d)` of `[a cos(Σ/2) + b sin(Δ/2)]² + [c sin(Σ/2) + d cos(Δ/2)]²`
/// from its harmonic coefficients `[k0, kΣ, kΔ, s1, s2]`.
///
/// Uses `a²+b²+c²+d² = 2k0`, `a²-c² = 2kΣ`, `d²-b² = 2kΔ`,
/// `ab = (s1-s2)/2`, `cd = (s1+s2)/2`. Signs are fixed by `a ≥ 0`, `c ≥ 0`.
/// When the system leaves `a²+c²` ambiguous the larger root is taken.
pub fn template_from_harmonics(h: &[f64; 5]) -> [f64; 4] {
    let [k0, k_sum, k_diff, s1, s2] = *h;
    let z = 2.0 * k0;
    let x = 2.0 * k_sum;
    let y = 2.0 * k_diff;
    let ab = 0.5 * (s1 - s2);
    let cd = 0.5 * (s1 + s2);

    // u = a² + c² solves u² - z u + x y + 2(ab² + cd²) = 0
    let disc = (z * z - 4.0 * x * y - 8.0 * (ab * ab + cd * cd)).max(0.0);
    let roots = [0.5 * (z + disc.sqrt()), 0.5 * (z - disc.sqrt())];
    let mismatch = |u: f64| (u * (x + y) - x * z + 2.0 * (ab * ab - cd * cd)).abs();
    let tie = 1e-12 * (1.0 + z * z);
    let u = if (mismatch(roots[0]) - mismatch(roots[1])).abs() <= tie
        || mismatch(roots[0]) < mismatch(roots[1])
    {
        roots[0]
    } else {
        roots[1]
    };
    let v = z - u;

    let a = (0.5 * (u + x)).max(0.0).sqrt();
    let c = (0.5 * (u - x)).max(0.0).sqrt();
    let b_abs = (0.5 * (v - y)).max(0.0).sqrt();
    let d_abs = (0.5 * (v + y)).max(0.0).sqrt();
    // the products are better conditioned than the square roots of small differences
    let b = if a >= b_abs && a > 0.0 {
        ab / a
    } else if ab < 0.0 {
        -b_abs
    } else {
        b_abs
    };
    let d = if c >= d_abs && c > 0.0 {
        cd / c
    } else if cd < 0.0 {
        -d_abs
    } else {
        d_abs
    };
    [a, b, c, d]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigFit {
    pub beta: f64,
    pub model: CorrelationModel,
    /// `(a, b, c, d)` for polarized, `(α_sin, α_cos, α_const)` for unpolarized,
    /// in the oracle's own units.
    pub coefficients: Vec<f64>,
    /// Relative max deviation on the validation grid.
    pub residual: f64,
    /// Oracle normalisation divided by the closed-form normalisation.
    pub scale: f64,
}

impl TrigFit {
    /// Coefficients rescaled to the closed-form normalisation.
    pub fn normalized(&self) -> Vec<f64> {
        let factor = match self.model {
            CorrelationModel::Polarized => self.scale.sqrt(),
            CorrelationModel::Unpolarized => self.scale,
        };
        self.coefficients.iter().map(|c| c / factor).collect()
    }

    pub fn printed(&self) -> Vec<f64> {
        let beta = Speed::new(self.beta).expect("fit beta validated at construction");
        match self.model {
            CorrelationModel::Polarized => coefficients(beta).as_array().to_vec(),
            CorrelationModel::Unpolarized => unpolarized_template(beta).to_vec(),
        }
    }
}

/// Fit `|M|²` of the polarized amplitude to the two-bracket template.
pub fn fit_polarized(beta: Speed) -> Result<TrigFit> {
    let beta = oracle_speed(beta)?;
    let oracle = |a: f64, b: f64| amplitude_polarized(beta, a, b).map(|m| m.norm_sqr());
    let harmonics = fit_on_grid(oracle, polarized_basis)?;
    let residual = validation_residual(oracle, polarized_basis, &harmonics)?;
    let h: [f64; 5] = harmonics.try_into().expect("five harmonics");
    let fitted = template_from_harmonics(&h);
    let scale = fitted.iter().map(|x| x * x).sum::<f64>() / coefficients(beta).sum_sq();
    Ok(TrigFit {
        beta: beta.beta(),
        model: CorrelationModel::Polarized,
        coefficients: fitted.to_vec(),
        residual,
        scale,
    })
}

/// Fit the spin-averaged `|M|²` to `α_sin sin²(Δ/2) + α_cos cos²(Σ/2) + α_const`.
pub fn fit_unpolarized(beta: Speed) -> Result<TrigFit> {
    let beta = oracle_speed(beta)?;
    let oracle = |a: f64, b: f64| spin_average_oracle(beta, a, b);
    let fitted = fit_on_grid(oracle, unpolarized_basis)?;
    let residual = validation_residual(oracle, unpolarized_basis, &fitted)?;
    // four-pair sum of the template: 2 α_sin + 2 α_cos + 4 α_const
    let oracle_norm = 2.0 * fitted[0] + 2.0 * fitted[1] + 4.0 * fitted[2];
    Ok(TrigFit {
        beta: beta.beta(),
        model: CorrelationModel::Unpolarized,
        coefficients: fitted,
        residual,
        scale: oracle_norm / norm_unpolarized(beta),
    })
}

/// Four-pair shift sum of an oracle output at fixed angles.
pub fn oracle_shift_sum<O>(oracle: O, chi1: f64, chi2: f64) -> Result<f64>
where
    O: Fn(f64, f64) -> Result<f64>,
{
    shift_set(chi1, chi2)
        .iter()
        .map(|&(a, b)| oracle(a, b))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub beta: f64,
    pub model: CorrelationModel,
    pub fitted: Vec<f64>,
    pub printed: Vec<f64>,
    pub relative_deviation: Vec<f64>,
    pub residual: f64,
    pub scale: f64,
    pub verdict: bool,
}

fn relative_deviation(fitted: f64, printed: f64) -> f64 {
    let diff = (fitted - printed).abs();
    if printed.abs() > 1e-12 {
        diff / printed.abs()
    } else {
        diff
    }
}

pub fn consistency_report(fit: &TrigFit, tolerance: f64) -> ConsistencyReport {
    let fitted = fit.normalized();
    let printed = fit.printed();
    let relative_deviation: Vec<f64> = fitted
        .iter()
        .zip(&printed)
        .map(|(&f, &p)| relative_deviation(f, p))
        .collect();
    let verdict = relative_deviation.iter().all(|d| *d < tolerance);
    ConsistencyReport {
        beta: fit.beta,
        model: fit.model,
        fitted,
        printed,
        relative_deviation,
        residual: fit.residual,
        scale: fit.scale,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossOracleRow {
    pub chi1: f64,
    pub chi2: f64,
    pub quad: f64,
    pub quad_imag: f64,
    pub spin_average: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossOracleReport {
    pub beta: f64,
    /// Least-squares constant `k` in `quad ≈ k · spin_average`.
    pub scale: f64,
    /// `max |quad - k · spin_average| / max |quad|` over the grid.
    pub max_relative_deviation: f64,
    pub max_imaginary: f64,
    pub agree: bool,
    pub rows: Vec<CrossOracleRow>,
}

/// Compare the trace-form oracle with the spin-average oracle on a
/// `CROSS_ORACLE_SIDE²` grid.
pub fn cross_oracle(beta: Speed) -> Result<CrossOracleReport> {
    let beta = oracle_speed(beta)?;
    let rows = uniform_grid(CROSS_ORACLE_SIDE)
        .par_iter()
        .map(|&(a, b)| {
            let q = quad_unpolarized(beta, a, b)?;
            let s = spin_average_oracle(beta, a, b)?;
            Ok(CrossOracleRow {
                chi1: a,
                chi2: b,
                quad: q.re,
                quad_imag: q.im,
                spin_average: s,
                ratio: q.re / s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let num: f64 = rows.iter().map(|r| r.quad * r.spin_average).sum();
    let den: f64 = rows.iter().map(|r| r.spin_average * r.spin_average).sum();
    let scale = num / den;
    let qmax = rows.iter().map(|r| r.quad.abs()).fold(0.0, f64::max);
    let worst = rows
        .iter()
        .map(|r| (r.quad - scale * r.spin_average).abs())
        .fold(0.0, f64::max);
    let max_relative_deviation = if qmax > 0.0 { worst / qmax } else { worst };
    let max_imaginary = rows.iter().map(|r| r.quad_imag.abs()).fold(0.0, f64::max);
    if !max_relative_deviation.is_finite() {
        return Err(Error::NonFinite("cross-oracle deviation"));
    }
    Ok(CrossOracleReport {
        beta: beta.beta(),
        scale,
        max_relative_deviation,
        max_imaginary,
        agree: max_relative_deviation < SHAPE_TOLERANCE,
        rows,
    })
}
