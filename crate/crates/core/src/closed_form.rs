//! Closed-form joint and single-particle spin probabilities.
//!
//! Everything here is a direct evaluation of the published trigonometric
//! laws. The numeric cross-check lives in [`crate::oracle`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::kinematics::{rho, Speed};

/// Coefficients of the polarized amplitude
/// `[A cos(Σ/2) + B sin(Δ/2)] + i[C sin(Σ/2) + D cos(Δ/2)]`,
/// with `Σ = χ1 + χ2` and `Δ = χ1 - χ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub rho: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl CoefficientSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn sum_sq(&self) -> f64 {
        self.as_array().iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbability {
    pub value: f64,
    /// `value ∈ [0, 1]`. Values outside are reported as computed, never clamped.
    pub in_range: bool,
}

impl JointProbability {
    fn new(value: f64) -> Self {
        Self {
            value,
            in_range: (0.0..=1.0).contains(&value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationModel {
    Polarized,
    Unpolarized,
}

impl CorrelationModel {
    pub fn name(self) -> &'static str {
        match self {
            CorrelationModel::Polarized => "polarized",
            CorrelationModel::Unpolarized => "unpolarized",
        }
    }

    pub fn joint(self, beta: Speed, chi1: f64, chi2: f64) -> JointProbability {
        match self {
            CorrelationModel::Polarized => p_polarized(beta, chi1, chi2),
            CorrelationModel::Unpolarized => p_unpolarized(beta, chi1, chi2),
        }
    }

    /// `P[χ1, -]`.
    pub fn marginal1(self, beta: Speed, chi1: f64) -> f64 {
        match self {
            CorrelationModel::Polarized => marginal1_polarized(beta, chi1),
            CorrelationModel::Unpolarized => marginal_unpolarized(Particle::First),
        }
    }

    /// `P[-, χ2]`.
    pub fn marginal2(self, beta: Speed, chi2: f64) -> f64 {
        match self {
            CorrelationModel::Polarized => marginal2_polarized(beta, chi2),
            CorrelationModel::Unpolarized => marginal_unpolarized(Particle::Second),
        }
    }
}

impl std::fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CorrelationModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "polarized" | "pol" => Ok(CorrelationModel::Polarized),
            "unpolarized" | "unpol" => Ok(CorrelationModel::Unpolarized),
            other => Err(format!(
                "unknown model '{other}' (expected polarized|unpolarized)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    First,
    Second,
}

/// The four angle pairs summed over to normalise:
/// `(χ1, χ2), (χ1+π, χ2), (χ1, χ2+π), (χ1+π, χ2+π)`.
pub fn shift_set(chi1: f64, chi2: f64) -> [(f64, f64); 4] {
    [
        (chi1, chi2),
        (chi1 + PI, chi2),
        (chi1, chi2 + PI),
        (chi1 + PI, chi2 + PI),
    ]
}

pub fn coefficients(beta: Speed) -> CoefficientSet {
    let b = beta.beta();
    let r = rho(beta);
    let r2 = r * r;
    CoefficientSet {
        rho: r,
        a: 1.0 - r2 * (1.0 - r) + 2.0 * b * b * (1.0 - r2).powi(2),
        b: r * (1.0 + r) + 8.0 * b * b * r2,
        c: 1.0 + r2 * (1.0 - r) + 2.0 * b * (1.0 - r2 * r2),
        d: r * (1.0 + r),
    }
}

fn f_with(k: &CoefficientSet, chi1: f64, chi2: f64) -> f64 {
    let half_sum = 0.5 * (chi1 + chi2);
    let half_diff = 0.5 * (chi1 - chi2);
    let re = k.a * half_sum.cos() + k.b * half_diff.sin();
    let im = k.c * half_sum.sin() + k.d * half_diff.cos();
    re * re + im * im
}

/// Unnormalised `F[χ1, χ2]`: squared modulus of the polarized amplitude template.
pub fn f_polarized(beta: Speed, chi1: f64, chi2: f64) -> f64 {
    f_with(&coefficients(beta), chi1, chi2)
}

/// `N(β) = 2(A² + B² + C² + D²)`.
pub fn n_polarized(beta: Speed) -> f64 {
    2.0 * coefficients(beta).sum_sq()
}

pub fn p_polarized(beta: Speed, chi1: f64, chi2: f64) -> JointProbability {
    let k = coefficients(beta);
    JointProbability::new(f_with(&k, chi1, chi2) / (2.0 * k.sum_sq()))
}

/// `P[χ1, -] = 1/2 + 2(AB + CD) sin χ1 / N`.
pub fn marginal1_polarized(beta: Speed, chi1: f64) -> f64 {
    let k = coefficients(beta);
    0.5 + 2.0 * (k.a * k.b + k.c * k.d) * chi1.sin() / (2.0 * k.sum_sq())
}

/// `P[-, χ2] = 1/2 + 2(CD - AB) sin χ2 / N`.
pub fn marginal2_polarized(beta: Speed, chi2: f64) -> f64 {
    let k = coefficients(beta);
    0.5 + 2.0 * (k.c * k.d - k.a * k.b) * chi2.sin() / (2.0 * k.sum_sq())
}

/// Coefficients `(sin²(Δ/2), cos²(Σ/2), constant)` of the unpolarized law.
pub fn unpolarized_template(beta: Speed) -> [f64; 3] {
    let b2 = beta.beta().powi(2);
    let b4 = b2 * b2;
    [
        2.0 * b4 * (1.0 + 2.0 * b2) - 3.0 * (1.0 + b2),
        1.0 + b2 + 2.0 * b4,
        5.0 * (1.0 - b2),
    ]
}

pub fn f_unpolarized(beta: Speed, chi1: f64, chi2: f64) -> f64 {
    let [k_sin, k_cos, k_const] = unpolarized_template(beta);
    let s = (0.5 * (chi1 - chi2)).sin();
    let c = (0.5 * (chi1 + chi2)).cos();
    k_sin * s * s + k_cos * c * c + k_const
}

/// `8(2 - 3β² + β⁴ + β⁶)`; at least 8 on `[0, 1]`.
pub fn norm_unpolarized(beta: Speed) -> f64 {
    let b2 = beta.beta().powi(2);
    8.0 * (2.0 - 3.0 * b2 + b2 * b2 + b2 * b2 * b2)
}

pub fn p_unpolarized(beta: Speed, chi1: f64, chi2: f64) -> JointProbability {
    JointProbability::new(f_unpolarized(beta, chi1, chi2) / norm_unpolarized(beta))
}

/// Single-particle probability for the unpolarized law: exactly 1/2.
pub fn marginal_unpolarized(_which: Particle) -> f64 {
    0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sp(b: f64) -> Speed {
        Speed::new(b).unwrap()
    }

    #[test]
    fn coefficients_at_endpoints() {
        let k0 = coefficients(sp(0.0));
        assert_eq!(k0.as_array(), [1.0, 0.0, 1.0, 0.0]);
        let k1 = coefficients(sp(1.0));
        assert_eq!(k1.as_array(), [1.0, 10.0, 1.0, 2.0]);
    }

    #[test]
    fn d_shares_the_rho_term_of_b() {
        for i in 0..=20 {
            let b = i as f64 / 20.0;
            let k = coefficients(sp(b));
            assert_abs_diff_eq!(k.d, k.b - 8.0 * b * b * k.rho * k.rho, epsilon = 1e-14);
        }
    }

    #[test]
    fn polarized_normaliser_endpoints() {
        assert_eq!(n_polarized(sp(0.0)), 4.0);
        assert_eq!(n_polarized(sp(1.0)), 212.0);
    }

    #[test]
    fn polarized_is_flat_at_rest() {
        for (c1, c2) in [
            (0.0, 0.0),
            (0.3, 2.0),
            (17f64.to_radians(), 123f64.to_radians()),
        ] {
            assert_abs_diff_eq!(f_polarized(sp(0.0), c1, c2), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(p_polarized(sp(0.0), c1, c2).value, 0.25, epsilon = 1e-15);
            assert_abs_diff_eq!(marginal1_polarized(sp(0.0), c1), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn marginals_vanish_at_zero_angle() {
        for b in [0.1, 0.5, 0.99, 1.0] {
            assert_eq!(marginal1_polarized(sp(b), 0.0), 0.5);
            assert_eq!(marginal2_polarized(sp(b), 0.0), 0.5);
        }
    }

    #[test]
    fn marginal_sum_identity() {
        for i in 0..=10 {
            let b = sp(i as f64 / 10.0);
            let k = coefficients(b);
            for j in 0..12 {
                let chi = j as f64 * 0.53;
                let lhs = marginal1_polarized(b, chi) + marginal2_polarized(b, chi) - 1.0;
                let rhs = 2.0 * (2.0 * k.c * k.d * chi.sin()) / n_polarized(b);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unpolarized_values() {
        assert_eq!(f_unpolarized(sp(0.0), 0.0, 0.0), 6.0);
        assert_eq!(unpolarized_template(sp(1.0))[2], 0.0);
        assert_eq!(norm_unpolarized(sp(0.0)), 16.0);
        assert_eq!(norm_unpolarized(sp(1.0)), 8.0);
        assert_abs_diff_eq!(norm_unpolarized(sp(0.8)), 6.013952, epsilon = 1e-12);

        let b = sp(0.0);
        assert_abs_diff_eq!(p_unpolarized(b, 0.0, 0.0).value, 0.375, epsilon = 1e-15);
        let vals: Vec<f64> = shift_set(0.0, 0.0)
            .iter()
            .map(|&(x, y)| p_unpolarized(b, x, y).value)
            .collect();
        let expect = [0.375, 0.125, 0.125, 0.375];
        for (v, e) in vals.iter().zip(expect) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(vals.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unpolarized_can_leave_unit_interval() {
        // the sin² coefficient turns strongly negative at large beta
        let p = p_unpolarized(sp(0.8), 210f64.to_radians(), 45f64.to_radians());
        assert!(p.value < 0.0);
        assert!(!p.in_range);
    }

    #[test]
    fn unpolarized_marginals_are_half() {
        assert_eq!(marginal_unpolarized(Particle::First), 0.5);
        assert_eq!(marginal_unpolarized(Particle::Second), 0.5);
    }

    #[test]
    fn shift_by_pi_pair_bookkeeping() {
        let b = sp(0.7);
        let k = coefficients(b);
        let (c1, c2) = (0.4_f64, 1.9_f64);
        let hs = 0.5 * (c1 + c2);
        let hd = 0.5 * (c1 - c2);
        let expect =
            (-k.a * hs.cos() + k.b * hd.sin()).powi(2) + (-k.c * hs.sin() + k.d * hd.cos()).powi(2);
        assert_abs_diff_eq!(f_polarized(b, c1 + PI, c2 + PI), expect, epsilon = 1e-12);
    }

    #[test]
    fn model_parsing() {
        assert_eq!("Polarized".parse(), Ok(CorrelationModel::Polarized));
        assert_eq!("unpolarized".parse(), Ok(CorrelationModel::Unpolarized));
        assert!("mixed".parse::<CorrelationModel>().is_err());
    }
}
