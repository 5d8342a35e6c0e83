//! Output formatting and the self-check run behind `verify`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chsh::{combine, s_value, AngleQuad, ChshResult};
use crate::closed_form::{
    f_polarized, f_unpolarized, marginal1_polarized, marginal2_polarized, marginal_unpolarized,
    n_polarized, norm_unpolarized, p_polarized, p_unpolarized, shift_set, CorrelationModel,
    Particle,
};
use crate::error::Result;
use crate::kinematics::Speed;
use crate::oracle::{
    consistency_report, cross_oracle, fit_polarized, fit_unpolarized, ConsistencyReport,
    CrossOracleReport, SHAPE_TOLERANCE,
};

/// Significant digits used for every emitted number.
pub const OUTPUT_DIGITS: usize = 15;

/// Identity tolerance for normalisation and marginal sums.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Samples used by the identity checks.
pub const IDENTITY_SAMPLES: usize = 200;

/// Speeds at which `verify` fits the oracles.
pub const VERIFY_BETAS: [f64; 3] = [0.3, 0.6, 0.9];

/// Round to [`OUTPUT_DIGITS`] significant digits.
pub fn sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", OUTPUT_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    let r = sig(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.abs() < 1e-5 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`OUTPUT_DIGITS`] significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serialisable report");
    round_value(&mut v);
    serde_json::to_string_pretty(&v).expect("json")
}

/// A published (model, β, angles, S) point used as a reproduction anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub model: CorrelationModel,
    pub beta: f64,
    pub angles_deg: [f64; 4],
    pub published_s: f64,
}

pub const REFERENCE_POINTS: [ReferencePoint; 2] = [
    ReferencePoint {
        model: CorrelationModel::Polarized,
        beta: 0.9,
        angles_deg: [0.0, 45.0, 69.0, 200.0],
        published_s: -1.311,
    },
    ReferencePoint {
        model: CorrelationModel::Unpolarized,
        beta: 0.8,
        angles_deg: [0.0, 45.0, 210.0, 15.0],
        published_s: -1.167,
    },
];

/// Published S for this exact configuration, if any.
pub fn published_s(model: CorrelationModel, beta: f64, angles_deg: [f64; 4]) -> Option<f64> {
    REFERENCE_POINTS
        .iter()
        .find(|r| {
            r.model == model
                && (r.beta - beta).abs() < 1e-12
                && r.angles_deg
                    .iter()
                    .zip(angles_deg)
                    .all(|(a, b)| (a - b).rem_euclid(360.0).min((b - a).rem_euclid(360.0)) < 1e-9)
        })
        .map(|r| r.published_s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshRow {
    pub beta: f64,
    pub model: CorrelationModel,
    pub chi1_deg: f64,
    pub chi2_deg: f64,
    pub chi1p_deg: f64,
    pub chi2p_deg: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub violated: bool,
    pub terms: [f64; 6],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published_s: Option<f64>,
}

impl From<&ChshResult> for ChshRow {
    fn from(r: &ChshResult) -> Self {
        let [a, b, c, d] = r.angles.degrees();
        ChshRow {
            beta: r.beta,
            model: r.model,
            chi1_deg: a,
            chi2_deg: b,
            chi1p_deg: c,
            chi2p_deg: d,
            s: r.s_value,
            violated: r.violated,
            terms: r.terms,
            published_s: None,
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "beta",
    "model",
    "chi1_deg",
    "chi2_deg",
    "chi1p_deg",
    "chi2p_deg",
    "S",
    "violated",
];

pub fn write_scan_csv<W: Write>(rows: &[ChshResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let [a, b, c, d] = r.angles.degrees();
        w.write_record([
            fmt_num(r.beta),
            r.model.name().to_string(),
            fmt_num(a),
            fmt_num(b),
            fmt_num(c),
            fmt_num(d),
            fmt_num(r.s_value),
            r.violated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const TERM_LABELS: [&str; 6] = [
    "P[chi1,chi2]",
    "P[chi1,chi2']",
    "P[chi1',chi2]",
    "P[chi1',chi2']",
    "P[chi1',-]",
    "P[-,chi2]",
];

pub fn pretty_chsh(r: &ChshResult, published: Option<f64>) -> String {
    let mut s = String::new();
    let deg = r.angles.degrees().map(fmt_num);
    s += &format!("model: {}\nbeta: {}\n", r.model, fmt_num(r.beta));
    s += &format!("angles_deg: {}\n", deg.join(", "));
    for (label, t) in TERM_LABELS.iter().zip(r.terms) {
        s += &format!("{label:<16} = {}\n", fmt_num(t));
    }
    s += &format!("S = {}\nviolated: {}\n", fmt_num(r.s_value), r.violated);
    if let Some(p) = published {
        s += &format!(
            "published S: {} (gap {})\n",
            fmt_num(p),
            fmt_num((r.s_value - p).abs())
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            max_error,
            tolerance,
            pass: max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorCheck {
    pub model: CorrelationModel,
    pub beta: f64,
    pub angles_deg: [f64; 4],
    pub terms: [f64; 6],
    pub computed_s: f64,
    pub published_s: f64,
    pub gap: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossOracleSummary {
    pub beta: f64,
    pub scale: f64,
    pub max_relative_deviation: f64,
    pub max_imaginary: f64,
    pub agree: bool,
}

impl From<&CrossOracleReport> for CrossOracleSummary {
    fn from(r: &CrossOracleReport) -> Self {
        Self {
            beta: r.beta,
            scale: r.scale,
            max_relative_deviation: r.max_relative_deviation,
            max_imaginary: r.max_imaginary,
            agree: r.agree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub anchors: Vec<AnchorCheck>,
    pub identities: Vec<IdentityCheck>,
    pub consistency: Vec<ConsistencyReport>,
    pub cross_oracle: Vec<CrossOracleSummary>,
    pub identities_pass: bool,
    pub cross_oracle_agree: bool,
    #[serde(skip)]
    pub cross_oracle_detail: Vec<CrossOracleReport>,
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Deterministic `(β, χ1, χ2)` samples; β from base 5, angles from bases 2
/// and 3 over `[0, 2π)`. The first sample is β = 0 and the set ends at β = 1.
pub fn identity_samples(n: usize) -> Vec<(Speed, f64, f64)> {
    (0..n)
        .map(|i| {
            let beta = if i + 1 == n {
                1.0
            } else {
                radical_inverse(i, 5)
            };
            (
                Speed::new(beta).expect("beta in [0,1]"),
                TAU * radical_inverse(i + 1, 2),
                TAU * radical_inverse(i + 1, 3),
            )
        })
        .collect()
}

fn max_over<F: Fn(Speed, f64, f64) -> f64>(samples: &[(Speed, f64, f64)], f: F) -> f64 {
    samples
        .iter()
        .map(|&(b, x, y)| f(b, x, y))
        .fold(0.0, f64::max)
}

/// Normalisation and marginal identities of the closed forms.
pub fn identity_checks(samples: &[(Speed, f64, f64)]) -> Vec<IdentityCheck> {
    let tol = IDENTITY_TOLERANCE;
    let pair_sum = |p: &dyn Fn(f64, f64) -> f64, x: f64, y: f64| -> f64 {
        shift_set(x, y).iter().map(|&(a, b)| p(a, b)).sum()
    };
    vec![
        IdentityCheck::new(
            "polarized four-pair sum of P = 1",
            max_over(samples, |b, x, y| {
                (pair_sum(&|a, c| p_polarized(b, a, c).value, x, y) - 1.0).abs()
            }),
            tol,
        ),
        IdentityCheck::new(
            "unpolarized four-pair sum of P = 1",
            max_over(samples, |b, x, y| {
                (pair_sum(&|a, c| p_unpolarized(b, a, c).value, x, y) - 1.0).abs()
            }),
            tol,
        ),
        IdentityCheck::new(
            "N(beta) = four-pair sum of F (relative)",
            max_over(samples, |b, x, y| {
                let n = n_polarized(b);
                (pair_sum(&|a, c| f_polarized(b, a, c), x, y) - n).abs() / n
            }),
            tol,
        ),
        IdentityCheck::new(
            "unpolarized normaliser = four-pair sum of F (relative)",
            max_over(samples, |b, x, y| {
                let n = norm_unpolarized(b);
                (pair_sum(&|a, c| f_unpolarized(b, a, c), x, y) - n).abs() / n
            }),
            tol,
        ),
        IdentityCheck::new(
            "polarized P[chi1,-] = P[chi1,chi2] + P[chi1,chi2+pi]",
            max_over(samples, |b, x, y| {
                let sum = p_polarized(b, x, y).value + p_polarized(b, x, y + PI).value;
                (marginal1_polarized(b, x) - sum).abs()
            }),
            tol,
        ),
        IdentityCheck::new(
            "polarized P[-,chi2] = P[chi1,chi2] + P[chi1+pi,chi2]",
            max_over(samples, |b, x, y| {
                let sum = p_polarized(b, x, y).value + p_polarized(b, x + PI, y).value;
                (marginal2_polarized(b, y) - sum).abs()
            }),
            tol,
        ),
        IdentityCheck::new(
            "unpolarized marginals = 1/2 = defining sums",
            max_over(samples, |b, x, y| {
                let first = p_unpolarized(b, x, y).value + p_unpolarized(b, x, y + PI).value;
                let second = p_unpolarized(b, x, y).value + p_unpolarized(b, x + PI, y).value;
                let exact = (marginal_unpolarized(Particle::First) - 0.5).abs()
                    + (marginal_unpolarized(Particle::Second) - 0.5).abs();
                (first - 0.5).abs().max((second - 0.5).abs()).max(exact)
            }),
            tol,
        ),
    ]
}

pub fn anchor_checks() -> Vec<AnchorCheck> {
    REFERENCE_POINTS
        .iter()
        .map(|r| {
            let beta = Speed::new(r.beta).expect("reference beta in range");
            let res = s_value(r.model, beta, AngleQuad::from_degrees(r.angles_deg));
            AnchorCheck {
                model: r.model,
                beta: r.beta,
                angles_deg: r.angles_deg,
                terms: res.terms,
                computed_s: res.s_value,
                published_s: r.published_s,
                gap: (res.s_value - r.published_s).abs(),
                violated: res.violated,
            }
        })
        .collect()
}

/// Full self-check. Identity failures are fatal; gaps to published values
/// and fitted-vs-printed deviations are informational.
pub fn run_verify(coefficient_tolerance: f64) -> Result<VerifyReport> {
    let anchors = anchor_checks();
    let mut identities = identity_checks(&identity_samples(IDENTITY_SAMPLES));
    for a in &anchors {
        identities.push(IdentityCheck::new(
            &format!("{} anchor terms re-sum to S", a.model),
            (combine(&a.terms) - a.computed_s).abs(),
            0.0,
        ));
    }

    let mut consistency = Vec::new();
    let mut cross_oracle_detail = Vec::new();
    for &b in &VERIFY_BETAS {
        let beta = Speed::new(b)?;
        for fit in [fit_polarized(beta)?, fit_unpolarized(beta)?] {
            identities.push(IdentityCheck::new(
                &format!("{} template residual at beta={}", fit.model, fmt_num(b)),
                fit.residual,
                SHAPE_TOLERANCE,
            ));
            consistency.push(consistency_report(&fit, coefficient_tolerance));
        }
        cross_oracle_detail.push(cross_oracle(beta)?);
    }
    let cross_oracle: Vec<CrossOracleSummary> = cross_oracle_detail
        .iter()
        .map(CrossOracleSummary::from)
        .collect();
    Ok(VerifyReport {
        identities_pass: identities.iter().all(|c| c.pass),
        cross_oracle_agree: cross_oracle.iter().all(|c| c.agree),
        anchors,
        identities,
        consistency,
        cross_oracle,
        cross_oracle_detail,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")
}

pub fn pretty_verify(r: &VerifyReport) -> String {
    let mut s = String::new();
    s += "== reference points ==\n";
    for a in &r.anchors {
        s += &format!(
            "{} beta={} angles_deg=[{}]: computed S={} published S={} gap={} violated={}\n",
            a.model,
            fmt_num(a.beta),
            join(&a.angles_deg),
            fmt_num(a.computed_s),
            fmt_num(a.published_s),
            fmt_num(a.gap),
            a.violated
        );
    }
    s += "== identities ==\n";
    for c in &r.identities {
        s += &format!(
            "[{}] {}: max error {} (tolerance {})\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            fmt_num(c.max_error),
            fmt_num(c.tolerance)
        );
    }
    s += "== oracle consistency ==\n";
    for c in &r.consistency {
        s += &format!(
            "{} beta={}: fitted=[{}] printed=[{}] relative_deviation=[{}] residual={} scale={} verdict={}\n",
            c.model,
            fmt_num(c.beta),
            join(&c.fitted),
            join(&c.printed),
            join(&c.relative_deviation),
            fmt_num(c.residual),
            fmt_num(c.scale),
            c.verdict
        );
    }
    s += "== cross-oracle (trace form vs spin average) ==\n";
    for c in &r.cross_oracle {
        s += &format!(
            "beta={}: scale={} max_relative_deviation={} max_imaginary={} agree={}\n",
            fmt_num(c.beta),
            fmt_num(c.scale),
            fmt_num(c.max_relative_deviation),
            fmt_num(c.max_imaginary),
            c.agree
        );
    }
    s += &format!(
        "identities: {}\n",
        if r.identities_pass { "PASS" } else { "FAIL" }
    );
    s
}

/// Per-point table of a cross-oracle comparison.
pub fn cross_oracle_table(r: &CrossOracleReport) -> String {
    let mut s = format!(
        "# cross-oracle deviation table beta={} scale={}\nchi1_deg,chi2_deg,quad,spin_average,ratio,relative_deviation\n",
        fmt_num(r.beta),
        fmt_num(r.scale)
    );
    let qmax = r.rows.iter().map(|x| x.quad.abs()).fold(0.0, f64::max);
    for row in &r.rows {
        let dev = (row.quad - r.scale * row.spin_average).abs() / qmax.max(f64::MIN_POSITIVE);
        s += &format!(
            "{},{},{},{},{},{}\n",
            fmt_num(row.chi1.to_degrees()),
            fmt_num(row.chi2.to_degrees()),
            fmt_num(row.quad),
            fmt_num(row.spin_average),
            fmt_num(row.ratio),
            fmt_num(dev)
        );
    }
    s
}
