use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bhabha_bell::chsh::{beta_scan, s_value, search_violation, AngleQuad, SearchSettings};
use bhabha_bell::closed_form::{coefficients, CorrelationModel};
use bhabha_bell::kinematics::Speed;
use bhabha_bell::oracle::DEFAULT_COEFFICIENT_TOLERANCE;
use bhabha_bell::report::{
    cross_oracle_table, fmt_num, pretty_chsh, pretty_verify, published_s, run_verify, to_json,
    write_scan_csv, ChshRow,
};

/// Exit code when `--strict-cross-oracle` finds the two oracles disagree.
const EXIT_CROSS_ORACLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bhabha-bell",
    version,
    about = "Spin-correlation probabilities and CHSH values for elastic e+e- scattering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format [default: csv for scan, pretty otherwise]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write data to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Pretty,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Polarized,
    Unpolarized,
}

impl From<ModelArg> for CorrelationModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Polarized => CorrelationModel::Polarized,
            ModelArg::Unpolarized => CorrelationModel::Unpolarized,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print rho and the amplitude coefficients A, B, C, D
    Coeffs {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Joint probability P[chi1, chi2] plus both marginals
    Prob(AngleArgs),
    /// Single-particle probabilities P[chi1, -] and P[-, chi2]
    Marginal(AngleArgs),
    /// Six CHSH terms and S for four detector angles
    Chsh {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// chi1,chi2,chi1',chi2' in degrees
        #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
        angles: [f64; 4],
    },
    /// Minimise S over detector angles for one or more speeds
    Scan {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, conflicts_with = "beta_range", allow_hyphen_values = true)]
        beta: Option<f64>,
        /// lo:hi:step
        #[arg(long, value_parser = parse_range)]
        beta_range: Option<BetaRange>,
        /// Coarse grid spacing in degrees (must divide 360)
        #[arg(long, default_value_t = 5.0)]
        grid_step: f64,
        /// Simplex convergence threshold on S
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Reference points, identity checks and oracle consistency reports
    Verify {
        /// Relative tolerance for fitted-vs-printed coefficient verdicts
        #[arg(long, default_value_t = DEFAULT_COEFFICIENT_TOLERANCE)]
        tolerance: f64,
        /// Emit the cross-oracle deviation tables and exit 3 if the two
        /// unpolarized oracles disagree
        #[arg(long)]
        strict_cross_oracle: bool,
    },
}

#[derive(Args)]
struct AngleArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// Degrees
    #[arg(long, allow_hyphen_values = true)]
    chi1: f64,
    /// Degrees
    #[arg(long, allow_hyphen_values = true)]
    chi2: f64,
}

#[derive(Clone, Copy, Debug)]
struct BetaRange {
    lo: f64,
    hi: f64,
    step: f64,
}

impl BetaRange {
    fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

fn parse_range(s: &str) -> Result<BetaRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err("expected lo:hi:step".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    let r = BetaRange {
        lo: num(lo)?,
        hi: num(hi)?,
        step: num(step)?,
    };
    if !r.step.is_finite() || r.step <= 0.0 {
        return Err("step must be positive".into());
    }
    if r.hi.is_nan() || r.lo.is_nan() || r.hi < r.lo {
        return Err("hi must not be below lo".into());
    }
    Ok(r)
}

fn parse_angles(s: &str) -> Result<[f64; 4], String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<Result<Vec<f64>, String>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 angles, got {}", v.len()))
}

enum Failure {
    Domain(String),
    CrossOracle,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn speed(beta: f64) -> Result<Speed, Failure> {
    Ok(Speed::new(beta)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Flat key/value records: one CSV header line plus one data line.
fn kv_csv(pairs: &[(&str, String)]) -> String {
    let keys: Vec<&str> = pairs.iter().map(|(k, _)| *k).collect();
    let vals: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", keys.join(","), vals.join(","))
}

fn kv_pretty(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn render<T: Serialize>(format: Format, value: &T, pairs: &[(&str, String)]) -> String {
    match format {
        Format::Json => to_json(value) + "\n",
        Format::Csv => kv_csv(pairs),
        Format::Pretty => kv_pretty(pairs),
    }
}

#[derive(Serialize)]
struct ProbOut {
    model: CorrelationModel,
    beta: f64,
    chi1_deg: f64,
    chi2_deg: f64,
    p: f64,
    in_range: bool,
    marginal1: f64,
    marginal2: f64,
}

#[derive(Serialize)]
struct MarginalOut {
    model: CorrelationModel,
    beta: f64,
    chi1_deg: f64,
    chi2_deg: f64,
    marginal1: f64,
    marginal2: f64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let format = cli.format.unwrap_or(match cli.command {
        Command::Scan { .. } => Format::Csv,
        _ => Format::Pretty,
    });
    match cli.command {
        Command::Coeffs { beta } => {
            let k = coefficients(speed(beta)?);
            let pairs = [
                ("beta", fmt_num(beta)),
                ("rho", fmt_num(k.rho)),
                ("A", fmt_num(k.a)),
                ("B", fmt_num(k.b)),
                ("C", fmt_num(k.c)),
                ("D", fmt_num(k.d)),
            ];
            emit(&cli.out, &render(format, &k, &pairs))
        }
        Command::Prob(a) => {
            let (model, beta) = (CorrelationModel::from(a.model), speed(a.beta)?);
            let (x, y) = (a.chi1.to_radians(), a.chi2.to_radians());
            let p = model.joint(beta, x, y);
            let out = ProbOut {
                model,
                beta: a.beta,
                chi1_deg: a.chi1,
                chi2_deg: a.chi2,
                p: p.value,
                in_range: p.in_range,
                marginal1: model.marginal1(beta, x),
                marginal2: model.marginal2(beta, y),
            };
            let pairs = [
                ("model", model.to_string()),
                ("beta", fmt_num(a.beta)),
                ("chi1_deg", fmt_num(a.chi1)),
                ("chi2_deg", fmt_num(a.chi2)),
                ("P", fmt_num(out.p)),
                ("in_range", out.in_range.to_string()),
                ("P[chi1,-]", fmt_num(out.marginal1)),
                ("P[-,chi2]", fmt_num(out.marginal2)),
            ];
            if !p.in_range {
                eprintln!("warning: P = {} lies outside [0, 1]", fmt_num(p.value));
            }
            emit(&cli.out, &render(format, &out, &pairs))
        }
        Command::Marginal(a) => {
            let (model, beta) = (CorrelationModel::from(a.model), speed(a.beta)?);
            let out = MarginalOut {
                model,
                beta: a.beta,
                chi1_deg: a.chi1,
                chi2_deg: a.chi2,
                marginal1: model.marginal1(beta, a.chi1.to_radians()),
                marginal2: model.marginal2(beta, a.chi2.to_radians()),
            };
            let pairs = [
                ("model", model.to_string()),
                ("beta", fmt_num(a.beta)),
                ("chi1_deg", fmt_num(a.chi1)),
                ("chi2_deg", fmt_num(a.chi2)),
                ("P[chi1,-]", fmt_num(out.marginal1)),
                ("P[-,chi2]", fmt_num(out.marginal2)),
            ];
            emit(&cli.out, &render(format, &out, &pairs))
        }
        Command::Chsh {
            model,
            beta,
            angles,
        } => {
            let model = CorrelationModel::from(model);
            if angles.iter().any(|a| !a.is_finite()) {
                return Err(Failure::Domain("angles must be finite".into()));
            }
            let r = s_value(model, speed(beta)?, AngleQuad::from_degrees(angles));
            let published = published_s(model, beta, angles);
            let text = match format {
                Format::Pretty => pretty_chsh(&r, published),
                Format::Json => {
                    let mut row = ChshRow::from(&r);
                    row.published_s = published;
                    to_json(&row) + "\n"
                }
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_scan_csv(std::slice::from_ref(&r), &mut buf)?;
                    String::from_utf8(buf)?
                }
            };
            emit(&cli.out, &text)
        }
        Command::Scan {
            model,
            beta,
            beta_range,
            grid_step,
            tolerance,
        } => {
            let model = CorrelationModel::from(model);
            let betas: Vec<f64> = match (beta, beta_range) {
                (Some(b), None) => vec![b],
                (None, Some(r)) => r.values(),
                _ => return Err(Failure::Domain("give --beta or --beta-range".into())),
            };
            let speeds = betas
                .iter()
                .map(|&b| speed(b))
                .collect::<Result<Vec<_>, _>>()?;
            let settings = SearchSettings {
                grid_step_deg: grid_step,
                tolerance,
                ..SearchSettings::default()
            };
            let scan = if speeds.len() == 1 {
                let row = search_violation(model, speeds[0], &settings)?;
                bhabha_bell::chsh::BetaScan {
                    violation_fraction: if row.violated { 1.0 } else { 0.0 },
                    rows: vec![row],
                }
            } else {
                beta_scan(model, &speeds, &settings)?
            };
            eprintln!(
                "violation fraction: {} ({} of {} speeds)",
                fmt_num(scan.violation_fraction),
                scan.rows.iter().filter(|r| r.violated).count(),
                scan.rows.len()
            );
            let text = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_scan_csv(&scan.rows, &mut buf)?;
                    String::from_utf8(buf)?
                }
                Format::Json => {
                    let rows: Vec<ChshRow> = scan.rows.iter().map(ChshRow::from).collect();
                    to_json(&rows) + "\n"
                }
                Format::Pretty => scan
                    .rows
                    .iter()
                    .map(|r| pretty_chsh(r, None))
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            emit(&cli.out, &text)
        }
        Command::Verify {
            tolerance,
            strict_cross_oracle,
        } => {
            let report = run_verify(tolerance)?;
            let mut text = match format {
                Format::Json => to_json(&report) + "\n",
                _ => pretty_verify(&report),
            };
            let disagree = !report.cross_oracle_agree;
            if strict_cross_oracle && disagree {
                for detail in report.cross_oracle_detail.iter().filter(|d| !d.agree) {
                    text += &cross_oracle_table(detail);
                }
            }
            emit(&cli.out, &text)?;
            if !report.identities_pass {
                return Err(Failure::Domain("identity checks failed".into()));
            }
            if strict_cross_oracle && disagree {
                return Err(Failure::CrossOracle);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::CrossOracle) => {
            eprintln!("error: trace-form and spin-average oracles disagree beyond tolerance");
            ExitCode::from(EXIT_CROSS_ORACLE)
        }
    }
}
