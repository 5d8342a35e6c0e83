//! Centre-of-momentum kinematics and external spinors for the two
//! detector geometries.
//!
//! Both geometries bring the electron in along `+y` and the positron along
//! `-y`. With [`Config::PolarizedAxes`] the outgoing pair leaves along `±z`,
//! with [`Config::UnpolarizedAxes`] along `±x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::{apply2, dirac_adjoint, sigma_dot, FourVector, RowSpinor, Spinor4c};
use crate::error::{Error, Result};

/// Largest speed accepted by anything that builds momenta or spinors.
pub const MAX_ORACLE_BETA: f64 = 1.0 - 1e-6;

/// c.m. speed `β` of each particle as a fraction of `c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Speed(f64);

impl Speed {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::BetaOutOfRange(beta));
        }
        Ok(Speed(beta))
    }

    pub fn beta(self) -> f64 {
        self.0
    }

    /// `γ_L = 1/√(1-β²)`; infinite at β = 1.
    pub fn lorentz_factor(self) -> f64 {
        1.0 / (1.0 - self.0 * self.0).sqrt()
    }

    /// Rejects speeds where `γ_L` is not usable for building four-vectors.
    pub fn require_finite_lorentz(self) -> Result<Self> {
        if self.0 > MAX_ORACLE_BETA {
            Err(Error::LorentzFactorDivergent(self.0, MAX_ORACLE_BETA))
        } else {
            Ok(self)
        }
    }
}

impl TryFrom<f64> for Speed {
    type Error = Error;
    fn try_from(beta: f64) -> Result<Self> {
        Speed::new(beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Config {
    /// Outgoing pair along `±z`, spin angles measured from `x`.
    PolarizedAxes,
    /// Outgoing pair along `±x`, spin angles measured from `z`.
    UnpolarizedAxes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSet {
    pub p1: FourVector,
    pub p2: FourVector,
    pub k1: FourVector,
    pub k2: FourVector,
    pub mass: f64,
}

/// Propagator denominators `s = (p1+p2)²`, `t = (p1-k1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub s: f64,
    pub t: f64,
}

pub type TwoSpinor = [Complex64; 2];

pub const SPIN_UP: TwoSpinor = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
pub const SPIN_DOWN: TwoSpinor = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];

/// Unit-mass momenta for the given geometry.
pub fn momenta(config: Config, beta: Speed) -> Result<MomentumSet> {
    momenta_with_mass(config, beta, 1.0)
}

pub fn momenta_with_mass(config: Config, beta: Speed, mass: f64) -> Result<MomentumSet> {
    let beta = beta.require_finite_lorentz()?;
    let g = beta.lorentz_factor();
    let e = g * mass;
    let p = g * mass * beta.beta();
    let p1 = FourVector::new(e, 0.0, p, 0.0);
    let k1 = match config {
        Config::PolarizedAxes => FourVector::new(e, 0.0, 0.0, p),
        Config::UnpolarizedAxes => FourVector::new(e, p, 0.0, 0.0),
    };
    Ok(MomentumSet {
        p1,
        p2: FourVector::new(e, -p1.x, -p1.y, -p1.z),
        k1,
        k2: FourVector::new(e, -k1.x, -k1.y, -k1.z),
        mass,
    })
}

pub fn invariants(ms: &MomentumSet) -> Invariants {
    Invariants {
        s: (ms.p1 + ms.p2).norm_sq(),
        t: (ms.p1 - ms.k1).norm_sq(),
    }
}

/// Spinor weight `ρ = γβ/(γ+1) = β/(1+√(1-β²))`, finite on all of `[0, 1]`.
pub fn rho(beta: Speed) -> f64 {
    let b = beta.beta();
    b / (1.0 + (1.0 - b * b).sqrt())
}

/// `ζ(χ) = (e^{-iχ/2}, e^{iχ/2})/√2`.
pub fn zeta(chi: f64) -> TwoSpinor {
    let n = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::from_polar(n, -chi / 2.0),
        Complex64::from_polar(n, chi / 2.0),
    ]
}

/// `ξ(χ) = (-i cos(χ/2), sin(χ/2))`.
pub fn xi(chi: f64) -> TwoSpinor {
    let h = chi / 2.0;
    [Complex64::new(0.0, -h.cos()), Complex64::new(h.sin(), 0.0)]
}

/// `a† b` for two-spinors.
pub fn inner2(a: &TwoSpinor, b: &TwoSpinor) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn sigma3(v: TwoSpinor) -> TwoSpinor {
    [v[0], -v[1]]
}

fn scale2(v: TwoSpinor, s: f64) -> TwoSpinor {
    [v[0] * s, v[1] * s]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizedInitial {
    pub u_p1: Spinor4c,
    pub vbar_p2: RowSpinor,
}

/// Initial pair with proportionality constant 1: `u(p1) = (↑, iρ↓)`,
/// `v̄(p2) = (iρ↑†, -↓†)`.
pub fn polarized_initial_spinors(beta: Speed) -> Result<PolarizedInitial> {
    let beta = beta.require_finite_lorentz()?;
    let irho = Complex64::new(0.0, rho(beta));
    let up = SPIN_UP;
    let down = SPIN_DOWN;
    Ok(PolarizedInitial {
        u_p1: Spinor4c::from_blocks(up, [down[0] * irho, down[1] * irho]),
        vbar_p2: RowSpinor::from_blocks([up[0] * irho, up[1] * irho], [-down[0], -down[1]]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizedFinal {
    pub ubar_k1: RowSpinor,
    pub v_k2: Spinor4c,
}

/// `ū(k1) = (ζ1†, ρ ζ1†σ3)`, `v(k2) = (ρσ3ζ2, ζ2)`.
pub fn polarized_final_spinors(beta: Speed, chi1: f64, chi2: f64) -> Result<PolarizedFinal> {
    let beta = beta.require_finite_lorentz()?;
    let r = rho(beta);
    let z1 = zeta(chi1).map(|c| c.conj());
    let z2 = zeta(chi2);
    Ok(PolarizedFinal {
        ubar_k1: RowSpinor::from_blocks(z1, scale2(sigma3(z1), r)),
        v_k2: Spinor4c::from_blocks(scale2(sigma3(z2), r), z2),
    })
}

/// Positive-energy spinor `√((E+m)/2m) (χ, σ⃗·p⃗/(E+m) χ)`, normalised to `ūu = 1`.
pub fn dirac_u(p: &FourVector, mass: f64, spin: TwoSpinor) -> Spinor4c {
    let n = ((p.t + mass) / (2.0 * mass)).sqrt();
    let small = scale2(apply2(&sigma_dot(p.spatial()), spin), 1.0 / (p.t + mass));
    Spinor4c::from_blocks(spin, small).scale(Complex64::new(n, 0.0))
}

/// Negative-energy spinor `√((E+m)/2m) (σ⃗·p⃗/(E+m) η, η)`, normalised to `v̄v = -1`.
pub fn dirac_v(p: &FourVector, mass: f64, spin: TwoSpinor) -> Spinor4c {
    let n = ((p.t + mass) / (2.0 * mass)).sqrt();
    let small = scale2(apply2(&sigma_dot(p.spatial()), spin), 1.0 / (p.t + mass));
    Spinor4c::from_blocks(small, spin).scale(Complex64::new(n, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnpolarizedFinal {
    pub u_k1: Spinor4c,
    pub v_k2: Spinor4c,
}

impl UnpolarizedFinal {
    pub fn ubar_k1(&self) -> RowSpinor {
        dirac_adjoint(&self.u_k1)
    }

    pub fn vbar_k2(&self) -> RowSpinor {
        dirac_adjoint(&self.v_k2)
    }
}

/// Outgoing spinors along `±x` with spin two-spinors `ξ(χ1)`, `ξ(χ2)`.
pub fn unpolarized_final_spinors(beta: Speed, chi1: f64, chi2: f64) -> Result<UnpolarizedFinal> {
    let ms = momenta(Config::UnpolarizedAxes, beta)?;
    Ok(UnpolarizedFinal {
        u_k1: dirac_u(&ms.k1, ms.mass, xi(chi1)),
        v_k2: dirac_v(&ms.k2, ms.mass, xi(chi2)),
    })
}
