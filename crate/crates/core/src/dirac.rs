//! Numeric Dirac algebra in the standard (Dirac) representation.
//!
//! Metric signature is (+, -, -, -). Upper/lower spinor blocks follow the
//! usual large/small component split, so `γ^0 = diag(I, -I)` and
//! `γ^k = [[0, σ_k], [-σ_k, 0]]`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Diagonal of the Minkowski metric `g^{μν}`.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Contravariant four-vector `(t, x, y, z)` in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    /// Minkowski product `a·b = a^0 b^0 - a⃗·b⃗`.
    pub fn dot(&self, other: &FourVector) -> f64 {
        self.t * other.t - self.x * other.x - self.y * other.y - self.z * other.z
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector::new(-self.t, -self.x, -self.y, -self.z)
    }
}

/// Dense 4×4 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix4c(pub [[Complex64; 4]; 4]);

impl Matrix4c {
    pub fn zeros() -> Self {
        Matrix4c([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(s: Complex64) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = s;
        }
        m
    }

    /// Assemble from 2×2 blocks `[[a, b], [c, d]]`.
    pub fn from_blocks(
        a: [[Complex64; 2]; 2],
        b: [[Complex64; 2]; 2],
        c: [[Complex64; 2]; 2],
        d: [[Complex64; 2]; 2],
    ) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a[i][j];
                m.0[i][j + 2] = b[i][j];
                m.0[i + 2][j] = c[i][j];
                m.0[i + 2][j + 2] = d[i][j];
            }
        }
        m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|e| *e *= s);
        m
    }

    pub fn apply(&self, v: &Spinor4c) -> Spinor4c {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        Spinor4c(out)
    }

    pub fn max_abs_diff(&self, other: &Matrix4c) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }
}

impl Add for Matrix4c {
    type Output = Matrix4c;
    fn add(self, o: Matrix4c) -> Matrix4c {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl Sub for Matrix4c {
    type Output = Matrix4c;
    fn sub(self, o: Matrix4c) -> Matrix4c {
        self + o.scale(-ONE)
    }
}

impl Mul for Matrix4c {
    type Output = Matrix4c;
    fn mul(self, o: Matrix4c) -> Matrix4c {
        let mut m = Matrix4c::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    m.0[i][j] += a * o.0[k][j];
                }
            }
        }
        m
    }
}

/// Column Dirac spinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor4c(pub [Complex64; 4]);

/// Row spinor, e.g. a Dirac adjoint `ū = u†γ^0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSpinor(pub [Complex64; 4]);

impl Spinor4c {
    pub fn from_blocks(upper: [Complex64; 2], lower: [Complex64; 2]) -> Self {
        Spinor4c([upper[0], upper[1], lower[0], lower[1]])
    }

    pub fn upper(&self) -> [Complex64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn lower(&self) -> [Complex64; 2] {
        [self.0[2], self.0[3]]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Spinor4c(self.0.map(|c| c * s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|e| e.re.is_finite() && e.im.is_finite())
    }
}

impl RowSpinor {
    pub fn from_blocks(left: [Complex64; 2], right: [Complex64; 2]) -> Self {
        RowSpinor([left[0], left[1], right[0], right[1]])
    }

    /// Plain row-times-column product without any metric.
    pub fn dot(&self, c: &Spinor4c) -> Complex64 {
        self.0.iter().zip(c.0.iter()).map(|(r, c)| r * c).sum()
    }

    /// Row times matrix.
    pub fn times(&self, m: &Matrix4c) -> RowSpinor {
        let mut out = [ZERO; 4];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|i| self.0[i] * m.0[i][j]).sum();
        }
        RowSpinor(out)
    }

    /// Undo the adjoint: `(r γ^0)†`, so that `dirac_adjoint(r.column()) == r`.
    pub fn column(&self) -> Spinor4c {
        let g0 = gamma0();
        Spinor4c(self.times(&g0).0.map(|c| c.conj()))
    }
}

/// Pauli matrices `σ_1, σ_2, σ_3`.
pub fn pauli() -> [[[Complex64; 2]; 2]; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

/// `σ⃗·n⃗` as a 2×2 matrix.
pub fn sigma_dot(n: [f64; 3]) -> [[Complex64; 2]; 2] {
    let s = pauli();
    let mut out = [[ZERO; 2]; 2];
    for (k, nk) in n.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += s[k][i][j] * nk;
            }
        }
    }
    out
}

/// Apply a 2×2 matrix to a two-component column.
pub fn apply2(m: &[[Complex64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn gamma0() -> Matrix4c {
    let id = [[ONE, ZERO], [ZERO, ONE]];
    let z = [[ZERO; 2]; 2];
    let neg = [[-ONE, ZERO], [ZERO, -ONE]];
    Matrix4c::from_blocks(id, z, z, neg)
}

/// `γ^μ` in the Dirac representation.
pub fn gamma(mu: usize) -> Result<Matrix4c> {
    match mu {
        0 => Ok(gamma0()),
        1..=3 => {
            let s = pauli()[mu - 1];
            let neg = [[-s[0][0], -s[0][1]], [-s[1][0], -s[1][1]]];
            let z = [[ZERO; 2]; 2];
            Ok(Matrix4c::from_blocks(z, s, neg, z))
        }
        _ => Err(Error::GammaIndex(mu)),
    }
}

/// All four `γ^μ`, indexed by μ.
pub fn gammas() -> [Matrix4c; 4] {
    [0, 1, 2, 3].map(|mu| gamma(mu).expect("index in range"))
}

/// `p̸ = γ^μ p_μ = γ^0 p^0 - γ⃗·p⃗`.
pub fn slash(p: &FourVector) -> Matrix4c {
    let g = gammas();
    p.components()
        .iter()
        .enumerate()
        .fold(Matrix4c::zeros(), |acc, (mu, &pm)| {
            acc + g[mu].scale(Complex64::new(METRIC[mu] * pm, 0.0))
        })
}

/// `ū = u†γ^0`.
pub fn dirac_adjoint(u: &Spinor4c) -> RowSpinor {
    RowSpinor(u.0.map(|c| c.conj())).times(&gamma0())
}

/// `r̄ M c`.
pub fn bilinear(rbar: &RowSpinor, m: &Matrix4c, c: &Spinor4c) -> Complex64 {
    rbar.times(m).dot(c)
}

/// Trace of the ordered product `ms[0] · ms[1] · …`.
pub fn trace_product(ms: &[Matrix4c]) -> Result<Complex64> {
    let (first, rest) = ms.split_first().ok_or(Error::EmptyProduct)?;
    Ok(rest.iter().fold(*first, |acc, m| acc * *m).trace())
}
