//! Spin-polarization correlations in elastic e⁺e⁻ scattering at tree level,
//! and the Bell–CHSH quantity built from them.
//!
//! * [`closed_form`]: trigonometric probability laws for polarized and
//!   unpolarized initial pairs.
//! * [`oracle`]: numeric amplitudes from explicit Dirac algebra, fitted back
//!   onto the closed-form templates.
//! * [`chsh`]: the six-term S combination and angle search.

pub mod chsh;
pub mod closed_form;
pub mod dirac;
pub mod error;
pub mod kinematics;
pub mod oracle;
pub mod report;
pub mod simplex;

pub use chsh::{beta_scan, s_value, search_violation, AngleQuad, ChshResult, SearchSettings};
pub use closed_form::{coefficients, CoefficientSet, CorrelationModel, JointProbability};
pub use error::{Error, Result};
pub use kinematics::Speed;
