//! Numerical toolkit for the one-dimensional pressureless Euler–Poisson
//! (cold plasma) system with density-dependent damping `nu(n) = eps f(n)`:
//!
//! ```text
//! V_t + V V_x = -E - nu(n) V,    E_t + V E_x = V,    n = 1 - E_x
//! ```
//!
//! * [`damping`]: the damping law and the analytic suppression criteria on `f`.
//! * [`affine`]: exact affine solutions, conic classification, blow-up detection.
//! * [`perturbation`]: first-order correctors in `eps` and the closed form
//!   of the second-derivative system.
//! * [`characteristics`]: full-field solver on an ensemble of characteristics,
//!   energy audit and the Euler (no Poisson coupling) control system.
//!
//! Every routine is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

pub mod affine;
pub mod characteristics;
pub mod damping;
pub mod error;
pub mod ode;
pub mod outcome;
pub mod perturbation;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use outcome::{BlowupThresholds, Verdict};
pub use scalar::Real;

pub type DampingSpec64 = damping::DampingSpec<f64>;
pub type AffineState64 = affine::AffineState<f64>;
pub type AffineOutcome64 = affine::AffineOutcome<f64>;
pub type ConicClass64 = affine::ConicClass<f64>;
pub type Verdict64 = Verdict<f64>;
pub type CorrectorCurve64 = perturbation::CorrectorCurve<f64>;
pub type SigmaZeroFit64 = perturbation::SigmaZeroFit<f64>;
pub type InitialData64 = characteristics::InitialData<f64>;
pub type CharacteristicEnsemble64 = characteristics::CharacteristicEnsemble<f64>;
pub type FieldOutcome64 = characteristics::FieldOutcome<f64>;
