//! Thermodynamics of Curie-Weiss measurement magnets built from spin-`l`
//! constituents.
//!
//! The magnet's `2l + 1` single-spin states carry a cyclic `Z_{2l+1}`
//! symmetry. Energy, entropy and the coupling to a tested spin are written in
//! the moments `m_1 … m_{2l}`, and the symmetry acts on them as an affine map.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the solver
//! tolerances are tuned for.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod order;
pub mod scalar;
pub mod solver;
pub mod spectrum;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::Real;
pub use spectrum::{SpinQuantum, MAX_TWICE_L};

pub type TrigPoly = spectrum::TrigPoly<f64>;
pub type WeightVector = order::WeightVector<f64>;
pub type MomentVector = order::MomentVector<f64>;
pub type AffineMap = order::AffineMap<f64>;
pub type SpinSystem = order::SpinSystem<f64>;
pub type ModelParams = thermo::ModelParams<f64>;
pub type ThermoEval = thermo::ThermoEval<f64>;
pub type FreeEnergy = thermo::FreeEnergy<f64>;
pub type Minimum = solver::Minimum<f64>;
pub type CriticalPoint = solver::CriticalPoint<f64>;
pub type FiniteNEnsemble = oracle::FiniteNEnsemble<f64>;
