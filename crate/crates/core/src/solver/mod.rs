//! Equilibria of the free-energy landscape and the spin-1 transition points.

mod critical;
mod minimize;
mod roots;

pub use critical::{
    critical_coupling, critical_temperature, has_barrier, meanfield_m2, spinodal_temperature,
    MeanFieldLine,
};
pub use minimize::{minimize, minimize_with, orbit, MinimizeOptions};
pub use roots::{bisect, BisectOptions};

use crate::order::MomentVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Lowest free energy among all minima found (ties within 1e-9 included).
    Global,
    Local,
    /// Stationary point whose Hessian is not positive definite.
    SaddleRejected,
}

/// A located minimum of `F_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub m_star: MomentVector<T>,
    pub f_value: T,
    pub classification: Classification,
    /// Smallest Hessian eigenvalue in moment coordinates.
    pub hessian_eigen_min: T,
    /// Gradient norm for interior points, projected-gradient residual otherwise.
    pub residual: T,
    /// Some weight underflowed to the empty-state floor.
    pub boundary: bool,
    /// Images under the cyclic map, first entry `m_star`.
    pub orbit: Vec<MomentVector<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Spinodal,
    CriticalTemperature,
    CriticalCoupling,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Residuals<T> {
    /// `∂F/∂m₂` at the reported point.
    pub first_derivative: T,
    /// `∂²F/∂m₂²` at the reported point.
    pub second_derivative: T,
    /// `F(ferro) − F(paramagnet)` (critical temperature only).
    pub free_energy_gap: T,
    pub bracket_width: T,
    pub iterations: usize,
}

/// A located transition along the `m₁ = 0` line of the spin-1 magnet.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint<T> {
    pub kind: CriticalKind,
    /// Temperature, or coupling `g` for [`CriticalKind::CriticalCoupling`].
    pub value: T,
    /// Moments at the transition: the new branch, or the vanishing barrier.
    pub order_param: MomentVector<T>,
    pub residuals: Residuals<T>,
    /// Parameters outside the `J₂ = 0`, four-spin-only case.
    pub extrapolated: bool,
}
