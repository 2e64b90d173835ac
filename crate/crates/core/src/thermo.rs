//! Free-energy functional `F_s(m) = H(m) − T S(m) + I_s(m)` per magnet spin,
//! with analytic gradient and Hessian in the moment coordinates.
//!
//! Energy: `H = −J₂C₂/2 − J₄C₂²/4 − J₆C₂³/6 − J₈C₂⁴/8`, where `C₂ = a² + b²`
//! and `a`, `b` are the averaged cosine and sine of `2πσ/(2l+1)`. In moment
//! coordinates both are affine (`a = Σ c_k m_k`, `b = Σ d_k m_k`). The entropy
//! goes through the affine map `x(m)`, so its derivatives are
//! `∂S/∂m_k = −Σ_σ ln x_σ ∂x_σ/∂m_k` and `∂²S/∂m_j∂m_k = −Σ_σ B_σj B_σk / x_σ`.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, Matrix};
use crate::order::{MomentVector, SpinSystem, WeightVector};
use crate::scalar::Real;
use crate::spectrum::SpinQuantum;

/// Weights below this are treated as exactly empty states.
pub const EMPTY_STATE: f64 = 1e-300;

/// Couplings, temperature and system–apparatus coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub l: SpinQuantum,
    pub j2: T,
    pub j4: T,
    pub j6: T,
    pub j8: T,
    pub temperature: T,
    pub g: T,
    /// Tested eigenvalue `s`, stored as `2s`; `None` leaves the magnet uncoupled.
    pub sector: Option<i32>,
    /// Penalty `H₀ x₀` on the σ = 0 state (spin 1 only).
    pub h0: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(l: SpinQuantum, j2: T, j4: T, temperature: T) -> Self {
        Self {
            l,
            j2,
            j4,
            j6: T::zero(),
            j8: T::zero(),
            temperature,
            g: T::zero(),
            sector: None,
            h0: T::zero(),
        }
    }

    /// Couples to the system in sector `s = twice_s / 2`.
    pub fn with_coupling(mut self, g: T, twice_s: i32) -> Self {
        self.g = g;
        self.sector = Some(twice_s);
        self
    }

    pub fn with_temperature(mut self, temperature: T) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_multispin(mut self, j6: T, j8: T) -> Self {
        self.j6 = j6;
        self.j8 = j8;
        self
    }

    pub fn with_field(mut self, h0: T) -> Self {
        self.h0 = h0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > T::zero()) || !self.temperature.is_finite() {
            return Err(Error::InvalidParams(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.g >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "coupling g must be nonnegative, got {}",
                self.g
            )));
        }
        if let Some(s) = self.sector {
            if self.l.index_of(s).is_none() {
                return Err(Error::InvalidParams(format!(
                    "sector {s}/2 is not in the spectrum of spin {}",
                    self.l
                )));
            }
        }
        if self.h0 != T::zero() && self.l.twice_l() != 2 {
            return Err(Error::InvalidParams(
                "the H0 field term is defined for spin 1 only".into(),
            ));
        }
        let finite = [self.j2, self.j4, self.j6, self.j8, self.g, self.h0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite coupling".into()));
        }
        Ok(())
    }

    /// `H(C₂)`, `dH/dC₂`, `d²H/dC₂²`.
    fn energy_of_c2(&self, c2: T) -> (T, T, T) {
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let energy = -(self.j2 * c2 / two
            + self.j4 * c2.powi(2) / T::lit(4.0)
            + self.j6 * c2.powi(3) / T::lit(6.0)
            + self.j8 * c2.powi(4) / T::lit(8.0));
        let d1 = -(self.j2 + self.j4 * c2 + self.j6 * c2.powi(2) + self.j8 * c2.powi(3)) / two;
        let d2 = -(self.j4 + two * self.j6 * c2 + three * self.j8 * c2.powi(2)) / two;
        (energy, d1, d2)
    }
}

/// Everything known about `F_s` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoEval<T> {
    pub c2: T,
    pub energy: T,
    pub entropy: T,
    pub coupling: T,
    /// `H₀ x₀`, kept apart from `energy`; zero unless the field is switched on.
    pub field: T,
    pub free_energy: T,
    pub weights: Vec<T>,
    /// `None` on the boundary of the simplex, where `∂S` diverges.
    pub gradient: Option<Vec<T>>,
    pub hessian: Option<Matrix<T>>,
}

/// The free-energy functional for one parameter set.
#[derive(Debug, Clone)]
pub struct FreeEnergy<T> {
    sys: SpinSystem<T>,
    params: ModelParams<T>,
    /// `cos(2πs/(2l+1))`, `sin(2πs/(2l+1))` of the tested eigenvalue.
    sector_trig: Option<(T, T)>,
    state_cos: Vec<T>,
    state_sin: Vec<T>,
}

impl<T: Real> FreeEnergy<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        Self::with_system(SpinSystem::new(params.l), params)
    }

    pub fn with_system(sys: SpinSystem<T>, params: ModelParams<T>) -> Result<Self> {
        params.validate()?;
        if sys.spin() != params.l {
            return Err(Error::InvalidParams(
                "spin system and parameters disagree on l".into(),
            ));
        }
        let sector_trig = params.sector.map(|twice_s| {
            let s = T::lit(twice_s as f64 / 2.0);
            (sys.trig().cos_at(s), sys.trig().sin_at(s))
        });
        let l = params.l;
        let state_cos = (0..l.n_states()).map(|i| l.angle::<T>(i).cos()).collect();
        let state_sin = (0..l.n_states()).map(|i| l.angle::<T>(i).sin()).collect();
        Ok(Self {
            sys,
            params,
            sector_trig,
            state_cos,
            state_sin,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn system(&self) -> &SpinSystem<T> {
        &self.sys
    }

    pub fn spin(&self) -> SpinQuantum {
        self.params.l
    }

    /// Same functional, different tested eigenvalue.
    pub fn in_sector(&self, twice_s: i32) -> Result<Self> {
        let mut params = self.params.clone();
        params.sector = Some(twice_s);
        Self::with_system(self.sys.clone(), params)
    }

    fn trig_parts(&self, m: &[T]) -> (T, T) {
        (self.sys.trig().cos_part(m), self.sys.trig().sin_part(m))
    }

    pub fn c2(&self, m: &MomentVector<T>) -> Result<T> {
        self.sys.moments_to_weights(m)?;
        let (a, b) = self.trig_parts(m.as_slice());
        Ok(a * a + b * b)
    }

    pub fn energy(&self, m: &MomentVector<T>) -> Result<T> {
        let x = self.sys.moments_to_weights(m)?;
        let (a, b) = self.trig_parts(m.as_slice());
        Ok(self.params.energy_of_c2(a * a + b * b).0 + self.field_term(x.as_slice()))
    }

    pub fn entropy(&self, m: &MomentVector<T>) -> Result<T> {
        let x = self.sys.moments_to_weights(m)?;
        Ok(entropy_of_weights(x.as_slice()))
    }

    /// `I_s(m)`; fails when no sector is set.
    pub fn coupling(&self, m: &MomentVector<T>) -> Result<T> {
        let (cs, ss) = self.sector_trig.ok_or(Error::MissingSector)?;
        self.sys.moments_to_weights(m)?;
        let (a, b) = self.trig_parts(m.as_slice());
        Ok(-self.params.g * (cs * a + ss * b))
    }

    fn coupling_or_zero(&self, a: T, b: T) -> T {
        match self.sector_trig {
            Some((cs, ss)) => -self.params.g * (cs * a + ss * b),
            None => T::zero(),
        }
    }

    fn field_term(&self, x: &[T]) -> T {
        if self.params.h0 == T::zero() {
            T::zero()
        } else {
            self.params.h0 * x[self.zero_state_index()]
        }
    }

    fn zero_state_index(&self) -> usize {
        self.params
            .l
            .index_of(0)
            .expect("integer spin has a zero state")
    }

    /// Value of `F_s` only.
    pub fn value(&self, m: &MomentVector<T>) -> Result<T> {
        let x = self.sys.moments_to_weights(m)?;
        let (a, b) = self.trig_parts(m.as_slice());
        let (energy, _, _) = self.params.energy_of_c2(a * a + b * b);
        Ok(
            energy - self.params.temperature * entropy_of_weights(x.as_slice())
                + self.coupling_or_zero(a, b)
                + self.field_term(x.as_slice()),
        )
    }

    /// Full evaluation with analytic derivatives.
    pub fn evaluate(&self, m: &MomentVector<T>) -> Result<ThermoEval<T>> {
        let x = self.sys.moments_to_weights(m)?;
        let x = x.as_slice();
        let trig = self.sys.trig();
        let (a, b) = self.trig_parts(m.as_slice());
        let c2 = a * a + b * b;
        let (energy, e1, e2) = self.params.energy_of_c2(c2);
        let entropy = entropy_of_weights(x);
        let coupling = self.coupling_or_zero(a, b);
        let field = self.field_term(x);
        let t = self.params.temperature;
        let free_energy = energy - t * entropy + coupling + field;

        let interior = x.iter().all(|&v| v > T::lit(EMPTY_STATE));
        let (gradient, hessian) = if interior {
            let dim = self.params.l.n_moments();
            let jac = self.sys.weight_jacobian();
            let two = T::lit(2.0);
            let c = &trig.cos_coeffs[1..];
            let d = &trig.sin_coeffs[1..];
            let dc2: Vec<T> = (0..dim).map(|k| two * (a * c[k] + b * d[k])).collect();
            let (cs, ss) = self.sector_trig.unwrap_or((T::zero(), T::zero()));
            let zero_idx = (self.params.h0 != T::zero()).then(|| self.zero_state_index());
            let grad = (0..dim)
                .map(|k| {
                    let ds: T = -(0..x.len()).map(|i| x[i].ln() * jac[(i, k)]).sum::<T>();
                    let mut g = e1 * dc2[k] - t * ds - self.params.g * (cs * c[k] + ss * d[k]);
                    if let Some(i0) = zero_idx {
                        g = g + self.params.h0 * jac[(i0, k)];
                    }
                    g
                })
                .collect();
            let hess = Matrix::from_fn(dim, dim, |j, k| {
                let entropy_part: T = (0..x.len()).map(|i| jac[(i, j)] * jac[(i, k)] / x[i]).sum();
                e2 * dc2[j] * dc2[k] + e1 * two * (c[j] * c[k] + d[j] * d[k]) + t * entropy_part
            });
            (Some(grad), Some(hess))
        } else {
            (None, None)
        };

        Ok(ThermoEval {
            c2,
            energy,
            entropy,
            coupling,
            field,
            free_energy,
            weights: x.to_vec(),
            gradient,
            hessian,
        })
    }

    /// `F_s` as a function of the weights directly, with its gradient in `x`.
    /// The entropy term uses `x ln x` extended by zero at `x = 0`.
    pub fn value_and_grad_x(&self, x: &[T]) -> (T, Vec<T>) {
        let a: T = x.iter().zip(&self.state_cos).map(|(&w, &c)| w * c).sum();
        let b: T = x.iter().zip(&self.state_sin).map(|(&w, &s)| w * s).sum();
        let (energy, e1, _) = self.params.energy_of_c2(a * a + b * b);
        let t = self.params.temperature;
        let two = T::lit(2.0);
        let (cs, ss) = self.sector_trig.unwrap_or((T::zero(), T::zero()));
        let g = self.params.g;
        let mut value = energy + self.coupling_or_zero(a, b);
        let floor = T::lit(EMPTY_STATE);
        let zero_idx = (self.params.h0 != T::zero()).then(|| self.zero_state_index());
        let grad = x
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let ln = w.max(floor).ln();
                if w > floor {
                    value = value + t * w * ln;
                }
                let mut gi = e1 * two * (a * self.state_cos[i] + b * self.state_sin[i])
                    + t * (ln + T::one())
                    - g * (cs * self.state_cos[i] + ss * self.state_sin[i]);
                if zero_idx == Some(i) {
                    value = value + self.params.h0 * w;
                    gi = gi + self.params.h0;
                }
                gi
            })
            .collect();
        (value, grad)
    }

    /// Energy per spin including coupling and field, from the weights.
    pub fn energy_x(&self, x: &[T]) -> T {
        let a: T = x.iter().zip(&self.state_cos).map(|(&w, &c)| w * c).sum();
        let b: T = x.iter().zip(&self.state_sin).map(|(&w, &s)| w * s).sum();
        let (energy, _, _) = self.params.energy_of_c2(a * a + b * b);
        let field = if self.params.h0 == T::zero() {
            T::zero()
        } else {
            self.params.h0 * x[self.zero_state_index()]
        };
        energy + self.coupling_or_zero(a, b) + field
    }

    /// Hessian of `F_s` in the weights; requires every `x_σ > 0`.
    pub fn hessian_x(&self, x: &[T]) -> Matrix<T> {
        self.structured_hessian_x(x).to_matrix()
    }

    /// The weight Hessian as `diag(T/x) + V M Vᵀ` with `V = [cos θ_σ, sin θ_σ]`.
    pub fn structured_hessian_x(&self, x: &[T]) -> StructuredHessian<T> {
        let a: T = x.iter().zip(&self.state_cos).map(|(&w, &c)| w * c).sum();
        let b: T = x.iter().zip(&self.state_sin).map(|(&w, &s)| w * s).sum();
        let (_, e1, e2) = self.params.energy_of_c2(a * a + b * b);
        let t = self.params.temperature;
        let four = T::lit(4.0);
        let two = T::lit(2.0);
        StructuredHessian {
            diag: x.iter().map(|&w| t / w).collect(),
            cos: self.state_cos.clone(),
            sin: self.state_sin.clone(),
            core: [
                [four * e2 * a * a + two * e1, four * e2 * a * b],
                [four * e2 * a * b, four * e2 * b * b + two * e1],
            ],
        }
    }
}

/// Diagonal plus rank-two matrix `diag(d) + V M Vᵀ`, `V = [cos, sin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredHessian<T> {
    pub diag: Vec<T>,
    pub cos: Vec<T>,
    pub sin: Vec<T>,
    pub core: [[T; 2]; 2],
}

impl<T: Real> StructuredHessian<T> {
    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.diag.len();
        let v = |i: usize| [self.cos[i], self.sin[i]];
        Matrix::from_fn(n, n, |i, j| {
            let (vi, vj) = (v(i), v(j));
            let mut h = T::zero();
            for (r, &a) in vi.iter().enumerate() {
                for (c, &b) in vj.iter().enumerate() {
                    h = h + a * self.core[r][c] * b;
                }
            }
            if i == j {
                h = h + self.diag[i];
            }
            h
        })
    }

    /// `dᵀ H d`.
    pub fn curvature(&self, d: &[T]) -> T {
        let diag: T = d.iter().zip(&self.diag).map(|(&v, &w)| v * v * w).sum();
        let z = [
            d.iter().zip(&self.cos).map(|(&v, &c)| v * c).sum::<T>(),
            d.iter().zip(&self.sin).map(|(&v, &c)| v * c).sum::<T>(),
        ];
        let mut low = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                low = low + z[r] * self.core[r][c] * z[c];
            }
        }
        diag + low
    }

    /// Solves `[H 1; 1ᵀ 0][dx; λ] = [−g; 0]` by eliminating `dx`, so that
    /// `dx_σ = −(g_σ + λ + (V M z)_σ) / d_σ` keeps full relative precision
    /// in every component.
    pub fn newton_step(&self, grad: &[T]) -> Option<Vec<T>> {
        let n = self.diag.len();
        let inv: Vec<T> = self.diag.iter().map(|&d| T::one() / d).collect();
        let ones = vec![T::one(); n];
        let cols = [&self.cos[..], &self.sin[..], &ones[..]];
        let dot = |u: &[T], w: &[T]| -> T { (0..n).map(|i| u[i] * inv[i] * w[i]).sum() };
        // Unknowns (z₁, z₂, λ) with z = Vᵀ dx and dx = −D⁻¹(g + λ1 + V M z).
        let mut a = Matrix::zeros(3, 3);
        let mut rhs = [T::zero(); 3];
        for r in 0..3 {
            for c in 0..2 {
                let mut entry = T::zero();
                for k in 0..2 {
                    entry = entry + dot(cols[r], cols[k]) * self.core[k][c];
                }
                a[(r, c)] = if r == c { entry + T::one() } else { entry };
            }
            a[(r, 2)] = dot(cols[r], &ones);
            rhs[r] = -dot(cols[r], grad);
        }
        let sol = lu_solve(&a, &rhs)?;
        let mz = [
            self.core[0][0] * sol[0] + self.core[0][1] * sol[1],
            self.core[1][0] * sol[0] + self.core[1][1] * sol[1],
        ];
        let mut dx: Vec<T> = (0..n)
            .map(|i| -(grad[i] + sol[2] + self.cos[i] * mz[0] + self.sin[i] * mz[1]) * inv[i])
            .collect();
        // Σ dx = 0 holds only to the precision of the largest weight; put the
        // residual there so the small components stay exact.
        let drift: T = dx.iter().copied().sum();
        let big = (0..n).fold(0, |b, i| if inv[i] > inv[b] { i } else { b });
        dx[big] = dx[big] - drift;
        Some(dx)
    }
}

/// `−Σ x ln x` with `0 ln 0 = 0`.
pub fn entropy_of_weights<T: Real>(x: &[T]) -> T {
    let floor = T::lit(EMPTY_STATE);
    -x.iter()
        .filter(|&&v| v > floor)
        .map(|&v| v * v.ln())
        .sum::<T>()
}

pub fn c2<T: Real>(l: SpinQuantum, m: &MomentVector<T>) -> Result<T> {
    FreeEnergy::new(ModelParams::new(l, T::zero(), T::zero(), T::one()))?.c2(m)
}

pub fn energy<T: Real>(params: &ModelParams<T>, m: &MomentVector<T>) -> Result<T> {
    FreeEnergy::new(params.clone())?.energy(m)
}

pub fn entropy<T: Real>(l: SpinQuantum, m: &MomentVector<T>) -> Result<T> {
    let x: WeightVector<T> = SpinSystem::new(l).moments_to_weights(m)?;
    Ok(entropy_of_weights(x.as_slice()))
}

pub fn coupling<T: Real>(params: &ModelParams<T>, m: &MomentVector<T>) -> Result<T> {
    FreeEnergy::new(params.clone())?.coupling(m)
}

pub fn free_energy<T: Real>(params: &ModelParams<T>, m: &MomentVector<T>) -> Result<ThermoEval<T>> {
    FreeEnergy::new(params.clone())?.evaluate(m)
}

/// Spin-1 system read out by a spin-1/2 magnet:
/// `I_s = (g/2)(1 − (3/2)s²) − (3/2) g s m₁`, for `s ∈ {−1, 0, 1}`, `|m₁| ≤ 1/2`.
pub fn coupling_two_outcome<T: Real>(g: T, s: i32, m1: T) -> Result<T> {
    if !(-1..=1).contains(&s) {
        return Err(Error::InvalidParams(format!(
            "s = {s} is not a spin-1 eigenvalue"
        )));
    }
    if !(m1.abs() <= T::lit(0.5)) {
        return Err(Error::InvalidParams(format!(
            "|m1| = {} exceeds 1/2",
            m1.abs()
        )));
    }
    let s = T::lit(s as f64);
    let three_halves = T::lit(1.5);
    Ok(g / T::lit(2.0) * (T::one() - three_halves * s * s) - three_halves * g * s * m1)
}
