//! Occupation fractions, moments, and the cyclic relabelling map between them.
//!
//! Weights `x_σ` are always indexed in ascending spin order σ = −l, …, l.
//! Moments are stored without the implicit `m_0 = 1`.
//!
//! The linear relations between weights and moments have rational
//! coefficients; they are inverted exactly over `BigRational` once per spin
//! and only then rounded into the working scalar type.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{rational_inverse, Matrix};
use crate::scalar::{rational_from_int, Real};
use crate::spectrum::{SpinQuantum, TrigPoly};

/// Weights below `-FEASIBILITY_TOL` are rejected; weights in
/// `[-FEASIBILITY_TOL, 0)` are clamped to zero.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub(crate) fn scaled_tol<T: Real>(tol: f64) -> T {
    T::lit(tol).max(T::epsilon() * T::lit(64.0))
}

/// Fractions of magnet spins in each of the `2l + 1` states.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    l: SpinQuantum,
    x: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(l: SpinQuantum, x: Vec<T>) -> Result<Self> {
        if x.len() != l.n_states() {
            return Err(Error::DimensionMismatch {
                expected: l.n_states(),
                got: x.len(),
            });
        }
        let neg_tol = scaled_tol::<T>(1e-12);
        if let Some(bad) = x.iter().find(|v| !(**v >= -neg_tol)) {
            return Err(Error::InvalidWeights(format!(
                "negative or NaN weight {bad}"
            )));
        }
        let total: T = x.iter().copied().sum();
        if (total - T::one()).abs() > scaled_tol::<T>(1e-10) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        let x = x.into_iter().map(|v| v.max(T::zero())).collect();
        Ok(Self { l, x })
    }

    /// All spins in the state with doubled spin value `twice_sigma`.
    pub fn vertex(l: SpinQuantum, twice_sigma: i32) -> Result<Self> {
        let idx = l
            .index_of(twice_sigma)
            .ok_or_else(|| Error::InvalidParams(format!("{twice_sigma}/2 is not in spec({l})")))?;
        let mut x = vec![T::zero(); l.n_states()];
        x[idx] = T::one();
        Ok(Self { l, x })
    }

    pub fn uniform(l: SpinQuantum) -> Self {
        let n = l.n_states();
        Self {
            l,
            x: vec![T::one() / T::from_usize_lossy(n); n],
        }
    }

    /// Point drawn uniformly from the simplex (normalised exponential variates).
    pub fn random<R: Rng + ?Sized>(l: SpinQuantum, rng: &mut R) -> Self {
        let e: Vec<f64> = (0..l.n_states())
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = e.iter().sum();
        Self {
            l,
            x: e.into_iter().map(|v| T::lit(v / total)).collect(),
        }
    }

    pub fn spin(&self) -> SpinQuantum {
        self.l
    }

    pub fn as_slice(&self) -> &[T] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<T> {
        self.x
    }

    /// Weight of the state with doubled spin value `twice_sigma`.
    pub fn get(&self, twice_sigma: i32) -> Option<T> {
        self.l.index_of(twice_sigma).map(|i| self.x[i])
    }
}

/// Moments `m_1 … m_{2l}` of the spin distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector<T> {
    l: SpinQuantum,
    m: Vec<T>,
}

impl<T: Real> MomentVector<T> {
    /// Wraps raw moments; feasibility is not checked here.
    pub fn new(l: SpinQuantum, m: Vec<T>) -> Result<Self> {
        if m.len() != l.n_moments() {
            return Err(Error::DimensionMismatch {
                expected: l.n_moments(),
                got: m.len(),
            });
        }
        Ok(Self { l, m })
    }

    /// Moments of the pure state σ: `m_k = σ^k`.
    pub fn vertex(l: SpinQuantum, twice_sigma: i32) -> Result<Self> {
        if l.index_of(twice_sigma).is_none() {
            return Err(Error::InvalidParams(format!(
                "{twice_sigma}/2 is not in spec({l})"
            )));
        }
        let s = T::lit(twice_sigma as f64 / 2.0);
        Ok(Self {
            l,
            m: (1..=l.n_moments()).map(|k| s.powi(k as i32)).collect(),
        })
    }

    pub fn spin(&self) -> SpinQuantum {
        self.l
    }

    pub fn as_slice(&self) -> &[T] {
        &self.m
    }

    pub fn into_vec(self) -> Vec<T> {
        self.m
    }

    /// `m_k` for `k ≥ 1`; `k = 0` gives 1.
    pub fn moment(&self, k: usize) -> T {
        if k == 0 {
            T::one()
        } else {
            self.m[k - 1]
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .zip(&other.m)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Affine map `m ↦ A m + b` on the moment coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<T> {
    pub l: SpinQuantum,
    pub matrix: Matrix<T>,
    pub offset: Vec<T>,
}

impl<T: Real> AffineMap<T> {
    pub fn identity(l: SpinQuantum) -> Self {
        Self {
            l,
            matrix: Matrix::identity(l.n_moments()),
            offset: vec![T::zero(); l.n_moments()],
        }
    }

    pub fn apply(&self, m: &MomentVector<T>) -> MomentVector<T> {
        let mut out = self.matrix.mul_vec(m.as_slice());
        for (o, &b) in out.iter_mut().zip(&self.offset) {
            *o = *o + b;
        }
        MomentVector { l: self.l, m: out }
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Self) -> Self {
        let matrix = self.matrix.mul(&inner.matrix);
        let mut offset = self.matrix.mul_vec(&inner.offset);
        for (o, &b) in offset.iter_mut().zip(&self.offset) {
            *o = *o + b;
        }
        Self {
            l: self.l,
            matrix,
            offset,
        }
    }

    pub fn power(&self, n: usize) -> Self {
        (0..n).fold(Self::identity(self.l), |acc, _| self.compose(&acc))
    }
}

impl AffineMap<BigRational> {
    pub fn identity_exact(l: SpinQuantum) -> Self {
        let n = l.n_moments();
        Self {
            l,
            matrix: Matrix::from_fn(n, n, |i, j| rational_from_int((i == j) as i64)),
            offset: vec![rational_from_int(0); n],
        }
    }

    /// Exact `self ∘ inner`.
    pub fn compose_exact(&self, inner: &Self) -> Self {
        let n = self.offset.len();
        let matrix = Matrix::from_fn(n, n, |i, j| {
            (0..n).fold(rational_from_int(0), |s, k| {
                s + &self.matrix[(i, k)] * &inner.matrix[(k, j)]
            })
        });
        let offset = (0..n)
            .map(|i| {
                (0..n).fold(self.offset[i].clone(), |s, k| {
                    s + &self.matrix[(i, k)] * &inner.offset[k]
                })
            })
            .collect();
        Self {
            l: self.l,
            matrix,
            offset,
        }
    }

    pub fn power_exact(&self, n: usize) -> Self {
        (0..n).fold(Self::identity_exact(self.l), |acc, _| {
            self.compose_exact(&acc)
        })
    }
}

/// Per-spin linear data shared by all conversions: the exact moment matrix
/// `V[k][σ] = σ^k`, its inverse, and the cyclic map in both representations.
#[derive(Debug, Clone)]
pub struct SpinSystem<T> {
    l: SpinQuantum,
    trig: TrigPoly<T>,
    /// `x = inverse · (1, m_1, …, m_{2l})`.
    inverse_exact: Matrix<BigRational>,
    inverse: Matrix<T>,
    map_exact: AffineMap<BigRational>,
    map: AffineMap<T>,
}

impl<T: Real> SpinSystem<T> {
    pub fn new(l: SpinQuantum) -> Self {
        let n = l.n_states();
        let nodes: Vec<BigRational> = l
            .spectrum_twice()
            .map(|t| BigRational::new(BigInt::from(t), BigInt::from(2)))
            .collect();
        let vander = Matrix::from_fn(n, n, |k, j| pow_rational(&nodes[j], k));
        let inverse_exact = rational_inverse(&vander).expect("moment matrix on distinct nodes");
        let map_exact = binomial_shift_map(l, &inverse_exact);
        let inverse = inverse_exact.map(T::from_rational);
        let map = AffineMap {
            l,
            matrix: map_exact.matrix.map(T::from_rational),
            offset: map_exact.offset.iter().map(T::from_rational).collect(),
        };
        Self {
            l,
            trig: TrigPoly::new(l),
            inverse_exact,
            inverse,
            map_exact,
            map,
        }
    }

    pub fn spin(&self) -> SpinQuantum {
        self.l
    }

    pub fn trig(&self) -> &TrigPoly<T> {
        &self.trig
    }

    /// `(2l+1) × (2l+1)` matrix taking `(1, m_1, …)` to the weights.
    pub fn inverse(&self) -> &Matrix<T> {
        &self.inverse
    }

    pub fn inverse_exact(&self) -> &Matrix<BigRational> {
        &self.inverse_exact
    }

    /// Cyclic relabelling σ → σ+1 mod 2l+1 acting on moments.
    pub fn permutation_map_m(&self) -> &AffineMap<T> {
        &self.map
    }

    pub fn permutation_map_exact(&self) -> &AffineMap<BigRational> {
        &self.map_exact
    }

    /// Linear part of `x(m)`: column `k-1` holds `∂x_σ/∂m_k`.
    pub fn weight_jacobian(&self) -> Matrix<T> {
        let n = self.l.n_states();
        Matrix::from_fn(n, n - 1, |i, k| self.inverse[(i, k + 1)])
    }

    pub fn weights_to_moments(&self, x: &WeightVector<T>) -> Result<MomentVector<T>> {
        self.check_spin(x.l)?;
        let values = self.l.spectrum_values::<T>();
        let m = (1..=self.l.n_moments())
            .map(|k| {
                values
                    .iter()
                    .zip(&x.x)
                    .map(|(&s, &w)| w * s.powi(k as i32))
                    .sum()
            })
            .collect();
        Ok(MomentVector { l: self.l, m })
    }

    /// Raw (unclamped) solution of the moment equations.
    pub fn raw_weights(&self, m: &MomentVector<T>) -> Vec<T> {
        let mut full = Vec::with_capacity(self.l.n_states());
        full.push(T::one());
        full.extend_from_slice(&m.m);
        self.inverse.mul_vec(&full)
    }

    pub fn moments_to_weights(&self, m: &MomentVector<T>) -> Result<WeightVector<T>> {
        self.check_spin(m.l)?;
        let mut x = self.raw_weights(m);
        let tol = scaled_tol::<T>(FEASIBILITY_TOL);
        let (worst, &value) = x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Less))
            .expect("at least two states");
        if !(value >= -tol) {
            return Err(Error::Infeasible {
                sigma_twice: 2 * worst as i32 - self.l.twice_l() as i32,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        if value < T::zero() {
            for v in x.iter_mut() {
                *v = v.max(T::zero());
            }
            let total: T = x.iter().copied().sum();
            for v in x.iter_mut() {
                *v = *v / total;
            }
        }
        Ok(WeightVector { l: self.l, x })
    }

    pub fn paramagnet_moments(&self) -> MomentVector<T> {
        self.weights_to_moments(&WeightVector::uniform(self.l))
            .expect("same spin")
    }

    /// Classifies `m` and lists every violated `x_σ ≥ 0` constraint.
    pub fn feasibility(&self, m: &MomentVector<T>) -> Feasibility<T> {
        let x = self.raw_weights(m);
        let tol = scaled_tol::<T>(FEASIBILITY_TOL);
        let violations: Vec<(i32, T)> = self
            .l
            .spectrum_twice()
            .zip(x)
            .filter(|(_, v)| !(*v >= -tol))
            .collect();
        Feasibility {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn permutation_map_x(&self, x: &WeightVector<T>) -> WeightVector<T> {
        permutation_map_x(x)
    }

    /// The `2l + 1` images of `m` under repeated application of the map,
    /// starting with `m` itself.
    pub fn orbit(&self, m: &MomentVector<T>) -> Vec<MomentVector<T>> {
        let mut out = Vec::with_capacity(self.l.n_states());
        out.push(m.clone());
        for i in 1..self.l.n_states() {
            let next = self.map.apply(&out[i - 1]);
            out.push(next);
        }
        out
    }

    fn check_spin(&self, other: SpinQuantum) -> Result<()> {
        if other != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l.n_states(),
                got: other.n_states(),
            });
        }
        Ok(())
    }
}

/// Outcome of a feasibility test; violations are `(2σ, x_σ)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility<T> {
    pub feasible: bool,
    pub violations: Vec<(i32, T)>,
}

/// Shifts occupations so that state σ inherits the weight of σ−1 (mod 2l+1).
pub fn permutation_map_x<T: Real>(x: &WeightVector<T>) -> WeightVector<T> {
    let n = x.x.len();
    WeightVector {
        l: x.l,
        x: (0..n).map(|i| x.x[(i + n - 1) % n]).collect(),
    }
}

pub fn weights_to_moments<T: Real>(x: &WeightVector<T>) -> Result<MomentVector<T>> {
    SpinSystem::new(x.l).weights_to_moments(x)
}

pub fn moments_to_weights<T: Real>(m: &MomentVector<T>) -> Result<WeightVector<T>> {
    SpinSystem::new(m.l).moments_to_weights(m)
}

pub fn paramagnet_moments<T: Real>(l: SpinQuantum) -> MomentVector<T> {
    // Power sums are exact in either precision for the supported spins.
    let values = l.spectrum_values::<f64>();
    let n = values.len() as f64;
    let m = (1..=l.n_moments())
        .map(|k| T::lit(values.iter().map(|s| s.powi(k as i32)).sum::<f64>() / n))
        .collect();
    MomentVector { l, m }
}

pub fn permutation_map_m<T: Real>(l: SpinQuantum) -> AffineMap<T> {
    SpinSystem::new(l).map
}

pub fn feasibility<T: Real>(m: &MomentVector<T>) -> Feasibility<T> {
    SpinSystem::new(m.l).feasibility(m)
}

fn pow_rational(q: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * q)
}

fn binomial(n: usize, k: usize) -> BigRational {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

/// `m'_k = Σ_{n≤k} C(k,n) m_n + [(−l)^k − (l+1)^k] x_l`, with `x_l` expressed
/// through the exact inverse.
fn binomial_shift_map(l: SpinQuantum, inverse: &Matrix<BigRational>) -> AffineMap<BigRational> {
    let dim = l.n_moments();
    let top = l.n_states() - 1;
    let l_val = BigRational::new(BigInt::from(l.twice_l()), BigInt::from(2));
    let neg_l = -l_val.clone();
    let l_plus_one = l_val + rational_from_int(1);
    let mut matrix = Matrix::from_fn(dim, dim, |_, _| BigRational::zero());
    let mut offset = vec![BigRational::zero(); dim];
    for k in 1..=dim {
        let wrap = pow_rational(&neg_l, k) - pow_rational(&l_plus_one, k);
        offset[k - 1] = binomial(k, 0) + &wrap * &inverse[(top, 0)];
        for n in 1..=dim {
            let mut entry = &wrap * &inverse[(top, n)];
            if n <= k {
                entry += binomial(k, n);
            }
            matrix[(k - 1, n - 1)] = entry;
        }
    }
    AffineMap { l, matrix, offset }
}
