//! Spin spectra and the trigonometric polynomials on them.
//!
//! On the `2l + 1` equally spaced points of a spin-`l` spectrum, the functions
//! `cos(2πs/(2l+1))` and `sin(2πs/(2l+1))` coincide with polynomials of degree
//! `2l` in `s`. Their coefficients turn the cosine forms of the model into
//! polynomials in the moments `m_k`.

use std::fmt;

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, Matrix};
use crate::scalar::Real;

/// Largest supported `2l`. Vandermonde conditioning on integer nodes degrades
/// quickly past this.
pub const MAX_TWICE_L: u32 = 20;

/// A spin quantum number `l`, stored as the integer `2l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinQuantum {
    twice_l: u32,
}

impl SpinQuantum {
    pub fn new(twice_l: u32) -> Result<Self> {
        if twice_l == 0 || twice_l > MAX_TWICE_L {
            return Err(Error::InvalidSpin(twice_l));
        }
        Ok(Self { twice_l })
    }

    pub const HALF: Self = Self { twice_l: 1 };
    pub const ONE: Self = Self { twice_l: 2 };
    pub const THREE_HALVES: Self = Self { twice_l: 3 };
    pub const TWO: Self = Self { twice_l: 4 };
    pub const FIVE_HALVES: Self = Self { twice_l: 5 };

    #[inline]
    pub fn twice_l(self) -> u32 {
        self.twice_l
    }

    /// Number of spin states, `2l + 1`.
    #[inline]
    pub fn n_states(self) -> usize {
        self.twice_l as usize + 1
    }

    /// Number of independent moments `m_1 … m_{2l}`.
    #[inline]
    pub fn n_moments(self) -> usize {
        self.twice_l as usize
    }

    pub fn is_integer(self) -> bool {
        self.twice_l.is_multiple_of(2)
    }

    pub fn l<T: Real>(self) -> T {
        T::lit(self.twice_l as f64 / 2.0)
    }

    /// Doubled spectrum `2σ` for σ = −l, …, l.
    pub fn spectrum_twice(self) -> impl Iterator<Item = i32> + Clone {
        let tl = self.twice_l as i32;
        (0..=tl).map(move |i| 2 * i - tl)
    }

    /// The exact spectrum (−l, −l+1, …, l).
    pub fn spectrum(self) -> Vec<Rational64> {
        self.spectrum_twice()
            .map(|t| Rational64::new(t as i64, 2))
            .collect()
    }

    pub fn spectrum_values<T: Real>(self) -> Vec<T> {
        self.spectrum_twice()
            .map(|t| T::lit(t as f64 / 2.0))
            .collect()
    }

    /// Position of the state with doubled spin `twice_sigma` in ascending order.
    pub fn index_of(self, twice_sigma: i32) -> Option<usize> {
        let tl = self.twice_l as i32;
        if twice_sigma.abs() > tl || (twice_sigma + tl) % 2 != 0 {
            return None;
        }
        Some(((twice_sigma + tl) / 2) as usize)
    }

    /// Angle `2πσ/(2l+1)` of the state at `index`.
    pub fn angle<T: Real>(self, index: usize) -> T {
        let two_sigma = T::lit((2 * index as i64 - self.twice_l as i64) as f64);
        // 2π(2σ/2)/(2l+1) = π·(2σ)/(2l+1)
        T::PI() * two_sigma / T::from_usize_lossy(self.n_states())
    }
}

impl fmt::Display for SpinQuantum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice_l / 2)
        } else {
            write!(f, "{}/2", self.twice_l)
        }
    }
}

/// Free-function form of [`SpinQuantum::spectrum`].
pub fn spectrum(l: SpinQuantum) -> Vec<Rational64> {
    l.spectrum()
}

/// Polynomial coefficients of cosine and sine over a spin spectrum:
/// `cos(2πs/(2l+1)) = Σ_k cos_coeffs[k] s^k` and likewise for sine.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly<T> {
    pub l: SpinQuantum,
    pub cos_coeffs: Vec<T>,
    pub sin_coeffs: Vec<T>,
}

impl<T: Real> TrigPoly<T> {
    pub fn new(l: SpinQuantum) -> Self {
        let nodes = l.spectrum_values::<T>();
        let n = nodes.len();
        let vander = Matrix::from_fn(n, n, |i, k| nodes[i].powi(k as i32));
        let cos_target: Vec<T> = (0..n).map(|i| l.angle::<T>(i).cos()).collect();
        let sin_target: Vec<T> = (0..n).map(|i| l.angle::<T>(i).sin()).collect();
        let mut cos_coeffs =
            lu_solve(&vander, &cos_target).expect("Vandermonde matrix on distinct nodes");
        let mut sin_coeffs =
            lu_solve(&vander, &sin_target).expect("Vandermonde matrix on distinct nodes");
        // Even/odd targets on a symmetric grid: the other parity vanishes identically.
        for k in 0..n {
            if k % 2 == 1 {
                cos_coeffs[k] = T::zero();
            } else {
                sin_coeffs[k] = T::zero();
            }
        }
        Self {
            l,
            cos_coeffs,
            sin_coeffs,
        }
    }

    pub fn cos_at(&self, s: T) -> T {
        horner(&self.cos_coeffs, s)
    }

    pub fn sin_at(&self, s: T) -> T {
        horner(&self.sin_coeffs, s)
    }

    /// `Σ_k c_k m_k` with `m_0 = 1`; `moments` holds `m_1 … m_{2l}`.
    pub fn cos_part(&self, moments: &[T]) -> T {
        self.cos_coeffs[0]
            + self.cos_coeffs[1..]
                .iter()
                .zip(moments)
                .map(|(&c, &m)| c * m)
                .sum::<T>()
    }

    /// `Σ_k d_k m_k` with `m_0 = 1`.
    pub fn sin_part(&self, moments: &[T]) -> T {
        self.sin_coeffs[0]
            + self.sin_coeffs[1..]
                .iter()
                .zip(moments)
                .map(|(&d, &m)| d * m)
                .sum::<T>()
    }
}

/// Free-function form of [`TrigPoly::new`].
pub fn trig_poly<T: Real>(l: SpinQuantum) -> TrigPoly<T> {
    TrigPoly::new(l)
}

fn horner<T: Real>(coeffs: &[T], s: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
}
