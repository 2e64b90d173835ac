//! Exact finite-`N` statistical mechanics by enumerating occupation numbers.
//!
//! A composition `(N_{−l}, …, N_l)` with `Σ N_σ = N` stands for
//! `G = N! / Π N_σ!` microstates, all sharing the weights `x_σ = N_σ / N`.
//! Everything is kept in log space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::order::{MomentVector, WeightVector};
use crate::scalar::Real;
use crate::spectrum::SpinQuantum;
use crate::thermo::{entropy_of_weights, FreeEnergy, ModelParams};

/// Largest number of compositions [`enumerate`] will build.
pub const COMPOSITION_CAP: u128 = 10_000_000;
/// Largest `N` accepted by [`brute_force_free_energy`].
pub const BRUTE_FORCE_MAX_N: u32 = 8;

/// All compositions of `N` spins over the `2l + 1` states.
#[derive(Debug, Clone)]
pub struct FiniteNEnsemble<T> {
    pub l: SpinQuantum,
    pub n: u32,
    pub params: Option<ModelParams<T>>,
    /// Row-major `count × (2l+1)` occupation table, colex order.
    counts: Vec<u32>,
    ln_g: Vec<T>,
    /// Energy per spin of each composition (empty until parameters are set).
    energy: Vec<T>,
    /// `ln G − N·H / T` (empty until parameters are set).
    log_weight: Vec<T>,
}

/// `C(n + k, k)` without overflow for the sizes that matter here.
pub fn composition_count(l: SpinQuantum, n: u32) -> u128 {
    let k = l.twice_l() as u128;
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (n as u128 + i) / i;
    }
    c
}

/// `ln k!` for `k = 0..=n`.
fn ln_factorials<T: Real>(n: u32) -> Vec<T> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = T::zero();
    out.push(acc);
    for k in 1..=n {
        acc = acc + T::from_usize_lossy(k as usize).ln();
        out.push(acc);
    }
    out
}

/// `ln Σ exp(v)` over a slice; `−∞` for an empty slice.
pub fn log_sum_exp<T: Real>(v: &[T]) -> T {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let s: T = v.iter().map(|&a| (a - max).exp()).sum();
    max + s.ln()
}

/// Advance to the next composition in colex order; false after the last.
fn next_composition(c: &mut [u32]) -> bool {
    let n = c.len();
    let Some(i) = (0..n - 1).find(|&i| c[i] > 0) else {
        return false;
    };
    let v = c[i];
    c[i] = 0;
    c[i + 1] += 1;
    c[0] = v - 1;
    true
}

/// Degeneracy table for `N` spins of spin `l`.
pub fn enumerate<T: Real>(l: SpinQuantum, n: u32) -> Result<FiniteNEnsemble<T>> {
    if n == 0 {
        return Err(Error::InvalidParams("N must be positive".into()));
    }
    let count = composition_count(l, n);
    if count > COMPOSITION_CAP {
        return Err(Error::TooLarge {
            count,
            cap: COMPOSITION_CAP,
        });
    }
    let states = l.n_states();
    let lf = ln_factorials::<T>(n);
    let mut counts = Vec::with_capacity(count as usize * states);
    let mut ln_g = Vec::with_capacity(count as usize);
    let mut c = vec![0u32; states];
    c[0] = n;
    loop {
        counts.extend_from_slice(&c);
        ln_g.push(
            c.iter()
                .fold(lf[n as usize], |acc, &k| acc - lf[k as usize]),
        );
        if !next_composition(&mut c) {
            break;
        }
    }
    debug_assert_eq!(ln_g.len() as u128, count);
    Ok(FiniteNEnsemble {
        l,
        n,
        params: None,
        counts,
        ln_g,
        energy: Vec::new(),
        log_weight: Vec::new(),
    })
}

impl<T: Real> FiniteNEnsemble<T> {
    /// Enumerate and attach Boltzmann weights in one go.
    pub fn new(params: ModelParams<T>, n: u32) -> Result<Self> {
        enumerate(params.l, n)?.with_params(params)
    }

    /// Attach parameters and compute energies and Boltzmann log-weights.
    pub fn with_params(mut self, params: ModelParams<T>) -> Result<Self> {
        if params.l != self.l {
            return Err(Error::InvalidParams(format!(
                "ensemble has l = {}, parameters have l = {}",
                self.l, params.l
            )));
        }
        let f = FreeEnergy::new(params.clone())?;
        let states = self.l.n_states();
        let n_t = T::from_usize_lossy(self.n as usize);
        self.energy = self
            .counts
            .par_chunks(states)
            .map(|c| {
                let x: Vec<T> = c
                    .iter()
                    .map(|&k| T::from_usize_lossy(k as usize) / n_t)
                    .collect();
                f.energy_x(&x)
            })
            .collect();
        let beta_n = n_t / params.temperature;
        self.log_weight = self
            .ln_g
            .iter()
            .zip(&self.energy)
            .map(|(&lg, &e)| lg - beta_n * e)
            .collect();
        self.params = Some(params);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ln_g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_g.is_empty()
    }

    pub fn composition(&self, i: usize) -> &[u32] {
        let s = self.l.n_states();
        &self.counts[i * s..(i + 1) * s]
    }

    pub fn ln_degeneracy(&self, i: usize) -> T {
        self.ln_g[i]
    }

    pub fn energy(&self, i: usize) -> Option<T> {
        self.energy.get(i).copied()
    }

    pub fn log_weight(&self, i: usize) -> Option<T> {
        self.log_weight.get(i).copied()
    }

    pub fn weights(&self, i: usize) -> WeightVector<T> {
        let n_t = T::from_usize_lossy(self.n as usize);
        let x = self
            .composition(i)
            .iter()
            .map(|&k| T::from_usize_lossy(k as usize) / n_t)
            .collect();
        WeightVector::new(self.l, x).expect("composition weights are a distribution")
    }

    /// `m_k = Σ (N_σ/N) σ^k` for one composition.
    pub fn moments(&self, i: usize) -> MomentVector<T> {
        let n_t = T::from_usize_lossy(self.n as usize);
        let sigmas = self.l.spectrum_values::<T>();
        let c = self.composition(i);
        let m = (1..=self.l.n_moments())
            .map(|k| {
                c.iter()
                    .zip(&sigmas)
                    .map(|(&cnt, &s)| T::from_usize_lossy(cnt as usize) * s.powi(k as i32))
                    .sum::<T>()
                    / n_t
            })
            .collect();
        MomentVector::new(self.l, m).expect("moment count matches")
    }

    /// `ln Σ G`, which should equal `N ln(2l+1)`.
    pub fn ln_total_degeneracy(&self) -> T {
        log_sum_exp(&self.ln_g)
    }

    fn require_weights(&self) -> Result<&[T]> {
        if self.log_weight.is_empty() {
            Err(Error::InvalidParams(
                "ensemble has no model parameters".into(),
            ))
        } else {
            Ok(&self.log_weight)
        }
    }

    /// `ln Z` of the finite system.
    pub fn ln_partition(&self) -> Result<T> {
        Ok(log_sum_exp(self.require_weights()?))
    }

    /// Boltzmann probability of each composition.
    pub fn probabilities(&self) -> Result<Vec<T>> {
        let lw = self.require_weights()?;
        let ln_z = log_sum_exp(lw);
        Ok(lw.iter().map(|&w| (w - ln_z).exp()).collect())
    }

    /// Boltzmann mean of every moment.
    pub fn mean_moments(&self) -> Result<MomentVector<T>> {
        let p = self.probabilities()?;
        let k = self.l.n_moments();
        let mut mean = vec![T::zero(); k];
        for (i, &pi) in p.iter().enumerate() {
            for (acc, v) in mean.iter_mut().zip(self.moments(i).as_slice()) {
                *acc = *acc + pi * *v;
            }
        }
        MomentVector::new(self.l, mean)
    }

    /// Boltzmann covariance of the moments about the given centre.
    pub fn second_moments_about(&self, centre: &MomentVector<T>) -> Result<Vec<Vec<T>>> {
        let p = self.probabilities()?;
        let k = self.l.n_moments();
        let mut out = vec![vec![T::zero(); k]; k];
        for (i, &pi) in p.iter().enumerate() {
            let m = self.moments(i);
            let d: Vec<T> = m
                .as_slice()
                .iter()
                .zip(centre.as_slice())
                .map(|(&a, &b)| a - b)
                .collect();
            for r in 0..k {
                for c in 0..k {
                    out[r][c] = out[r][c] + pi * d[r] * d[c];
                }
            }
        }
        Ok(out)
    }
}

/// `−(T/N) ln Σ G e^{−N H / T}`.
pub fn exact_free_energy<T: Real>(ensemble: &FiniteNEnsemble<T>) -> Result<T> {
    let params = ensemble
        .params
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("ensemble has no model parameters".into()))?;
    let ln_z = ensemble.ln_partition()?;
    Ok(-params.temperature * ln_z / T::from_usize_lossy(ensemble.n as usize))
}

/// Free energy per spin by summing over all `(2l+1)^N` raw spin
/// configurations, without using degeneracies.
pub fn brute_force_free_energy<T: Real>(params: &ModelParams<T>, n: u32) -> Result<T> {
    if n == 0 || n > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidParams(format!(
            "brute force needs 1 <= N <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let f = FreeEnergy::new(params.clone())?;
    let states = params.l.n_states();
    let total = (states as u128).pow(n);
    if total > COMPOSITION_CAP {
        return Err(Error::TooLarge {
            count: total,
            cap: COMPOSITION_CAP,
        });
    }
    let n_t = T::from_usize_lossy(n as usize);
    let beta_n = n_t / params.temperature;
    let log_terms: Vec<T> = (0..total as u64)
        .into_par_iter()
        .map(|mut code| {
            let mut occ = vec![0usize; states];
            for _ in 0..n {
                occ[(code % states as u64) as usize] += 1;
                code /= states as u64;
            }
            let x: Vec<T> = occ.iter().map(|&k| T::from_usize_lossy(k) / n_t).collect();
            -beta_n * f.energy_x(&x)
        })
        .collect();
    Ok(-params.temperature * log_sum_exp(&log_terms) / n_t)
}

/// Composition of `N` nearest to `x` (largest-remainder rounding).
pub fn nearest_composition<T: Real>(x: &WeightVector<T>, n: u32) -> Vec<u32> {
    let n_t = T::from_usize_lossy(n as usize);
    let scaled: Vec<T> = x.as_slice().iter().map(|&w| w * n_t).collect();
    let mut c: Vec<u32> = scaled
        .iter()
        .map(|&v| v.floor().to_u32().unwrap_or(0))
        .collect();
    let mut missing = n as i64 - c.iter().map(|&k| k as i64).sum::<i64>();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if missing > 0 {
            c[i] += 1;
            missing -= 1;
        } else if c[i] > 0 {
            c[i] -= 1;
            missing += 1;
        }
    }
    c
}

/// Outcome of [`stirling_entropy_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct StirlingError<T> {
    /// `|ln G / N − S(x)|` at the composition used.
    pub error: T,
    pub composition: Vec<u32>,
    /// `N x` was not integral and the nearest composition was used.
    pub rounded: bool,
}

/// Deviation of the exact per-spin log-degeneracy from the entropy `S(x)`.
pub fn stirling_entropy_error<T: Real>(
    l: SpinQuantum,
    n: u32,
    x: &WeightVector<T>,
) -> Result<StirlingError<T>> {
    if x.spin() != l {
        return Err(Error::DimensionMismatch {
            expected: l.n_states(),
            got: x.as_slice().len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParams("N must be positive".into()));
    }
    let composition = nearest_composition(x, n);
    let n_t = T::from_usize_lossy(n as usize);
    let rounded = composition
        .iter()
        .zip(x.as_slice())
        .any(|(&k, &w)| (T::from_usize_lossy(k as usize) - w * n_t).abs() > T::lit(1e-9));
    let lf = ln_factorials::<T>(n);
    let ln_g = composition
        .iter()
        .fold(lf[n as usize], |acc, &k| acc - lf[k as usize]);
    let xc: Vec<T> = composition
        .iter()
        .map(|&k| T::from_usize_lossy(k as usize) / n_t)
        .collect();
    let error = (ln_g / n_t - entropy_of_weights(&xc)).abs();
    Ok(StirlingError {
        error,
        composition,
        rounded,
    })
}

/// Exact variances of `δm₁`, `δm₂` about the paramagnet `(0, 2/3)` for free
/// spin-1 constituents.
pub fn paramagnet_fluctuations<T: Real>(n: u32) -> Result<(T, T)> {
    let l = SpinQuantum::ONE;
    let params = ModelParams::new(l, T::zero(), T::zero(), T::one());
    let ens = FiniteNEnsemble::new(params, n)?;
    let centre = MomentVector::new(l, vec![T::zero(), T::lit(2.0 / 3.0)])?;
    let cov = ens.second_moments_about(&centre)?;
    Ok((cov[0][0], cov[1][1]))
}

/// Largest relative deviation of the exact variances from the Gaussian
/// values `2/(3N)` and `2/(9N)`.
pub fn paramagnet_gaussian_check<T: Real>(n: u32) -> Result<T> {
    if n < 100 {
        return Err(Error::InvalidParams(format!(
            "Gaussian check needs N >= 100, got {n}"
        )));
    }
    let (v1, v2) = paramagnet_fluctuations::<T>(n)?;
    let n_t = T::from_usize_lossy(n as usize);
    let p1 = T::lit(2.0) / (T::lit(3.0) * n_t);
    let p2 = T::lit(2.0) / (T::lit(9.0) * n_t);
    Ok(((v1 - p1) / p1).abs().max(((v2 - p2) / p2).abs()))
}

/// Numerical integral of the paramagnet's Gaussian weight, normalised by
/// `3^N` and the lattice spacings `ν = 1/N` (for `δm₂`) and `2ν` (for `δm₁`).
/// Should be 1.
pub fn gaussian_total_weight(n: u32) -> f64 {
    let n = n as f64;
    let integrate = |a: f64| {
        // ∫ e^{−a t²} dt by the trapezoidal rule over ±12 standard deviations
        let half_width = 12.0 / (2.0 * a).sqrt();
        let steps = 4000;
        let h = 2.0 * half_width / steps as f64;
        (0..=steps)
            .map(|i| {
                let t = -half_width + i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * (-a * t * t).exp()
            })
            .sum::<f64>()
            * h
    };
    let nu = 1.0 / n;
    let prefactor = 3f64.powf(1.5) / (2.0 * std::f64::consts::PI * n);
    prefactor * integrate(0.75 * n) / (2.0 * nu) * integrate(2.25 * n) / nu
}
