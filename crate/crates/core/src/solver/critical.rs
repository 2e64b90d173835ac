//! Transition points of the spin-1 magnet along the symmetric line `m₁ = 0`.
//!
//! With `u = 1 − 3m₂/2` one has `C₂ = u²`, `x₀ = 1 − m₂`, `x_{±1} = m₂/2`, so
//!
//! ```text
//! F(m₂)  = H(u²) + T[(1−m₂)ln(1−m₂) + m₂ ln(m₂/2)] − γ u + H₀(1−m₂)
//! F'(m₂) = (3/2)(J₂u + J₄u³ + J₆u⁵ + J₈u⁷ + γ) − H₀ + T ln(m₂ / 2(1−m₂))
//! ```
//!
//! where `γ = g cos(2πs/3)` is the coupling seen in sector `s`. Stationary
//! points satisfy the mean-field equation `m₂ = 2 / (e^{h/T} + 2)` with
//! `h = (3/2)(J₂u + J₄u³ + … + γ) − H₀`.

use super::roots::{bisect, BisectOptions};
use super::{CriticalKind, CriticalPoint, Residuals};
use crate::error::{Error, Result};
use crate::order::MomentVector;
use crate::scalar::Real;
use crate::spectrum::SpinQuantum;
use crate::thermo::ModelParams;

/// Upper end of the small-`m₂` search; the paramagnet sits at 2/3.
const BRANCH_CEILING: f64 = 2.0 / 3.0 - 1e-7;
const BARRIER_GRID: usize = 10_000;

/// The spin-1 free energy restricted to `m₁ = 0`.
#[derive(Debug, Clone)]
pub struct MeanFieldLine<T> {
    pub j2: T,
    pub j4: T,
    pub j6: T,
    pub j8: T,
    pub temperature: T,
    /// Effective coupling `γ = g cos(2πs/3)`; zero when uncoupled.
    pub gamma: T,
    pub h0: T,
}

impl<T: Real> MeanFieldLine<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self> {
        params.validate()?;
        if params.l.twice_l() != 2 {
            return Err(Error::UnsupportedSpin {
                required: 2,
                got: params.l.twice_l(),
            });
        }
        let gamma = match params.sector {
            // cos(2πs/3) = 1 − (3/2)s²
            Some(twice_s) => {
                let s = T::lit(twice_s as f64 / 2.0);
                params.g * (T::one() - T::lit(1.5) * s * s)
            }
            None => T::zero(),
        };
        Ok(Self {
            j2: params.j2,
            j4: params.j4,
            j6: params.j6,
            j8: params.j8,
            temperature: params.temperature,
            gamma,
            h0: params.h0,
        })
    }

    fn at_temperature(&self, temperature: T) -> Self {
        Self {
            temperature,
            ..self.clone()
        }
    }

    fn with_gamma(&self, gamma: T) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    fn u(m2: T) -> T {
        T::one() - T::lit(1.5) * m2
    }

    /// Effective field `h(m₂)`.
    pub fn field(&self, m2: T) -> T {
        let u = Self::u(m2);
        let u2 = u * u;
        T::lit(1.5) * (u * (self.j2 + u2 * (self.j4 + u2 * (self.j6 + u2 * self.j8))) + self.gamma)
            - self.h0
    }

    pub fn value(&self, m2: T) -> T {
        let u = Self::u(m2);
        let c = u * u;
        let energy = -(self.j2 * c / T::lit(2.0)
            + self.j4 * c.powi(2) / T::lit(4.0)
            + self.j6 * c.powi(3) / T::lit(6.0)
            + self.j8 * c.powi(4) / T::lit(8.0));
        let one_minus = T::one() - m2;
        let xlogx = |x: T| if x > T::zero() { x * x.ln() } else { T::zero() };
        let half = m2 / T::lit(2.0);
        energy + self.temperature * (xlogx(one_minus) + T::lit(2.0) * xlogx(half)) - self.gamma * u
            + self.h0 * one_minus
    }

    pub fn d1(&self, m2: T) -> T {
        self.field(m2) + self.temperature * (m2 / (T::lit(2.0) * (T::one() - m2))).ln()
    }

    pub fn d2(&self, m2: T) -> T {
        let u = Self::u(m2);
        let c = u * u;
        // d²H/dm₂² = H''(C)·9u² + H'(C)·9/2
        let h1 = -(self.j2 + self.j4 * c + self.j6 * c.powi(2) + self.j8 * c.powi(3)) / T::lit(2.0);
        let h2 = -(self.j4 + T::lit(2.0) * self.j6 * c + T::lit(3.0) * self.j8 * c.powi(2))
            / T::lit(2.0);
        h2 * T::lit(9.0) * c + h1 * T::lit(4.5) + self.temperature / (m2 * (T::one() - m2))
    }

    /// Right-hand side of the mean-field equation.
    pub fn fixed_point_map(&self, m2: T) -> T {
        let two = T::lit(2.0);
        two / ((self.field(m2) / self.temperature).exp() + two)
    }

    /// Search grid: logarithmic up to 1e-3, linear above.
    fn grid(ceiling: T) -> Vec<T> {
        let mut pts: Vec<T> = (0..=600)
            .map(|i| T::lit(10f64.powf(-300.0 + 297.0 * i as f64 / 600.0)))
            .collect();
        let lo = T::lit(1e-3);
        let steps = BARRIER_GRID;
        for i in 1..=steps {
            pts.push(lo + (ceiling - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(steps));
        }
        pts
    }

    /// First bracket on which `g` changes sign in the given direction.
    fn first_crossing(&self, g: impl Fn(T) -> T, upward: bool, ceiling: T) -> Option<(T, T)> {
        let grid = Self::grid(ceiling);
        let mut prev = grid[0];
        let mut prev_val = g(prev);
        for &p in &grid[1..] {
            let v = g(p);
            let crossed = if upward {
                prev_val < T::zero() && v >= T::zero()
            } else {
                prev_val > T::zero() && v <= T::zero()
            };
            if crossed {
                return Some((prev, p));
            }
            prev = p;
            prev_val = v;
        }
        None
    }

    /// Small-`m₂` stationary point (the ferromagnetic branch near `x₀ = 1`).
    pub fn small_branch(&self) -> Result<T> {
        let ceiling = T::lit(BRANCH_CEILING);
        if self.d1(T::lit(1e-300)) >= T::zero() {
            return Err(Error::NoSolutionInBracket(
                "branch lies below the smallest representable m2".into(),
            ));
        }
        let (a, b) = self
            .first_crossing(|m| self.d1(m), true, ceiling)
            .ok_or_else(|| {
                Error::NoSolutionInBracket(format!(
                    "no ferromagnetic branch at T = {}",
                    self.temperature
                ))
            })?;

        // Damped fixed-point iteration, accepted only inside the bracket.
        let mut m = a;
        let damping = T::lit(0.5);
        for _ in 0..500 {
            let next = (T::one() - damping) * m + damping * self.fixed_point_map(m);
            if (next - m).abs() <= T::lit(1e-15) * next.abs() {
                m = next;
                break;
            }
            m = next;
        }
        if m >= a && m <= b && self.d1(m).abs() <= T::lit(1e-12) * (T::one() + self.field(m).abs())
        {
            return Ok(m);
        }
        let (root, _, _) = bisect(|z| self.d1(z), a, b, BisectOptions::default())?;
        Ok(root)
    }

    /// First inflection point of the profile (local maximum of `F'`).
    fn first_inflection(&self) -> Option<T> {
        let (a, b) = self.first_crossing(|m| self.d2(m), false, T::lit(1.0 - 1e-9))?;
        bisect(|z| self.d2(z), a, b, BisectOptions::default())
            .ok()
            .map(|r| r.0)
    }

    /// Local minimum of `F'` following the first inflection, on a uniform
    /// grid over (0, 1).
    fn barrier_inflection(&self) -> Option<T> {
        let n = BARRIER_GRID;
        let pts: Vec<T> = (1..n)
            .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n))
            .collect();
        let start = self.first_inflection()?;
        let mut prev: Option<(T, T)> = None;
        for &p in pts.iter().filter(|&&p| p > start) {
            let v = self.d2(p);
            if let Some((q, qv)) = prev {
                if qv < T::zero() && v >= T::zero() {
                    return bisect(|z| self.d2(z), q, p, BisectOptions::default())
                        .ok()
                        .map(|r| r.0);
                }
            }
            prev = Some((p, v));
        }
        None
    }
}

fn point<T: Real>(m2: T) -> MomentVector<T> {
    MomentVector::new(SpinQuantum::ONE, vec![T::zero(), m2]).expect("two moments")
}

fn is_extrapolated<T: Real>(line: &MeanFieldLine<T>) -> bool {
    line.j2 != T::zero() || line.j6 != T::zero() || line.j8 != T::zero() || line.h0 != T::zero()
}

/// Small-`m₂` solution of the spin-1 mean-field equation on `m₁ = 0`.
pub fn meanfield_m2<T: Real>(params: &ModelParams<T>) -> Result<T> {
    MeanFieldLine::new(params)?.small_branch()
}

/// Temperature at which the metastable ferromagnetic branch appears
/// (`F' = F'' = 0` on `m₁ = 0`).
pub fn spinodal_temperature<T: Real>(params: &ModelParams<T>) -> Result<CriticalPoint<T>> {
    let line = MeanFieldLine::new(params)?;
    let (t_ms, m2, width, iterations) = spinodal_search(&line)?;
    let at = line.at_temperature(t_ms);
    Ok(CriticalPoint {
        kind: CriticalKind::Spinodal,
        value: t_ms,
        order_param: point(m2),
        residuals: Residuals {
            first_derivative: at.d1(m2),
            second_derivative: at.d2(m2),
            free_energy_gap: T::zero(),
            bracket_width: width,
            iterations,
        },
        extrapolated: is_extrapolated(&line),
    })
}

fn energy_scale<T: Real>(line: &MeanFieldLine<T>) -> T {
    line.j2.abs() + line.j4.abs() + line.j6.abs() + line.j8.abs() + line.gamma.abs() + line.h0.abs()
}

/// Height of the first local maximum of `F'`; positive while a metastable
/// branch exists.
fn spinodal_margin<T: Real>(line: &MeanFieldLine<T>, temperature: T) -> Option<(T, T)> {
    let at = line.at_temperature(temperature);
    at.first_inflection().map(|m| (at.d1(m), m))
}

fn spinodal_search<T: Real>(line: &MeanFieldLine<T>) -> Result<(T, T, T, usize)> {
    let scale = energy_scale(line);
    if !(scale > T::zero()) {
        return Err(Error::NoSolutionInBracket("all couplings vanish".into()));
    }
    let margin = |t: T| match spinodal_margin(line, t) {
        Some((v, _)) => v,
        None => -T::one(),
    };
    let mut hi = scale;
    let mut tries = 0;
    while margin(hi) > T::zero() {
        hi = hi * T::lit(2.0);
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSolutionInBracket(
                "metastable branch at every temperature".into(),
            ));
        }
    }
    let mut lo = scale * T::lit(0.05);
    tries = 0;
    while margin(lo) <= T::zero() {
        lo = lo / T::lit(2.0);
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSolutionInBracket(
                "no metastable branch at any temperature".into(),
            ));
        }
    }
    let opts = BisectOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_iter: 200,
        geometric: false,
    };
    let (t_ms, width, iterations) = bisect(margin, lo, hi, opts)?;
    // At the tangency the inflection point is the new stationary point.
    let m2 = spinodal_margin(line, t_ms)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::NoSolutionInBracket("inflection lost at the spinodal".into()))?;
    Ok((t_ms, m2, width, iterations))
}

/// Temperature below which the ferromagnetic branch on `m₁ = 0` has lower
/// free energy than the paramagnet.
pub fn critical_temperature<T: Real>(params: &ModelParams<T>) -> Result<CriticalPoint<T>> {
    let line = MeanFieldLine::new(params)?;
    let (t_ms, _, _, _) = spinodal_search(&line)?;
    let para = T::lit(2.0 / 3.0);
    let gap = |t: T| -> T {
        let at = line.at_temperature(t);
        match at.small_branch() {
            Ok(m) => at.value(m) - at.value(para),
            // Just above the spinodal the branch is gone; treat as unfavourable.
            Err(_) => T::one(),
        }
    };
    let hi = t_ms * (T::one() - T::lit(1e-9));
    if gap(hi) <= T::zero() {
        return Err(Error::NoSolutionInBracket(
            "ferromagnetic branch stays below the paramagnet up to the spinodal".into(),
        ));
    }
    let mut lo = t_ms * T::lit(0.5);
    let mut tries = 0;
    while gap(lo) >= T::zero() {
        lo = lo / T::lit(2.0);
        tries += 1;
        if tries > 60 {
            return Err(Error::NoSolutionInBracket(
                "paramagnet favoured at all temperatures".into(),
            ));
        }
    }
    let opts = BisectOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_iter: 200,
        geometric: false,
    };
    let (t_c, width, iterations) = bisect(gap, lo, hi, opts)?;
    let at = line.at_temperature(t_c);
    let m2 = at.small_branch()?;
    Ok(CriticalPoint {
        kind: CriticalKind::CriticalTemperature,
        value: t_c,
        order_param: point(m2),
        residuals: Residuals {
            first_derivative: at.d1(m2),
            second_derivative: at.d2(m2),
            free_energy_gap: at.value(m2) - at.value(para),
            bracket_width: width,
            iterations,
        },
        extrapolated: is_extrapolated(&line),
    })
}

/// Smallest coupling `g` (sector `s = 0`) at which `F₀(m₂)` has no interior
/// maximum between the ferromagnetic branch and the paramagnet. Zero when
/// there is no barrier to begin with.
pub fn critical_coupling<T: Real>(params: &ModelParams<T>) -> Result<CriticalPoint<T>> {
    let mut uncoupled = params.clone();
    uncoupled.g = T::zero();
    uncoupled.sector = Some(0);
    let line = MeanFieldLine::new(&uncoupled)?;
    let m_q = line.barrier_inflection().ok_or_else(|| {
        Error::NoSolutionInBracket("profile has no barrier-shaped inflection".into())
    })?;
    let m_p = line
        .first_inflection()
        .ok_or_else(|| Error::NoSolutionInBracket("profile is convex".into()))?;
    let three_halves = T::lit(1.5);
    // F' shifts up by 3g/2; the barrier dies once the local minimum of F'
    // at m_q reaches zero.
    let g_c = (-line.d1(m_q) / three_halves).max(T::zero());
    let g_appear = (-line.d1(m_p) / three_halves).max(T::zero());
    let g_c = if g_c > g_appear { g_c } else { T::zero() };
    let at = line.with_gamma(g_c);
    Ok(CriticalPoint {
        kind: CriticalKind::CriticalCoupling,
        value: g_c,
        order_param: point(m_q),
        residuals: Residuals {
            first_derivative: at.d1(m_q),
            second_derivative: at.d2(m_q),
            free_energy_gap: T::zero(),
            bracket_width: T::zero(),
            iterations: 0,
        },
        extrapolated: is_extrapolated(&line),
    })
}

/// Whether `F₀(m₂)` at the given coupling (sector 0) has an interior maximum
/// below the paramagnet, detected on a uniform grid.
pub fn has_barrier<T: Real>(params: &ModelParams<T>) -> Result<bool> {
    let mut p = params.clone();
    p.sector = Some(0);
    let line = MeanFieldLine::new(&p)?;
    let n = BARRIER_GRID;
    let mut prev = line.d1(T::lit(1e-12));
    for i in 1..n {
        let m = T::lit(2.0 / 3.0) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let v = line.d1(m);
        if prev > T::zero() && v < T::zero() {
            return Ok(true);
        }
        prev = v;
    }
    Ok(false)
}
