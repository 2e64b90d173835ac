use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    /// Stop once the bracket is narrower than `abs_tol + rel_tol·|x|`.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Split in the geometric mean while both ends are positive and far apart.
    pub geometric: bool,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-15,
            max_iter: 2000,
            geometric: true,
        }
    }
}

/// Bisection on a sign change of `f` over `[a, b]`. Returns the midpoint of
/// the final bracket, its width and the iteration count.
pub fn bisect<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    opts: BisectOptions,
) -> Result<(T, T, usize)> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok((lo, T::zero(), 0));
    }
    if f_hi == T::zero() {
        return Ok((hi, T::zero(), 0));
    }
    if !(f_lo.signum() != f_hi.signum()) {
        return Err(Error::NoSolutionInBracket(format!(
            "f({lo}) = {f_lo} and f({hi}) = {f_hi} share a sign"
        )));
    }
    let abs_tol = T::lit(opts.abs_tol);
    let rel_tol = T::lit(opts.rel_tol);
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    for it in 0..opts.max_iter {
        let width = hi - lo;
        if width <= abs_tol + rel_tol * lo.abs().max(hi.abs()) {
            return Ok(((lo + hi) / two, width, it));
        }
        let mid = if opts.geometric && lo > T::zero() && hi > four * lo {
            lo.sqrt() * hi.sqrt()
        } else {
            lo + width / two
        };
        if mid <= lo || mid >= hi {
            return Ok(((lo + hi) / two, width, it));
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return Ok((mid, T::zero(), it + 1));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(((lo + hi) / two, hi - lo, opts.max_iter))
}
