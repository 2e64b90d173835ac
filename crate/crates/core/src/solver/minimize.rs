//! Multi-start minimisation of `F_s` over the weight simplex.
//!
//! Each start runs a projected-gradient warm-up (Euclidean projection onto
//! the simplex, Armijo backtracking) followed by a Newton polish on the
//! affine hull `Σx = 1`. The polish works on the weights directly, so that
//! states with occupations far below machine epsilon keep full relative
//! precision. Results are reported in moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Classification, Minimum};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::order::{MomentVector, WeightVector};
use crate::scalar::Real;
use crate::thermo::{FreeEnergy, ModelParams, StructuredHessian, EMPTY_STATE};

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub random_starts: usize,
    pub seed: u64,
    /// Iteration cap per start, warm-up and polish together.
    pub max_iter: usize,
    pub warmup_iter: usize,
    /// Vertex starts are moved this far towards the uniform point.
    pub vertex_pull: f64,
    /// Minima closer than this in max-norm over moments are merged.
    pub dedup_radius: f64,
    /// Target gradient norm in moment coordinates.
    pub grad_tol: f64,
    /// Minima within this of the lowest free energy are all flagged global.
    pub degeneracy_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            random_starts: 20,
            seed: 0,
            max_iter: 10_000,
            warmup_iter: 500,
            vertex_pull: 1e-3,
            dedup_radius: 1e-6,
            grad_tol: 1e-10,
            degeneracy_tol: 1e-9,
        }
    }
}

/// Minima of `F_s` for `params`, sorted by free energy.
pub fn minimize<T: Real>(params: &ModelParams<T>) -> Result<Vec<Minimum<T>>> {
    minimize_with(
        &FreeEnergy::new(params.clone())?,
        &MinimizeOptions::default(),
    )
}

pub fn minimize_with<T: Real>(
    f: &FreeEnergy<T>,
    opts: &MinimizeOptions,
) -> Result<Vec<Minimum<T>>> {
    let l = f.spin();
    let n = l.n_states();
    let mut starts: Vec<Vec<T>> = vec![WeightVector::<T>::uniform(l).into_vec()];
    let pull = T::lit(opts.vertex_pull);
    let share = T::one() / T::from_usize_lossy(n);
    for v in 0..n {
        starts.push(
            (0..n)
                .map(|i| {
                    let vertex = if i == v { T::one() } else { T::zero() };
                    (T::one() - pull) * vertex + pull * share
                })
                .collect(),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        starts.push(WeightVector::<T>::random(l, &mut rng).into_vec());
    }

    let outcomes: Vec<StartOutcome<T>> = starts
        .into_par_iter()
        .map(|x0| run_start(f, x0, opts))
        .collect();

    let mut converged: Vec<StartOutcome<T>> = Vec::new();
    let mut best_failure: Option<StartOutcome<T>> = None;
    for o in outcomes {
        if o.converged {
            converged.push(o);
        } else if best_failure
            .as_ref()
            .is_none_or(|b| o.residual < b.residual)
        {
            best_failure = Some(o);
        }
    }
    if converged.is_empty() {
        let best = best_failure.expect("at least one start");
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            residual: best.residual.to_f64().unwrap_or(f64::NAN),
        });
    }

    converged.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    let radius = T::lit(opts.dedup_radius);
    let mut unique: Vec<StartOutcome<T>> = Vec::new();
    for o in converged {
        if o.classification == Classification::SaddleRejected {
            continue;
        }
        if unique.iter().all(|u| u.m.max_abs_diff(&o.m) >= radius) {
            unique.push(o);
        }
    }
    let Some(lowest) = unique.first().map(|u| u.value) else {
        return Ok(Vec::new());
    };
    let tol = T::lit(opts.degeneracy_tol);
    Ok(unique
        .into_iter()
        .map(|o| Minimum {
            orbit: f.system().orbit(&o.m),
            classification: if o.value - lowest <= tol {
                Classification::Global
            } else {
                Classification::Local
            },
            m_star: o.m,
            f_value: o.value,
            hessian_eigen_min: o.eigen_min,
            residual: o.residual,
            boundary: o.boundary,
        })
        .collect())
}

/// Images of a minimum under the cyclic relabelling map.
pub fn orbit<T: Real>(f: &FreeEnergy<T>, minimum: &Minimum<T>) -> Vec<MomentVector<T>> {
    f.system().orbit(&minimum.m_star)
}

struct StartOutcome<T> {
    m: MomentVector<T>,
    value: T,
    residual: T,
    eigen_min: T,
    boundary: bool,
    converged: bool,
    classification: Classification,
    iterations: usize,
}

fn run_start<T: Real>(f: &FreeEnergy<T>, x0: Vec<T>, opts: &MinimizeOptions) -> StartOutcome<T> {
    let mut x = x0;
    let (mut value, mut grad) = f.value_and_grad_x(&x);
    let mut iterations = 0;
    let mut step = T::lit(0.1);
    let warm_tol = T::lit(1e-5);

    while iterations < opts.warmup_iter.min(opts.max_iter) {
        iterations += 1;
        if projected_residual(&x, &grad) < warm_tol {
            break;
        }
        let mut accepted = false;
        while step > T::lit(1e-30) {
            let y = project_to_simplex(
                &x.iter()
                    .zip(&grad)
                    .map(|(&a, &g)| a - step * g)
                    .collect::<Vec<_>>(),
            );
            let (vy, gy) = f.value_and_grad_x(&y);
            let decrease: T = grad
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(&g, (&a, &b))| g * (a - b))
                .sum();
            if vy <= value + T::lit(1e-4) * decrease {
                x = y;
                value = vy;
                grad = gy;
                accepted = true;
                break;
            }
            step = step / T::lit(2.0);
        }
        if !accepted {
            break;
        }
        step = (step * T::lit(2.0)).min(T::lit(10.0));
    }

    // The projection can land exactly on a face. At T > 0 the entropy keeps
    // every minimum interior, so restart the polish just off the face.
    let lift = T::lit(1e-30);
    if x.iter().any(|&v| v < lift) {
        x = renormalise(x.into_iter().map(|v| v.max(lift)).collect());
        let (v, g) = f.value_and_grad_x(&x);
        value = v;
        grad = g;
    }
    let floor = T::lit(EMPTY_STATE);

    let jac = f.system().weight_jacobian();
    let jac_t = jac.transpose();
    let grad_tol = T::lit(opts.grad_tol);
    loop {
        let grad_m = jac_t.mul_vec(&grad);
        let gnorm = norm(&grad_m);
        let hess_x = f.structured_hessian_x(&x);
        let hess_m = jac_t.mul(&hess_x.to_matrix()).mul(&jac);
        if gnorm < grad_tol || iterations >= opts.max_iter {
            let eigen_min = smallest_moment_eigenvalue(f, &hess_x, &hess_m);
            let converged = gnorm < grad_tol || gnorm < T::lit(1e-8);
            return StartOutcome {
                m: moments_of(f, &x),
                value,
                residual: gnorm,
                eigen_min,
                boundary: x.iter().any(|&v| v <= floor),
                converged,
                classification: if eigen_min > T::zero() {
                    Classification::Local
                } else {
                    Classification::SaddleRejected
                },
                iterations,
            };
        }
        iterations += 1;

        // Eliminating the diagonal part keeps each step component relative
        // to its own weight, however small. The moment Hessian is too badly
        // conditioned near a vertex to test definiteness, so the step is
        // taken whenever its own curvature is positive.
        let direction = hess_x
            .newton_step(&grad)
            .filter(|d| hess_x.curvature(d) > T::zero())
            .unwrap_or_else(|| scaled_descent(&x, &grad));

        // Centring removes the roundoff of Σ d against a large common gradient.
        let mean = grad.iter().copied().sum::<T>() / T::lit(grad.len() as f64);
        let slope_of = |d: &[T]| -> T { grad.iter().zip(d).map(|(&g, &di)| (g - mean) * di).sum() };
        let direction = if slope_of(&direction) < T::zero() {
            direction
        } else {
            scaled_descent(&x, &grad)
        };
        let slope = slope_of(&direction);

        // Largest step keeping every weight positive.
        let mut alpha = T::one();
        for (&xi, &di) in x.iter().zip(&direction) {
            if di < T::zero() {
                alpha = alpha.min(T::lit(0.99) * (-xi / di));
            }
        }
        let slack = T::lit(1e-14) * (T::one() + value.abs());
        let mut moved = false;
        while alpha > T::lit(1e-16) {
            let y: Vec<T> = x
                .iter()
                .zip(&direction)
                .map(|(&a, &d)| a + alpha * d)
                .collect();
            if y.iter().all(|&v| v > T::zero()) {
                let (vy, gy) = f.value_and_grad_x(&y);
                let armijo = vy <= value + T::lit(1e-4) * alpha * slope;
                let flat_but_better = vy <= value + slack && norm(&jac_t.mul_vec(&gy)) < gnorm;
                if armijo || flat_but_better {
                    x = renormalise(y);
                    let (v2, g2) = f.value_and_grad_x(&x);
                    value = v2;
                    grad = g2;
                    moved = true;
                    break;
                }
            }
            alpha = alpha / T::lit(2.0);
        }
        if !moved {
            let eigen_min = smallest_moment_eigenvalue(f, &hess_x, &hess_m);
            return StartOutcome {
                m: moments_of(f, &x),
                value,
                residual: gnorm,
                eigen_min,
                boundary: x.iter().any(|&v| v <= floor),
                converged: gnorm < T::lit(1e-8),
                classification: if eigen_min > T::zero() {
                    Classification::Local
                } else {
                    Classification::SaddleRejected
                },
                iterations,
            };
        }
    }
}

fn moments_of<T: Real>(f: &FreeEnergy<T>, x: &[T]) -> MomentVector<T> {
    let w = WeightVector::new(f.spin(), x.to_vec()).expect("iterates stay on the simplex");
    f.system().weights_to_moments(&w).expect("same spin")
}

fn renormalise<T: Real>(mut x: Vec<T>) -> Vec<T> {
    let total: T = x.iter().copied().sum();
    for v in x.iter_mut() {
        *v = *v / total;
    }
    x
}

/// `−x∘(g − ⟨g⟩_x)`: a descent direction along the simplex whose step is not
/// throttled by the smallest weights.
fn scaled_descent<T: Real>(x: &[T], grad: &[T]) -> Vec<T> {
    let mean: T = x.iter().zip(grad).map(|(&w, &g)| w * g).sum();
    x.iter().zip(grad).map(|(&w, &g)| w * (mean - g)).collect()
}

/// Smallest eigenvalue of the moment Hessian. Near a vertex that matrix is
/// graded over many decades and a dense solver only resolves its soft end to
/// `ε‖H‖`. The inverse `W K Wᵀ`, with `K` the tangent-space inverse of the
/// weight Hessian and `W` the moment matrix, puts the soft end on top.
fn smallest_moment_eigenvalue<T: Real>(
    f: &FreeEnergy<T>,
    hess_x: &StructuredHessian<T>,
    hess_m: &Matrix<T>,
) -> T {
    let l = f.spin();
    let sigma: Vec<T> = l.spectrum_values();
    let k = l.n_moments();
    let w = Matrix::from_fn(k, sigma.len(), |r, c| sigma[c].powi(r as i32 + 1));
    let mut columns = Vec::with_capacity(k);
    for r in 0..k {
        let rhs: Vec<T> = (0..sigma.len()).map(|c| -w[(r, c)]).collect();
        match hess_x.newton_step(&rhs) {
            Some(dx) => columns.push(w.mul_vec(&dx)),
            None => return symmetric_eigenvalues(hess_m)[0],
        }
    }
    let inv = Matrix::from_fn(k, k, |i, j| (columns[i][j] + columns[j][i]) / T::lit(2.0));
    let nu = symmetric_eigenvalues(&inv);
    // Stiff directions sit at ν ~ x/T and can come out with either sign;
    // negative curvature is bounded by the energy scale, so a genuine
    // saddle shows up as a large negative ν.
    if nu[0] > -T::lit(1e-8) * nu[k - 1] {
        T::one() / nu[k - 1]
    } else {
        symmetric_eigenvalues(hess_m)[0].min(-T::epsilon())
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>().sqrt()
}

/// `‖x − P(x − ∇)‖_∞`, zero exactly at KKT points of the simplex problem.
fn projected_residual<T: Real>(x: &[T], grad: &[T]) -> T {
    let y = project_to_simplex(&x.iter().zip(grad).map(|(&a, &g)| a - g).collect::<Vec<_>>());
    x.iter()
        .zip(&y)
        .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-and-threshold).
pub(crate) fn project_to_simplex<T: Real>(v: &[T]) -> Vec<T> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (i, &u) in sorted.iter().enumerate() {
        cumulative = cumulative + u;
        let candidate = (cumulative - T::one()) / T::from_usize_lossy(i + 1);
        if u - candidate > T::zero() {
            theta = candidate;
        }
    }
    v.iter().map(|&u| (u - theta).max(T::zero())).collect()
}
