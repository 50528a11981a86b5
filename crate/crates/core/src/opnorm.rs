//! Operator-norm and coercivity estimation.
//!
//! Hilbert-target norms (sup of target norm over the source-norm unit
//! sphere) reduce to a generalized symmetric eigenproblem and are computed
//! by power iteration. The weighted l4 contact norms have a non-Hilbert
//! target; those are maximized by normalized gradient ascent on the source
//! unit sphere, which for a norm objective is a monotone generalized power
//! method.

use nalgebra::{DMatrix, DVector};

use crate::problem::SpdForm;
use crate::rng::{seeded, uniform_vector};
use crate::{Error, Result};

const POWER_SEED: u64 = 42;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 500_000;
const ASCENT_TOL: f64 = 1e-12;
const ASCENT_MAX_ITER: usize = 20_000;

/// Largest eigenvalue of Q^{-1} B for symmetric positive semidefinite B,
/// by power iteration with a Rayleigh-quotient stopping rule.
fn pencil_top_eig<F>(apply_b: F, q: &SpdForm) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = q.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = uniform_vector(&mut seeded(POWER_SEED), n);
    let nx = q.norm(&x)?;
    if nx == 0.0 {
        return Err(Error::Invalid("degenerate start vector".into()));
    }
    x /= nx;
    let mut lambda_prev = f64::INFINITY;
    let mut calm = 0usize;
    for it in 0..POWER_MAX_ITER {
        let bx = apply_b(&x);
        // x is Q-normalized, so the Rayleigh quotient is just x . Bx.
        let lambda = x.dot(&bx).max(0.0);
        if bx.amax() <= 1e-300 {
            return Ok(0.0);
        }
        if (lambda - lambda_prev).abs() <= POWER_TOL * lambda.max(1e-300) {
            calm += 1;
            if calm >= 2 {
                return Ok(lambda);
            }
        } else {
            calm = 0;
        }
        lambda_prev = lambda;
        let mut y = q.solve(&bx);
        let ny = q.norm(&y)?;
        if ny <= 1e-300 {
            return Ok(0.0);
        }
        y /= ny;
        x = y;
        if it == POWER_MAX_ITER - 1 {
            return Err(Error::Convergence {
                what: "power iteration".into(),
                iterations: POWER_MAX_ITER,
                residual: (lambda - lambda_prev).abs(),
            });
        }
    }
    unreachable!()
}

/// Largest generalized singular value sup ||map x||_target / ||x||_source.
pub fn estimate_operator_norm(
    map: &DMatrix<f64>,
    source_norm: &SpdForm,
    target_norm: &SpdForm,
) -> Result<f64> {
    if map.ncols() != source_norm.dim() {
        return Err(Error::Shape("map columns must match source dimension".into()));
    }
    if map.nrows() != target_norm.dim() {
        return Err(Error::Shape("map rows must match target dimension".into()));
    }
    let qt = target_norm.matrix();
    let apply = |x: &DVector<f64>| map.transpose() * (qt * (map * x));
    Ok(pencil_top_eig(apply, source_norm)?.sqrt())
}

/// Smallest generalized eigenvalue of sym(op) against the given SPD form.
/// May be <= 0 for an indefinite symmetric part; the caller decides what to
/// make of that.
pub fn coercivity_constant(op: &DMatrix<f64>, v_norm: &SpdForm) -> Result<f64> {
    let n = v_norm.dim();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::Shape("operator dimension must match norm dimension".into()));
    }
    let s = (op + op.transpose()) * 0.5;
    // Power iteration finds the eigenvalue of largest magnitude, so shift the
    // pencil positive first: rho >= |lambda| for every eigenvalue, obtained
    // from the squared pencil which is always positive semidefinite.
    let rho = {
        let apply = |x: &DVector<f64>| &s * &v_norm.solve(&(&s * x));
        pencil_top_eig(apply, v_norm)?.sqrt()
    };
    if rho == 0.0 {
        return Ok(0.0);
    }
    let qm = v_norm.matrix();
    let lambda_max = {
        let apply = |x: &DVector<f64>| &s * x + qm * x * rho;
        pencil_top_eig(apply, v_norm)? - rho
    };
    // lambda_max Q - S is positive semidefinite; its top pencil eigenvalue is
    // the spread lambda_max - lambda_min.
    let spread = {
        let apply = |x: &DVector<f64>| qm * x * lambda_max - &s * x;
        pencil_top_eig(apply, v_norm)?
    };
    Ok(lambda_max - spread)
}

/// Norm of a map into a product of weighted l4 spaces:
/// sup over the source unit sphere of sqrt(sum_p ||A_p x||_{4,w_p}^2).
/// Pass one part for a plain trace norm, two for the paired trace map.
fn l4_product_norm(parts: &[(&DMatrix<f64>, &DVector<f64>)], source_norm: &SpdForm) -> Result<f64> {
    let n = source_norm.dim();
    for (map, weights) in parts {
        if map.ncols() != n {
            return Err(Error::Shape("map columns must match source dimension".into()));
        }
        if map.nrows() != weights.len() {
            return Err(Error::Shape("weight count must match map rows".into()));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Invalid("l4 weights must be nonnegative and finite".into()));
        }
    }
    if parts.iter().all(|(m, _)| m.nrows() == 0) || n == 0 {
        return Ok(0.0);
    }
    // Change coordinates so the constraint becomes the Euclidean sphere:
    // x = L^{-T} y with Q = L L'. Then A_p = map_p L^{-T}.
    let lt = source_norm.chol_l().transpose();
    let lt_inv = lt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotSpd("singular Cholesky factor".into()))?;
    let mats: Vec<DMatrix<f64>> = parts.iter().map(|(m, _)| *m * &lt_inv).collect();

    let value = |y: &DVector<f64>| -> f64 {
        let mut acc = 0.0;
        for (a, (_, w)) in mats.iter().zip(parts.iter()) {
            let z = a * y;
            let f4: f64 = z
                .iter()
                .zip(w.iter())
                .map(|(zi, wi)| wi * zi * zi * zi * zi)
                .sum();
            acc += f4.sqrt(); // ||.||_4^2 per part
        }
        acc.sqrt()
    };
    // Euclidean gradient of the objective; for a norm objective the update
    // y <- grad/|grad| never decreases the value.
    let gradient = |y: &DVector<f64>| -> DVector<f64> {
        let mut g = DVector::zeros(y.len());
        let total = value(y);
        if total <= 0.0 {
            return g;
        }
        for (a, (_, w)) in mats.iter().zip(parts.iter()) {
            let z = a * y;
            let f4: f64 = z
                .iter()
                .zip(w.iter())
                .map(|(zi, wi)| wi * zi * zi * zi * zi)
                .sum();
            let fp = f4.powf(0.25);
            if fp <= 0.0 {
                continue;
            }
            // d/dy of F_p = A' (w z^3) / F_p^3, and of sqrt(sum F_p^2):
            // (F_p / total) * dF_p.
            let u = DVector::from_fn(z.len(), |i, _| w[i] * z[i] * z[i] * z[i]);
            g += a.transpose() * u * (1.0 / (fp * fp * fp) * (fp / total));
        }
        g
    };

    let mut best = 0.0f64;
    let mut rng = seeded(POWER_SEED);
    let n_starts = 8;
    for s in 0..n_starts {
        let mut y = if s == 0 {
            DVector::from_element(n, 1.0)
        } else {
            uniform_vector(&mut rng, n)
        };
        let ny = y.norm();
        if ny == 0.0 {
            continue;
        }
        y /= ny;
        let mut f_prev = value(&y);
        for _ in 0..ASCENT_MAX_ITER {
            let g = gradient(&y);
            let gn = g.norm();
            if gn <= 1e-300 {
                break;
            }
            y = g / gn;
            let f = value(&y);
            if (f - f_prev).abs() <= ASCENT_TOL * f.max(1e-300) {
                f_prev = f;
                break;
            }
            f_prev = f;
        }
        best = best.max(f_prev);
    }
    Ok(best)
}

/// Trace norm into one weighted l4 space.
pub fn weighted_l4_trace_norm(
    map: &DMatrix<f64>,
    source_norm: &SpdForm,
    weights: &DVector<f64>,
) -> Result<f64> {
    l4_product_norm(&[(map, weights)], source_norm)
}

/// Norm of the paired trace map x -> (tangential values, normal values) into
/// the product of two weighted l4 spaces with the product (root sum square)
/// norm.
pub fn weighted_l4_pair_norm(
    map_tau: &DMatrix<f64>,
    map_nu: &DMatrix<f64>,
    source_norm: &SpdForm,
    weights: &DVector<f64>,
) -> Result<f64> {
    l4_product_norm(&[(map_tau, weights), (map_nu, weights)], source_norm)
}
