//! Damped least squares (Levenberg-Marquardt) shared by the fitting routines.

use nalgebra::{DMatrix, DVector};

pub(crate) const LAMBDA_INIT: f64 = 1e-3;
pub(crate) const LAMBDA_UP: f64 = 10.0;
pub(crate) const LAMBDA_DOWN: f64 = 10.0;
pub(crate) const MAX_ITERATIONS: usize = 200;
pub(crate) const STEP_TOLERANCE: f64 = 1e-10;
const LAMBDA_CEILING: f64 = 1e20;

/// A model y = f(x; p) with its gradient with respect to p.
pub(crate) trait Model {
    fn n_params(&self) -> usize;
    /// Writes ∂f/∂p into `grad` and returns f.
    fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64;
    /// Rejects parameter vectors outside the model's domain.
    fn admissible(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn residuals<M: Model>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    p: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len();
    let k = model.n_params();
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, k);
    let mut grad = vec![0.0; k];
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let f = model.eval(x, p, &mut grad);
        r[i] = y - f;
        for (j, g) in grad.iter().enumerate() {
            jac[(i, j)] = *g;
        }
    }
    (r, jac)
}

pub(crate) fn fit<M: Model>(model: &M, xs: &[f64], ys: &[f64], p0: &[f64]) -> Outcome {
    let k = model.n_params();
    let mut p = p0.to_vec();
    let (mut r, mut jac) = residuals(model, xs, ys, &p);
    let mut sse = r.norm_squared();
    let initial_sse = sse;
    let mut lambda = LAMBDA_INIT;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if sse == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;

        let mut accepted = None;
        while lambda < LAMBDA_CEILING {
            let mut a = jtj.clone();
            for j in 0..k {
                let d = jtj[(j, j)];
                a[(j, j)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= LAMBDA_UP;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if !trial.iter().all(|v| v.is_finite()) || !model.admissible(&trial) {
                lambda *= LAMBDA_UP;
                continue;
            }
            let (tr, tj) = residuals(model, xs, ys, &trial);
            let trial_sse = tr.norm_squared();
            if trial_sse.is_finite() && trial_sse <= sse {
                accepted = Some((trial, tr, tj, trial_sse, step));
                break;
            }
            lambda *= LAMBDA_UP;
        }

        let Some((trial, tr, tj, trial_sse, step)) = accepted else {
            // no downhill step at any damping: a numerical minimum
            converged = true;
            break;
        };
        let small_step = step
            .iter()
            .zip(&p)
            .all(|(s, v)| s.abs() <= STEP_TOLERANCE * v.abs().max(f64::MIN_POSITIVE));
        p = trial;
        r = tr;
        jac = tj;
        sse = trial_sse;
        lambda = (lambda / LAMBDA_DOWN).max(1e-15);
        if small_step {
            converged = true;
            break;
        }
    }

    let n = xs.len();
    let dof = n.saturating_sub(k).max(1) as f64;
    let variance = sse / dof;
    let jtj = jac.transpose() * &jac;
    let stderr = match jtj.clone().try_inverse() {
        Some(cov) => (0..k)
            .map(|j| (cov[(j, j)] * variance).max(0.0).sqrt())
            .collect(),
        None => vec![f64::NAN; k],
    };
    Outcome {
        params: p,
        stderr,
        residual_rms: (sse / n.max(1) as f64).sqrt(),
        iterations,
        converged: converged && sse <= initial_sse,
    }
}
