//! Damped least-squares minimizer (Levenberg–Marquardt with Marquardt
//! diagonal scaling) over a numerically differentiated residual vector.
//!
//! The residual closure returns `None` for parameter points where the model
//! cannot be evaluated; such trial steps are rejected like any
//! non-improving step. Central differences are used for the Jacobian, so
//! callers should scale their parameters to order one.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged when an accepted step reduces the cost by less than this
    /// relative amount.
    pub rel_cost_tol: f64,
    pub lambda_init: f64,
    /// Declared converged (stalled at the floating-point floor) when the
    /// damping exceeds this without finding an improving step.
    pub lambda_max: f64,
    /// Relative step for the central-difference Jacobian.
    pub jacobian_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            rel_cost_tol: 1e-12,
            lambda_init: 1e-3,
            lambda_max: 1e14,
            jacobian_step: 6e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Final cost Σ rᵢ².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Parameter covariance s²(JᵀJ)⁻¹ with s² = cost/(m − n); `None` when
    /// the system is degenerate or has no surplus degrees of freedom.
    pub covariance: Option<DMatrix<f64>>,
    pub residual_count: usize,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &F, x: &[f64], r0: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        match (fp, fm) {
            (Some(rp), Some(rm)) => {
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            (Some(rp), None) => {
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - r0[i]) / h;
                }
            }
            (None, Some(rm)) => {
                for i in 0..m {
                    jac[(i, j)] = (r0[i] - rm[i]) / h;
                }
            }
            (None, None) => {}
        }
    }
    jac
}

pub fn minimize<F>(f: F, x0: &[f64], opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut residual = match f(&x) {
        Some(r) if r.iter().all(|v| v.is_finite()) => r,
        _ => {
            return LmOutcome {
                params: x,
                cost: f64::INFINITY,
                iterations: 0,
                converged: false,
                covariance: None,
                residual_count: 0,
            }
        }
    };
    let m = residual.len();
    let mut cost = cost_of(&residual);
    let mut lambda = opts.lambda_init;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&f, &x, &residual, opts.jacobian_step);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &residual;
        let trace_floor = jtj.diagonal().iter().sum::<f64>().max(1e-300) * 1e-14 / n as f64;

        let mut accepted = false;
        while lambda <= opts.lambda_max {
            let mut damped = jtj.clone();
            for j in 0..n {
                let d = jtj[(j, j)].max(trace_floor);
                damped[(j, j)] += lambda * d;
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 8.0;
                    continue;
                }
            };
            let x_trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            let trial = f(&x_trial);
            let trial_cost = trial
                .as_ref()
                .map(|r| cost_of(r))
                .filter(|c| c.is_finite())
                .unwrap_or(f64::INFINITY);
            if trial_cost < cost {
                let decrease = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                x = x_trial;
                residual = trial.unwrap();
                cost = trial_cost;
                lambda = (lambda / 4.0).max(1e-15);
                accepted = true;
                if decrease < opts.rel_cost_tol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 8.0;
        }
        if !accepted {
            // No improving direction within the damping budget: the fit has
            // stalled at its numerical floor.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let covariance = if m > n {
        let jac = jacobian(&f, &x, &residual, opts.jacobian_step);
        let jtj = jac.transpose() * &jac;
        let s2 = cost / (m - n) as f64;
        let inv = jtj
            .clone()
            .cholesky()
            .map(|ch| ch.inverse())
            .or_else(|| jtj.pseudo_inverse(1e-12).ok());
        inv.map(|c| c * s2)
    } else {
        None
    };

    LmOutcome {
        params: x,
        cost,
        iterations,
        converged,
        covariance,
        residual_count: m,
    }
}
