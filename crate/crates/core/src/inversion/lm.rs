//! Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.

/// Stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the objective by less than this
    /// fraction.
    pub relative_tolerance: f64,
    /// Stop when the accepted step is shorter than this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            relative_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the start and after every accepted step.
    pub history: Vec<f64>,
}

/// Residuals and their Jacobian (one row per residual).
pub type Evaluation = (Vec<f64>, Vec<Vec<f64>>);

/// Minimises Σ rᵢ(x)². Accepted steps never increase the objective.
pub fn minimize<F>(problem: F, x0: &[f64], opts: &LmOptions) -> LmReport
where
    F: Fn(&[f64]) -> Evaluation,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut r, mut jac) = problem(&x);
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    let mut damping = opts.initial_damping;
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&jac, &r, n);
        let mut m = jtj.clone();
        for i in 0..n {
            m[i][i] += damping * jtj[i][i].max(1e-300);
        }
        let rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
        let step = match solve_spd_vec(&m, &rhs) {
            Some(s) => s,
            None => {
                damping *= 10.0;
                if damping > 1e30 {
                    break;
                }
                continue;
            }
        };
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let (r_new, jac_new) = problem(&trial);
        let cost_new = sum_sq(&r_new);
        if cost_new.is_finite() && cost_new <= cost {
            let rel = (cost - cost_new) / cost.max(f64::MIN_POSITIVE);
            let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
            x = trial;
            r = r_new;
            jac = jac_new;
            cost = cost_new;
            history.push(cost);
            damping = (damping / 10.0).max(1e-15);
            if rel < opts.relative_tolerance || step_norm < opts.step_tolerance || cost == 0.0 {
                converged = true;
            }
        } else {
            damping *= 10.0;
            // no descent direction left at any damping: stationary point
            if damping > 1e30 {
                converged = true;
            }
        }
    }

    LmReport {
        params: x,
        objective: cost,
        iterations,
        converged,
        history,
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut jtj = vec![vec![0.0; n]; n];
    let mut jtr = vec![0.0; n];
    for (row, ri) in jac.iter().zip(r) {
        for i in 0..n {
            jtr[i] += row[i] * ri;
            for j in 0..n {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    (jtj, jtr)
}

/// Cholesky solve of a symmetric positive-definite system.
pub(crate) fn solve_spd_vec(m: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}
