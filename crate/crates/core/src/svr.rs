//! ε-insensitive support vector regression.
//!
//! The dual is solved with sequential minimal optimization over the usual
//! `2n`-variable formulation (one `α` and one `α*` per training point),
//! taking the maximal KKT violator as the first index and the partner with the
//! largest second-order objective decrease as the second. Ties are broken by
//! lowest index so fits are fully deterministic.
//!
//! The Gram matrix is computed once per [`SvrProblem`] and can be reused for
//! several `C` values, which is what the grid search does.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZskError};
use crate::kernels::{cross_kernel, gram_matrix, Gram, KernelSpec, PointSet};

const TAU: f64 = 1e-12;
// Small problems may run past `max_passes` until about this many gradient entries were updated.
const MIN_WORK: usize = 200_000_000;

/// Solver hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    /// Regularization `C`.
    pub c: f64,
    /// Half-width of the insensitive tube, in label units.
    pub epsilon: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration cap, in units of `2n` pair updates. Small problems always get
    /// enough iterations for about `2e8` gradient entry updates.
    pub max_passes: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_passes: 100,
        }
    }
}

impl SvrConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.c.is_finite()
            && self.epsilon >= 0.0
            && self.epsilon.is_finite()
            && self.tol > 0.0
            && self.max_passes >= 1;
        if ok {
            Ok(())
        } else {
            Err(ZskError::InvalidArgument(format!(
                "SVR config needs c > 0, epsilon >= 0, tol > 0, max_passes >= 1; got {self:?}"
            )))
        }
    }
}

/// A fitted ε-SVR in dual form: `f(p) = Σ coef_i K(sv_i, p) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    kernel: KernelSpec,
    support: PointSet,
    dual_coeffs: Vec<f64>,
    bias: f64,
    c: f64,
    converged: bool,
    iterations: usize,
}

/// Primal weights of a linear-kernel model over `x ‖ s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearWeights {
    pub fn eval(&self, features: &[f64]) -> f64 {
        crate::kernels::dot(&self.w, features) + self.b
    }
}

impl SvrModel {
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn support(&self) -> &PointSet {
        &self.support
    }

    /// Signed `α - α*` of every support point.
    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// False when the iteration cap was hit before the KKT tolerance was met.
    /// The model is still usable.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn a_x(&self) -> usize {
        self.support.a_x()
    }

    pub fn a_s(&self) -> usize {
        self.support.a_s()
    }

    /// Predictions for every point in `points`.
    pub fn predict(&self, points: &PointSet) -> Result<Vec<f64>> {
        if points.a_x() != self.support.a_x() {
            return Err(ZskError::dims("instance features a_x", self.support.a_x(), points.a_x()));
        }
        if points.a_s() != self.support.a_s() {
            return Err(ZskError::dims("side information a_s", self.support.a_s(), points.a_s()));
        }
        let m = self.support.len();
        if m == 0 {
            return Ok(vec![self.bias; points.len()]);
        }
        let k = cross_kernel(points, &self.support, self.kernel)?;
        Ok(k.chunks_exact(m)
            .map(|row| crate::kernels::dot(row, &self.dual_coeffs) + self.bias)
            .collect())
    }

    /// Prediction for plain feature rows (row-major, `a_s = 0` models).
    pub fn predict_rows(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let cols = self.support.a_x() + self.support.a_s();
        if self.support.a_s() != 0 {
            return Err(ZskError::InvalidArgument("model was trained on joint points".into()));
        }
        self.predict(&PointSet::from_rows(rows, cols)?)
    }

    /// `w = Σ coef_i sv_i`, `b = bias`. Only defined for the linear kernel.
    pub fn linear_weights(&self) -> Result<LinearWeights> {
        if self.kernel != KernelSpec::Linear {
            return Err(ZskError::NotLinear(self.kernel.name()));
        }
        let (a_x, a_s) = (self.support.a_x(), self.support.a_s());
        let mut w = vec![0.0; a_x + a_s];
        for (p, &coef) in self.support.iter().zip(&self.dual_coeffs) {
            for (wi, v) in w.iter_mut().zip(p.x.iter().chain(p.s)) {
                *wi += coef * v;
            }
        }
        Ok(LinearWeights { w, b: self.bias })
    }
}

/// Training points, labels and their precomputed Gram matrix.
pub struct SvrProblem<'a> {
    points: &'a PointSet,
    y: &'a [f64],
    kernel: KernelSpec,
    gram: Gram,
    kernel_time: Duration,
}

impl<'a> SvrProblem<'a> {
    pub fn new(points: &'a PointSet, y: &'a [f64], kernel: KernelSpec) -> Result<Self> {
        if points.len() != y.len() {
            return Err(ZskError::dims("label count", points.len(), y.len()));
        }
        if points.is_empty() {
            return Err(ZskError::Empty("SVR training set".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ZskError::NonFinite("SVR labels".into()));
        }
        if points.iter().any(|p| p.x.iter().chain(p.s).any(|v| !v.is_finite())) {
            return Err(ZskError::NonFinite("SVR training points".into()));
        }
        let start = Instant::now();
        let gram = gram_matrix(points, kernel)?;
        let kernel_time = start.elapsed();
        Ok(Self {
            points,
            y,
            kernel,
            gram,
            kernel_time,
        })
    }

    /// Wall-clock time spent building the Gram matrix.
    pub fn kernel_time(&self) -> Duration {
        self.kernel_time
    }

    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    pub fn solve(&self, cfg: &SvrConfig) -> Result<SvrModel> {
        cfg.validate()?;
        let start = Instant::now();
        let sol = smo(&self.gram, self.y, cfg);
        log::debug!(
            "SVR ({}) n={} C={} iterations={} converged={} in {:.3}s",
            self.kernel.name(),
            self.y.len(),
            cfg.c,
            sol.iterations,
            sol.converged,
            start.elapsed().as_secs_f64()
        );
        if !sol.converged {
            log::warn!(
                "SVR ({}) hit the iteration cap of {} without meeting tol={} (C={})",
                self.kernel.name(),
                sol.iterations,
                cfg.tol,
                cfg.c
            );
        }
        let keep: Vec<usize> = (0..sol.coef.len()).filter(|&i| sol.coef[i] != 0.0).collect();
        Ok(SvrModel {
            kernel: self.kernel,
            support: self.points.select(&keep),
            dual_coeffs: keep.iter().map(|&i| sol.coef[i]).collect(),
            bias: sol.bias,
            c: cfg.c,
            converged: sol.converged,
            iterations: sol.iterations,
        })
    }
}

/// Fits an ε-SVR on `points` with labels `y`.
pub fn fit(points: &PointSet, y: &[f64], kernel: KernelSpec, cfg: &SvrConfig) -> Result<SvrModel> {
    cfg.validate()?;
    SvrProblem::new(points, y, kernel)?.solve(cfg)
}

struct Solution {
    coef: Vec<f64>,
    bias: f64,
    converged: bool,
    iterations: usize,
}

/// Dual solver. Variable `t < n` is `α_t` (sign `+1`), `t >= n` is `α*_{t-n}` (sign `-1`);
/// `Q_tu = z_t z_u K(t mod n, u mod n)`, linear term `ε ∓ y`.
fn smo(gram: &Gram, y: &[f64], cfg: &SvrConfig) -> Solution {
    let n = y.len();
    let l = 2 * n;
    let c = cfg.c;
    let z = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { cfg.epsilon - y[t] } else { cfg.epsilon + y[t - n] })
        .collect();
    let diag = gram.diagonal();
    let max_iter = cfg.max_passes.saturating_mul(l.max(1)).max(MIN_WORK / l.max(1));

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (a_plus, a_minus) = alpha.split_at(n);
        let (g_plus, g_minus) = grad.split_at(n);

        // i: maximal violator in the up set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for k in 0..n {
            if a_plus[k] < c && -g_plus[k] > gmax {
                gmax = -g_plus[k];
                i = k;
            }
        }
        for k in 0..n {
            if a_minus[k] > 0.0 && g_minus[k] > gmax {
                gmax = g_minus[k];
                i = k + n;
            }
        }
        // j: largest second-order decrease of the objective paired with i.
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            let ii = i % n;
            let zi = z(i);
            let d_i = diag[ii];
            let row_i = gram.row(ii);
            // Maximizes b²/a, compared by cross-multiplication.
            let (mut best_num, mut best_den) = (0.0, 1.0);
            let mut consider = |t: usize, v: f64, a: f64| {
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = a.max(TAU);
                    let num = b * b;
                    if j == usize::MAX || num * best_den > best_num * a {
                        best_num = num;
                        best_den = a;
                        j = t;
                    }
                }
            };
            for k in 0..n {
                if a_plus[k] > 0.0 {
                    consider(k, -g_plus[k], d_i + diag[k] - 2.0 * zi * row_i[k]);
                }
            }
            for k in 0..n {
                if a_minus[k] < c {
                    consider(k + n, g_minus[k], d_i + diag[k] + 2.0 * zi * row_i[k]);
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (ii, jj) = (i % n, j % n);
        let (zi, zj) = (z(i), z(j));
        let k_ij = gram.get(ii, jj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if zi != zj {
            let quad = (diag[ii] + diag[jj] + 2.0 * k_ij * zi * zj).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (diag[ii] + diag[jj] - 2.0 * k_ij * zi * zj).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // G_t += Q_ti dα_i + Q_tj dα_j, sharing kernel rows between α and α*.
        let di = zi * (alpha[i] - old_i);
        let dj = zj * (alpha[j] - old_j);
        let (row_i, row_j) = (gram.row(ii), gram.row(jj));
        let (g_plus, g_minus) = grad.split_at_mut(n);
        for k in 0..n {
            let s = row_i[k] * di + row_j[k] * dj;
            g_plus[k] += s;
            g_minus[k] -= s;
        }
    }

    // Offset from free variables, else the midpoint of the feasible interval.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..l {
        let zt = z(t);
        let yg = zt * grad[t];
        if alpha[t] >= c {
            if zt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if zt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    Solution {
        coef: (0..n).map(|k| alpha[k] - alpha[k + n]).collect(),
        bias: -rho,
        converged,
        iterations,
    }
}
