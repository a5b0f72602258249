use serde::{Deserialize, Serialize};

use super::{Gamma, Samples};

/// KKT violation at which SMO stops.
pub const TOLERANCE: f64 = 1e-3;
/// Above this many samples the Gram matrix is recomputed row by row.
const FULL_GRAM_LIMIT: usize = 8000;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Rbf,
    Linear,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Rbf => "rbf",
            Kernel::Linear => "linear",
        }
    }

    fn eval(self, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
            Kernel::Rbf => {
                let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-gamma * d).exp()
            }
        }
    }
}

/// One binary "class vs rest" machine over the shared support set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    /// `y_i * alpha_i` per support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One-vs-rest soft-margin SVM. Classes absent from training have no
/// machine and never win.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    /// Resolved kernel width (unused by the linear kernel).
    pub gamma: f64,
    pub c: f64,
    pub support: Vec<Vec<f64>>,
    pub machines: Vec<Option<Machine>>,
}

/// `1 / (n_features * var)` over all matrix entries; 1 for a constant matrix.
pub(super) fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let count = x.iter().map(Vec::len).sum::<usize>() as f64;
    let n_features = x.first().map_or(1, Vec::len).max(1) as f64;
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 && var.is_finite() {
        1.0 / (n_features * var)
    } else {
        1.0
    }
}

enum Gram<'a> {
    Full { k: Vec<f64>, n: usize },
    OnDemand { x: &'a [Vec<f64>], kernel: Kernel, gamma: f64 },
}

impl<'a> Gram<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel, gamma: f64) -> Self {
        let n = x.len();
        if n > FULL_GRAM_LIMIT {
            return Gram::OnDemand { x, kernel, gamma };
        }
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(gamma, &x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Gram::Full { k, n }
    }

    fn row<'s>(&'s self, i: usize, buf: &'s mut Vec<f64>) -> &'s [f64] {
        match self {
            Gram::Full { k, n } => &k[i * n..(i + 1) * n],
            Gram::OnDemand { x, kernel, gamma } => {
                buf.clear();
                buf.extend(x.iter().map(|p| kernel.eval(*gamma, &x[i], p)));
                buf
            }
        }
    }

    fn diag(&self, i: usize, x: &[Vec<f64>]) -> f64 {
        match self {
            Gram::Full { k, n } => k[i * n + i],
            Gram::OnDemand { kernel, gamma, .. } => kernel.eval(*gamma, &x[i], &x[i]),
        }
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
    converged: bool,
}

/// Dual SMO with second-order working-set selection for labels `y` in
/// {-1, +1}: minimize `0.5 a'Qa - sum(a)` subject to `0 <= a <= c` and
/// `y'a = 0`, where `Q_ij = y_i y_j K_ij`.
fn smo(gram: &Gram, qd: &[f64], y: &[f64], c: f64) -> Solution {
    let n = y.len();
    let max_iter = (100 * n).max(100_000);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let (mut bi, mut bj) = (Vec::new(), Vec::new());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let up = |t: usize, a: &[f64]| if y[t] > 0.0 { a[t] < c } else { a[t] > 0.0 };
        let low = |t: usize, a: &[f64]| if y[t] > 0.0 { a[t] > 0.0 } else { a[t] < c };

        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(t, &alpha) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = gram.row(i, &mut bi);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            if !low(t, &alpha) {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let mut quad = qd[i] + qd[t] - 2.0 * ki[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < TOLERANCE || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let mut quad = qd[i] + qd[j] - 2.0 * ki[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
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
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let ki = gram.row(i, &mut bi);
        let kj = gram.row(j, &mut bj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    Solution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

impl Svm {
    pub(super) fn fit(data: &Samples, c: f64, gamma: Gamma, kernel: Kernel) -> Svm {
        let gamma = match gamma {
            Gamma::Scale => scale_gamma(&data.x),
            Gamma::Value(g) => g,
        };
        let n = data.len();
        let gram = Gram::new(&data.x, kernel, gamma);
        let qd: Vec<f64> = (0..n).map(|i| gram.diag(i, &data.x)).collect();

        let mut solutions: Vec<Option<(Vec<f64>, f64, usize, bool)>> = Vec::new();
        for class in 0..data.n_classes {
            let positives = data.y.iter().filter(|&&l| l == class).count();
            if positives == 0 {
                solutions.push(None);
                continue;
            }
            if positives == n {
                solutions.push(Some((vec![0.0; n], -1.0, 0, true)));
                continue;
            }
            let y: Vec<f64> = data
                .y
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let s = smo(&gram, &qd, &y, c);
            let coef = s.alpha.iter().zip(&y).map(|(a, y)| a * y).collect();
            solutions.push(Some((coef, s.rho, s.iterations, s.converged)));
        }

        let support_idx: Vec<usize> = (0..n)
            .filter(|&i| solutions.iter().flatten().any(|(coef, ..)| coef[i] != 0.0))
            .collect();
        let machines = solutions
            .into_iter()
            .map(|s| {
                s.map(|(coef, rho, iterations, converged)| Machine {
                    coef: support_idx.iter().map(|&i| coef[i]).collect(),
                    rho,
                    iterations,
                    converged,
                })
            })
            .collect();
        Svm {
            kernel,
            gamma,
            c,
            support: support_idx.iter().map(|&i| data.x[i].clone()).collect(),
            machines,
        }
    }

    /// Decision value per class; `-inf` for classes without a machine.
    pub fn decision_values(&self, v: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self
            .support
            .iter()
            .map(|s| self.kernel.eval(self.gamma, s, v))
            .collect();
        self.machines
            .iter()
            .map(|m| match m {
                Some(m) => m.coef.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() - m.rho,
                None => f64::NEG_INFINITY,
            })
            .collect()
    }

    pub(super) fn is_consistent(&self, n_features: usize, n_classes: usize) -> bool {
        self.machines.len() == n_classes
            && self.machines.iter().any(Option::is_some)
            && self.support.iter().all(|s| s.len() == n_features)
            && self
                .machines
                .iter()
                .flatten()
                .all(|m| m.coef.len() == self.support.len())
    }
}
