//! Sequential minimal optimization for the epsilon-SVR dual.
//!
//! The dual is written over `2n` variables `a = [α; α*]` with signs
//! `s = [+1; −1]`:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  sᵀa = 0,  0 ≤ a ≤ C
//! Q_tu = s_t s_u K(t mod n, u mod n),   p = [ε − y; ε + y]
//! ```
//!
//! Each step picks the maximal violating variable `i` and pairs it with the
//! variable `j` giving the largest second-order decrease of the objective.

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::{Kernel, KernelCache};

const TAU: f64 = 1e-12;

pub(crate) struct SmoSolution {
    /// `α_i − α*_i` per training row.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct SmoConfig {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

struct State {
    alpha: Vec<f64>,
    grad: Vec<f64>,
    sign: Vec<f64>,
    c: f64,
}

impl State {
    fn in_up(&self, t: usize) -> bool {
        if self.sign[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.sign[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }
}

pub(crate) fn solve(x: &Array2<f64>, y: &[f64], kernel: Kernel, cfg: &SmoConfig) -> SmoSolution {
    let n = y.len();
    let l = 2 * n;
    let mut cache = KernelCache::new(x, kernel);
    let mut st = State {
        alpha: vec![0.0; l],
        grad: (0..l)
            .map(|t| if t < n { cfg.epsilon - y[t] } else { cfg.epsilon + y[t - n] })
            .collect(),
        sign: (0..l).map(|t| if t < n { 1.0 } else { -1.0 }).collect(),
        c: cfg.c,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut random_pick = false;
    let mut stalls = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        // maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            if st.in_up(t) {
                let v = -st.sign[t] * st.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut candidates = Vec::new();
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            let ki = cache.row(i % n);
            let kii = cache.diag(i % n);
            for t in 0..l {
                if !st.in_low(t) {
                    continue;
                }
                let v = st.sign[t] * st.grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = (kii + cache.diag(t % n) - 2.0 * ki[t % n]).max(TAU);
                    let obj = -(diff * diff) / quad;
                    candidates.push(t);
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax + gmax2 < cfg.tol || j == usize::MAX {
            converged = true;
            break;
        }
        if random_pick {
            j = *candidates.choose(&mut rng).expect("j exists so candidates is non-empty");
        }
        iterations += 1;

        let (old_i, old_j) = (st.alpha[i], st.alpha[j]);
        update_pair(&mut st, &mut cache, n, i, j);
        let (di, dj) = (st.alpha[i] - old_i, st.alpha[j] - old_j);
        if di.abs() < 1e-15 * st.c && dj.abs() < 1e-15 * st.c {
            stalls += 1;
            random_pick = true;
            if stalls > 2 * l {
                log::warn!("SMO stalled after {iterations} iterations");
                break;
            }
            continue;
        }
        stalls = 0;
        random_pick = false;

        let ki = cache.row(i % n);
        let kj = cache.row(j % n);
        let (si, sj) = (st.sign[i], st.sign[j]);
        for t in 0..l {
            let k = t % n;
            st.grad[t] += st.sign[t] * (si * ki[k] * di + sj * kj[k] * dj);
        }
    }
    if !converged {
        log::warn!(
            "SMO reached {} iterations without meeting tolerance {}; returning last iterate",
            iterations,
            cfg.tol
        );
    }

    let beta: Vec<f64> = (0..n).map(|t| st.alpha[t] - st.alpha[t + n]).collect();
    SmoSolution {
        beta,
        bias: -rho(&st),
        iterations,
        converged,
    }
}

/// Two-variable analytic update with box clipping.
fn update_pair(st: &mut State, cache: &mut KernelCache, n: usize, i: usize, j: usize) {
    let c = st.c;
    let kij = cache.row(i % n)[j % n];
    let q_ij = st.sign[i] * st.sign[j] * kij;
    let (qii, qjj) = (cache.diag(i % n), cache.diag(j % n));
    let mut alpha_i = st.alpha[i];
    let mut alpha_j = st.alpha[j];
    if st.sign[i] != st.sign[j] {
        let quad = (qii + qjj + 2.0 * q_ij).max(TAU);
        let delta = (-st.grad[i] - st.grad[j]) / quad;
        let diff = alpha_i - alpha_j;
        alpha_i += delta;
        alpha_j += delta;
        if diff > 0.0 {
            if alpha_j < 0.0 {
                alpha_j = 0.0;
                alpha_i = diff;
            }
        } else if alpha_i < 0.0 {
            alpha_i = 0.0;
            alpha_j = -diff;
        }
        if diff > 0.0 {
            if alpha_i > c {
                alpha_i = c;
                alpha_j = c - diff;
            }
        } else if alpha_j > c {
            alpha_j = c;
            alpha_i = c + diff;
        }
    } else {
        let quad = (qii + qjj - 2.0 * q_ij).max(TAU);
        let delta = (st.grad[i] - st.grad[j]) / quad;
        let sum = alpha_i + alpha_j;
        alpha_i -= delta;
        alpha_j += delta;
        if sum > c {
            if alpha_i > c {
                alpha_i = c;
                alpha_j = sum - c;
            }
        } else if alpha_j < 0.0 {
            alpha_j = 0.0;
            alpha_i = sum;
        }
        if sum > c {
            if alpha_j > c {
                alpha_j = c;
                alpha_i = sum - c;
            }
        } else if alpha_i < 0.0 {
            alpha_i = 0.0;
            alpha_j = sum;
        }
    }
    st.alpha[i] = alpha_i;
    st.alpha[j] = alpha_j;
}

/// Offset of the decision function, averaged over free variables or taken
/// as the midpoint of the feasible interval when none are free.
fn rho(st: &State) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..st.alpha.len() {
        let yg = st.sign[t] * st.grad[t];
        let at_upper = st.alpha[t] >= st.c;
        let at_lower = st.alpha[t] <= 0.0;
        if at_upper {
            if st.sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if st.sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
