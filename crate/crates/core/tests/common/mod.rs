//! Independent reference implementations and synthetic data builders shared
//! by the integration tests and the acceptance harness.
#![allow(dead_code)]

use lexnorm::align::BilingualPairs;
use lexnorm::embed_store::EmbeddingSpace;
use lexnorm::ffn::FfnModel;
use lexnorm::norms::{NormEntry, NormLexicon, Scale, TransferDictionary, Variable};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

// ---------------------------------------------------------------- SVR dual

/// Dense epsilon-SVR dual solution computed without SMO.
pub struct QpSolution {
    pub beta: Vec<f64>,
    pub bias: f64,
}

fn kernel_value(linear: bool, gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    if linear {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    } else {
        (-gamma * u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
    }
}

pub fn gram(x: &Array2<f64>, linear: bool, gamma: f64) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| kernel_value(linear, gamma, &rows[i], &rows[j]))
}

/// Euclidean projection onto `{0 ≤ a ≤ c, Σ s_t a_t = 0}`: the multiplier of
/// the hyperplane constraint is found by bisection on a monotone function.
fn project(z: &[f64], s: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { z.iter().zip(s).map(|(v, si)| (v - lam * si).clamp(0.0, c)).collect() };
    let h = |lam: f64| -> f64 { at(lam).iter().zip(s).map(|(a, si)| a * si).sum() };
    let span = z.iter().map(|v| v.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient (with adaptive restart) on the `2n`
/// variable dual, then the bias chosen as the midpoint of the primal-optimal
/// interval for the recovered function.
pub fn svr_dual_oracle(x: &Array2<f64>, y: &[f64], c: f64, eps: f64, linear: bool, gamma: f64) -> QpSolution {
    let n = y.len();
    let k = gram(x, linear, gamma);
    let l = 2 * n;
    let s: Vec<f64> = (0..l).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    let p: Vec<f64> = (0..l).map(|t| if t < n { eps - y[t] } else { eps + y[t - n] }).collect();
    let q = |t: usize, u: usize| s[t] * s[u] * k[[t % n, u % n]];
    let lipschitz = 2.0 * k.diag().sum() + 1e-12;
    let grad = |a: &[f64]| -> Vec<f64> { (0..l).map(|t| p[t] + (0..l).map(|u| q(t, u) * a[u]).sum::<f64>()).collect() };
    let objective = |a: &[f64]| -> f64 {
        let g = grad(a);
        (0..l).map(|t| 0.5 * a[t] * (g[t] + p[t])).sum()
    };

    let mut a = vec![0.0; l];
    let mut v = a.clone();
    let mut theta = 1.0f64;
    let mut f_prev = objective(&a);
    for _ in 0..200_000 {
        let g = grad(&v);
        let z: Vec<f64> = (0..l).map(|t| v[t] - g[t] / lipschitz).collect();
        let next = project(&z, &s, c);
        let f_next = objective(&next);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let step: f64 = next.iter().zip(&a).map(|(u, w)| (u - w).abs()).fold(0.0, f64::max);
        if step < 1e-13 * c.max(1.0) {
            a = next;
            break;
        }
        if f_next > f_prev + 1e-15 * f_prev.abs() {
            // restart momentum
            v = a.clone();
            theta = 1.0;
            continue;
        }
        let mom = (theta - 1.0) / theta_next;
        v = (0..l).map(|t| next[t] + mom * (next[t] - a[t])).collect();
        a = next;
        theta = theta_next;
        f_prev = f_next;
    }

    let beta: Vec<f64> = (0..n).map(|i| a[i] - a[i + n]).collect();
    let fitted: Vec<f64> = (0..n).map(|i| (0..n).map(|j| beta[j] * k[[i, j]]).sum()).collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    QpSolution {
        bias: optimal_bias(&resid, c, eps),
        beta,
    }
}

/// Midpoint of `argmin_b C Σ max(0, |r_i − b| − ε)`; the minimum is attained
/// on a segment between breakpoints `r_i ± ε`.
pub fn optimal_bias(resid: &[f64], c: f64, eps: f64) -> f64 {
    let loss = |b: f64| -> f64 { c * resid.iter().map(|r| ((r - b).abs() - eps).max(0.0)).sum::<f64>() };
    let mut points: Vec<f64> = resid.iter().flat_map(|r| [r - eps, r + eps]).collect();
    points.sort_by(f64::total_cmp);
    let values: Vec<f64> = points.iter().map(|&b| loss(b)).collect();
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * (1.0 + best);
    let hits: Vec<f64> = points
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v <= best + slack)
        .map(|(b, _)| *b)
        .collect();
    0.5 * (hits[0] + hits[hits.len() - 1])
}

pub fn oracle_predict(
    sol: &QpSolution,
    train: &Array2<f64>,
    x: &Array2<f64>,
    linear: bool,
    gamma: f64,
) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|r| {
            let r = r.to_vec();
            train
                .rows()
                .into_iter()
                .zip(&sol.beta)
                .map(|(t, b)| b * kernel_value(linear, gamma, &t.to_vec(), &r))
                .sum::<f64>()
                + sol.bias
        })
        .collect()
}

// ------------------------------------------------------------ gradients

/// Largest relative difference between backprop and central differences
/// over every weight and bias, with the dropout masks held fixed.
pub fn max_gradient_error(model: &FfnModel, x: &Array2<f64>, y: &[f64], masks: &[Array2<f64>]) -> f64 {
    let h = 1e-5;
    let (_, grads) = model.loss_and_gradients(x, y, Some(masks)).unwrap();
    let loss = |m: &FfnModel| m.loss_and_gradients(x, y, Some(masks)).unwrap().0;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let mut worst = 0.0f64;
    for l in 0..model.layers.len() {
        for idx in 0..model.layers[l].w.len() {
            let (r, c) = (idx / model.layers[l].w.ncols(), idx % model.layers[l].w.ncols());
            let mut plus = model.clone();
            plus.layers[l].w[[r, c]] += h;
            let mut minus = model.clone();
            minus.layers[l].w[[r, c]] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            worst = worst.max(rel(grads[l].0[[r, c]], numeric));
        }
        for k in 0..model.layers[l].b.len() {
            let mut plus = model.clone();
            plus.layers[l].b[k] += h;
            let mut minus = model.clone();
            minus.layers[l].b[k] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            worst = worst.max(rel(grads[l].1[k], numeric));
        }
    }
    worst
}

// ---------------------------------------------------------- correlations

/// Rank by counting: one plus the number of strictly smaller values plus
/// half the number of other equal values.
pub fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&u| u < x).count() as f64;
            let equal = v.iter().filter(|&&u| u == x).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation through pairwise differences, avoiding means.
pub fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let (da, db) = (a[i] - a[j], b[i] - b[j]);
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
    }
    sab / (saa * sbb).sqrt()
}

pub fn brute_spearman(a: &[f64], b: &[f64]) -> f64 {
    brute_pearson(&brute_ranks(a), &brute_ranks(b))
}

/// `1 − 6Σd²/(n(n²−1))`, valid without ties.
pub fn closed_form_spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (brute_ranks(a), brute_ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

// ------------------------------------------------------- planted rotations

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn planted_orthogonal(dim: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let a = normal_matrix(&mut r, dim, dim);
    let mut q = Array2::<f64>::zeros((dim, dim));
    for j in 0..dim {
        let mut col: Array1<f64> = a.column(j).to_owned();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&col);
                col = col - &(&q.column(k) * proj);
            }
        }
        let norm = col.dot(&col).sqrt();
        q.column_mut(j).assign(&(col / norm));
    }
    q
}

// ------------------------------------------------------ synthetic languages

pub const SYNTH_SCALE: (f64, f64) = (-1.0, 2.0);

pub fn synth_scale() -> Scale {
    Scale::new(SYNTH_SCALE.0, SYNTH_SCALE.1).unwrap()
}

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Source space, its annotated lexicon and the noise-free latent rating.
pub struct Monolingual {
    pub space: EmbeddingSpace,
    pub lexicon: NormLexicon,
    pub latent: Vec<f64>,
}

pub fn lexicon_from(lang: &str, words: &[String], ratings: &[f64]) -> NormLexicon {
    let scale = synth_scale();
    let entries = words
        .iter()
        .zip(ratings)
        .map(|(w, r)| NormEntry::new(w.clone()).with(Variable::ConcMean, scale.clamp(*r)))
        .collect();
    NormLexicon::new(lang, scale, entries).unwrap()
}

/// `n` words with Gaussian vectors; ratings `logistic(w·x) + N(0, noise)`.
pub fn monolingual(n: usize, dim: usize, noise: f64, seed: u64) -> Monolingual {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, dim);
    let w: Array1<f64> = Array1::from(normal_vec(&mut r, dim)) * (1.5 / (dim as f64).sqrt());
    let latent: Vec<f64> = x.rows().into_iter().map(|row| logistic(row.dot(&w))).collect();
    let ratings: Vec<f64> = latent
        .iter()
        .map(|z| z + noise * { let e: f64 = StandardNormal.sample(&mut r); e })
        .collect();
    let words: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    Monolingual {
        space: EmbeddingSpace::new("src", words.clone(), x, true).unwrap(),
        lexicon: lexicon_from("src", &words, &ratings),
        latent,
    }
}

/// Two languages sharing a latent rating: the target space is the rotated
/// source space plus per-row noise of relative size `align_noise`, and the
/// target gold ratings are an independent noisy annotation of the latent.
pub struct Twin {
    pub src: Monolingual,
    pub tgt_space: EmbeddingSpace,
    pub tgt_gold: NormLexicon,
    pub rotation: Array2<f64>,
    /// Translation pairs `(s_i, t_i)` for learning the alignment.
    pub seed_pairs: BilingualPairs,
    /// Noisy dictionary covering `coverage` of the target words.
    pub dictionary: TransferDictionary,
}

pub fn twin(n: usize, dim: usize, align_noise: f64, coverage: f64, seed: u64) -> Twin {
    let src = monolingual(n, dim, 0.05, seed);
    let rotation = planted_orthogonal(dim, seed ^ 0x5eed);
    let mut r = rng(seed.wrapping_add(17));
    let mut tgt = src.space.matrix().dot(&rotation);
    for mut row in tgt.rows_mut() {
        let norm = row.dot(&row).sqrt();
        let noise = Array1::from(normal_vec(&mut r, dim)) * (align_noise * norm / (dim as f64).sqrt());
        row += &noise;
    }
    let tgt_words: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let gold: Vec<f64> = src
        .latent
        .iter()
        .map(|z| z + 0.05 * { let e: f64 = StandardNormal.sample(&mut r); e })
        .collect();
    let seed_pairs = BilingualPairs::new((0..n).map(|i| (format!("s{i}"), format!("t{i}")))).unwrap();

    // each covered target word keeps its true translation and, half of the
    // time, also an unrelated source word that shares the target form
    let mut dict = Vec::new();
    for i in 0..n {
        if r.random::<f64>() < coverage {
            dict.push((format!("s{i}"), format!("t{i}")));
            if r.random::<bool>() {
                let k = r.random_range(0..n);
                dict.push((format!("s{k}"), format!("t{i}")));
            }
        }
    }
    Twin {
        tgt_space: EmbeddingSpace::new("tgt", tgt_words.clone(), tgt, true).unwrap(),
        tgt_gold: lexicon_from("tgt", &tgt_words, &gold),
        rotation,
        seed_pairs,
        dictionary: TransferDictionary::new(dict),
        src,
    }
}
