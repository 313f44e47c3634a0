//! Dense singular value decomposition by one-sided (Hestenes) Jacobi
//! rotations. Accurate to working precision and plenty fast for the
//! embedding dimensionalities used here (a few hundred).

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// `a = u · diag(s) · vᵀ` with `u` m×n (orthonormal columns), `s` ≥ 0 sorted
/// descending and `v` n×n orthogonal.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

const MAX_SWEEPS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yi) = (*x, *y);
        *x = c * xi - s * yi;
        *y = s * xi + c * yi;
    }
}

/// Thin SVD of an m×n matrix with m ≥ n. `tol` bounds the relative
/// off-diagonal mass `|aᵢ·aⱼ| / (‖aᵢ‖‖aⱼ‖)` left after the final sweep.
pub fn jacobi_svd(a: &Array2<f64>, tol: f64) -> Result<Svd> {
    let (m, n) = a.dim();
    if m < n {
        return Err(Error::invalid(format!("jacobi_svd needs rows >= cols, got {m}x{n}")));
    }
    let mut cols: Vec<Vec<f64>> = a.columns().into_iter().map(|c| c.to_vec()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    // columns that have collapsed to rounding noise carry no direction
    let floor = (f64::EPSILON * frobenius(a)).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(rel);
                if rel <= f64::EPSILON {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = vcols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence(MAX_SWEEPS));
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = scale * (m as f64) * f64::EPSILON;
    let mut u = Array2::zeros((m, n));
    let mut v = Array2::zeros((n, n));
    let mut s = Array1::zeros(n);
    let mut rank_deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        for i in 0..n {
            v[[i, k]] = vcols[j][i];
        }
        if norms[j] > cutoff {
            for i in 0..m {
                u[[i, k]] = cols[j][i] / norms[j];
            }
        } else {
            rank_deficient.push(k);
        }
    }
    complete_basis(&mut u, &rank_deficient);
    Ok(Svd { u, s, v })
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// columns, via Gram-Schmidt against the standard basis.
fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    let m = u.nrows();
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut e = Array1::<f64>::zeros(m);
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if j == k {
                        continue;
                    }
                    let col = u.column(j);
                    let proj = col.dot(&e);
                    e.scaled_add(-proj, &col);
                }
            }
            let norm = e.dot(&e).sqrt();
            if norm > 1e-8 {
                u.column_mut(k).assign(&(e / norm));
                break;
            }
        }
    }
}

/// `max |aᵀa − I|` over all entries.
pub fn orthogonality_error(a: &Array2<f64>) -> f64 {
    let g = a.t().dot(a);
    g.indexed_iter()
        .map(|((i, j), x)| if i == j { (x - 1.0).abs() } else { x.abs() })
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
