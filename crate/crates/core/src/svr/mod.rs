//! Epsilon-insensitive support vector regression.
//!
//! Training solves the dual with SMO (see [`smo`](self)); the model keeps
//! only rows with a non-zero dual coefficient `β_i = α_i − α*_i` and predicts
//! `f(x) = Σ β_i K(x_i, x) + b`.

mod kernel;
mod smo;

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{Kernel, KernelKind};

use crate::io::{open_text, write_atomic};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub kernel: KernelKind,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration cap in passes over the training set (`None`: `10·n`).
    pub max_passes: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            gamma: 0.003,
            epsilon: 0.1,
            kernel: KernelKind::Rbf,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl SvrParams {
    pub fn linear() -> Self {
        SvrParams {
            kernel: KernelKind::Linear,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if self.kernel == KernelKind::Rbf && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Kernel {
        match self.kernel {
            KernelKind::Rbf => Kernel::Rbf { gamma: self.gamma },
            KernelKind::Linear => Kernel::Linear,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Array2<f64>,
    pub dual_coefs: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub params: SvrParams,
    pub iterations: usize,
    pub converged: bool,
}

fn check_training_data(x: &Array2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::invalid("need at least two training rows"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains NaN or infinite values"));
    }
    Ok(())
}

/// Fits an epsilon-SVR. Non-convergence within the iteration cap is logged
/// and the last iterate returned.
pub fn svr_train(x: &Array2<f64>, y: &[f64], params: &SvrParams, seed: u64) -> Result<SvrModel> {
    params.validate()?;
    check_training_data(x, y)?;
    let n = y.len();
    let passes = params.max_passes.unwrap_or(10 * n);
    let cfg = smo::SmoConfig {
        c: params.c,
        epsilon: params.epsilon,
        tol: params.tol,
        max_iter: passes.saturating_mul(n).max(10_000),
        seed,
    };
    let sol = smo::solve(x, y, params.kernel(), &cfg);
    let support_indices: Vec<usize> = (0..n).filter(|&i| sol.beta[i] != 0.0).collect();
    Ok(SvrModel {
        support_vectors: x.select(ndarray::Axis(0), &support_indices),
        dual_coefs: support_indices.iter().map(|&i| sol.beta[i]).collect(),
        support_indices,
        bias: sol.bias,
        params: params.clone(),
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

impl SvrModel {
    /// A model with no support vectors predicting `bias` everywhere.
    pub fn constant(dim: usize, bias: f64, params: SvrParams) -> Self {
        SvrModel {
            support_vectors: Array2::zeros((0, dim)),
            dual_coefs: Vec::new(),
            support_indices: Vec::new(),
            bias,
            params,
            iterations: 0,
            converged: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn predict_one(&self, x: ArrayView1<f64>) -> f64 {
        let k = self.params.kernel();
        self.support_vectors
            .rows()
            .into_iter()
            .zip(&self.dual_coefs)
            .map(|(sv, b)| b * k.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| self.predict_one(x.row(i)))
            .collect())
    }

    /// Primal weights `w = Σ β_i x_i` of a linear-kernel model, so that
    /// `f(x) = w·x + b`.
    pub fn linear_weights(&self) -> Result<Array1<f64>> {
        if self.params.kernel != KernelKind::Linear {
            return Err(Error::invalid("primal weights exist only for the linear kernel"));
        }
        let mut w = Array1::zeros(self.dim());
        for (sv, b) in self.support_vectors.rows().into_iter().zip(&self.dual_coefs) {
            w.scaled_add(*b, &sv);
        }
        Ok(w)
    }

    /// Dual coefficient of every training row (zero for non-support rows).
    pub fn full_dual(&self, n: usize) -> Vec<f64> {
        let mut beta = vec![0.0; n];
        for (&i, &b) in self.support_indices.iter().zip(&self.dual_coefs) {
            beta[i] = b;
        }
        beta
    }

    /// Largest violation of the epsilon-SVR optimality conditions on the
    /// training data, together with `|Σ β_i|`.
    pub fn kkt_violation(&self, x: &Array2<f64>, y: &[f64]) -> Result<KktReport> {
        let f = self.predict(x)?;
        let beta = self.full_dual(y.len());
        let (c, eps) = (self.params.c, self.params.epsilon);
        let bound = 1e-12 * c;
        let mut worst = 0.0f64;
        for i in 0..y.len() {
            // residual measured so that positive β pushes f up
            let r = y[i] - f[i];
            let b = beta[i];
            let v = if b == 0.0 {
                (r.abs() - eps).max(0.0)
            } else if b.abs() >= c - bound {
                (eps - r * b.signum()).max(0.0)
            } else {
                (r * b.signum() - eps).abs()
            };
            worst = worst.max(v);
        }
        Ok(KktReport {
            max_violation: worst,
            dual_sum: beta.iter().sum::<f64>().abs(),
            max_abs_dual: beta.iter().fold(0.0, |m, b| m.max(b.abs())),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write(w))
    }

    pub fn write(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{SVR_MAGIC}")?;
        writeln!(w, "[params]")?;
        writeln!(w, "kernel\t{}", self.params.kernel)?;
        writeln!(w, "c\t{}", self.params.c)?;
        writeln!(w, "gamma\t{}", self.params.gamma)?;
        writeln!(w, "epsilon\t{}", self.params.epsilon)?;
        writeln!(w, "tol\t{}", self.params.tol)?;
        match self.params.max_passes {
            Some(p) => writeln!(w, "max_passes\t{p}")?,
            None => writeln!(w, "max_passes\t-")?,
        }
        writeln!(w, "[bias]")?;
        writeln!(w, "{}", self.bias)?;
        writeln!(w, "[support_vectors]\t{}\t{}", self.dual_coefs.len(), self.dim())?;
        for (sv, b) in self.support_vectors.rows().into_iter().zip(&self.dual_coefs) {
            write!(w, "{b}")?;
            for x in sv {
                write!(w, "\t{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines: Vec<String> = open_text(path)?
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        Self::parse(&lines, path)
    }

    pub(crate) fn parse(lines: &[String], path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(path, format!("invalid SVR model file: {msg}"));
        let mut it = lines.iter().map(|l| l.trim_end());
        if it.next() != Some(SVR_MAGIC) {
            return Err(bad("missing header"));
        }
        if it.next() != Some("[params]") {
            return Err(bad("missing [params]"));
        }
        let mut params = SvrParams::default();
        let mut line = it.next().ok_or_else(|| bad("truncated"))?;
        while line != "[bias]" {
            let (key, value) = line.split_once('\t').ok_or_else(|| bad(line))?;
            let num = || value.parse::<f64>().map_err(|_| bad(line));
            match key {
                "kernel" => params.kernel = value.parse()?,
                "c" => params.c = num()?,
                "gamma" => params.gamma = num()?,
                "epsilon" => params.epsilon = num()?,
                "tol" => params.tol = num()?,
                "max_passes" => {
                    params.max_passes = if value == "-" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad(line))?)
                    }
                }
                _ => return Err(bad(line)),
            }
            line = it.next().ok_or_else(|| bad("truncated"))?;
        }
        let bias: f64 = it
            .next()
            .and_then(|l| l.parse().ok())
            .ok_or_else(|| bad("bias"))?;
        let header = it.next().ok_or_else(|| bad("truncated"))?;
        let dims: Vec<&str> = header.split('\t').collect();
        let (n_sv, dim) = match dims[..] {
            ["[support_vectors]", n, d] => (
                n.parse::<usize>().map_err(|_| bad(header))?,
                d.parse::<usize>().map_err(|_| bad(header))?,
            ),
            _ => return Err(bad(header)),
        };
        let mut coefs = Vec::with_capacity(n_sv);
        let mut data = Vec::with_capacity(n_sv * dim);
        for _ in 0..n_sv {
            let row = it.next().ok_or_else(|| bad("missing support vector"))?;
            let vals: Vec<f64> = row
                .split('\t')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(row))?;
            if vals.len() != dim + 1 {
                return Err(bad("support vector arity"));
            }
            coefs.push(vals[0]);
            data.extend_from_slice(&vals[1..]);
        }
        params.validate()?;
        Ok(SvrModel {
            support_vectors: Array2::from_shape_vec((n_sv, dim), data).expect("shape checked"),
            dual_coefs: coefs,
            support_indices: (0..n_sv).collect(),
            bias,
            params,
            iterations: 0,
            converged: true,
        })
    }
}

pub(crate) const SVR_MAGIC: &str = "lexnorm-svr v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport {
    pub max_violation: f64,
    pub dual_sum: f64,
    pub max_abs_dual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_target_gives_constant_model() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, -1.0]];
        let y = vec![2.5; 4];
        let m = svr_train(&x, &y, &SvrParams::default(), 0).unwrap();
        assert!(m.dual_coefs.is_empty());
        assert!((m.bias - 2.5).abs() < 1e-12);
        for p in m.predict(&array![[10.0, -4.0]]).unwrap() {
            assert!((p - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_model_predicts_bias() {
        let m = SvrModel::constant(3, 3.2, SvrParams::default());
        assert_eq!(m.predict(&array![[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]).unwrap(), vec![3.2, 3.2]);
        assert!(m.predict(&array![[1.0]]).is_err());
    }

    #[test]
    fn single_support_vector_weights() {
        let m = SvrModel {
            support_vectors: array![[1.0, 0.0]],
            dual_coefs: vec![2.0],
            support_indices: vec![0],
            bias: 0.5,
            params: SvrParams::linear(),
            iterations: 0,
            converged: true,
        };
        assert_eq!(m.linear_weights().unwrap(), array![2.0, 0.0]);
        let rbf = SvrModel {
            params: SvrParams::default(),
            ..m
        };
        assert!(rbf.linear_weights().is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = array![[0.0], [1.0]];
        assert!(svr_train(&x, &[1.0], &SvrParams::default(), 0).is_err());
        assert!(svr_train(&x, &[1.0, f64::NAN], &SvrParams::default(), 0).is_err());
        let bad = SvrParams {
            c: 0.0,
            ..Default::default()
        };
        assert!(svr_train(&x, &[1.0, 2.0], &bad, 0).is_err());
    }

    #[test]
    fn fits_line_within_tube_and_satisfies_kkt() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64 / 10.0);
        let y: Vec<f64> = (0..20).map(|i| 2.0 * i as f64 / 10.0 - 1.0).collect();
        let params = SvrParams {
            c: 10.0,
            ..SvrParams::linear()
        };
        let m = svr_train(&x, &y, &params, 0).unwrap();
        assert!(m.converged);
        let kkt = m.kkt_violation(&x, &y).unwrap();
        assert!(kkt.max_violation <= params.tol, "{kkt:?}");
        assert!(kkt.dual_sum <= params.tol * params.c * 20.0);
        assert!(kkt.max_abs_dual <= params.c);
        let w = m.linear_weights().unwrap();
        assert!((w[0] - 2.0).abs() < 0.2, "w = {w}");
    }

    #[test]
    fn model_file_round_trip() {
        let x = array![[0.0, 1.0], [1.0, 0.5], [2.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let y = vec![1.0, 2.0, 3.5, 1.0, 0.0];
        let m = svr_train(&x, &y, &SvrParams { gamma: 0.5, ..Default::default() }, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.svr");
        m.save(&path).unwrap();
        let back = SvrModel::load(&path).unwrap();
        assert_eq!(back.dual_coefs, m.dual_coefs);
        assert_eq!(back.bias, m.bias);
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }
}
