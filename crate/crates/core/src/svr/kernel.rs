use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Linear,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Rbf => "rbf",
            KernelKind::Linear => "linear",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            _ => Err(Error::invalid(format!("unknown kernel '{s}' (expected rbf or linear)"))),
        }
    }
}

/// A kernel function with its parameters bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// `exp(−γ‖u − v‖²)`
    Rbf { gamma: f64 },
    /// `u · v`
    Linear,
}

impl Kernel {
    pub fn eval(&self, u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => u.dot(&v),
        }
    }
}

const CACHE_BYTES: usize = 256 << 20;

/// Rows of the training Gram matrix, computed on demand and kept under a
/// fixed memory budget with least-recently-used eviction.
pub(crate) struct KernelCache<'a> {
    x: &'a Array2<f64>,
    kernel: Kernel,
    rows: Vec<Option<Rc<Vec<f64>>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
    diag: Vec<f64>,
}

impl<'a> KernelCache<'a> {
    pub fn new(x: &'a Array2<f64>, kernel: Kernel) -> Self {
        let n = x.nrows();
        let capacity = (CACHE_BYTES / (8 * n.max(1))).max(2);
        let diag = x.rows().into_iter().map(|r| kernel.eval(r, r)).collect();
        KernelCache {
            x,
            kernel,
            rows: vec![None; n],
            last_used: vec![0; n],
            clock: 0,
            cached: 0,
            capacity,
            diag,
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(row) = &self.rows[i] {
            return Rc::clone(row);
        }
        if self.cached >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&k| k != i && self.rows[k].is_some())
                .min_by_key(|&k| self.last_used[k])
                .expect("cache is full so some row is cached");
            self.rows[victim] = None;
            self.cached -= 1;
        }
        let xi = self.x.row(i);
        let row: Vec<f64> = self.x.rows().into_iter().map(|xk| self.kernel.eval(xi, xk)).collect();
        let row = Rc::new(row);
        self.rows[i] = Some(Rc::clone(&row));
        self.cached += 1;
        row
    }
}
