//! Fully connected regression network: ReLU hidden layers, each followed by
//! inverted dropout, and a linear scalar output, trained on mean squared
//! error with mini-batch Adam (or plain SGD).

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{open_text, write_atomic};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            _ => Err(Error::invalid(format!("unknown optimizer '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FfnParams {
    pub hidden_sizes: Vec<usize>,
    /// Probability of zeroing a hidden unit during training.
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for FfnParams {
    fn default() -> Self {
        FfnParams {
            hidden_sizes: vec![128, 32],
            dropout: 0.5,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl FfnParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden layer sizes must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `fan_in × fan_out`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FfnModel {
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Dense>,
    pub params: FfnParams,
    /// Mean mini-batch loss over the last training epoch.
    pub train_mse: Option<f64>,
}

const PREDICT_CHUNK: usize = 4096;

/// Whether to apply dropout, and with which keep-masks (entries 0 or 1,
/// one `batch × units` matrix per hidden layer).
#[derive(Clone, Debug)]
pub enum Mode<'a> {
    Infer,
    Train(&'a [Array2<f64>]),
}

/// Activations recorded by a forward pass, needed for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input followed by each hidden layer's post-dropout activation.
    pub inputs: Vec<Array2<f64>>,
    /// Hidden pre-activations.
    pub pre: Vec<Array2<f64>>,
    pub output: Array1<f64>,
}

/// Gradient of the loss with respect to each layer's `(w, b)`.
pub type Gradients = Vec<(Array2<f64>, Array1<f64>)>;

/// Glorot-uniform weights, zero biases, reproducible under `params.seed`.
pub fn ffn_init(dim: usize, params: &FfnParams) -> Result<FfnModel> {
    params.validate()?;
    if dim == 0 {
        return Err(Error::invalid("input dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut sizes = vec![dim];
    sizes.extend(&params.hidden_sizes);
    sizes.push(1);
    let layers = sizes
        .windows(2)
        .map(|io| {
            let (fan_in, fan_out) = (io[0], io[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Dense {
                w: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit)),
                b: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(FfnModel {
        layers,
        params: params.clone(),
        train_mse: None,
    })
}

impl FfnModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    fn hidden(&self) -> &[Dense] {
        &self.layers[..self.layers.len() - 1]
    }

    fn keep_scale(&self) -> f64 {
        1.0 / (1.0 - self.params.dropout)
    }

    /// Forward pass over a batch of rows.
    pub fn forward_batch(&self, x: &Array2<f64>, mode: &Mode) -> Result<ForwardCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        if let Mode::Train(masks) = mode {
            if masks.len() != self.hidden().len() {
                return Err(Error::invalid("one dropout mask per hidden layer required"));
            }
        }
        let scale = self.keep_scale();
        let mut inputs = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.hidden().len());
        for (l, layer) in self.hidden().iter().enumerate() {
            let z = inputs[l].dot(&layer.w) + &layer.b;
            let mut a = z.mapv(|v| v.max(0.0));
            if let Mode::Train(masks) = mode {
                a = a * &masks[l] * scale;
            }
            pre.push(z);
            inputs.push(a);
        }
        let out = self.layers.last().expect("network has an output layer");
        let output = inputs.last().unwrap().dot(&out.w).column(0).to_owned() + out.b[0];
        Ok(ForwardCache { inputs, pre, output })
    }

    pub fn forward(&self, x: ArrayView1<f64>, mode: &Mode) -> Result<f64> {
        let batch = x.to_owned().insert_axis(Axis(0));
        Ok(self.forward_batch(&batch, mode)?.output[0])
    }

    /// Fresh keep-masks for a batch of `rows`.
    pub fn sample_masks(&self, rows: usize, rng: &mut impl Rng) -> Vec<Array2<f64>> {
        let p = self.params.dropout;
        self.params
            .hidden_sizes
            .iter()
            .map(|&units| {
                Array2::from_shape_simple_fn((rows, units), || {
                    if p == 0.0 || rng.random::<f64>() >= p {
                        1.0
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    /// Mean squared error and its gradients for one batch.
    pub fn loss_and_gradients(
        &self,
        x: &Array2<f64>,
        y: &[f64],
        masks: Option<&[Array2<f64>]>,
    ) -> Result<(f64, Gradients)> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        let mode = masks.map_or(Mode::Infer, Mode::Train);
        let cache = self.forward_batch(x, &mode)?;
        let n = y.len() as f64;
        let resid = &cache.output - &ArrayView1::from(y);
        let loss = resid.dot(&resid) / n;

        let mut grads: Gradients = Vec::with_capacity(self.layers.len());
        // dL/d(output), as a batch × 1 column
        let mut delta = (resid * (2.0 / n)).insert_axis(Axis(1));
        let scale = self.keep_scale();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gw = cache.inputs[l].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&layer.w.t());
                if let Some(masks) = masks {
                    back = back * &masks[l - 1] * scale;
                }
                back.zip_mut_with(&cache.pre[l - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        Ok((loss, grads))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(x.nrows());
        for chunk in x.axis_chunks_iter(Axis(0), PREDICT_CHUNK) {
            out.extend(self.forward_batch(&chunk.to_owned(), &Mode::Infer)?.output);
        }
        Ok(out)
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write(w))
    }

    pub fn write(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(w, "{FFN_MAGIC}")?;
        writeln!(w, "[params]")?;
        let sizes: Vec<String> = p.hidden_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(w, "hidden_sizes\t{}", sizes.join(","))?;
        writeln!(w, "dropout\t{}", p.dropout)?;
        writeln!(w, "epochs\t{}", p.epochs)?;
        writeln!(w, "batch_size\t{}", p.batch_size)?;
        writeln!(w, "learning_rate\t{}", p.learning_rate)?;
        writeln!(w, "optimizer\t{}", p.optimizer)?;
        writeln!(w, "seed\t{}", p.seed)?;
        for layer in &self.layers {
            writeln!(w, "[layer]\t{}\t{}", layer.w.nrows(), layer.w.ncols())?;
            for row in layer.w.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", cells.join("\t"))?;
            }
            let cells: Vec<String> = layer.b.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join("\t"))?;
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
        let bad = |msg: &str| Error::format(path, format!("invalid FFN model file: {msg}"));
        let mut it = lines.iter().map(|l| l.trim_end()).peekable();
        if it.next() != Some(FFN_MAGIC) || it.next() != Some("[params]") {
            return Err(bad("missing header"));
        }
        let mut params = FfnParams::default();
        while let Some(line) = it.next_if(|l| !l.starts_with("[layer]")) {
            let (key, value) = line.split_once('\t').ok_or_else(|| bad(line))?;
            let e = || bad(line);
            match key {
                "hidden_sizes" => {
                    params.hidden_sizes = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| e()))
                        .collect::<Result<_>>()?
                }
                "dropout" => params.dropout = value.parse().map_err(|_| e())?,
                "epochs" => params.epochs = value.parse().map_err(|_| e())?,
                "batch_size" => params.batch_size = value.parse().map_err(|_| e())?,
                "learning_rate" => params.learning_rate = value.parse().map_err(|_| e())?,
                "optimizer" => params.optimizer = value.parse()?,
                "seed" => params.seed = value.parse().map_err(|_| e())?,
                _ => return Err(e()),
            }
        }
        let parse_row = |line: Option<&str>, len: usize| -> Result<Vec<f64>> {
            let line = line.ok_or_else(|| bad("truncated layer"))?;
            let vals: Vec<f64> = line
                .split('\t')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(line))?;
            if vals.len() != len {
                return Err(bad("layer row arity"));
            }
            Ok(vals)
        };
        let mut layers = Vec::new();
        while let Some(header) = it.next() {
            let parts: Vec<&str> = header.split('\t').collect();
            let (rows, cols) = match parts[..] {
                ["[layer]", r, c] => (
                    r.parse::<usize>().map_err(|_| bad(header))?,
                    c.parse::<usize>().map_err(|_| bad(header))?,
                ),
                _ => return Err(bad(header)),
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                data.extend(parse_row(it.next(), cols)?);
            }
            let b = parse_row(it.next(), cols)?;
            layers.push(Dense {
                w: Array2::from_shape_vec((rows, cols), data).expect("shape checked"),
                b: Array1::from(b),
            });
        }
        if layers.len() != params.hidden_sizes.len() + 1 {
            return Err(bad("layer count does not match hidden_sizes"));
        }
        for pair in layers.windows(2) {
            if pair[0].w.ncols() != pair[1].w.nrows() {
                return Err(bad("inconsistent layer shapes"));
            }
        }
        if layers.last().unwrap().w.ncols() != 1 {
            return Err(bad("output layer must have one unit"));
        }
        params.validate()?;
        Ok(FfnModel {
            layers,
            params,
            train_mse: None,
        })
    }
}

pub(crate) const FFN_MAGIC: &str = "lexnorm-ffn v1";

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &FfnModel) -> Self {
        let zeros: Gradients = model
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.len())))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut FfnModel, grads: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads[l];
            update_adam(&mut layer.w, gw, &mut self.m[l].0, &mut self.v[l].0, lr, c1, c2);
            update_adam(&mut layer.b, gb, &mut self.m[l].1, &mut self.v[l].1, lr, c1, c2);
        }
    }
}

fn update_adam<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    ndarray::Zip::from(param)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        });
}

/// Trains `model` for `params.epochs` epochs of shuffled mini-batches; the
/// last partial batch of an epoch is used. Fails when the loss becomes NaN.
pub fn ffn_train(mut model: FfnModel, x: &Array2<f64>, y: &[f64], params: &FfnParams) -> Result<FfnModel> {
    params.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("need at least one training row"));
    }
    if params.hidden_sizes != model.params.hidden_sizes {
        return Err(Error::invalid("hidden sizes differ from the initialized model"));
    }
    model.params = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..y.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(params.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let masks = model.sample_masks(batch.len(), &mut rng);
            let (loss, grads) = model.loss_and_gradients(&xb, &yb, Some(&masks))?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss became {loss} in epoch {}; try a lower learning rate (currently {})",
                    epoch + 1,
                    params.learning_rate
                )));
            }
            total += loss * batch.len() as f64;
            match params.optimizer {
                Optimizer::Adam => adam.step(&mut model, &grads, params.learning_rate),
                Optimizer::Sgd => {
                    for (layer, (gw, gb)) in model.layers.iter_mut().zip(&grads) {
                        layer.w.scaled_add(-params.learning_rate, gw);
                        layer.b.scaled_add(-params.learning_rate, gb);
                    }
                }
            }
        }
        if !model.all_finite() {
            return Err(Error::Diverged(format!("non-finite weights after epoch {}", epoch + 1)));
        }
        model.train_mse = Some(total / y.len() as f64);
    }
    Ok(model)
}
