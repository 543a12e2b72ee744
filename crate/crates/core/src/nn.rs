//! Fully-connected tanh networks with a pluggable activation.
//!
//! Hidden layers use the selected activation; the output layer is linear.
//! Training is plain per-sample SGD on squared error, with the activation
//! derivative taken as `1 - f^2` of whichever `f` runs in the forward pass.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datasets::{Dataset, Sample, Task};
use crate::error::{Error, Result};
use crate::hwmodel::ApproxEngine;
use crate::presets::{Preset, ERROR_BUDGETS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_layers: usize, neurons_per_layer: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_layers == 0 || neurons_per_layer == 0 || output_dim == 0 {
            return Err(Error::param("every network dimension must be at least 1"));
        }
        Ok(MlpArchitecture { input_dim, hidden_layers, neurons_per_layer, output_dim })
    }

    /// Builds from a hidden-shape string such as `"4x5"` (layers x neurons).
    pub fn parse(hidden: &str, input_dim: usize, output_dim: usize) -> Result<Self> {
        let HiddenShape(h, n) = hidden.parse()?;
        Self::new(input_dim, h, n, output_dim)
    }

    /// Widths from input to output, inclusive.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut v = vec![self.input_dim];
        v.extend(std::iter::repeat_n(self.neurons_per_layer, self.hidden_layers));
        v.push(self.output_dim);
        v
    }

    pub fn shape(&self) -> HiddenShape {
        HiddenShape(self.hidden_layers, self.neurons_per_layer)
    }
}

/// Hidden layers x neurons per layer, written `"4x5"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiddenShape(pub usize, pub usize);

impl FromStr for HiddenShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("architecture {s:?} is not of the form <layers>x<neurons>"));
        let (h, n) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let h: usize = h.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if h == 0 || n == 0 {
            return Err(bad());
        }
        Ok(HiddenShape(h, n))
    }
}

impl fmt::Display for HiddenShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

impl fmt::Display for MlpArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.shape().fmt(f)
    }
}

#[derive(Debug, Clone)]
pub enum ActivationSpec {
    Exact,
    Dctif(Arc<ApproxEngine>),
    /// One of [`ERROR_BUDGETS`], served by the matching budget preset.
    ErrorBudget(f64),
}

impl ActivationSpec {
    pub fn resolve(&self) -> Result<Activation> {
        Ok(match self {
            ActivationSpec::Exact => Activation::Exact,
            ActivationSpec::Dctif(e) => Activation::Engine(Arc::clone(e)),
            ActivationSpec::ErrorBudget(b) => Activation::Engine(Arc::new(Preset::Budget(*b).build()?)),
        })
    }

    /// Value for the `eps` results column.
    pub fn label(&self) -> String {
        match self {
            ActivationSpec::Exact => "exact".into(),
            ActivationSpec::Dctif(e) => format!("dctif-{}", e.params()),
            ActivationSpec::ErrorBudget(b) => b.to_string(),
        }
    }

    /// The five budgets from coarsest to finest, then exact.
    pub fn study_levels() -> Vec<ActivationSpec> {
        let mut v: Vec<_> = ERROR_BUDGETS.iter().map(|&b| ActivationSpec::ErrorBudget(b)).collect();
        v.push(ActivationSpec::Exact);
        v
    }
}

/// A resolved activation, ready to evaluate.
#[derive(Debug, Clone)]
pub enum Activation {
    Exact,
    Engine(Arc<ApproxEngine>),
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Exact => x.tanh(),
            Activation::Engine(e) => e.evaluate_real(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs without `min_delta` improvement before stopping.
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { epochs: 10_000, learning_rate: 0.01, seed: 0, patience: 500, min_delta: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, one row per output neuron.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            (0..self.outputs).map(|o| self.bias[o] + self.row(o).iter().zip(x).map(|(w, v)| w * v).sum::<f64>()),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub arch: MlpArchitecture,
    pub layers: Vec<Layer>,
}

impl Model {
    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: MlpArchitecture, seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = arch.layer_sizes();
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let limit = (6.0 / (i + o) as f64).sqrt();
                Layer {
                    inputs: i,
                    outputs: o,
                    weights: (0..i * o).map(|_| rng.gen_range(-limit..=limit)).collect(),
                    bias: vec![0.0; o],
                }
            })
            .collect();
        Model { arch, layers }
    }

    /// Post-activation values of every layer, input first, linear output last.
    pub fn forward_trace(&self, x: &[f64], act: &Activation) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.affine(&acts[l], &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &[f64], act: &Activation) -> Vec<f64> {
        self.forward_trace(x, act).pop().unwrap()
    }

    fn sgd_step(&mut self, sample: &Sample, act: &Activation, lr: f64) -> f64 {
        let acts = self.forward_trace(&sample.features, act);
        let y = acts.last().unwrap();
        let mut delta: Vec<f64> = y.iter().zip(&sample.target).map(|(p, t)| p - t).collect();
        let sq_err = delta.iter().map(|d| d * d).sum::<f64>();
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            let prev_delta = (l > 0).then(|| {
                let layer = &self.layers[l];
                (0..layer.inputs)
                    .map(|i| {
                        let back: f64 =
                            (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + i] * delta[o]).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect::<Vec<_>>()
            });
            let layer = &mut self.layers[l];
            for (o, d) in delta.iter().enumerate() {
                let g = lr * d;
                layer.bias[o] -= g;
                for (w, v) in layer.weights[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                    *w -= g * v;
                }
            }
            if let Some(p) = prev_delta {
                delta = p;
            }
        }
        sq_err
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    /// Mean squared error of each completed epoch, accumulated during the pass.
    pub loss_trace: Vec<f64>,
    /// Number of epochs run.
    pub stop_epoch: usize,
    /// Loss became non-finite; `model` holds the weights at that point.
    pub diverged: bool,
}

fn check_dims(arch: &MlpArchitecture, data: &Dataset) -> Result<()> {
    let ok = |s: &Sample| s.features.len() == arch.input_dim && s.target.len() == arch.output_dim;
    if !data.train.iter().chain(&data.test).all(ok) {
        return Err(Error::config(format!(
            "network {}->{}->{} does not match dataset {} ({} inputs, {} outputs)",
            arch.input_dim,
            arch,
            arch.output_dim,
            data.name,
            data.input_dim(),
            data.output_dim()
        )));
    }
    Ok(())
}

pub fn train(
    arch: MlpArchitecture,
    data: &Dataset,
    activation: &ActivationSpec,
    hp: &Hyperparams,
) -> Result<TrainOutcome> {
    check_dims(&arch, data)?;
    let act = activation.resolve()?;
    Ok(train_with(Model::init(arch, hp.seed), &data.train, &act, hp))
}

/// Trains `model` in place from its current weights.
pub fn train_with(mut model: Model, train: &[Sample], act: &Activation, hp: &Hyperparams) -> TrainOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let denom = (train.len() * model.arch.output_dim).max(1) as f64;
    let mut loss_trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_epoch = 0;
    let mut diverged = false;
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let total: f64 = order.iter().map(|&i| model.sgd_step(&train[i], act, hp.learning_rate)).sum();
        let loss = total / denom;
        loss_trace.push(loss);
        if !loss.is_finite() {
            log::warn!("training diverged at epoch {}", epoch + 1);
            diverged = true;
            break;
        }
        if loss < best - hp.min_delta {
            best = loss;
            best_epoch = epoch;
        } else if epoch - best_epoch >= hp.patience {
            break;
        }
    }
    let stop_epoch = loss_trace.len();
    TrainOutcome { model, loss_trace, stop_epoch, diverged }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    /// Pearson correlation of predictions and targets (regression only).
    pub correlation: Option<f64>,
    /// Percent of argmax matches (classification only).
    pub accuracy: Option<f64>,
    /// `mse` minus the matched exact-activation run's `mse`.
    pub normalized_mse: f64,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

/// Metrics of `model` on `samples`; `normalized_mse` is left at 0.
pub fn evaluate(model: &Model, samples: &[Sample], task: Task, act: &Activation) -> Metrics {
    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut hits = 0usize;
    for s in samples {
        let y = model.forward(&s.features, act);
        if argmax(&y) == argmax(&s.target) {
            hits += 1;
        }
        preds.extend(y);
        targets.extend_from_slice(&s.target);
    }
    let mse = preds.iter().zip(&targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / preds.len().max(1) as f64;
    let (correlation, accuracy) = match task {
        Task::Regression => (Some(pearson(&preds, &targets)), None),
        Task::Classification => (None, Some(100.0 * hits as f64 / samples.len().max(1) as f64)),
    };
    Metrics { mse, correlation, accuracy, normalized_mse: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Train once with exact tanh, test under every activation.
    Test,
    /// Train under every activation, report training-set metrics.
    Train,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Test => "test",
            Protocol::Train => "train",
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(Protocol::Test),
            "train" => Ok(Protocol::Train),
            _ => Err(Error::param(format!("protocol {s:?} is neither test nor train"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub dataset: String,
    pub arch: HiddenShape,
    pub eps: String,
    pub seed: u64,
    pub phase: Protocol,
    pub metrics: Metrics,
    pub stop_epoch: usize,
    pub diverged: bool,
}

pub const RESULTS_HEADER: &str = "dataset,arch,eps,seed,phase,mse,corr,acc,norm_mse,stop_epoch";

impl StudyRow {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
        format!(
            "{},{},{},{},{},{:.9e},{},{},{:.9e},{}",
            self.dataset,
            self.arch,
            self.eps,
            self.seed,
            self.phase.name(),
            self.metrics.mse,
            opt(self.metrics.correlation),
            opt(self.metrics.accuracy),
            self.metrics.normalized_mse,
            self.stop_epoch
        )
    }
}

pub fn write_results_csv<W: Write>(rows: &[StudyRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// One row per entry of `levels`, in order. Normalised MSE is relative to an
/// exact-activation run on the same data, architecture and seed.
pub fn run_study(
    data: &Dataset,
    arch: MlpArchitecture,
    levels: &[ActivationSpec],
    hp: &Hyperparams,
    protocol: Protocol,
) -> Result<Vec<StudyRow>> {
    check_dims(&arch, data)?;
    let acts = levels.iter().map(ActivationSpec::resolve).collect::<Result<Vec<_>>>()?;
    let row = |spec: &ActivationSpec, metrics: Metrics, out: &TrainOutcome| StudyRow {
        dataset: data.name.clone(),
        arch: arch.shape(),
        eps: spec.label(),
        seed: hp.seed,
        phase: protocol,
        metrics,
        stop_epoch: out.stop_epoch,
        diverged: out.diverged,
    };
    let init = Model::init(arch, hp.seed);
    match protocol {
        Protocol::Test => {
            let trained = train_with(init, &data.train, &Activation::Exact, hp);
            let base = evaluate(&trained.model, &data.test, data.task, &Activation::Exact).mse;
            Ok(levels
                .par_iter()
                .zip(&acts)
                .map(|(spec, act)| {
                    let mut m = evaluate(&trained.model, &data.test, data.task, act);
                    m.normalized_mse = m.mse - base;
                    row(spec, m, &trained)
                })
                .collect())
        }
        Protocol::Train => {
            let needs_exact = !levels.iter().any(|l| matches!(l, ActivationSpec::Exact));
            let mut runs: Vec<(TrainOutcome, Metrics)> = acts
                .par_iter()
                .chain(if needs_exact { Some(&Activation::Exact) } else { None }.into_par_iter())
                .map(|act| {
                    let out = train_with(init.clone(), &data.train, act, hp);
                    let m = evaluate(&out.model, &data.train, data.task, act);
                    (out, m)
                })
                .collect();
            let base = if needs_exact {
                runs.pop().unwrap().1.mse
            } else {
                let k = levels.iter().position(|l| matches!(l, ActivationSpec::Exact)).unwrap();
                runs[k].1.mse
            };
            Ok(levels
                .iter()
                .zip(runs)
                .map(|(spec, (out, mut m))| {
                    m.normalized_mse = m.mse - base;
                    row(spec, m, &out)
                })
                .collect())
        }
    }
}
